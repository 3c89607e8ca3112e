# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: one collapsed Gibbs sweep over all biterms and one
skip-gram negative-sampling epoch.

Both kernels take every random number they need as a pre-generated array so
the calling driver owns the RNG stream.  The Gibbs kernel mirrors the pure
numpy fallback operation-for-operation (same expression tree, sequential
cumulative sum, same tie handling), which makes the two backends produce
bit-identical chains from the same uniforms.
"""

from libc.math cimport exp


def gibbs_epoch(
    long[::1] w1,
    long[::1] w2,
    long[::1] s_assign,
    long[::1] z_assign,
    double[::1] n_s,
    double[:, ::1] n_sz,
    double[:, :, ::1] n_szw,
    double[:, ::1] n_szt,
    double[:, ::1] lam,
    double[:, :, ::1] beta,
    double[:, ::1] beta_row_sums,
    double alpha,
    double gamma,
    double[::1] uniforms,
    double[::1] scratch,
):
    """Resample every biterm once from the collapsed conditional, in place."""
    cdef Py_ssize_t n_biterms = w1.shape[0]
    cdef int S = n_sz.shape[0]
    cdef int K = n_sz.shape[1]
    cdef int SK = S * K
    cdef double k_alpha = K * alpha
    cdef Py_ssize_t i
    cdef int s, z, j, a, b
    cdef double cum, val, threshold

    for i in range(n_biterms):
        a = <int> w1[i]
        b = <int> w2[i]
        s = <int> s_assign[i]
        z = <int> z_assign[i]

        n_s[s] -= 1.0
        n_sz[s, z] -= 1.0
        n_szw[s, z, a] -= 1.0
        n_szw[s, z, b] -= 1.0
        n_szt[s, z] -= 2.0

        cum = 0.0
        for s in range(S):
            for z in range(K):
                val = lam[i, s] * (n_s[s] + gamma)
                val = val * ((n_sz[s, z] + alpha) / (n_s[s] + k_alpha))
                val = val * ((n_szw[s, z, a] + beta[s, z, a])
                             / (n_szt[s, z] + beta_row_sums[s, z]))
                val = val * ((n_szw[s, z, b] + beta[s, z, b])
                             / (n_szt[s, z] + 1.0 + beta_row_sums[s, z]))
                cum += val
                scratch[s * K + z] = cum

        threshold = uniforms[i] * cum
        j = 0
        while j < SK - 1 and scratch[j] <= threshold:
            j += 1
        s = j // K
        z = j % K

        s_assign[i] = s
        z_assign[i] = z
        n_s[s] += 1.0
        n_sz[s, z] += 1.0
        n_szw[s, z, a] += 1.0
        n_szw[s, z, b] += 1.0
        n_szt[s, z] += 2.0


def sgns_epoch(
    int[::1] tokens,
    long[::1] starts,
    float[:, ::1] vin,
    float[:, ::1] vout,
    int window,
    int negatives,
    int[::1] neg_ids,
    double lr_start,
    double lr_floor,
    long pairs_done,
    long pairs_total,
    float[::1] grad_buf,
):
    """One pass of skip-gram with negative sampling over all reviews.

    ``neg_ids`` holds ``negatives`` presampled noise word ids per
    (center, context) pair, in pair order.  Negative draws equal to the true
    context word are consumed but skipped.  Returns the updated global pair
    counter so the caller can continue the linear learning-rate decay.
    """
    cdef Py_ssize_t n_reviews = starts.shape[0] - 1
    cdef int dim = vin.shape[1]
    cdef Py_ssize_t r, i, j, lo, hi, start, end
    cdef long pair_idx = 0
    cdef long done = pairs_done
    cdef int center, context, target, label, k, d
    cdef double lr, f, g
    cdef float gf

    for r in range(n_reviews):
        start = starts[r]
        end = starts[r + 1]
        for i in range(start, end):
            center = tokens[i]
            lo = i - window
            if lo < start:
                lo = start
            hi = i + window + 1
            if hi > end:
                hi = end
            for j in range(lo, hi):
                if j == i:
                    continue
                context = tokens[j]

                lr = lr_start * (1.0 - (<double> done) / (<double> pairs_total))
                if lr < lr_floor:
                    lr = lr_floor

                for d in range(dim):
                    grad_buf[d] = 0.0

                for k in range(negatives + 1):
                    if k == 0:
                        target = context
                        label = 1
                    else:
                        target = neg_ids[pair_idx * negatives + (k - 1)]
                        label = 0
                        if target == context:
                            continue
                    f = 0.0
                    for d in range(dim):
                        f += vin[center, d] * vout[target, d]
                    g = (label - 1.0 / (1.0 + exp(-f))) * lr
                    gf = <float> g
                    for d in range(dim):
                        grad_buf[d] += gf * vout[target, d]
                        vout[target, d] += gf * vin[center, d]

                for d in range(dim):
                    vin[center, d] += grad_buf[d]

                pair_idx += 1
                done += 1

    return done
