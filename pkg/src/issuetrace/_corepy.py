"""Pure numpy fallback for the compiled kernels.

Selected automatically when the Cython extension is unavailable.  The Gibbs
sweep reproduces the compiled kernel bit-for-bit: the conditional is built
with the same expression tree, the cumulative sum is sequential, and the
selection rule is ``searchsorted(..., side="right")`` which matches the
compiled linear scan.  The skip-gram pass matches the compiled update
sequence but accumulates dot products through BLAS, so embeddings agree
with the compiled backend only to floating-point tolerance.
"""

from __future__ import annotations

import numpy as np


def gibbs_epoch(
    w1: np.ndarray,
    w2: np.ndarray,
    s_assign: np.ndarray,
    z_assign: np.ndarray,
    n_s: np.ndarray,
    n_sz: np.ndarray,
    n_szw: np.ndarray,
    n_szt: np.ndarray,
    lam: np.ndarray,
    beta: np.ndarray,
    beta_row_sums: np.ndarray,
    alpha: float,
    gamma: float,
    uniforms: np.ndarray,
    scratch: np.ndarray,
) -> None:
    """Resample every biterm once from the collapsed conditional, in place."""
    S, K = n_sz.shape
    n_cells = S * K
    k_alpha = K * alpha

    for i in range(len(w1)):
        a = w1[i]
        b = w2[i]
        s = s_assign[i]
        z = z_assign[i]

        n_s[s] -= 1.0
        n_sz[s, z] -= 1.0
        n_szw[s, z, a] -= 1.0
        n_szw[s, z, b] -= 1.0
        n_szt[s, z] -= 2.0

        p = lam[i][:, None] * (n_s[:, None] + gamma)
        p = p * ((n_sz + alpha) / (n_s[:, None] + k_alpha))
        p = p * ((n_szw[:, :, a] + beta[:, :, a]) / (n_szt + beta_row_sums))
        p = p * ((n_szw[:, :, b] + beta[:, :, b]) / (n_szt + 1.0 + beta_row_sums))

        cum = np.cumsum(p.ravel())
        threshold = uniforms[i] * cum[-1]
        j = int(np.searchsorted(cum, threshold, side="right"))
        if j > n_cells - 1:
            j = n_cells - 1
        s, z = divmod(j, K)

        s_assign[i] = s
        z_assign[i] = z
        n_s[s] += 1.0
        n_sz[s, z] += 1.0
        n_szw[s, z, a] += 1.0
        n_szw[s, z, b] += 1.0
        n_szt[s, z] += 2.0


def sgns_epoch(
    tokens: np.ndarray,
    starts: np.ndarray,
    vin: np.ndarray,
    vout: np.ndarray,
    window: int,
    negatives: int,
    neg_ids: np.ndarray,
    lr_start: float,
    lr_floor: float,
    pairs_done: int,
    pairs_total: int,
    grad_buf: np.ndarray,
) -> int:
    """One skip-gram negative-sampling pass over all reviews."""
    pair_idx = 0
    done = pairs_done

    for r in range(len(starts) - 1):
        start, end = int(starts[r]), int(starts[r + 1])
        for i in range(start, end):
            center = tokens[i]
            lo = max(start, i - window)
            hi = min(end, i + window + 1)
            for j in range(lo, hi):
                if j == i:
                    continue
                context = tokens[j]

                lr = lr_start * (1.0 - done / pairs_total)
                if lr < lr_floor:
                    lr = lr_floor

                grad_buf[:] = 0.0
                v_center = vin[center]
                for k in range(negatives + 1):
                    if k == 0:
                        target = context
                        label = 1.0
                    else:
                        target = neg_ids[pair_idx * negatives + (k - 1)]
                        label = 0.0
                        if target == context:
                            continue
                    f = float(np.dot(v_center, vout[target]))
                    g = np.float32((label - 1.0 / (1.0 + np.exp(-f))) * lr)
                    grad_buf += g * vout[target]
                    vout[target] += g * v_center
                vin[center] += grad_buf

                pair_idx += 1
                done += 1

    return done
