#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure numpy fallback.

Times the collapsed Gibbs sweep and one skip-gram epoch on a synthetic
workload, reports the speedup, and verifies agreement: the Gibbs chains
must match bit-for-bit, the embeddings to float tolerance.

    python benchmarks/bench_kernels.py --reviews 2000 --sweeps 50
"""

import argparse
import time

import numpy as np

from issuetrace.backend import load_compiled, load_pure
from issuetrace.bst import Hyperparameters, init_model
from issuetrace.corpus import PolarityLexicon, RawReview, build_version_corpora


def synthetic_corpus(n_reviews: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    vocab = [f"word{i}" for i in range(300)]
    reviews = [
        RawReview("1.0", " ".join(rng.choice(vocab, size=8))) for _ in range(n_reviews)
    ]
    return build_version_corpora(reviews, set(), pmi_threshold=50.0)


def bench_gibbs(impl, state, sweeps: int, seed: int):
    rng = np.random.default_rng(seed)
    s = state["s_assign"].copy()
    z = state["z_assign"].copy()
    n_s = state["n_s"].copy()
    n_sz = state["n_sz"].copy()
    n_szw = state["n_szw"].copy()
    n_szt = state["n_szt"].copy()
    scratch = np.empty(n_sz.size)
    start = time.perf_counter()
    for _ in range(sweeps):
        uniforms = rng.random(len(state["w1"]))
        impl.gibbs_epoch(
            state["w1"], state["w2"], s, z, n_s, n_sz, n_szw, n_szt,
            state["lam"], state["beta"], state["brs"],
            0.1, 1.0, uniforms, scratch,
        )
    elapsed = time.perf_counter() - start
    return elapsed, s, z


def bench_sgns(impl, setup, seed: int):
    rng = np.random.default_rng(seed)
    tokens, starts, window, negatives, pairs, dim, V = setup
    vin = ((rng.random((V, dim)) - 0.5) / dim).astype(np.float32)
    vout = np.zeros((V, dim), dtype=np.float32)
    neg_ids = rng.integers(0, V, size=pairs * negatives).astype(np.int32)
    buf = np.zeros(dim, dtype=np.float32)
    start = time.perf_counter()
    impl.sgns_epoch(
        tokens, starts, vin, vout, window, negatives, neg_ids,
        0.025, 0.025e-4, 0, pairs, buf,
    )
    return time.perf_counter() - start, vin


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reviews", type=int, default=2000)
    parser.add_argument("--sweeps", type=int, default=50)
    parser.add_argument("--pure-sweeps", type=int, default=None,
                        help="sweeps for the pure backend (defaults to --sweeps)")
    parser.add_argument("--dim", type=int, default=100)
    args = parser.parse_args()

    compiled = load_compiled()
    pure = load_pure()
    if compiled is None:
        print("compiled kernels not built; benchmarking the pure fallback only")

    corpus = synthetic_corpus(args.reviews)[0]
    model = init_model(corpus, Hyperparameters(topics=13), PolarityLexicon({}), seed=0)
    state = dict(
        w1=model.w1, w2=model.w2, s_assign=model.s_assign, z_assign=model.z_assign,
        n_s=model.n_s, n_sz=model.n_sz, n_szw=model.n_szw, n_szt=model.n_sz_total,
        lam=model.lam, beta=model.beta, brs=model.beta_row_sums,
    )
    n_biterms = len(model.w1)
    print(f"corpus: {args.reviews} reviews, {n_biterms} biterms, "
          f"V={corpus.vocab_size}, S=3, K=13")

    pure_sweeps = args.pure_sweeps or args.sweeps
    print(f"\nGibbs sweep ({args.sweeps} compiled / {pure_sweeps} pure):")
    if compiled is not None:
        t_c, s_c, z_c = bench_gibbs(compiled, state, args.sweeps, seed=9)
        per_c = t_c / args.sweeps
        print(f"  compiled: {t_c:.2f}s total, {per_c * 1e3:.1f} ms/sweep")
    t_p, s_p, z_p = bench_gibbs(pure, state, pure_sweeps, seed=9)
    per_p = t_p / pure_sweeps
    print(f"  pure:     {t_p:.2f}s total, {per_p * 1e3:.1f} ms/sweep")
    if compiled is not None:
        print(f"  speedup:  {per_p / per_c:.0f}x")
        if args.sweeps == pure_sweeps:
            match = np.array_equal(s_c, s_p) and np.array_equal(z_c, z_p)
            print(f"  chains bit-identical: {match}")

    # skip-gram setup shared by both backends
    ids = {t: i for i, t in enumerate(corpus.vocabulary)}
    streams = [[ids[t] for t in r.tokens] for r in corpus.reviews if len(r.tokens) >= 2]
    tokens = np.array([i for s in streams for i in s], dtype=np.int32)
    starts = np.zeros(len(streams) + 1, dtype=np.int64)
    np.cumsum([len(s) for s in streams], out=starts[1:])
    window, negatives = 5, 5
    pairs = sum(
        min(n, i + window + 1) - max(0, i - window) - 1
        for s in streams for n in [len(s)] for i in range(n)
    )
    setup = (tokens, starts, window, negatives, pairs, args.dim, len(ids))

    print(f"\nskip-gram epoch ({pairs} pairs, dim={args.dim}):")
    if compiled is not None:
        t_c, vin_c = bench_sgns(compiled, setup, seed=4)
        print(f"  compiled: {t_c:.2f}s")
    t_p, vin_p = bench_sgns(pure, setup, seed=4)
    print(f"  pure:     {t_p:.2f}s")
    if compiled is not None:
        print(f"  speedup:  {t_p / t_c:.0f}x")
        diff = float(np.abs(vin_c - vin_p).max())
        print(f"  max |vin difference|: {diff:.2e}")


if __name__ == "__main__":
    main()
