"""Adaptive chaining of per-version models.

Each new version is trained with a word prior blended from the previous
versions' sentiment-topic word distributions, weighted by softmax
connection strengths against the prior that trained the last version.
Topic index k stays chained to index k across versions; there is no
re-matching.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .bst import Hyperparameters, VersionSnapshot, init_model, train
from .corpus import PolarityLexicon, VersionCorpus

WINDOW_FORMAT_VERSION = 1

# Keeps the Gibbs conditional strictly positive once the blended prior is
# used as Dirichlet pseudo-counts.
BETA_FLOOR = 1e-6


@dataclass
class VersionWindow:
    """Up to ``omega`` most recent snapshots plus the last prior used."""

    omega: int
    snapshots: list[VersionSnapshot] = field(default_factory=list)
    beta_prev: np.ndarray | None = None   # prior that trained snapshots[-1]

    def __post_init__(self):
        if self.omega < 1:
            raise ValueError("omega must be >= 1")

    def __len__(self) -> int:
        return len(self.snapshots)


def _pad_rows(phi: np.ndarray, vocab_size: int) -> np.ndarray:
    """Zero-pad the vocabulary axis up to ``vocab_size``."""
    if phi.shape[2] == vocab_size:
        return phi
    padded = np.zeros((phi.shape[0], phi.shape[1], vocab_size), dtype=phi.dtype)
    padded[:, :, : phi.shape[2]] = phi
    return padded


def _stacked_phis(window: VersionWindow) -> np.ndarray:
    """(n, S, K, V) stack of window phis, newest first, zero-padded."""
    if not window.snapshots:
        raise ValueError("window holds no snapshots")
    if window.beta_prev is None:
        raise ValueError("window is missing the previous prior")
    vocab_size = window.beta_prev.shape[2]
    recent = list(reversed(window.snapshots))  # index 0 is version t-1
    return np.stack([_pad_rows(s.phi, vocab_size) for s in recent])


def connection_strengths(window: VersionWindow, s: int, z: int) -> np.ndarray:
    """Softmax-normalized similarity of each window phi row to the last prior.

    Entry i corresponds to version t-1-i (newest first).  When fewer than
    ``omega`` versions exist, the softmax runs over the available ones.
    """
    phis = _stacked_phis(window)
    dots = np.einsum("nv,v->n", phis[:, s, z, :], window.beta_prev[s, z, :])
    shifted = np.exp(dots - dots.max())
    return shifted / shifted.sum()


def adaptive_prior(window: VersionWindow) -> np.ndarray:
    """Blend window phis into the next word prior (Dirichlet pseudo-counts).

    For each (sentiment, topic) row the result is the connection-strength
    convex combination of that row across the window, so every row sums to 1.
    Flooring for strict positivity happens at the point of use, in
    :func:`advance`, keeping the single-snapshot case an exact copy.
    """
    phis = _stacked_phis(window)
    dots = np.einsum("nskv,skv->nsk", phis, window.beta_prev)
    shifted = np.exp(dots - dots.max(axis=0, keepdims=True))
    eta = shifted / shifted.sum(axis=0, keepdims=True)
    if len(window.snapshots) == 1:
        return phis[0].copy()
    return np.einsum("nsk,nskv->skv", eta, phis)


def advance(
    window: VersionWindow,
    new_corpus: VersionCorpus,
    hyper: Hyperparameters,
    lexicon: PolarityLexicon,
    seed: int,
    iterations: int = 500,
) -> tuple[VersionSnapshot, VersionWindow]:
    """Train the next version with the adaptive prior and roll the window.

    New vocabulary entries receive the flat ``hyper.beta`` pseudo-count;
    grown rows are re-normalized so total pseudo-count mass stays comparable
    across versions, then floored at ``BETA_FLOOR``.
    """
    vocab_size = new_corpus.vocab_size
    S, K = hyper.sentiments, hyper.topics

    if not window.snapshots:
        beta_t = np.full((S, K, vocab_size), hyper.beta, dtype=np.float64)
    else:
        base = adaptive_prior(window)
        if base.shape[2] > vocab_size:
            raise ValueError("vocabulary shrank between versions; ids must be stable")
        if base.shape[2] < vocab_size:
            grown = np.full((S, K, vocab_size), hyper.beta, dtype=np.float64)
            grown[:, :, : base.shape[2]] = base
            grown /= grown.sum(axis=2, keepdims=True)
            base = grown
        beta_t = np.maximum(base, BETA_FLOOR)

    hyper_t = replace(hyper, beta_matrix=beta_t)
    state = init_model(new_corpus, hyper_t, lexicon, seed)
    snapshot = train(state, iterations, lexicon)

    snapshots = (window.snapshots + [snapshot])[-window.omega:]
    return snapshot, VersionWindow(window.omega, snapshots, beta_t)


def save_window(window: VersionWindow, path: str | Path) -> None:
    """Checkpoint the window so a review stream can be resumed."""
    payload: dict[str, object] = {
        "format_version": WINDOW_FORMAT_VERSION,
        "omega": window.omega,
        "n_snapshots": len(window.snapshots),
    }
    if window.beta_prev is not None:
        payload["beta_prev"] = window.beta_prev
    for i, snap in enumerate(window.snapshots):
        payload[f"snap{i}_version_id"] = snap.version_id
        payload[f"snap{i}_pi"] = snap.pi
        payload[f"snap{i}_theta"] = snap.theta
        payload[f"snap{i}_phi"] = snap.phi
        payload[f"snap{i}_beta_used"] = snap.beta_used
        payload[f"snap{i}_vocab"] = json.dumps(snap.vocab)
    np.savez_compressed(path, **payload)


def load_window(path: str | Path) -> VersionWindow:
    data = np.load(path, allow_pickle=False)
    fmt = int(data["format_version"])
    if fmt != WINDOW_FORMAT_VERSION:
        raise ValueError(f"unsupported window format version {fmt}")
    snapshots = []
    for i in range(int(data["n_snapshots"])):
        snapshots.append(
            VersionSnapshot(
                version_id=str(data[f"snap{i}_version_id"]),
                pi=data[f"snap{i}_pi"],
                theta=data[f"snap{i}_theta"],
                phi=data[f"snap{i}_phi"],
                beta_used=data[f"snap{i}_beta_used"],
                vocab=json.loads(str(data[f"snap{i}_vocab"])),
            )
        )
    beta_prev = data["beta_prev"] if "beta_prev" in data else None
    return VersionWindow(int(data["omega"]), snapshots, beta_prev)
