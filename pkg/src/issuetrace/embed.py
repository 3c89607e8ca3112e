"""Word vectors for topic labeling and changelog matching.

Either load pretrained vectors from a whitespace-delimited text file or
train skip-gram negative-sampling embeddings on the review corpora, so the
pipeline stays self-contained.
"""

from __future__ import annotations

import logging
from collections import Counter
from pathlib import Path

import numpy as np

from . import backend
from .corpus import VersionCorpus

logger = logging.getLogger(__name__)


class EmbeddingTable:
    """token -> dense vector, plus the policy for out-of-vocabulary tokens."""

    def __init__(self, dim: int, vectors: dict[str, np.ndarray], oov_policy: str = "skip"):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        if oov_policy not in ("zero", "skip"):
            raise ValueError("oov_policy must be 'zero' or 'skip'")
        for token, vec in vectors.items():
            if len(vec) != dim:
                raise ValueError(f"vector for {token!r} has length {len(vec)}, expected {dim}")
        self.dim = dim
        self.vectors = vectors
        self.oov_policy = oov_policy

    def __contains__(self, token: str) -> bool:
        return token in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)

    def get(self, token: str) -> np.ndarray | None:
        return self.vectors.get(token)


def load_vectors(path: str | Path, oov_policy: str = "skip") -> EmbeddingTable:
    """Parse lines of "token v1 v2 ... vD"; dimension fixed by the first line."""
    vectors: dict[str, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            token, values = parts[0], parts[1:]
            if dim is None:
                dim = len(values)
                if dim == 0:
                    raise ValueError(f"{path}:{lineno}: no vector components")
            elif len(values) != dim:
                raise ValueError(
                    f"{path}:{lineno}: expected {dim} components, got {len(values)}"
                )
            if token in vectors:
                logger.warning("duplicate vector for %r at line %d; keeping last", token, lineno)
            vectors[token] = np.array([float(v) for v in values], dtype=np.float64)
    if dim is None:
        raise ValueError(f"empty vector file: {path}")
    return EmbeddingTable(dim, vectors, oov_policy)


def save_vectors(table: EmbeddingTable, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for token, vec in table.vectors.items():
            fh.write(token + " " + " ".join(repr(float(v)) for v in vec) + "\n")


def train_vectors(
    corpora: list[VersionCorpus],
    dim: int = 100,
    window: int = 5,
    negatives: int = 5,
    epochs: int = 5,
    learning_rate: float = 0.025,
    min_count: int = 2,
    seed: int = 0,
    oov_policy: str = "skip",
) -> EmbeddingTable:
    """Skip-gram with negative sampling over all review token streams.

    Noise words follow the unigram^0.75 distribution; the step size decays
    linearly over all (center, context) pairs.  Deterministic under a fixed
    seed for a fixed backend.
    """
    counts: Counter[str] = Counter()
    for corpus in corpora:
        for review in corpus.reviews:
            counts.update(review.tokens)
    vocab = [t for t, c in counts.items() if c >= min_count]
    if not vocab:
        raise ValueError(f"no token reaches min_count={min_count}; corpus too small")
    token_to_id = {t: i for i, t in enumerate(vocab)}

    streams: list[list[int]] = []
    for corpus in corpora:
        for review in corpus.reviews:
            ids = [token_to_id[t] for t in review.tokens if t in token_to_id]
            if len(ids) >= 2:
                streams.append(ids)
    if not streams:
        raise ValueError("no review retains >= 2 in-vocabulary tokens")

    tokens_flat = np.array([i for s in streams for i in s], dtype=np.int32)
    starts = np.zeros(len(streams) + 1, dtype=np.int64)
    np.cumsum([len(s) for s in streams], out=starts[1:])

    noise = np.array([counts[t] for t in vocab], dtype=np.float64) ** 0.75
    noise_cdf = np.cumsum(noise / noise.sum())

    pairs_per_epoch = 0
    for s in streams:
        n = len(s)
        for i in range(n):
            pairs_per_epoch += min(n, i + window + 1) - max(0, i - window) - 1
    pairs_total = pairs_per_epoch * epochs

    rng = np.random.default_rng(seed)
    vin = ((rng.random((len(vocab), dim)) - 0.5) / dim).astype(np.float32)
    vout = np.zeros((len(vocab), dim), dtype=np.float32)
    grad_buf = np.zeros(dim, dtype=np.float32)

    done = 0
    for _ in range(epochs):
        draws = rng.random(pairs_per_epoch * negatives)
        neg_ids = np.searchsorted(noise_cdf, draws).astype(np.int32)
        np.clip(neg_ids, 0, len(vocab) - 1, out=neg_ids)
        done = backend.sgns_epoch(
            tokens_flat,
            starts,
            vin,
            vout,
            window,
            negatives,
            neg_ids,
            learning_rate,
            learning_rate * 1e-4,
            done,
            pairs_total,
            grad_buf,
        )

    vectors = {t: vin[i].astype(np.float64) for t, i in token_to_id.items()}
    return EmbeddingTable(dim, vectors, oov_policy)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; zero whenever either vector has zero norm."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def embed_text(tokens: list[str], table: EmbeddingTable) -> np.ndarray:
    """Mean of the tokens' vectors.

    A phrase token "a_b" missing from the table falls back to the mean of
    its constituents' vectors.  Under the "skip" policy OOV tokens are
    excluded from the average; under "zero" they contribute zero vectors.
    An entirely OOV text embeds to the zero vector.
    """
    parts: list[np.ndarray] = []
    known = 0
    for token in tokens:
        vec = table.get(token)
        if vec is None and "_" in token:
            constituents = [table.get(p) for p in token.split("_")]
            constituents = [c for c in constituents if c is not None]
            if constituents:
                vec = np.mean(constituents, axis=0)
        if vec is not None:
            parts.append(vec)
            known += 1
        elif table.oov_policy == "zero":
            parts.append(np.zeros(table.dim))
    if known == 0:
        return np.zeros(table.dim)
    return np.mean(parts, axis=0)
