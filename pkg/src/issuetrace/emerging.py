"""Flag emerging (anomalous) negative topics from consecutive-version drift.

A topic is emerging when the Jensen-Shannon divergence between its word
distribution at the newest version pair is an outlier against the window's
divergence statistics.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .bst import NEGATIVE, VersionSnapshot

logger = logging.getLogger(__name__)


@dataclass
class DivergenceMatrix:
    """Per-pair, per-topic JS divergences for one sentiment slice.

    Row i covers the consecutive pair (t-i, t-i-1); row 0 is the newest.
    """

    values: np.ndarray                       # (pairs, K), entries in [0, 1]
    version_ids: list[tuple[str, str]]       # (newer, older) per row
    sentiment: int = NEGATIVE


@dataclass
class EmergingTopicSet:
    """Topics flagged at the newest version, with their z-scores."""

    version_id: str
    topic_ids: set[int]
    zscores: np.ndarray                      # (K,)
    divergences: np.ndarray | None = None    # (K,) newest-pair JS row


def js_divergence(p: np.ndarray, q: np.ndarray) -> float:
    """Jensen-Shannon divergence with base-2 logs; symmetric, in [0, 1]."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {q.shape}")
    m = (p + q) / 2.0

    def _kl(a: np.ndarray) -> float:
        mask = a > 0
        return float(np.sum(a[mask] * np.log2(a[mask] / m[mask])))

    return 0.5 * _kl(p) + 0.5 * _kl(q)


def divergence_matrix(
    snapshots: list[VersionSnapshot],
    sentiment: int = NEGATIVE,
) -> DivergenceMatrix:
    """JS divergences of each topic between every consecutive snapshot pair.

    ``snapshots`` are consecutive versions, oldest to newest; shorter
    vocabularies are zero-padded before comparison.
    """
    if len(snapshots) < 2:
        raise ValueError("insufficient history: need at least 2 snapshots")
    newest_first = list(reversed(snapshots))
    K = newest_first[0].topics
    rows = []
    pairs = []
    for newer, older in zip(newest_first, newest_first[1:]):
        vmax = max(newer.vocab_size, older.vocab_size)
        row = np.empty(K, dtype=np.float64)
        for z in range(K):
            p = np.zeros(vmax)
            q = np.zeros(vmax)
            p[: newer.vocab_size] = newer.phi[sentiment, z]
            q[: older.vocab_size] = older.phi[sentiment, z]
            row[z] = js_divergence(p, q)
        rows.append(row)
        pairs.append((newer.version_id, older.version_id))
    return DivergenceMatrix(np.vstack(rows), pairs, sentiment)


def detect_anomalies(
    matrix: DivergenceMatrix,
    delta: float = 1.25,
    column_stats: bool = False,
) -> EmergingTopicSet:
    """Flag topics whose newest-pair divergence is a window outlier.

    Topic z is flagged when its row-0 divergence exceeds the mean by more
    than ``delta`` population standard deviations.  Statistics are taken
    over the whole matrix by default, or per topic column with
    ``column_stats``.  A zero standard deviation flags nothing.
    """
    if matrix.values.size == 0:
        raise ValueError("empty divergence matrix")
    values = matrix.values
    current = values[0]

    if column_stats:
        mean = values.mean(axis=0)
        std = values.std(axis=0)
    else:
        mean = values.mean()
        std = values.std()

    # entries live in [0, 1]; below this the matrix is flat up to rounding
    # and a z-score would just amplify noise
    tiny = 1e-12
    zscores = np.zeros_like(current)
    degenerate = np.all(std < tiny) if column_stats else std < tiny
    if degenerate:
        logger.warning("divergence matrix has zero standard deviation; no anomalies flagged")
        topic_ids: set[int] = set()
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            zscores = np.where(std >= tiny, (current - mean) / std, 0.0)
        topic_ids = {int(z) for z in np.nonzero(zscores > delta)[0]}

    return EmergingTopicSet(
        version_id=matrix.version_ids[0][0],
        topic_ids=topic_ids,
        zscores=zscores,
        divergences=current.copy(),
    )
