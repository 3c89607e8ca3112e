"""Topic interpretation: rank phrase and sentence candidates per topic.

Candidates are scored on two levels (topic-space KL similarity and
embedding-space attention similarity), min-max normalized per level across
the candidate pool, convex-combined, and penalized by similarity to the
other topics.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .corpus import VersionCorpus
from .embed import EmbeddingTable, cosine, embed_text

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Candidate:
    """A phrase (two constituent words) or sentence drawn from one version."""

    kind: str                  # "phrase" | "sentence"
    tokens: tuple[str, ...]
    source_version: str
    count: int

    def __post_init__(self):
        if self.kind not in ("phrase", "sentence"):
            raise ValueError(f"unknown candidate kind {self.kind!r}")
        if self.kind == "phrase" and len(self.tokens) != 2:
            raise ValueError("phrase candidates have exactly 2 constituent words")
        if self.count < 1:
            raise ValueError("candidate count must be >= 1")

    @property
    def text(self) -> str:
        return " ".join(self.tokens)

    @property
    def joined(self) -> str:
        """Phrase candidates as their corpus token form."""
        return "_".join(self.tokens) if self.kind == "phrase" else self.text


@dataclass
class LabelingParams:
    """Scoring knobs: level balance, inter-topic penalty, attention support."""

    m: float = 0.5
    mu: float = 1.0
    top_words: int = 50
    epsilon: float = 1e-12

    def __post_init__(self):
        if not 0.0 < self.m < 1.0:
            raise ValueError("m must lie strictly between 0 and 1")
        if self.mu < 0:
            raise ValueError("mu must be >= 0")
        if self.top_words < 1:
            raise ValueError("top_words must be >= 1")


@dataclass(frozen=True)
class ScoredLabel:
    kind: str
    tokens: tuple[str, ...]
    text: str
    score: float
    count: int


@dataclass
class TopicLabels:
    topic: int
    sentiment: int
    phrases: list[ScoredLabel]
    sentences: list[ScoredLabel]


# ---------------------------------------------------------------------------
# Candidate extraction
# ---------------------------------------------------------------------------


def phrase_candidates(corpus: VersionCorpus) -> list[Candidate]:
    """Every mined phrase token of the version, with occurrence counts."""
    counts: Counter[str] = Counter()
    for review in corpus.reviews:
        counts.update(t for t in review.tokens if "_" in t)
    return [
        Candidate("phrase", tuple(token.split("_")), corpus.version_id, c)
        for token, c in counts.items()
    ]


def sentence_candidates(
    corpus: VersionCorpus,
    min_tokens: int = 3,
    max_tokens: int = 30,
    cap: int = 2000,
    rng: np.random.Generator | None = None,
) -> list[Candidate]:
    """Distinct review sentences within the length band, count-deduplicated.

    Pools larger than ``cap`` are thinned by count-weighted sampling without
    replacement (deterministic under the supplied rng).
    """
    counts: Counter[tuple[str, ...]] = Counter()
    for review in corpus.reviews:
        for sent in review.sentences:
            if min_tokens <= len(sent) <= max_tokens:
                counts[tuple(sent)] += 1
    candidates = [
        Candidate("sentence", tokens, corpus.version_id, c) for tokens, c in counts.items()
    ]
    if len(candidates) > cap:
        rng = rng or np.random.default_rng(0)
        weights = np.array([c.count for c in candidates], dtype=np.float64)
        chosen = rng.choice(len(candidates), size=cap, replace=False, p=weights / weights.sum())
        candidates = [candidates[i] for i in sorted(chosen)]
    return candidates


# ---------------------------------------------------------------------------
# Level scores for a single candidate (the contract functions)
# ---------------------------------------------------------------------------


def _smoothed_row(phi_row: np.ndarray, epsilon: float) -> np.ndarray:
    row = np.maximum(np.asarray(phi_row, dtype=np.float64), epsilon)
    return row / row.sum()


def _top_word_ids(phi_row: np.ndarray, top_words: int) -> np.ndarray:
    order = np.argsort(-np.asarray(phi_row), kind="stable")
    return order[: min(top_words, len(order))]


def sim_topic_phrase(
    a: Candidate,
    phi_row: np.ndarray,
    vocabulary: dict[str, int],
    epsilon: float = 1e-12,
) -> float:
    """Negative KL divergence from the phrase's word distribution to the topic.

    The phrase's empirical distribution is uniform over its two constituent
    words; the topic row is floored at epsilon and renormalized.  Constituents
    missing from the vocabulary are treated as probability epsilon.
    """
    if a.kind != "phrase":
        raise ValueError("sim_topic_phrase expects a phrase candidate")
    smoothed = _smoothed_row(phi_row, epsilon)
    p_word = 1.0 / len(a.tokens)
    kl = 0.0
    for token in a.tokens:
        prob = smoothed[vocabulary[token]] if token in vocabulary else epsilon
        kl += p_word * np.log(p_word / prob)
    return -float(kl)


def sim_embed_phrase(
    a: Candidate,
    phi_row: np.ndarray,
    table: EmbeddingTable,
    top_words: int,
    vocab: list[str],
) -> float:
    """Attention-weighted topic mass of the words most similar to the phrase.

    Attention is a softmax over the ``top_words`` highest-probability words
    of the cosine between the phrase embedding and each word's vector.
    """
    phrase_vec = embed_text([a.joined], table)
    if not np.any(phrase_vec):
        logger.warning("phrase candidate %r is entirely out of vocabulary", a.text)
        return 0.0
    top_ids = _top_word_ids(phi_row, top_words)
    sims = np.array(
        [cosine(phrase_vec, table.get(vocab[w])) if vocab[w] in table else 0.0 for w in top_ids]
    )
    weights = np.exp(sims - sims.max())
    attention = weights / weights.sum()
    return float(np.dot(attention, np.asarray(phi_row)[top_ids]))


def sim_topic_sentence(
    s: Candidate,
    phi_row: np.ndarray,
    vocabulary: dict[str, int],
    epsilon: float = 1e-12,
) -> float:
    """Term-frequency-weighted log topic probability of the sentence's words.

    Each word contributes log(phi_w) (the point-distribution negative KL),
    weighted by its term frequency within the sentence; out-of-vocabulary
    words contribute log(epsilon).
    """
    if s.kind != "sentence":
        raise ValueError("sim_topic_sentence expects a sentence candidate")
    smoothed = _smoothed_row(phi_row, epsilon)
    tf = Counter(s.tokens)
    total = len(s.tokens)
    score = 0.0
    for token, count in tf.items():
        prob = smoothed[vocabulary[token]] if token in vocabulary else epsilon
        score += (count / total) * np.log(prob)
    return float(score)


def _word_attention_score(
    word_vec: np.ndarray,
    phi_row: np.ndarray,
    table: EmbeddingTable,
    top_ids: np.ndarray,
    vocab: list[str],
) -> float:
    if not np.any(word_vec):
        return 0.0
    sims = np.array(
        [cosine(word_vec, table.get(vocab[w])) if vocab[w] in table else 0.0 for w in top_ids]
    )
    weights = np.exp(sims - sims.max())
    attention = weights / weights.sum()
    return float(np.dot(attention, np.asarray(phi_row)[top_ids]))


def sim_embed_sentence(
    s: Candidate,
    phi_row: np.ndarray,
    table: EmbeddingTable,
    top_words: int,
    vocab: list[str],
) -> float:
    """Length-normalized sum of per-word attention scores.

    Each constituent word is scored like a one-word phrase; the sum is
    divided by sentence length so long sentences are not favored.
    Out-of-vocabulary words contribute zero.
    """
    if s.kind != "sentence":
        raise ValueError("sim_embed_sentence expects a sentence candidate")
    top_ids = _top_word_ids(phi_row, top_words)
    total = 0.0
    for token in s.tokens:
        total += _word_attention_score(embed_text([token], table), phi_row, table, top_ids, vocab)
    return total / len(s.tokens)


# ---------------------------------------------------------------------------
# Pool scoring and ranking
# ---------------------------------------------------------------------------


def _minmax(values: np.ndarray) -> np.ndarray:
    """Map a pool's level scores into [0, 1]; a flat pool maps to 0.5."""
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.full_like(values, 0.5)
    return (values - lo) / (hi - lo)


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    return v / n if n > 0 else v


def _pool_level_scores(
    candidates: list[Candidate],
    all_phi: np.ndarray,
    params: LabelingParams,
    table: EmbeddingTable,
    vocabulary: dict[str, int],
    vocab: list[str],
) -> tuple[np.ndarray, np.ndarray]:
    """Raw (N, K) topic-level and embedding-level scores for one pool.

    The embedding level is computed with unit-vector matrix products, which
    is the same cosine-attention arithmetic as the single-candidate
    functions up to floating-point rounding.
    """
    K = all_phi.shape[0]
    N = len(candidates)
    topic_raw = np.empty((N, K))
    embed_raw = np.empty((N, K))

    smoothed = np.stack([_smoothed_row(all_phi[k], params.epsilon) for k in range(K)])
    log_smoothed = np.log(smoothed)
    log_eps = np.log(params.epsilon)

    # per-topic attention support and unit vectors of the support words
    top_ids = [_top_word_ids(all_phi[k], params.top_words) for k in range(K)]
    top_vecs = []
    for k in range(K):
        mat = np.zeros((len(top_ids[k]), table.dim))
        for row, w in enumerate(top_ids[k]):
            vec = table.get(vocab[w])
            if vec is not None:
                mat[row] = _unit(vec)
        top_vecs.append(mat)

    # distinct word-level embeddings used by sentence candidates
    word_scores: list[dict[str, float]] = [dict() for _ in range(K)]
    distinct_words = sorted({t for c in candidates if c.kind == "sentence" for t in c.tokens})
    if distinct_words:
        word_mat = np.stack([_unit(embed_text([t], table)) for t in distinct_words])
        nonzero = np.any(word_mat, axis=1)
        for k in range(K):
            sims = word_mat @ top_vecs[k].T
            shifted = np.exp(sims - sims.max(axis=1, keepdims=True))
            attention = shifted / shifted.sum(axis=1, keepdims=True)
            scores = attention @ all_phi[k][top_ids[k]]
            scores[~nonzero] = 0.0
            word_scores[k] = dict(zip(distinct_words, scores))

    for n, cand in enumerate(candidates):
        if cand.kind == "phrase":
            ids = [vocabulary.get(t) for t in cand.tokens]
            p_word = 1.0 / len(cand.tokens)
            for k in range(K):
                acc = 0.0
                for i in ids:
                    log_prob = log_smoothed[k, i] if i is not None else log_eps
                    acc += p_word * (np.log(p_word) - log_prob)
                topic_raw[n, k] = -acc
            vec = _unit(embed_text([cand.joined], table))
            if not np.any(vec):
                logger.warning("phrase candidate %r is entirely out of vocabulary", cand.text)
                embed_raw[n] = 0.0
            else:
                for k in range(K):
                    sims = top_vecs[k] @ vec
                    shifted = np.exp(sims - sims.max())
                    attention = shifted / shifted.sum()
                    embed_raw[n, k] = attention @ all_phi[k][top_ids[k]]
        else:
            tf = Counter(cand.tokens)
            total = len(cand.tokens)
            for k in range(K):
                acc = 0.0
                for token, count in tf.items():
                    i = vocabulary.get(token)
                    log_prob = log_smoothed[k, i] if i is not None else log_eps
                    acc += (count / total) * log_prob
                topic_raw[n, k] = acc
                embed_raw[n, k] = (
                    sum(word_scores[k][t] for t in cand.tokens) / total if word_scores[k] else 0.0
                )
    return topic_raw, embed_raw


def combined_similarity(
    topic_raw: np.ndarray, embed_raw: np.ndarray, params: LabelingParams
) -> np.ndarray:
    """Min-max normalize each level per topic, then mix with weight m."""
    sim = np.empty_like(topic_raw)
    for k in range(topic_raw.shape[1]):
        sim[:, k] = params.m * _minmax(topic_raw[:, k]) + (1.0 - params.m) * _minmax(embed_raw[:, k])
    return sim


def penalized_scores(sim: np.ndarray, params: LabelingParams) -> np.ndarray:
    """Subtract the mean similarity to the other topics, weighted by mu."""
    K = sim.shape[1]
    if K == 1:
        return sim.copy()
    others = sim.sum(axis=1, keepdims=True) - sim
    return sim - (params.mu / (K - 1)) * others


def score_candidate(
    candidate: Candidate,
    z: int,
    pool: list[Candidate],
    all_phi: np.ndarray,
    params: LabelingParams,
    table: EmbeddingTable,
    vocabulary: dict[str, int],
    vocab: list[str],
) -> float:
    """Score one candidate for topic z within its normalization pool."""
    if candidate in pool:
        idx = pool.index(candidate)
        members = pool
    else:
        members = pool + [candidate]
        idx = len(members) - 1
    topic_raw, embed_raw = _pool_level_scores(members, all_phi, params, table, vocabulary, vocab)
    sim = combined_similarity(topic_raw, embed_raw, params)
    return float(penalized_scores(sim, params)[idx, z])


def _rank(
    candidates: list[Candidate], scores: np.ndarray, limit: int
) -> list[ScoredLabel]:
    order = sorted(
        range(len(candidates)),
        key=lambda i: (-scores[i], -candidates[i].count, candidates[i].tokens),
    )
    return [
        ScoredLabel(
            kind=candidates[i].kind,
            tokens=candidates[i].tokens,
            text=candidates[i].text,
            score=float(scores[i]),
            count=candidates[i].count,
        )
        for i in order[:limit]
    ]


def label_topic(
    z: int,
    sentiment: int,
    candidates: list[Candidate],
    all_phi: np.ndarray,
    params: LabelingParams,
    table: EmbeddingTable,
    vocabulary: dict[str, int],
    vocab: list[str],
    n_phrases: int = 3,
    n_sentences: int = 3,
) -> TopicLabels:
    """Top phrases and sentences for one topic, highest score first.

    Phrases and sentences form separate normalization pools.  Ties break
    toward the more frequent candidate, then lexicographic token order.
    """
    result = TopicLabels(topic=z, sentiment=sentiment, phrases=[], sentences=[])
    for kind, limit in (("phrase", n_phrases), ("sentence", n_sentences)):
        pool = [c for c in candidates if c.kind == kind]
        if not pool:
            logger.warning("no %s candidates available for topic %d", kind, z)
            continue
        topic_raw, embed_raw = _pool_level_scores(pool, all_phi, params, table, vocabulary, vocab)
        sim = combined_similarity(topic_raw, embed_raw, params)
        scores = penalized_scores(sim, params)[:, z]
        ranked = _rank(pool, scores, limit)
        if kind == "phrase":
            result.phrases = ranked
        else:
            result.sentences = ranked
    return result
