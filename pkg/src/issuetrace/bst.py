"""Joint sentiment-topic model over biterms for one version's reviews.

Every biterm (unordered pair of distinct words co-occurring in a review)
carries one sentiment polarity and one topic.  Inference is collapsed Gibbs
sampling with a multiplicative word-polarity prior; the per-sweep kernel is
provided by :mod:`issuetrace.backend`.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import backend
from .corpus import PolarityLexicon, TokenizedReview, VersionCorpus

SNAPSHOT_FORMAT_VERSION = 1

# Sentiment axis indices.  External polarity codes -1/0/+1 map onto the
# axis as negative/neutral/positive.
NEGATIVE, NEUTRAL, POSITIVE = 0, 1, 2
SENTIMENT_NAMES = ("negative", "neutral", "positive")
_CODE_TO_INDEX = {-1: NEGATIVE, 0: NEUTRAL, 1: POSITIVE}


@dataclass(frozen=True)
class Biterm:
    """Unordered pair of distinct word ids with a multiplicity."""

    w1: int
    w2: int
    count: int = 1

    def __post_init__(self):
        if self.w1 == self.w2:
            raise ValueError("a biterm pairs two distinct words")
        if self.w1 > self.w2:
            raise ValueError("biterm words must be in canonical order w1 <= w2")
        if self.count < 1:
            raise ValueError("biterm count must be positive")


@dataclass
class Hyperparameters:
    """Model sizes and Dirichlet/sentiment-prior settings.

    ``beta`` is the symmetric word-prior scalar used when no adaptive
    ``beta_matrix`` (sentiments x topics x vocabulary) is supplied.
    ``lambda_match``/``lambda_miss`` weight a sentiment that agrees/disagrees
    with a word's lexicon polarity.
    """

    topics: int = 13
    sentiments: int = 3
    alpha: float = 0.1
    beta: float = 0.01
    gamma: float = 1.0
    lambda_match: float = 0.9
    lambda_miss: float = 0.05
    beta_matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.topics < 1 or self.sentiments < 1:
            raise ValueError("topics and sentiments must be >= 1")
        for name in ("alpha", "beta", "gamma", "lambda_match", "lambda_miss"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.beta_matrix is not None and np.any(self.beta_matrix <= 0):
            raise ValueError("beta_matrix entries must be strictly positive")

    def beta_for(self, vocab_size: int) -> np.ndarray:
        """The word prior as a dense (S, K, V) array."""
        if self.beta_matrix is not None:
            if self.beta_matrix.shape != (self.sentiments, self.topics, vocab_size):
                raise ValueError(
                    f"beta_matrix shape {self.beta_matrix.shape} does not match "
                    f"(S={self.sentiments}, K={self.topics}, V={vocab_size})"
                )
            return np.ascontiguousarray(self.beta_matrix, dtype=np.float64)
        return np.full((self.sentiments, self.topics, vocab_size), self.beta, dtype=np.float64)


@dataclass
class VersionSnapshot:
    """Posterior-mean distributions of one trained version."""

    version_id: str
    pi: np.ndarray            # (S,)
    theta: np.ndarray         # (S, K)
    phi: np.ndarray           # (S, K, V)
    beta_used: np.ndarray     # (S, K, V) prior this version was trained with
    vocab: list[str]

    @property
    def sentiments(self) -> int:
        return self.phi.shape[0]

    @property
    def topics(self) -> int:
        return self.phi.shape[1]

    @property
    def vocab_size(self) -> int:
        return self.phi.shape[2]

    def save(self, path: str | Path) -> None:
        np.savez_compressed(
            path,
            format_version=SNAPSHOT_FORMAT_VERSION,
            version_id=self.version_id,
            pi=self.pi,
            theta=self.theta,
            phi=self.phi,
            beta_used=self.beta_used,
            vocab=json.dumps(self.vocab),
        )

    @classmethod
    def load(cls, path: str | Path) -> "VersionSnapshot":
        data = np.load(path, allow_pickle=False)
        fmt = int(data["format_version"])
        if fmt != SNAPSHOT_FORMAT_VERSION:
            raise ValueError(f"unsupported snapshot format version {fmt}")
        return cls(
            version_id=str(data["version_id"]),
            pi=data["pi"],
            theta=data["theta"],
            phi=data["phi"],
            beta_used=data["beta_used"],
            vocab=json.loads(str(data["vocab"])),
        )


@dataclass
class BstModelState:
    """Count tables and assignments of one Gibbs chain.

    Biterm occurrences are stored flat (a biterm with multiplicity c occupies
    c slots), so each slot carries exactly one (sentiment, topic) assignment
    and the collapsed conditional removes exactly one biterm at a time.
    """

    version_id: str
    w1: np.ndarray            # (N,) int64 word ids, w1 < w2 per slot
    w2: np.ndarray
    s_assign: np.ndarray      # (N,) int64
    z_assign: np.ndarray
    n_s: np.ndarray           # (S,) float64 biterms per sentiment
    n_sz: np.ndarray          # (S, K) biterms per (sentiment, topic)
    n_szw: np.ndarray         # (S, K, V) word slots per cell
    n_sz_total: np.ndarray    # (S, K) = 2 * n_sz, maintained incrementally
    hyper: Hyperparameters
    rng_seed: int
    rng: np.random.Generator = field(repr=False)
    lam: np.ndarray = field(repr=False)          # (N, S) sentiment prior weights
    beta: np.ndarray = field(repr=False)         # (S, K, V)
    beta_row_sums: np.ndarray = field(repr=False)  # (S, K)
    lexicon: PolarityLexicon = field(repr=False)
    vocab: list[str] = field(repr=False)

    @property
    def n_biterms(self) -> int:
        return len(self.w1)


def extract_biterms(review: TokenizedReview, vocabulary: dict[str, int]) -> list[Biterm]:
    """All unordered distinct-word position pairs of a review, merged.

    The whole review is the co-occurrence window.  Same-word pairs are
    dropped; remaining pairs are canonicalized (w1 < w2) and multiplicities
    merged into the ``count`` field.
    """
    ids = [vocabulary[t] for t in review.tokens]
    counts: Counter[tuple[int, int]] = Counter()
    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            a, b = ids[i], ids[j]
            if a == b:
                continue
            counts[(a, b) if a < b else (b, a)] += 1
    return [Biterm(w1, w2, c) for (w1, w2), c in counts.items()]


def _polarity_by_id(lexicon: PolarityLexicon, vocab: list[str]) -> np.ndarray:
    """Per-word sentiment index, or -1 for words without a lexicon entry."""
    out = np.full(len(vocab), -1, dtype=np.int64)
    for i, token in enumerate(vocab):
        code = lexicon.polarity(token)
        if code is not None:
            out[i] = _CODE_TO_INDEX[code]
    return out


def _word_weights(pol_idx: np.ndarray, hyper: Hyperparameters) -> np.ndarray:
    """(V, S) multiplicative weight of each word for each sentiment."""
    V = len(pol_idx)
    weights = np.ones((V, hyper.sentiments), dtype=np.float64)
    has_pol = pol_idx >= 0
    weights[has_pol] = hyper.lambda_miss
    weights[np.nonzero(has_pol)[0], pol_idx[has_pol]] = hyper.lambda_match
    return weights


def _lambda_matrix(
    w1: np.ndarray, w2: np.ndarray, lexicon: PolarityLexicon, vocab: list[str], hyper: Hyperparameters
) -> np.ndarray:
    pol_idx = _polarity_by_id(lexicon, vocab)
    weights = _word_weights(pol_idx, hyper)
    return weights[w1] * weights[w2]


def sentiment_prior(
    biterm: Biterm,
    lexicon: PolarityLexicon,
    hyper: Hyperparameters,
    vocab: list[str],
) -> np.ndarray:
    """Multiplicative sentiment weights lambda(b) for one biterm.

    Each polarity-bearing word contributes ``lambda_match`` to its own
    sentiment and ``lambda_miss`` to the others; words without a lexicon
    entry contribute 1 everywhere.  The result is strictly positive.
    """
    w1 = np.array([biterm.w1])
    w2 = np.array([biterm.w2])
    return _lambda_matrix(w1, w2, lexicon, vocab, hyper)[0]


def _flat_biterm_arrays(corpus: VersionCorpus) -> tuple[np.ndarray, np.ndarray]:
    """Occurrence-level biterm word-id arrays in deterministic corpus order."""
    a_list: list[int] = []
    b_list: list[int] = []
    vocab = corpus.vocabulary
    for review in corpus.reviews:
        ids = [vocab[t] for t in review.tokens]
        n = len(ids)
        for i in range(n):
            wi = ids[i]
            for j in range(i + 1, n):
                wj = ids[j]
                if wi == wj:
                    continue
                if wi < wj:
                    a_list.append(wi)
                    b_list.append(wj)
                else:
                    a_list.append(wj)
                    b_list.append(wi)
    return np.asarray(a_list, dtype=np.int64), np.asarray(b_list, dtype=np.int64)


def init_model(
    corpus: VersionCorpus,
    hyper: Hyperparameters,
    lexicon: PolarityLexicon,
    seed: int,
) -> BstModelState:
    """Randomly assign every biterm a (sentiment, topic), prior-biased.

    The joint draw follows lambda(b)[s] * beta[s,z,w1] * beta[s,z,w2]: the
    sentiment is biased by the lexicon and the topic by the word prior.
    Under a flat prior the topic draw is uniform; under an adaptive prior
    this is what keeps topic index k aligned with index k of the previous
    version.  Fully deterministic under ``seed``.
    """
    w1, w2 = _flat_biterm_arrays(corpus)
    if len(w1) == 0:
        raise ValueError("empty biterm set")

    S, K = hyper.sentiments, hyper.topics
    vocab = [None] * len(corpus.vocabulary)
    for token, idx in corpus.vocabulary.items():
        vocab[idx] = token
    V = len(vocab)

    rng = np.random.default_rng(seed)
    lam = _lambda_matrix(w1, w2, lexicon, vocab, hyper)
    beta = hyper.beta_for(V)

    n = len(w1)
    s_assign = np.empty(n, dtype=np.int64)
    z_assign = np.empty(n, dtype=np.int64)
    u = rng.random(n)
    chunk = 100_000
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        affinity = np.transpose(beta[:, :, w1[lo:hi]] * beta[:, :, w2[lo:hi]], (2, 0, 1))
        weights = (lam[lo:hi, :, None] * affinity).reshape(hi - lo, S * K)
        cum = np.cumsum(weights, axis=1)
        draws = u[lo:hi] * cum[:, -1]
        cells = np.minimum((cum <= draws[:, None]).sum(axis=1), S * K - 1)
        s_assign[lo:hi] = cells // K
        z_assign[lo:hi] = cells % K

    n_s = np.zeros(S, dtype=np.float64)
    n_sz = np.zeros((S, K), dtype=np.float64)
    n_szw = np.zeros((S, K, V), dtype=np.float64)
    np.add.at(n_s, s_assign, 1.0)
    np.add.at(n_sz, (s_assign, z_assign), 1.0)
    np.add.at(n_szw, (s_assign, z_assign, w1), 1.0)
    np.add.at(n_szw, (s_assign, z_assign, w2), 1.0)
    n_sz_total = 2.0 * n_sz

    return BstModelState(
        version_id=corpus.version_id,
        w1=w1,
        w2=w2,
        s_assign=s_assign,
        z_assign=z_assign,
        n_s=n_s,
        n_sz=n_sz,
        n_szw=n_szw,
        n_sz_total=n_sz_total,
        hyper=hyper,
        rng_seed=seed,
        rng=rng,
        lam=lam,
        beta=beta,
        beta_row_sums=beta.sum(axis=2),
        lexicon=lexicon,
        vocab=vocab,
    )


def gibbs_sweep(state: BstModelState, lexicon: PolarityLexicon | None = None) -> BstModelState:
    """Resample every biterm once from the collapsed conditional."""
    if lexicon is not None and lexicon is not state.lexicon:
        state.lam = _lambda_matrix(state.w1, state.w2, lexicon, state.vocab, state.hyper)
        state.lexicon = lexicon
    uniforms = state.rng.random(state.n_biterms)
    scratch = np.empty(state.hyper.sentiments * state.hyper.topics, dtype=np.float64)
    backend.gibbs_epoch(
        state.w1,
        state.w2,
        state.s_assign,
        state.z_assign,
        state.n_s,
        state.n_sz,
        state.n_szw,
        state.n_sz_total,
        state.lam,
        state.beta,
        state.beta_row_sums,
        state.hyper.alpha,
        state.hyper.gamma,
        uniforms,
        scratch,
    )
    return state


def posterior_snapshot(state: BstModelState) -> VersionSnapshot:
    """Posterior means from the current counts."""
    hyper = state.hyper
    S, K = hyper.sentiments, hyper.topics
    n_b = float(state.n_biterms)
    pi = (state.n_s + hyper.gamma) / (n_b + S * hyper.gamma)
    theta = (state.n_sz + hyper.alpha) / (state.n_s[:, None] + K * hyper.alpha)
    phi = (state.n_szw + state.beta) / (state.n_sz_total + state.beta_row_sums)[:, :, None]
    return VersionSnapshot(
        version_id=state.version_id,
        pi=pi,
        theta=theta,
        phi=phi,
        beta_used=state.beta.copy(),
        vocab=list(state.vocab),
    )


def train(
    state: BstModelState,
    iterations: int,
    lexicon: PolarityLexicon | None = None,
) -> VersionSnapshot:
    """Run Gibbs sweeps then return the posterior-mean snapshot."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    for _ in range(iterations):
        gibbs_sweep(state, lexicon)
    return posterior_snapshot(state)


def biterm_probability(snapshot: VersionSnapshot, biterm: Biterm) -> float:
    """Marginal probability of a biterm under the snapshot's distributions."""
    V = snapshot.vocab_size
    if not (0 <= biterm.w1 < V and 0 <= biterm.w2 < V):
        raise ValueError(f"biterm words ({biterm.w1}, {biterm.w2}) outside vocabulary of size {V}")
    contributions = (
        snapshot.pi[:, None]
        * snapshot.theta
        * snapshot.phi[:, :, biterm.w1]
        * snapshot.phi[:, :, biterm.w2]
    )
    return float(contributions.sum())


def check_consistency(state: BstModelState) -> None:
    """Assert the count identities; raises AssertionError on drift."""
    S, K = state.hyper.sentiments, state.hyper.topics
    n_s = np.zeros(S)
    n_sz = np.zeros((S, K))
    n_szw = np.zeros_like(state.n_szw)
    np.add.at(n_s, state.s_assign, 1.0)
    np.add.at(n_sz, (state.s_assign, state.z_assign), 1.0)
    np.add.at(n_szw, (state.s_assign, state.z_assign, state.w1), 1.0)
    np.add.at(n_szw, (state.s_assign, state.z_assign, state.w2), 1.0)
    assert np.array_equal(n_s, state.n_s), "n_s inconsistent with assignments"
    assert np.array_equal(n_sz, state.n_sz), "n_sz inconsistent with assignments"
    assert np.array_equal(n_szw, state.n_szw), "n_szw inconsistent with assignments"
    assert np.array_equal(state.n_sz_total, state.n_szw.sum(axis=2)), "n_sz_total drifted"
    assert np.array_equal(state.n_s, state.n_sz.sum(axis=1)), "n_s != row sums of n_sz"
