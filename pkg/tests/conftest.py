"""Shared builders for synthetic corpora and hand-constructed model inputs."""

from __future__ import annotations

import numpy as np
import pytest

from issuetrace.corpus import PolarityLexicon, RawReview, TokenizedReview, VersionCorpus


def corpus_from_sentences(version_id: str, reviews: list[list[list[str]]]) -> VersionCorpus:
    """Build a VersionCorpus directly from token lists, bypassing preprocessing.

    ``reviews`` is a list of reviews, each a list of sentences, each a list
    of tokens.  Vocabulary ids follow first appearance.
    """
    tokenized = []
    vocabulary: dict[str, int] = {}
    for sentences in reviews:
        tokens = [t for sent in sentences for t in sent]
        for t in tokens:
            if t not in vocabulary:
                vocabulary[t] = len(vocabulary)
        tokenized.append(TokenizedReview(version_id, tokens, [list(s) for s in sentences]))
    return VersionCorpus(version_id, tokenized, vocabulary)


def flat_corpus(version_id: str, reviews: list[list[str]]) -> VersionCorpus:
    """One-sentence-per-review convenience wrapper."""
    return corpus_from_sentences(version_id, [[tokens] for tokens in reviews])


def planted_reviews(
    n_reviews: int,
    vocab_a: list[str],
    vocab_b: list[str],
    seed: int,
    version_id: str = "1.0",
    tokens_per_review: int = 6,
    polarity_a: str | None = None,
    polarity_b: str | None = None,
) -> list[RawReview]:
    """Reviews drawn from two disjoint-vocabulary planted topics.

    Optionally guarantees one polarity-bearing word per review (the first
    word of the topic's vocabulary list).
    """
    rng = np.random.default_rng(seed)
    reviews = []
    for i in range(n_reviews):
        pool = vocab_a if i % 2 == 0 else vocab_b
        words = list(rng.choice(pool, size=tokens_per_review))
        marker = polarity_a if i % 2 == 0 else polarity_b
        if marker is not None:
            words[rng.integers(0, tokens_per_review)] = marker
        reviews.append(RawReview(version_id, " ".join(words)))
    return reviews


@pytest.fixture
def two_word_lexicon() -> PolarityLexicon:
    return PolarityLexicon({"buggy": -1, "weird": -1, "great": 1, "inform": 0})


TOPIC_VOCAB = {
    "upload": ["upload", "photo", "image", "gallery", "camera", "attach"],
    "video": ["video", "play", "pause", "stream", "buffer", "player"],
    "login": ["login", "password", "account", "signin", "logout", "session"],
    "battery": ["battery", "drain", "charge", "power", "heat", "overheat"],
}


def write_synthetic_inputs(
    tmp_path,
    n_versions: int = 2,
    reviews_per_version: int = 60,
    seed: int = 0,
    burst_topic: str | None = None,
    burst_version: int | None = None,
):
    """Synthetic review stream over stable topics, optional negative burst.

    Returns (reviews_path, lexicon_path, changelog_path).
    """
    rng = np.random.default_rng(seed)
    topics = list(TOPIC_VOCAB)
    neg_markers = ["broken", "fails", "terrible", "awful", "freezes"]
    lines = []
    for v in range(n_versions):
        version = f"{v + 1}.0"
        for _ in range(reviews_per_version):
            topic = topics[int(rng.integers(0, len(topics)))]
            words = list(rng.choice(TOPIC_VOCAB[topic], size=5))
            words.append(str(rng.choice(neg_markers)))
            lines.append(f"{version}\t{' '.join(words)}")
        if burst_topic is not None and v == burst_version:
            for _ in range(reviews_per_version * 2):
                words = list(rng.choice(TOPIC_VOCAB[burst_topic], size=5))
                words.append(str(rng.choice(neg_markers)))
                lines.append(f"{version}\t{' '.join(words)}")
    reviews_path = tmp_path / "reviews.tsv"
    reviews_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    lexicon_path = tmp_path / "lexicon.txt"
    lexicon_path.write_text(
        "".join(f"{w}\t-1\n" for w in ["broken", "fail", "terrible", "awful", "freeze"]),
        encoding="utf-8",
    )

    changelog_path = tmp_path / "changelog.txt"
    parts = []
    for v in range(n_versions):
        parts.append(f"# {v + 1}.0")
        parts.append("Fixed upload and photo gallery problems")
        parts.append("Video player buffering improvements")
    changelog_path.write_text("\n".join(parts) + "\n", encoding="utf-8")
    return reviews_path, lexicon_path, changelog_path
