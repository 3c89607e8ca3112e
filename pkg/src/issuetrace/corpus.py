"""Review ingestion and normalization.

Turns raw per-version review text into tokenized, phrase-merged corpora
sharing one growing vocabulary, and loads the word-polarity lexicon that
drives the sentiment prior downstream.
"""

from __future__ import annotations

import json
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

logger = logging.getLogger(__name__)

_SENTENCE_SPLIT = re.compile(r"[.!?;]+")
_PUNCT_CLASS = r"[\"'`,:()\[\]{}<>*&^%$#@~|\\/+=_.!?;-]"
_TOKEN_STRIP = re.compile(rf"^{_PUNCT_CLASS}+|{_PUNCT_CLASS}+$")
_TOKEN_VALID = re.compile(r"^[a-z0-9_']+$")
_ELONGATION = re.compile(r"(.)\1{2,}")

VOWELS = "aeiou"


@dataclass(frozen=True)
class RawReview:
    """One review as ingested, before any normalization."""

    version_id: str
    text: str
    rating: int | None = None
    timestamp: float | None = None

    def __post_init__(self):
        if not self.version_id:
            raise ValueError("version_id must be non-empty")
        if not self.text.strip():
            raise ValueError("review text must be non-empty")


@dataclass
class TokenizedReview:
    """Normalized token stream with sentence boundaries preserved."""

    version_id: str
    tokens: list[str]
    sentences: list[list[str]]

    def is_empty(self) -> bool:
        return not self.tokens


@dataclass
class VersionCorpus:
    """All surviving reviews of one version plus the vocabulary snapshot.

    ``vocabulary`` maps token -> integer id, dense in ``0..V-1``.  Ids are
    assigned globally across versions and never change once given, so the
    snapshot of a later version extends (never rewrites) an earlier one.
    """

    version_id: str
    reviews: list[TokenizedReview] = field(default_factory=list)
    vocabulary: dict[str, int] = field(default_factory=dict)

    @property
    def vocab_size(self) -> int:
        return len(self.vocabulary)

    def token_count(self) -> int:
        return sum(len(r.tokens) for r in self.reviews)


class PolarityLexicon:
    """token -> polarity code in {-1, 0, +1}."""

    def __init__(self, entries: dict[str, int] | None = None):
        entries = dict(entries or {})
        for token, code in entries.items():
            if code not in (-1, 0, 1):
                raise ValueError(f"polarity code for {token!r} must be -1, 0 or 1")
        self.entries = entries

    def polarity(self, token: str) -> int | None:
        return self.entries.get(token)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, token: str) -> bool:
        return token in self.entries


# ---------------------------------------------------------------------------
# Lemmatization: a small deterministic suffix-rule table.
# ---------------------------------------------------------------------------

# Rule modes:
#   "strip"      remove the suffix
#   "restore"    remove the suffix, then undouble a final consonant or
#                restore a dropped final "e" (CVC heuristic)
#   "restore_c"  like "restore" but only when the stem ends in a consonant;
#                keeps chains like bleeding -> bleed -> ble from forming
#   "y"          remove the suffix and append "y"
#   "es"         remove "es" after a sibilant stem, otherwise only the "s"
#   "s"          remove a plain plural "s" (guarding -ss/-us/-is/-'s)
DEFAULT_SUFFIX_RULES: tuple[tuple[str, int, str], ...] = (
    ("ies", 5, "y"),
    ("ied", 5, "y"),
    ("ier", 5, "y"),
    ("ing", 6, "restore"),
    ("est", 6, "restore"),
    ("ed", 5, "restore_c"),
    ("er", 6, "restore"),
    ("es", 5, "es"),
    ("s", 4, "s"),
)

# Words the suffix rules would mangle, mapped to their intended lemma.
# Every value must itself be a fixed point of the rules.
DEFAULT_LEMMA_EXCEPTIONS: dict[str, str] = {
    "does": "do",
    "goes": "go",
    "going": "go",
    "shoes": "shoe",
    "heroes": "hero",
    "echoes": "echo",
    "toes": "toe",
    "potatoes": "potato",
    "tomatoes": "tomato",
    "uses": "use",
    "used": "use",
    "using": "use",
    "news": "news",
    "always": "always",
    "perhaps": "perhaps",
    "sometimes": "sometime",
    "besides": "beside",
    "never": "never",
    "other": "other",
    "another": "another",
    "after": "after",
    "number": "number",
    "remember": "remember",
    "together": "together",
    "however": "however",
    "whatever": "whatever",
    "whenever": "whenever",
    "wherever": "wherever",
    "whether": "whether",
    "either": "either",
    "neither": "neither",
    "better": "better",
    "filter": "filter",
    "folder": "folder",
    "offer": "offer",
    "order": "order",
    "corner": "corner",
    "banner": "banner",
    "server": "server",
    "browser": "browser",
    "developer": "developer",
    "earliest": "early",
    "honest": "honest",
    "latest": "latest",
    "request": "request",
    "suggest": "suggest",
    "interest": "interest",
    "during": "during",
    "thing": "thing",
    "something": "something",
    "nothing": "nothing",
    "anything": "anything",
    "everything": "everything",
    "rating": "rating",
    "morning": "morning",
    "evening": "evening",
    "being": "being",
}


@dataclass(frozen=True)
class LemmaRules:
    """Suffix-rule table plus an exception list, applied first-match-wins."""

    rules: tuple[tuple[str, int, str], ...] = DEFAULT_SUFFIX_RULES
    exceptions: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_LEMMA_EXCEPTIONS))


def _restore_stem(stem: str) -> str:
    # undouble trailing consonant (running -> runn -> run), keeping ll/ss/zz
    if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] not in VOWELS and stem[-1] not in "lsz":
        return stem[:-1]
    # restore a dropped final "e" after a consonant-vowel-consonant tail
    if (
        len(stem) >= 3
        and stem[-1] not in VOWELS + "wxy"
        and stem[-2] in VOWELS
        and stem[-3] not in VOWELS
    ):
        return stem + "e"
    return stem


def _apply_rules_once(token: str, rules: LemmaRules) -> str:
    for suffix, min_len, mode in rules.rules:
        if len(token) < min_len or not token.endswith(suffix):
            continue
        stem = token[: -len(suffix)]
        if mode == "strip":
            return stem
        if mode == "restore_c":
            if not stem or stem[-1] in VOWELS:
                continue
            return _restore_stem(stem)
        if mode == "restore":
            return _restore_stem(stem)
        if mode == "y":
            return stem + "y"
        if mode == "es":
            if stem.endswith(("s", "x", "z", "ch", "sh")):
                return stem
            return token[:-1]
        if mode == "s":
            if token.endswith(("ss", "us", "is", "'s")):
                return token
            return stem
    return token


def lemmatize(token: str, rules: LemmaRules | None = None) -> str:
    """Reduce a token to its root form via the suffix-rule table.

    Rules are applied to a fixed point so that an inflected form and its
    intermediate forms always land on the same stem (e.g. "embedding" and
    "embed" both reduce to the same token).
    """
    rules = rules or LemmaRules()
    if token in rules.exceptions:
        return rules.exceptions[token]
    if not token.isalpha():
        # suffix morphology only applies to plain words; tokens carrying
        # digits, apostrophes or underscores pass through unchanged
        return token
    while True:
        reduced = _apply_rules_once(token, rules)
        if reduced == token:
            return token
        token = reduced


# ---------------------------------------------------------------------------
# Preprocessing
# ---------------------------------------------------------------------------


def preprocess_review(
    raw: RawReview,
    filter_list: set[str] | frozenset[str] | None = None,
    lemma_rules: LemmaRules | None = None,
) -> TokenizedReview:
    """Normalize one review into sentences of clean tokens.

    Steps: lowercase, sentence split on .!?; , drop tokens with characters
    outside [a-z0-9_'], collapse character elongation ("soooo" -> "soo"),
    lemmatize, remove filter-list words, and collapse adjacent duplicate
    tokens.  A review whose every token is filtered comes back empty rather
    than raising; callers decide whether to keep it.
    """
    filter_list = filter_list if filter_list is not None else set()
    lemma_rules = lemma_rules or LemmaRules()

    sentences: list[list[str]] = []
    for chunk in _SENTENCE_SPLIT.split(raw.text.lower()):
        sent: list[str] = []
        for piece in chunk.split():
            token = _TOKEN_STRIP.sub("", piece)
            if not token or not _TOKEN_VALID.match(token):
                continue
            token = _ELONGATION.sub(r"\1\1", token)
            token = lemmatize(token, lemma_rules)
            if token in filter_list:
                continue
            # adjacent duplicate collapse ("very very good" -> "very good")
            if sent and sent[-1] == token:
                continue
            sent.append(token)
        if sent:
            sentences.append(sent)

    tokens = [t for sent in sentences for t in sent]
    return TokenizedReview(version_id=raw.version_id, tokens=tokens, sentences=sentences)


def render_review(review: TokenizedReview) -> str:
    """Inverse-ish of preprocess_review, used to check idempotence."""
    return ". ".join(" ".join(sent) for sent in review.sentences)


# ---------------------------------------------------------------------------
# PMI phrase mining
# ---------------------------------------------------------------------------


def extract_phrases(corpus: VersionCorpus, pmi_threshold: float) -> set[tuple[str, str]]:
    """Return adjacent word pairs whose PMI (natural log) exceeds the threshold.

    Probabilities are relative frequencies: unigrams over the corpus token
    stream, bigrams over the within-sentence adjacent-pair stream.  Only
    observed bigrams are scored, so zero-probability unigrams never arise.
    """
    if not corpus.reviews:
        raise ValueError("cannot mine phrases from an empty corpus")

    unigrams: Counter[str] = Counter()
    bigrams: Counter[tuple[str, str]] = Counter()
    for review in corpus.reviews:
        for sent in review.sentences:
            unigrams.update(sent)
            bigrams.update(zip(sent, sent[1:]))

    total_tokens = sum(unigrams.values())
    total_pairs = sum(bigrams.values())
    if total_pairs == 0:
        return set()

    phrases = set()
    for (w1, w2), pair_count in bigrams.items():
        if w1 == w2 or "_" in w1 or "_" in w2:
            continue
        p_pair = pair_count / total_pairs
        p1 = unigrams[w1] / total_tokens
        p2 = unigrams[w2] / total_tokens
        if math.log(p_pair / (p1 * p2)) > pmi_threshold:
            phrases.add((w1, w2))
    return phrases


def merge_phrases(review: TokenizedReview, phrases: set[tuple[str, str]]) -> TokenizedReview:
    """Replace each mined adjacent pair with its "_"-joined phrase token.

    Greedy left-to-right within sentences; merged tokens are not reused for
    an overlapping pair.
    """
    new_sentences: list[list[str]] = []
    for sent in review.sentences:
        merged: list[str] = []
        i = 0
        while i < len(sent):
            if i + 1 < len(sent) and (sent[i], sent[i + 1]) in phrases:
                merged.append(f"{sent[i]}_{sent[i + 1]}")
                i += 2
            else:
                merged.append(sent[i])
                i += 1
        new_sentences.append(merged)
    tokens = [t for sent in new_sentences for t in sent]
    return TokenizedReview(review.version_id, tokens, new_sentences)


# ---------------------------------------------------------------------------
# Lexicon and filter-list loading
# ---------------------------------------------------------------------------


def load_polarity_lexicon(path: str | Path) -> PolarityLexicon:
    """Parse a two-column tab-separated "token<TAB>code" lexicon file."""
    entries: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'token<TAB>code', got {line!r}")
            token, code_text = parts[0].strip().lower(), parts[1].strip()
            try:
                code = int(code_text)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: polarity code {code_text!r} is not an integer")
            if code not in (-1, 0, 1):
                raise ValueError(f"{path}:{lineno}: polarity code must be -1, 0 or 1, got {code}")
            if token in entries:
                logger.warning("duplicate lexicon token %r at line %d; keeping last value", token, lineno)
            entries[token] = code
    return PolarityLexicon(entries)


def load_filter_list(path: str | Path) -> set[str]:
    """One token per line."""
    with open(path, encoding="utf-8") as fh:
        return {line.strip().lower() for line in fh if line.strip()}


def default_filter_list() -> set[str]:
    text = resources.files("issuetrace.data").joinpath("filter_words.txt").read_text("utf-8")
    return {line.strip() for line in text.splitlines() if line.strip()}


def default_lexicon() -> PolarityLexicon:
    entries: dict[str, int] = {}
    text = resources.files("issuetrace.data").joinpath("polarity_words.txt").read_text("utf-8")
    for line in text.splitlines():
        if line.strip():
            token, code = line.split("\t")
            entries[token] = int(code)
    return PolarityLexicon(entries)


# ---------------------------------------------------------------------------
# Review file ingestion
# ---------------------------------------------------------------------------


def load_reviews(path: str | Path) -> list[RawReview]:
    """Read reviews from a .jsonl file (records with version/text/rating/
    timestamp keys) or a tab-separated file with those columns in order."""
    path = Path(path)
    reviews: list[RawReview] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if path.suffix in (".jsonl", ".json"):
                record = json.loads(line)
                version = str(record["version"])
                text = record["text"]
                rating = record.get("rating")
                timestamp = record.get("timestamp")
            else:
                parts = line.split("\t")
                if len(parts) < 2:
                    raise ValueError(f"{path}:{lineno}: expected at least version<TAB>text")
                version, text = parts[0], parts[1]
                rating = int(parts[2]) if len(parts) > 2 and parts[2] != "" else None
                timestamp = float(parts[3]) if len(parts) > 3 and parts[3] != "" else None
            reviews.append(RawReview(version, text, rating, timestamp))
    if not reviews:
        raise ValueError(f"no reviews found in {path}")
    return reviews


# ---------------------------------------------------------------------------
# Corpus assembly
# ---------------------------------------------------------------------------


def build_version_corpora(
    reviews: list[RawReview],
    filter_list: set[str] | None = None,
    lemma_rules: LemmaRules | None = None,
    pmi_threshold: float = 5.0,
) -> list[VersionCorpus]:
    """Group reviews by version, mine and merge phrases, assign vocabulary ids.

    Version order is the order of first appearance in the input.  The
    vocabulary grows monotonically: each corpus carries a snapshot of the
    global token -> id map as of that version, and ids never change.
    """
    if not reviews:
        raise ValueError("at least one review is required")
    filter_list = filter_list if filter_list is not None else default_filter_list()
    lemma_rules = lemma_rules or LemmaRules()

    by_version: dict[str, list[RawReview]] = {}
    for raw in reviews:
        by_version.setdefault(raw.version_id, []).append(raw)

    vocabulary: dict[str, int] = {}

    def register(token: str) -> None:
        if token not in vocabulary:
            vocabulary[token] = len(vocabulary)
            if "_" in token:
                for part in token.split("_"):
                    register(part)

    corpora: list[VersionCorpus] = []
    for version_id, raws in by_version.items():
        tokenized = [preprocess_review(r, filter_list, lemma_rules) for r in raws]
        tokenized = [t for t in tokenized if not t.is_empty()]
        interim = VersionCorpus(version_id, tokenized, {})
        if tokenized:
            phrases = extract_phrases(interim, pmi_threshold)
            tokenized = [merge_phrases(t, phrases) for t in tokenized]
        else:
            logger.warning("version %s has no surviving reviews after preprocessing", version_id)
        for review in tokenized:
            for token in review.tokens:
                register(token)
        corpora.append(VersionCorpus(version_id, tokenized, dict(vocabulary)))
    return corpora
