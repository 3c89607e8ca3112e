"""Changelog-based scoring of detected issues.

Detected issues are matched against the key terms of the next release's
changelog in embedding space; precision is measured over emerging issues,
recall over changelog entries, and the two are combined harmonically.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import LemmaRules, RawReview, preprocess_review
from .embed import EmbeddingTable, cosine, embed_text

# Entries that only restate generic release-note filler carry no ground
# truth and are dropped before evaluation.
BOILERPLATE_PHRASES = {
    "bug fixes",
    "bug fix",
    "bugfixes",
    "bugfix",
    "minor bug fixes",
    "minor fixes",
    "minor improvements",
    "various bug fixes",
    "various fixes",
    "various improvements",
    "general improvements",
    "performance improvements",
    "performance improvement",
    "stability improvements",
    "improvements and bug fixes",
    "bug fixes and improvements",
    "bug fixes and performance improvements",
    "we're always trying to improve your experience",
}

_PUNCT = re.compile(r"[^a-z0-9\s']+")


@dataclass
class Changelog:
    """Key-term token lists of one version's release notes."""

    version_id: str
    entries: list[list[str]] = field(default_factory=list)


@dataclass
class EvalResult:
    precision_e: float
    recall_l: float
    f_hybrid: float
    matched_pairs: list[tuple[str, str]] = field(default_factory=list)
    matched_emerging: int = 0
    total_emerging: int = 0
    covered_entries: int = 0
    total_entries: int = 0


def f_hybrid(precision: float, recall: float) -> float:
    """Harmonic mean, defined as 0 when both inputs are 0."""
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def is_boilerplate(entry_text: str) -> bool:
    cleaned = _PUNCT.sub(" ", entry_text.lower())
    return " ".join(cleaned.split()) in BOILERPLATE_PHRASES


def parse_changelogs(
    path: str | Path,
    filter_list: set[str] | None = None,
    lemma_rules: LemmaRules | None = None,
) -> dict[str, Changelog]:
    """Read a changelog file: "# version" header lines, one entry per line.

    Entries are normalized with the same preprocessing as reviews so their
    tokens line up with the embedding table; boilerplate entries are dropped.
    """
    logs: dict[str, Changelog] = {}
    current: Changelog | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                version = line.lstrip("#").strip()
                if not version:
                    raise ValueError(f"{path}:{lineno}: empty version header")
                current = logs.setdefault(version, Changelog(version))
                continue
            if current is None:
                raise ValueError(f"{path}:{lineno}: entry before any '# version' header")
            if is_boilerplate(line):
                continue
            tokenized = preprocess_review(
                RawReview(current.version_id, line), filter_list, lemma_rules
            )
            if tokenized.tokens:
                current.entries.append(tokenized.tokens)
    return {v: log for v, log in logs.items() if log.entries}


def match_issue(
    issue_tokens: list[str],
    entry_tokens: list[str],
    table: EmbeddingTable,
    threshold: float = 0.6,
) -> bool:
    """True when the two texts' mean embeddings exceed the cosine threshold."""
    return cosine(embed_text(issue_tokens, table), embed_text(entry_tokens, table)) > threshold


def evaluate(
    emerging: list[list[str]],
    all_issues: list[list[str]],
    changelog_entries: list[list[str]],
    table: EmbeddingTable,
    threshold: float = 0.6,
) -> EvalResult:
    """Precision over emerging issues, recall over changelog entries.

    An emerging issue counts as correct when it matches at least one entry;
    an entry counts as covered when at least one issue (emerging or not)
    matches it.
    """
    if not changelog_entries:
        raise ValueError("no ground truth: changelog entries are empty")

    matched_pairs: list[tuple[str, str]] = []
    matched_e = 0
    for issue in emerging:
        hits = [e for e in changelog_entries if match_issue(issue, e, table, threshold)]
        if hits:
            matched_e += 1
            matched_pairs.append((" ".join(issue), " ".join(hits[0])))

    covered = 0
    for entry in changelog_entries:
        if any(match_issue(issue, entry, table, threshold) for issue in all_issues):
            covered += 1

    precision = matched_e / len(emerging) if emerging else 0.0
    recall = covered / len(changelog_entries)
    return EvalResult(
        precision_e=precision,
        recall_l=recall,
        f_hybrid=f_hybrid(precision, recall),
        matched_pairs=matched_pairs,
        matched_emerging=matched_e,
        total_emerging=len(emerging),
        covered_entries=covered,
        total_entries=len(changelog_entries),
    )


def aggregate_results(results: list[EvalResult]) -> EvalResult:
    """Micro-average per-version results into one score."""
    matched_e = sum(r.matched_emerging for r in results)
    total_e = sum(r.total_emerging for r in results)
    covered = sum(r.covered_entries for r in results)
    total_g = sum(r.total_entries for r in results)
    precision = matched_e / total_e if total_e else 0.0
    recall = covered / total_g if total_g else 0.0
    pairs = [p for r in results for p in r.matched_pairs]
    return EvalResult(
        precision_e=precision,
        recall_l=recall,
        f_hybrid=f_hybrid(precision, recall),
        matched_pairs=pairs,
        matched_emerging=matched_e,
        total_emerging=total_e,
        covered_entries=covered,
        total_entries=total_g,
    )
