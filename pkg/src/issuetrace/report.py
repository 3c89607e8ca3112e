"""Pipeline orchestration and issue-report export.

Runs corpus building, per-version adaptive training, anomaly detection and
topic labeling in version order, then writes one machine-readable report
per version plus a cross-version river series (per-topic widths) for
plotting.  A static HTML rendering of the same data is available as an
alternative to the structured export.
"""

from __future__ import annotations

import html
import json
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .bst import NEGATIVE, SENTIMENT_NAMES, Hyperparameters, VersionSnapshot
from .config import Config
from .corpus import (
    LemmaRules,
    PolarityLexicon,
    VersionCorpus,
    build_version_corpora,
    default_filter_list,
    default_lexicon,
    load_filter_list,
    load_polarity_lexicon,
    load_reviews,
)
from .emerging import EmergingTopicSet, detect_anomalies, divergence_matrix
from .embed import EmbeddingTable, load_vectors, train_vectors
from .evaluation import EvalResult, aggregate_results, evaluate, parse_changelogs
from .labeling import (
    LabelingParams,
    ScoredLabel,
    TopicLabels,
    label_topic,
    phrase_candidates,
    sentence_candidates,
)
from .online import VersionWindow, advance

logger = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1
EPOCH_STAMP = "1970-01-01T00:00:00Z"


class PipelineError(RuntimeError):
    """Raised when a stage fails; names the stage and version."""

    def __init__(self, stage: str, version_id: str | None, cause: Exception):
        where = f"stage={stage}" + (f" version={version_id}" if version_id else "")
        super().__init__(f"{where}: {cause}")
        self.stage = stage
        self.version_id = version_id


@dataclass
class PipelineResult:
    corpora: list[VersionCorpus]
    snapshots: list[VersionSnapshot]
    table: EmbeddingTable
    anomalies: dict[str, EmergingTopicSet]
    labels: dict[str, list[TopicLabels]]
    report: dict
    report_paths: list[Path] = field(default_factory=list)


def branch_width(
    phrase_labels: list[ScoredLabel],
    phi_row: np.ndarray,
    vocabulary: dict[str, int],
) -> float:
    """User-concern width of one topic: sum of ln(count) * topic probability.

    The probability of a phrase label is looked up for its joined corpus
    token, falling back to the mean of its constituent words' probabilities.
    """
    width = 0.0
    for label in phrase_labels:
        if label.count < 1:
            logger.warning("skipping zero-count label %r in width computation", label.text)
            continue
        joined = "_".join(label.tokens)
        if joined in vocabulary:
            prob = float(phi_row[vocabulary[joined]])
        else:
            parts = [float(phi_row[vocabulary[t]]) for t in label.tokens if t in vocabulary]
            prob = sum(parts) / len(parts) if parts else 0.0
        width += math.log(label.count) * prob
    return width


def _label_dicts(labels: list[ScoredLabel]) -> list[dict]:
    return [
        {"text": l.text, "tokens": list(l.tokens), "score": l.score, "count": l.count}
        for l in labels
    ]


def build_report(
    snapshots: list[VersionSnapshot],
    anomalies: dict[str, EmergingTopicSet],
    labels: dict[str, list[TopicLabels]],
    generated_at: str,
) -> dict:
    """Assemble the versioned report document from pipeline outputs."""
    versions = []
    river_widths: list[list[float]] = []
    for snap in snapshots:
        vocabulary = {t: i for i, t in enumerate(snap.vocab)}
        anomaly = anomalies.get(snap.version_id)
        topic_labels = labels.get(snap.version_id, [])
        branches = []
        widths = []
        for tl in topic_labels:
            phi_row = snap.phi[tl.sentiment, tl.topic]
            width = branch_width(tl.phrases, phi_row, vocabulary)
            flagged = anomaly is not None and tl.topic in anomaly.topic_ids
            zscore = float(anomaly.zscores[tl.topic]) if anomaly is not None else 0.0
            divergence = (
                float(anomaly.divergences[tl.topic])
                if anomaly is not None and anomaly.divergences is not None
                else 0.0
            )
            branches.append(
                {
                    "topic": tl.topic,
                    "sentiment": SENTIMENT_NAMES[tl.sentiment],
                    "width": width,
                    "emerging": flagged,
                    "zscore": zscore,
                    "divergence": divergence,
                    "phrases": _label_dicts(tl.phrases),
                    "sentences": _label_dicts(tl.sentences),
                }
            )
            widths.append(width)
        versions.append(
            {
                "version_id": snap.version_id,
                "generated_at": generated_at,
                "branches": branches,
            }
        )
        river_widths.append(widths)
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "generated_at": generated_at,
        "versions": versions,
        "river": {
            "version_ids": [s.version_id for s in snapshots],
            "topics": snapshots[0].topics if snapshots else 0,
            "widths": river_widths,
        },
    }


def emit_report(
    snapshots: list[VersionSnapshot],
    anomalies: dict[str, EmergingTopicSet],
    labels: dict[str, list[TopicLabels]],
    out_path: str | Path,
    report_format: str = "structured-data",
    generated_at: str | None = None,
) -> list[Path]:
    """Write the report in the requested format(s) and return the paths.

    ``generated_at`` defaults to the fixed epoch stamp so identical inputs
    produce byte-identical files; pass a real timestamp to override.
    """
    if not snapshots:
        raise ValueError("at least one processed version is required")
    if report_format not in ("structured-data", "static-page", "both"):
        raise ValueError(f"unknown report format {report_format!r}")
    report = build_report(snapshots, anomalies, labels, generated_at or EPOCH_STAMP)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)

    paths = []
    if report_format in ("structured-data", "both"):
        json_path = out_path.with_suffix(".json")
        json_path.write_text(
            json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        paths.append(json_path)
    if report_format in ("static-page", "both"):
        html_path = out_path.with_suffix(".html")
        html_path.write_text(render_html(report), encoding="utf-8")
        paths.append(html_path)
    return paths


def load_report(path: str | Path) -> dict:
    """Parse a structured report; inverse of the JSON emit."""
    report = json.loads(Path(path).read_text(encoding="utf-8"))
    schema = report.get("schema_version")
    if schema != REPORT_SCHEMA_VERSION:
        raise ValueError(f"unsupported report schema version {schema}")
    return report


def render_html(report: dict) -> str:
    """Standalone page: river SVG plus per-version issue tables."""
    river = report["river"]
    widths = np.array(river["widths"], dtype=float) if river["widths"] else np.zeros((0, 0))
    parts = [
        "<!DOCTYPE html>",
        "<html><head><meta charset='utf-8'><title>Issue river</title>",
        "<style>body{font-family:sans-serif;margin:2em}table{border-collapse:collapse;margin:1em 0}"
        "td,th{border:1px solid #999;padding:4px 8px;font-size:13px}"
        ".emerging{background:#fff3b0}</style></head><body>",
        f"<h1>Issue river ({html.escape(str(len(river['version_ids'])))} versions, "
        f"{river['topics']} topics)</h1>",
        f"<p>Generated at {html.escape(report['generated_at'])}.</p>",
        _river_svg(widths, river["version_ids"]),
    ]
    for version in report["versions"]:
        parts.append(f"<h2>Version {html.escape(version['version_id'])}</h2>")
        parts.append(
            "<table><tr><th>topic</th><th>width</th><th>emerging</th><th>z-score</th>"
            "<th>top phrases</th><th>top sentence</th></tr>"
        )
        for branch in version["branches"]:
            cls = " class='emerging'" if branch["emerging"] else ""
            phrases = "; ".join(html.escape(p["text"]) for p in branch["phrases"])
            sentence = html.escape(branch["sentences"][0]["text"]) if branch["sentences"] else ""
            parts.append(
                f"<tr{cls}><td>{branch['topic']}</td><td>{branch['width']:.3f}</td>"
                f"<td>{'yes' if branch['emerging'] else ''}</td><td>{branch['zscore']:.2f}</td>"
                f"<td>{phrases}</td><td>{sentence}</td></tr>"
            )
        parts.append("</table>")
    parts.append("</body></html>")
    return "\n".join(parts)


def _river_svg(widths: np.ndarray, version_ids: list[str]) -> str:
    """Stacked-area rendering of per-topic widths across versions."""
    if widths.size == 0 or widths.shape[0] < 2:
        return "<p>(river chart needs at least two versions)</p>"
    n_versions, n_topics = widths.shape
    w, h, pad = 720, 240, 30
    clipped = np.maximum(widths, 0.0)
    totals = clipped.sum(axis=1)
    scale = (h - 2 * pad) / max(totals.max(), 1e-12)
    xs = np.linspace(pad, w - pad, n_versions)
    cumulative = np.cumsum(clipped, axis=1) * scale
    base = (h - pad) - np.zeros(n_versions)
    paths = []
    for k in range(n_topics):
        top = (h - pad) - cumulative[:, k]
        bottom = base if k == 0 else (h - pad) - cumulative[:, k - 1]
        points = [f"{x:.1f},{y:.1f}" for x, y in zip(xs, top)]
        points += [f"{x:.1f},{y:.1f}" for x, y in zip(xs[::-1], bottom[::-1])]
        hue = int(360 * k / n_topics)
        paths.append(
            f"<polygon points='{' '.join(points)}' fill='hsl({hue},60%,60%)' "
            f"fill-opacity='0.8'><title>topic {k}</title></polygon>"
        )
    labels = [
        f"<text x='{x:.1f}' y='{h - 8}' font-size='10' text-anchor='middle'>"
        f"{html.escape(v)}</text>"
        for x, v in zip(xs, version_ids)
    ]
    return (
        f"<svg width='{w}' height='{h}' xmlns='http://www.w3.org/2000/svg'>"
        + "".join(paths)
        + "".join(labels)
        + "</svg>"
    )


# ---------------------------------------------------------------------------
# End-to-end pipeline
# ---------------------------------------------------------------------------


def _stage(stage: str, version_id: str | None = None):
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and not isinstance(exc, PipelineError):
                raise PipelineError(stage, version_id, exc) from exc
            return False

    return _Ctx()


def load_inputs(config: Config) -> tuple[set[str], PolarityLexicon, LemmaRules]:
    filter_list = (
        load_filter_list(config.filter_path) if config.filter_path else default_filter_list()
    )
    lexicon = (
        load_polarity_lexicon(config.lexicon_path) if config.lexicon_path else default_lexicon()
    )
    return filter_list, lexicon, LemmaRules()


def build_corpora_stage(config: Config) -> list[VersionCorpus]:
    with _stage("corpus"):
        reviews = load_reviews(config.reviews_path)
        filter_list, _, lemma_rules = load_inputs(config)
        return build_version_corpora(reviews, filter_list, lemma_rules, config.pmi_threshold)


def embeddings_stage(config: Config, corpora: list[VersionCorpus]) -> EmbeddingTable:
    with _stage("embeddings"):
        if config.embeddings_path:
            return load_vectors(config.embeddings_path)
        if not config.train_embeddings:
            raise ValueError("set embeddings_path or enable train_embeddings")
        return train_vectors(
            corpora,
            dim=config.embed_dim,
            window=config.embed_window,
            negatives=config.embed_negatives,
            epochs=config.embed_epochs,
            learning_rate=config.embed_learning_rate,
            min_count=config.embed_min_count,
            seed=config.seed,
        )


def run_pipeline(config: Config) -> PipelineResult:
    """corpus -> per-version adaptive training -> detection -> labels -> report."""
    corpora = build_corpora_stage(config)
    table = embeddings_stage(config, corpora)
    _, lexicon, _ = load_inputs(config)

    hyper = Hyperparameters(
        topics=config.topics,
        sentiments=config.sentiments,
        alpha=config.alpha,
        beta=config.beta,
        gamma=config.gamma,
        lambda_match=config.lambda_match,
        lambda_miss=config.lambda_miss,
    )
    params = LabelingParams(
        m=config.m, mu=config.mu, top_words=config.top_words
    )

    window = VersionWindow(config.omega)
    history: list[VersionSnapshot] = []
    snapshots: list[VersionSnapshot] = []
    anomalies: dict[str, EmergingTopicSet] = {}
    labels: dict[str, list[TopicLabels]] = {}

    for index, corpus in enumerate(corpora):
        vid = corpus.version_id
        with _stage("train", vid):
            snapshot, window = advance(
                window, corpus, hyper, lexicon, config.seed + index, config.iterations
            )
        snapshots.append(snapshot)
        history = (history + [snapshot])[-(config.omega + 1):]

        if len(history) >= 2:
            with _stage("detect", vid):
                matrix = divergence_matrix(history, NEGATIVE)
                anomalies[vid] = detect_anomalies(matrix, config.delta, config.column_stats)

        with _stage("label", vid):
            pool = phrase_candidates(corpus) + sentence_candidates(
                corpus,
                config.sentence_min_tokens,
                config.sentence_max_tokens,
                config.sentence_pool_cap,
                np.random.default_rng(config.seed + index),
            )
            vocab = snapshot.vocab
            vocabulary = {t: i for i, t in enumerate(vocab)}
            labels[vid] = [
                label_topic(
                    z,
                    NEGATIVE,
                    pool,
                    snapshot.phi[NEGATIVE],
                    params,
                    table,
                    vocabulary,
                    vocab,
                    config.n_phrases,
                    config.n_sentences,
                )
                for z in range(config.topics)
            ]

    with _stage("report"):
        out_base = Path(config.out_dir) / "report"
        report = build_report(snapshots, anomalies, labels, EPOCH_STAMP)
        paths = emit_report(
            snapshots, anomalies, labels, out_base, config.report_format
        )

    return PipelineResult(
        corpora=corpora,
        snapshots=snapshots,
        table=table,
        anomalies=anomalies,
        labels=labels,
        report=report,
        report_paths=paths,
    )


def evaluate_pipeline(
    result: PipelineResult,
    config: Config,
) -> dict:
    """Match each version's issues against the next version's changelog.

    Issues are represented by their top-ranked label; emerging issues are
    the flagged topics, all issues are every topic.  Returns per-level
    (phrase/sentence) micro-averaged metrics.
    """
    if not config.changelog_path:
        raise ValueError("changelog_path is required for evaluation")
    filter_list, _, lemma_rules = load_inputs(config)
    with _stage("eval"):
        changelogs = parse_changelogs(config.changelog_path, filter_list, lemma_rules)
        order = [s.version_id for s in result.snapshots]
        outcome: dict = {"levels": {}, "versions": []}
        per_level: dict[str, list[EvalResult]] = {"phrase": [], "sentence": []}
        for idx, vid in enumerate(order[:-1]):
            next_vid = order[idx + 1]
            log = changelogs.get(next_vid)
            if log is None:
                continue
            anomaly = result.anomalies.get(vid)
            flagged = anomaly.topic_ids if anomaly else set()
            for level in ("phrase", "sentence"):
                emerging, all_issues = [], []
                for tl in result.labels.get(vid, []):
                    ranked = tl.phrases if level == "phrase" else tl.sentences
                    if not ranked:
                        continue
                    top = list(ranked[0].tokens)
                    all_issues.append(top)
                    if tl.topic in flagged:
                        emerging.append(top)
                res = evaluate(
                    emerging, all_issues, log.entries, result.table, config.match_threshold
                )
                per_level[level].append(res)
                outcome["versions"].append(
                    {
                        "version_id": vid,
                        "changelog_version": next_vid,
                        "level": level,
                        "precision_e": res.precision_e,
                        "recall_l": res.recall_l,
                        "f_hybrid": res.f_hybrid,
                        "matched_pairs": res.matched_pairs,
                    }
                )
        for level, results in per_level.items():
            if results:
                agg = aggregate_results(results)
                outcome["levels"][level] = {
                    "precision_e": agg.precision_e,
                    "recall_l": agg.recall_l,
                    "f_hybrid": agg.f_hybrid,
                }
        return outcome


def now_stamp() -> str:
    """Wall-clock ISO stamp for callers that prefer it over determinism."""
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
