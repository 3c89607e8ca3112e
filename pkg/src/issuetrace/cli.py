"""Command-line interface.

Stage commands (preprocess, train, detect, label, report) exchange
artifacts through the output directory; ``run`` executes the whole pipeline
in memory and ``eval`` scores a finished run against a changelog file.
"""

from __future__ import annotations

import json
import logging
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from .bst import NEGATIVE, VersionSnapshot
from .config import Config, load_config, save_config
from .emerging import detect_anomalies, divergence_matrix
from .embed import load_vectors, save_vectors
from .labeling import LabelingParams, label_topic, phrase_candidates, sentence_candidates
from .report import (
    build_corpora_stage,
    embeddings_stage,
    evaluate_pipeline,
    run_pipeline,
)

def _load(config_path: str, seed: int | None, out: str | None, reviews: str | None) -> Config:
    config = load_config(config_path)
    if seed is not None:
        config = replace(config, seed=seed)
    if out is not None:
        config = replace(config, out_dir=out)
    if reviews is not None:
        config = replace(config, reviews_path=reviews)
    return config


def _common(f):
    f = click.option("--config", "config_path", required=True, type=click.Path(exists=True))(f)
    f = click.option("--seed", type=int, default=None, help="override the config seed")(f)
    f = click.option("--out", type=click.Path(), default=None, help="override the output dir")(f)
    f = click.option("--reviews", type=click.Path(exists=True), default=None)(f)
    return f


@click.group()
def main():
    """Trace sentiment-conditioned topics across app versions and flag
    emerging issues."""
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")


@main.command("init-config")
@click.argument("path", type=click.Path())
def init_config(path):
    """Write a config file populated with the default parameters."""
    save_config(Config(), path)
    click.echo(f"wrote {path}")


@main.command()
@_common
def preprocess(config_path, seed, out, reviews):
    """Tokenize reviews, mine phrases, and store the per-version corpora."""
    config = _load(config_path, seed, out, reviews)
    corpora = build_corpora_stage(config)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "versions": [
            {
                "version_id": c.version_id,
                "reviews": [{"sentences": r.sentences} for r in c.reviews],
            }
            for c in corpora
        ],
        "vocabulary": corpora[-1].vocabulary if corpora else {},
    }
    (out_dir / "corpora.json").write_text(json.dumps(payload), encoding="utf-8")
    click.echo(f"{len(corpora)} versions, vocabulary size {len(payload['vocabulary'])}")


@main.command()
@_common
def train(config_path, seed, out, reviews):
    """Train every version with the adaptive prior; saves snapshots."""
    config = _load(config_path, seed, out, reviews)
    result = run_pipeline(config)
    out_dir = Path(config.out_dir)
    snap_dir = out_dir / "snapshots"
    snap_dir.mkdir(parents=True, exist_ok=True)
    for i, snap in enumerate(result.snapshots):
        snap.save(snap_dir / f"{i:03d}_{snap.version_id}.npz")
    save_vectors(result.table, out_dir / "vectors.txt")
    click.echo(f"trained {len(result.snapshots)} versions -> {snap_dir}")


def _load_snapshots(out_dir: Path) -> list[VersionSnapshot]:
    snap_dir = out_dir / "snapshots"
    files = sorted(snap_dir.glob("*.npz"))
    if not files:
        raise click.ClickException(f"no snapshots under {snap_dir}; run `issuetrace train` first")
    return [VersionSnapshot.load(f) for f in files]


@main.command()
@_common
def detect(config_path, seed, out, reviews):
    """Detect emerging negative topics from saved snapshots."""
    config = _load(config_path, seed, out, reviews)
    out_dir = Path(config.out_dir)
    snapshots = _load_snapshots(out_dir)
    records = []
    for end in range(2, len(snapshots) + 1):
        history = snapshots[max(0, end - (config.omega + 1)) : end]
        matrix = divergence_matrix(history, NEGATIVE)
        found = detect_anomalies(matrix, config.delta, config.column_stats)
        records.append(
            {
                "version_id": found.version_id,
                "topics": sorted(found.topic_ids),
                "zscores": [float(z) for z in found.zscores],
                "divergences": [float(d) for d in found.divergences],
            }
        )
    (out_dir / "anomalies.json").write_text(json.dumps(records, indent=2), encoding="utf-8")
    flagged = sum(len(r["topics"]) for r in records)
    click.echo(f"{flagged} emerging topics across {len(records)} versions")


@main.command()
@_common
def label(config_path, seed, out, reviews):
    """Rank phrase/sentence labels per topic from saved snapshots."""
    config = _load(config_path, seed, out, reviews)
    out_dir = Path(config.out_dir)
    snapshots = _load_snapshots(out_dir)
    corpora = build_corpora_stage(config)
    vectors_path = out_dir / "vectors.txt"
    table = load_vectors(vectors_path) if vectors_path.exists() else embeddings_stage(config, corpora)
    params = LabelingParams(m=config.m, mu=config.mu, top_words=config.top_words)
    by_version = {c.version_id: c for c in corpora}
    records = []
    for index, snap in enumerate(snapshots):
        corpus = by_version[snap.version_id]
        pool = phrase_candidates(corpus) + sentence_candidates(
            corpus,
            config.sentence_min_tokens,
            config.sentence_max_tokens,
            config.sentence_pool_cap,
            np.random.default_rng(config.seed + index),
        )
        vocabulary = {t: i for i, t in enumerate(snap.vocab)}
        for z in range(config.topics):
            tl = label_topic(
                z, NEGATIVE, pool, snap.phi[NEGATIVE], params, table, vocabulary,
                snap.vocab, config.n_phrases, config.n_sentences,
            )
            records.append(
                {
                    "version_id": snap.version_id,
                    "topic": z,
                    "phrases": [{"text": l.text, "score": l.score} for l in tl.phrases],
                    "sentences": [{"text": l.text, "score": l.score} for l in tl.sentences],
                }
            )
    (out_dir / "labels.json").write_text(json.dumps(records, indent=2), encoding="utf-8")
    click.echo(f"labeled {len(records)} (version, topic) pairs")


@main.command()
@_common
@click.option("--format", "report_format", default=None,
              type=click.Choice(["structured-data", "static-page", "both"]))
def report(config_path, seed, out, reviews, report_format):
    """Run the pipeline and emit the issue report."""
    config = _load(config_path, seed, out, reviews)
    if report_format is not None:
        config = replace(config, report_format=report_format)
    result = run_pipeline(config)
    for path in result.report_paths:
        click.echo(f"wrote {path}")


@main.command()
@_common
def run(config_path, seed, out, reviews):
    """End-to-end: preprocess, train, detect, label, report (and eval when
    a changelog is configured)."""
    config = _load(config_path, seed, out, reviews)
    result = run_pipeline(config)
    out_dir = Path(config.out_dir)
    snap_dir = out_dir / "snapshots"
    snap_dir.mkdir(parents=True, exist_ok=True)
    for i, snap in enumerate(result.snapshots):
        snap.save(snap_dir / f"{i:03d}_{snap.version_id}.npz")
    save_vectors(result.table, out_dir / "vectors.txt")
    for path in result.report_paths:
        click.echo(f"wrote {path}")
    if config.changelog_path:
        outcome = evaluate_pipeline(result, config)
        (out_dir / "eval.json").write_text(json.dumps(outcome, indent=2), encoding="utf-8")
        for level, scores in outcome["levels"].items():
            click.echo(
                f"{level}: precision={scores['precision_e']:.3f} "
                f"recall={scores['recall_l']:.3f} f={scores['f_hybrid']:.3f}"
            )


@main.command("eval")
@_common
@click.option("--changelog", type=click.Path(exists=True), default=None)
def eval_cmd(config_path, seed, out, reviews, changelog):
    """Score detected issues against the next versions' changelogs."""
    config = _load(config_path, seed, out, reviews)
    if changelog is not None:
        config = replace(config, changelog_path=changelog)
    if not config.changelog_path:
        raise click.ClickException("a changelog file is required (--changelog or config)")
    result = run_pipeline(config)
    outcome = evaluate_pipeline(result, config)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "eval.json").write_text(json.dumps(outcome, indent=2), encoding="utf-8")
    for level, scores in outcome["levels"].items():
        click.echo(
            f"{level}: precision={scores['precision_e']:.3f} "
            f"recall={scores['recall_l']:.3f} f={scores['f_hybrid']:.3f}"
        )


if __name__ == "__main__":
    main()
