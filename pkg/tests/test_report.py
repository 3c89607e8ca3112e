"""Branch widths, report emission, config parsing, and the pipeline."""

import dataclasses
import json
import math

import numpy as np
import pytest

from issuetrace.config import Config, load_config, save_config
from issuetrace.labeling import ScoredLabel
from issuetrace.report import (
    PipelineError,
    branch_width,
    emit_report,
    evaluate_pipeline,
    load_report,
    render_html,
    run_pipeline,
)

from conftest import write_synthetic_inputs


def label(tokens, count, score=0.5):
    return ScoredLabel("phrase", tuple(tokens), " ".join(tokens), score, count)


class TestBranchWidth:
    def test_count_one_contributes_zero(self):
        vocabulary = {"a_b": 0}
        assert branch_width([label(["a", "b"], 1)], np.array([0.7]), vocabulary) == 0.0

    def test_worked_value(self):
        # ln(e^2) * 0.5 = 1.0
        vocabulary = {"a_b": 0}
        width = branch_width([label(["a", "b"], math.e**2)], np.array([0.5]), vocabulary)
        assert width == pytest.approx(1.0, rel=1e-9)

    def test_doubling_counts_increases_width(self):
        vocabulary = {"a_b": 0, "c_d": 1}
        labels = [label(["a", "b"], 4), label(["c", "d"], 9)]
        phi = np.array([0.3, 0.2])
        base = branch_width(labels, phi, vocabulary)
        doubled = branch_width(
            [label(["a", "b"], 8), label(["c", "d"], 18)], phi, vocabulary
        )
        assert doubled > base

    def test_phrase_token_fallback_to_constituents(self):
        vocabulary = {"a": 0, "b": 1}
        phi = np.array([0.4, 0.2])
        width = branch_width([label(["a", "b"], math.e)], phi, vocabulary)
        assert width == pytest.approx(0.3, rel=1e-9)

    def test_no_labels_zero_width(self):
        assert branch_width([], np.array([0.5]), {}) == 0.0


def small_config(tmp_path, **overrides):
    reviews_path, lexicon_path, changelog_path = write_synthetic_inputs(
        tmp_path, n_versions=2, reviews_per_version=40
    )
    defaults = dict(
        reviews_path=str(reviews_path),
        lexicon_path=str(lexicon_path),
        changelog_path=str(changelog_path),
        out_dir=str(tmp_path / "out"),
        topics=3,
        iterations=30,
        embed_dim=16,
        embed_epochs=2,
        seed=7,
        n_phrases=2,
        n_sentences=2,
    )
    defaults.update(overrides)
    return Config(**defaults)


class TestConfigFile:
    def test_roundtrip_all_keys(self, tmp_path):
        config = small_config(tmp_path, omega=4, mu=0.8, train_embeddings=False)
        path = tmp_path / "config.ini"
        save_config(config, path)
        loaded = load_config(path)
        assert loaded == config

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "config.ini"
        path.write_text("[issuetrace]\nnot_a_real_key = 1\n")
        with pytest.raises(ValueError, match="unknown config key"):
            load_config(path)

    def test_missing_section_rejected(self, tmp_path):
        path = tmp_path / "config.ini"
        path.write_text("[other]\ntopics = 2\n")
        with pytest.raises(ValueError, match="issuetrace"):
            load_config(path)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_config(tmp_path / "nope.ini")

    def test_interface_keys_present(self):
        names = {f.name for f in dataclasses.fields(Config)}
        for key in (
            "omega", "topics", "sentiments", "alpha", "beta", "gamma", "delta",
            "pmi_threshold", "mu", "m", "top_words", "iterations", "seed",
            "lexicon_path", "filter_path", "embeddings_path", "train_embeddings",
            "n_phrases", "n_sentences",
        ):
            assert key in names


class TestPipeline:
    def test_end_to_end_shapes(self, tmp_path):
        config = small_config(tmp_path)
        result = run_pipeline(config)
        assert len(result.snapshots) == 2
        report = result.report
        assert report["schema_version"] == 1
        assert len(report["versions"]) == 2
        river = report["river"]
        assert river["version_ids"] == ["1.0", "2.0"]
        assert len(river["widths"]) == 2
        assert all(len(row) == config.topics for row in river["widths"])
        assert all(len(v["branches"]) == config.topics for v in report["versions"])

    def test_single_version_has_no_emerging_flags(self, tmp_path):
        single = tmp_path / "single"
        single.mkdir()
        reviews_path, lexicon_path, _ = write_synthetic_inputs(
            single, n_versions=1, reviews_per_version=40
        )
        config = small_config(
            tmp_path, reviews_path=str(reviews_path), lexicon_path=str(lexicon_path)
        )
        result = run_pipeline(config)
        assert result.anomalies == {}
        for branch in result.report["versions"][0]["branches"]:
            assert branch["emerging"] is False

    def test_report_roundtrip(self, tmp_path):
        config = small_config(tmp_path)
        result = run_pipeline(config)
        loaded = load_report(result.report_paths[0])
        assert loaded == result.report

    def test_deterministic_reports_byte_identical(self, tmp_path):
        config_a = small_config(tmp_path, out_dir=str(tmp_path / "out_a"))
        config_b = small_config(tmp_path, out_dir=str(tmp_path / "out_b"))
        bytes_a = run_pipeline(config_a).report_paths[0].read_bytes()
        bytes_b = run_pipeline(config_b).report_paths[0].read_bytes()
        assert bytes_a == bytes_b

    def test_prefix_rerun_reproduces_reports(self, tmp_path):
        # with a fixed embedding table, processing only the first version
        # reproduces that version's report from the full run
        from issuetrace.embed import save_vectors
        from issuetrace.report import build_corpora_stage, embeddings_stage

        full = small_config(tmp_path, out_dir=str(tmp_path / "full"))
        table = embeddings_stage(full, build_corpora_stage(full))
        vectors_path = tmp_path / "fixed_vectors.txt"
        save_vectors(table, vectors_path)

        full = dataclasses.replace(
            full, embeddings_path=str(vectors_path), train_embeddings=False
        )
        full_result = run_pipeline(full)

        prefix_reviews = tmp_path / "prefix.tsv"
        lines = [
            line
            for line in (tmp_path / "reviews.tsv").read_text().splitlines()
            if line.startswith("1.0\t")
        ]
        prefix_reviews.write_text("\n".join(lines) + "\n")
        prefix = dataclasses.replace(
            full, reviews_path=str(prefix_reviews), out_dir=str(tmp_path / "prefix")
        )
        prefix_result = run_pipeline(prefix)

        assert prefix_result.report["versions"][0] == full_result.report["versions"][0]

    def test_zscores_propagated_into_branches(self, tmp_path):
        config = small_config(tmp_path)
        result = run_pipeline(config)
        version2 = result.report["versions"][1]
        anomaly = result.anomalies["2.0"]
        for branch in version2["branches"]:
            assert branch["zscore"] == pytest.approx(float(anomaly.zscores[branch["topic"]]))
            assert branch["emerging"] == (branch["topic"] in anomaly.topic_ids)

    def test_stage_errors_name_stage_and_version(self, tmp_path):
        config = small_config(tmp_path, reviews_path=str(tmp_path / "missing.tsv"))
        with pytest.raises(PipelineError, match="stage=corpus"):
            run_pipeline(config)

    def test_html_export(self, tmp_path):
        config = small_config(tmp_path, report_format="both")
        result = run_pipeline(config)
        suffixes = {p.suffix for p in result.report_paths}
        assert suffixes == {".json", ".html"}
        html_text = next(p for p in result.report_paths if p.suffix == ".html").read_text()
        assert "<svg" in html_text and "Version 2.0" in html_text

    def test_unknown_format_rejected(self, tmp_path):
        config = small_config(tmp_path)
        result = run_pipeline(config)
        with pytest.raises(ValueError, match="unknown report format"):
            emit_report(result.snapshots, result.anomalies, result.labels,
                        tmp_path / "x", "csv")

    def test_evaluation_produces_levels(self, tmp_path):
        config = small_config(tmp_path)
        result = run_pipeline(config)
        outcome = evaluate_pipeline(result, config)
        assert set(outcome["levels"]) <= {"phrase", "sentence"}
        for scores in outcome["levels"].values():
            assert 0.0 <= scores["precision_e"] <= 1.0
            assert 0.0 <= scores["recall_l"] <= 1.0
            assert 0.0 <= scores["f_hybrid"] <= 1.0


class TestHtmlRendering:
    def test_handles_single_version_river(self):
        report = {
            "schema_version": 1,
            "generated_at": "1970-01-01T00:00:00Z",
            "versions": [
                {
                    "version_id": "1.0",
                    "generated_at": "1970-01-01T00:00:00Z",
                    "branches": [
                        {
                            "topic": 0, "sentiment": "negative", "width": 0.5,
                            "emerging": True, "zscore": 2.0, "divergence": 0.4,
                            "phrases": [{"text": "upload fails", "tokens": ["upload", "fails"],
                                         "score": 1.0, "count": 3}],
                            "sentences": [],
                        }
                    ],
                }
            ],
            "river": {"version_ids": ["1.0"], "topics": 1, "widths": [[0.5]]},
        }
        text = render_html(report)
        assert "upload fails" in text
        assert "river chart needs" in text


class TestCli:
    def test_run_command(self, tmp_path):
        from click.testing import CliRunner
        from issuetrace.cli import main

        config = small_config(tmp_path, changelog_path="")
        config_path = tmp_path / "config.ini"
        save_config(config, config_path)
        runner = CliRunner()
        result = runner.invoke(main, ["run", "--config", str(config_path)])
        assert result.exit_code == 0, result.output
        out_dir = tmp_path / "out"
        assert (out_dir / "report.json").exists()
        assert (out_dir / "vectors.txt").exists()
        assert sorted((out_dir / "snapshots").glob("*.npz"))

    def test_stage_commands_chain(self, tmp_path):
        from click.testing import CliRunner
        from issuetrace.cli import main

        config = small_config(tmp_path)
        config_path = tmp_path / "config.ini"
        save_config(config, config_path)
        runner = CliRunner()
        for command in ("preprocess", "train", "detect", "label"):
            result = runner.invoke(main, [command, "--config", str(config_path)])
            assert result.exit_code == 0, f"{command}: {result.output}"
        out_dir = tmp_path / "out"
        assert (out_dir / "corpora.json").exists()
        assert (out_dir / "anomalies.json").exists()
        assert (out_dir / "labels.json").exists()
        records = json.loads((out_dir / "anomalies.json").read_text())
        assert records[0]["version_id"] == "2.0"

    def test_eval_command(self, tmp_path):
        from click.testing import CliRunner
        from issuetrace.cli import main

        config = small_config(tmp_path)
        config_path = tmp_path / "config.ini"
        save_config(config, config_path)
        runner = CliRunner()
        result = runner.invoke(main, ["eval", "--config", str(config_path)])
        assert result.exit_code == 0, result.output
        assert (tmp_path / "out" / "eval.json").exists()

    def test_init_config(self, tmp_path):
        from click.testing import CliRunner
        from issuetrace.cli import main

        runner = CliRunner()
        path = tmp_path / "fresh.ini"
        result = runner.invoke(main, ["init-config", str(path)])
        assert result.exit_code == 0
        assert load_config(path) == Config()
