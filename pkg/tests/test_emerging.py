"""JS divergence, the divergence matrix, and outlier flagging."""

import statistics

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from issuetrace.emerging import (
    DivergenceMatrix,
    detect_anomalies,
    divergence_matrix,
    js_divergence,
)

from test_online import snapshot_with_phi


def random_distribution(rng, n):
    return rng.dirichlet(np.ones(n))


class TestJsDivergence:
    def test_identical_is_zero(self):
        p = np.array([0.2, 0.3, 0.5])
        assert js_divergence(p, p) == 0.0

    def test_disjoint_supports_is_one(self):
        p = np.array([1.0, 0.0])
        q = np.array([0.0, 1.0])
        assert js_divergence(p, q) == pytest.approx(1.0, abs=1e-12)

    def test_worked_value(self):
        p = np.array([1.0, 0.0])
        q = np.array([0.5, 0.5])
        assert js_divergence(p, q) == pytest.approx(0.3113, abs=1e-4)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError, match="length mismatch"):
            js_divergence(np.array([1.0]), np.array([0.5, 0.5]))

    @given(st.integers(min_value=0, max_value=200))
    @settings(max_examples=100)
    def test_symmetry_range_and_identity(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 12))
        p = random_distribution(rng, n)
        q = random_distribution(rng, n)
        d_pq = js_divergence(p, q)
        d_qp = js_divergence(q, p)
        assert abs(d_pq - d_qp) < 1e-12
        assert 0.0 <= d_pq <= 1.0
        assert js_divergence(p, p) < 1e-9
        if not np.allclose(p, q, atol=1e-9):
            assert d_pq > 0.0


class TestDivergenceMatrix:
    def test_identical_snapshots_zero_matrix(self):
        phi = np.random.default_rng(0).dirichlet(np.ones(6), size=(3, 4))
        snaps = [snapshot_with_phi(phi, f"v{i}") for i in range(3)]
        matrix = divergence_matrix(snaps)
        assert np.allclose(matrix.values, 0.0)
        assert matrix.values.shape == (2, 4)

    def test_shape_matches_window_and_topics(self):
        rng = np.random.default_rng(1)
        snaps = [
            snapshot_with_phi(rng.dirichlet(np.ones(9), size=(3, 13)), f"v{i}")
            for i in range(4)
        ]
        matrix = divergence_matrix(snaps)
        assert matrix.values.shape == (3, 13)
        assert matrix.version_ids[0] == ("v3", "v2")

    def test_disjoint_support_gives_one(self):
        base = np.zeros((3, 2, 4))
        base[:, :, 0] = 1.0
        moved = np.zeros((3, 2, 4))
        moved[:, :, 1] = 1.0
        moved[:, 0, :] = base[:, 0, :]  # topic 0 unchanged
        snaps = [snapshot_with_phi(base, "v1"), snapshot_with_phi(moved, "v2")]
        matrix = divergence_matrix(snaps)
        assert matrix.values[0, 0] == pytest.approx(0.0, abs=1e-12)
        assert matrix.values[0, 1] == pytest.approx(1.0, abs=1e-12)

    def test_vocabulary_growth_zero_padded(self):
        older = snapshot_with_phi(np.full((3, 1, 2), 0.5), "v1")
        grown = np.zeros((3, 1, 4))
        grown[:, :, :] = 0.25
        newer = snapshot_with_phi(grown, "v2")
        matrix = divergence_matrix([older, newer])
        manual = js_divergence(np.array([0.25] * 4), np.array([0.5, 0.5, 0.0, 0.0]))
        assert matrix.values[0, 0] == pytest.approx(manual, abs=1e-12)

    def test_insufficient_history_rejected(self):
        snap = snapshot_with_phi(np.full((3, 2, 2), 0.5))
        with pytest.raises(ValueError, match="insufficient history"):
            divergence_matrix([snap])

    def test_requested_sentiment_slice_used(self):
        phi_a = np.full((3, 1, 2), 0.5)
        phi_b = phi_a.copy()
        phi_b[2, 0] = [0.9, 0.1]  # only the positive slice moves
        snaps = [snapshot_with_phi(phi_a, "v1"), snapshot_with_phi(phi_b, "v2")]
        negative = divergence_matrix(snaps, sentiment=0)
        positive = divergence_matrix(snaps, sentiment=2)
        assert np.allclose(negative.values, 0.0)
        assert positive.values[0, 0] > 0.0


def matrix_of(values, sentiment=0):
    values = np.asarray(values, dtype=np.float64)
    pairs = [(f"v{i+1}", f"v{i}") for i in range(values.shape[0])][::-1]
    return DivergenceMatrix(values, pairs, sentiment)


class TestDetectAnomalies:
    def test_all_equal_flags_nothing(self, caplog):
        matrix = matrix_of(np.full((3, 5), 0.2))
        with caplog.at_level("WARNING"):
            result = detect_anomalies(matrix, delta=1.25)
        assert result.topic_ids == set()
        assert "zero standard deviation" in caplog.text

    def test_two_sigma_outlier_flagged(self):
        rng = np.random.default_rng(3)
        values = rng.normal(0.3, 0.02, size=(3, 10)).clip(0.01, 0.99)
        mean, std = values.mean(), values.std()
        values[0, 4] = mean + 2 * std
        matrix = matrix_of(values)
        result = detect_anomalies(matrix, delta=1.25)
        assert 4 in result.topic_ids

    def test_thirty_entry_worked_example(self):
        values = np.full((3, 10), 0.1)
        values[0, 7] = 0.9
        matrix = matrix_of(values)
        result = detect_anomalies(matrix, delta=1.25)
        flat = values.ravel().tolist()
        expected_z = (0.9 - statistics.mean(flat)) / statistics.pstdev(flat)
        assert result.topic_ids == {7}
        assert result.zscores[7] == pytest.approx(expected_z, rel=1e-12)
        assert result.divergences[7] == pytest.approx(0.9)

    def test_raising_delta_never_adds_topics(self):
        rng = np.random.default_rng(4)
        values = rng.random((4, 8))
        matrix = matrix_of(values)
        flagged = [
            detect_anomalies(matrix, delta=d).topic_ids for d in (0.5, 1.0, 1.5, 2.0)
        ]
        for smaller, larger in zip(flagged, flagged[1:]):
            assert larger <= smaller

    def test_non_current_row_permutation_invariant(self):
        rng = np.random.default_rng(5)
        values = rng.random((4, 6))
        base = detect_anomalies(matrix_of(values), delta=1.0)
        shuffled = values.copy()
        shuffled[1:] = shuffled[1:][::-1]
        permuted = detect_anomalies(matrix_of(shuffled), delta=1.0)
        assert base.topic_ids == permuted.topic_ids
        assert np.allclose(base.zscores, permuted.zscores)

    def test_version_id_is_newest(self):
        matrix = matrix_of(np.full((2, 3), 0.5))
        matrix.version_ids = [("v5", "v4"), ("v4", "v3")]
        result = detect_anomalies(matrix)
        assert result.version_id == "v5"

    def test_column_stats_variant(self):
        values = np.full((3, 4), 0.1)
        values[:, 2] = [0.8, 0.1, 0.1]  # topic 2 spikes only now
        matrix = matrix_of(values)
        whole = detect_anomalies(matrix, delta=1.25)
        per_column = detect_anomalies(matrix, delta=1.25, column_stats=True)
        assert 2 in whole.topic_ids
        assert 2 in per_column.topic_ids

    def test_empty_matrix_rejected(self):
        with pytest.raises(ValueError):
            detect_anomalies(DivergenceMatrix(np.zeros((0, 0)), []))
