from __future__ import annotations

import json
import random
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regeval.composites import (
    CompositeConfig,
    compose,
    compose_from_rcs,
    couple_tasks,
    crgs,
    mahalanobis,
    ocs,
    rcs_scores,
    regularized_covariance,
    sgs,
)
from regeval.errors import MissingLaw, RegevalError, SingularCovariance
from regeval.multilabel import JudgmentMetrics
from regeval.retrieval import RetrievalMetrics

EPS = 1e-6

REFERENCE = json.loads((Path(__file__).parent / "data" / "reference_scores.json").read_text())

unit_floats = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


class TestSgs:
    def test_equal_values_within_two_epsilon(self):
        for v in (0.0, 0.1, 0.5, 0.9, 1.0):
            assert abs(sgs([v, v, v]) - v) <= 2 * EPS

    def test_mixed_triple_value(self):
        # Harmonic factor 0.342857... times exp(-0.285714...) = 0.257650...
        assert sgs([0.2, 0.4, 0.8]) == pytest.approx(0.25765, abs=1e-4)

    def test_weak_level_dominates(self):
        assert sgs([0.0, 0.5, 0.5]) < 1e-5

    def test_mpmath_cross_check(self):
        import mpmath

        mpmath.mp.dps = 50
        values = [0.2, 0.4, 0.8]
        mp_vals = [mpmath.mpf(v) for v in values]
        harmonic = 1 / (sum(1 / (v + mpmath.mpf(EPS)) for v in mp_vals) / 3)
        mean = sum(mp_vals) / 3
        var = sum((v - mean) ** 2 for v in mp_vals) / 3
        expected = harmonic * mpmath.e ** (-(var / mean**2))
        assert sgs(values) == pytest.approx(float(expected), abs=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(unit_floats, min_size=3, max_size=3))
    def test_never_exceeds_arithmetic_mean(self, values):
        assert sgs(values) <= sum(values) / 3 + 2 * EPS

    def test_mean_preserving_spread_monotonicity(self):
        rng = random.Random(17)
        for _ in range(1000):
            mean = rng.uniform(0.2, 0.8)
            d1 = rng.uniform(0.0, min(mean, 1 - mean) * 0.5)
            d2 = rng.uniform(d1, min(mean, 1 - mean))
            narrow = [mean - d1, mean, mean + d1]
            wide = [mean - d2, mean, mean + d2]
            if d2 > d1:
                assert sgs(wide) < sgs(narrow)

    def test_requires_three_values(self):
        with pytest.raises(RegevalError):
            sgs([0.5, 0.5])


class TestMahalanobis:
    def test_identity_of_indiscernibles(self):
        cov = np.eye(3)
        assert mahalanobis([0.1, 0.2, 0.3], [0.1, 0.2, 0.3], cov) == 0.0

    def test_euclidean_reduction(self):
        cov = np.eye(2)
        assert mahalanobis([3.0, 4.0], [0.0, 0.0], cov) == pytest.approx(5.0, abs=1e-12)

    def test_inverse_variance_scaling(self):
        cov = np.diag([4.0, 1.0])
        assert mahalanobis([2.0, 0.0], [0.0, 0.0], cov) == pytest.approx(1.0, abs=1e-12)

    def test_singular_covariance(self):
        with pytest.raises(SingularCovariance):
            mahalanobis([1.0, 0.0], [0.0, 0.0], np.zeros((2, 2)))

    def test_ridge_regularization(self):
        cohort = np.array([[0.5, 0.5], [0.5, 0.5]])
        cov = regularized_covariance(cohort, ridge=0.1)
        assert np.allclose(cov, 0.1 * np.eye(2))

    def test_singleton_cohort_degrades_to_ridge(self):
        cov = regularized_covariance(np.array([[0.3, 0.7, 0.1]]), ridge=0.1)
        assert np.allclose(cov, 0.1 * np.eye(3))

    def test_population_covariance_used(self):
        cohort = np.array([[0.0, 0.0], [1.0, 1.0]])
        cov = regularized_covariance(cohort, ridge=0.1)
        # Population variance of {0, 1} is 0.25.
        assert cov[0, 0] == pytest.approx(0.35, abs=1e-12)


class TestRcs:
    def test_endpoints(self):
        config = CompositeConfig()
        cohort = [[1.0] * 6, [0.0] * 6, [0.5] * 6]
        scores = rcs_scores(cohort, config)
        assert scores[0] == pytest.approx(1.0, abs=1e-12)
        assert scores[1] == pytest.approx(0.0, abs=1e-12)
        assert 0.0 < scores[2] < 1.0

    def test_identity_covariance_symmetry(self):
        # A lone (1, 0) vector: covariance collapses to ridge * I, so the two
        # distances are equal and the score is exactly one half.
        scores = rcs_scores([[1.0, 0.0]], CompositeConfig())
        assert scores[0] == pytest.approx(0.5, abs=1e-12)

    def test_cohort_permutation_invariance(self):
        config = CompositeConfig()
        cohort = [[0.9, 0.8, 0.7, 0.6, 0.5, 0.4], [0.1, 0.3, 0.2, 0.4, 0.2, 0.1], [0.5] * 6]
        scores = rcs_scores(cohort, config)
        perm = [2, 0, 1]
        permuted_scores = rcs_scores([cohort[i] for i in perm], config)
        for new_pos, old_pos in enumerate(perm):
            assert permuted_scores[new_pos] == pytest.approx(scores[old_pos], abs=1e-12)

    def test_scores_in_unit_interval(self):
        rng = random.Random(5)
        cohort = [[rng.random() for _ in range(6)] for _ in range(4)]
        for score in rcs_scores(cohort, CompositeConfig()):
            assert 0.0 <= score <= 1.0

    def test_needs_two_metrics(self):
        with pytest.raises(RegevalError):
            rcs_scores([[1.0]], CompositeConfig())


class TestCrgs:
    def test_reference_rows(self):
        assert crgs([0.3270, 0.3100, 0.3998]) == pytest.approx(0.3425, abs=5e-4)
        assert crgs([0.0342, 0.0396, 0.1576]) == pytest.approx(0.0594, abs=5e-4)

    def test_zero_variance_fixed_point(self):
        for v in (0.05, 0.3, 0.9):
            assert crgs([v, v, v]) == pytest.approx(v, abs=1e-9)

    def test_weak_member_collapses_geometric_mean(self):
        assert crgs([0.0, 0.5, 0.5]) < 0.02

    def test_empty_raises(self):
        with pytest.raises(MissingLaw):
            crgs([])


class TestCoupling:
    def test_equal_scores_harmonic(self):
        assert couple_tasks(0.4, 0.4) == pytest.approx(0.4, abs=1e-5)

    def test_reference_pair(self):
        assert couple_tasks(0.3270, 0.3932) == pytest.approx(0.3128, abs=5e-5)

    def test_zero_product(self):
        assert couple_tasks(0.0, 1.0) == pytest.approx(0.0, abs=1e-5)

    def test_gap_penalty(self):
        assert couple_tasks(0.2, 0.6) < couple_tasks(0.4, 0.4)


class TestOcs:
    def test_reference_models(self):
        config = CompositeConfig()
        for model, tasks in REFERENCE["models"].items():
            pairs = {law: (tasks["task1"][law], tasks["task2"][law]) for law in tasks["task1"]}
            value, coupled = ocs(pairs, config)
            assert value == pytest.approx(REFERENCE["expected"]["ocs"][model], abs=1.5e-3)
            assert set(coupled) == set(pairs)

    def test_zero_variance_fixed_point(self):
        value, _ = ocs({"A": (0.4, 0.4), "B": (0.4, 0.4), "C": (0.4, 0.4)}, CompositeConfig())
        assert value == pytest.approx(0.4, abs=1e-4)

    def test_zero_member_collapses(self):
        value, _ = ocs({"A": (0.0, 0.9), "B": (0.5, 0.5), "C": (0.5, 0.5)}, CompositeConfig())
        assert value < 0.02

    def test_missing_law(self):
        with pytest.raises(MissingLaw):
            ocs({"A": (0.5, None)}, CompositeConfig())


class TestComposeFromRcs:
    def test_full_reference_recomputation(self):
        report = compose_from_rcs(REFERENCE["models"], CompositeConfig())
        for model, expected in REFERENCE["expected"]["crgs_task1"].items():
            assert report.crgs_task1[model] == pytest.approx(expected, abs=5e-4)
        for model, expected in REFERENCE["expected"]["crgs_task2"].items():
            assert report.crgs_task2[model] == pytest.approx(expected, abs=5e-4)
        for model, expected in REFERENCE["expected"]["ocs"].items():
            assert report.ocs_scores[model] == pytest.approx(expected, abs=1.5e-3)


def _metrics_fixture(models=("m1", "m2"), laws=("LGPD", "PDPA", "PIPEDA"), seed=3):
    rng = random.Random(seed)
    task1 = {}
    task2 = {}
    for model in models:
        task1[model] = {}
        task2[model] = {}
        for law in laws:
            task1[model][law] = {
                gran: RetrievalMetrics(*(rng.random() for _ in range(6)))
                for gran in ("file", "module", "line")
            }
            task2[model][law] = JudgmentMetrics(*(rng.random() for _ in range(6)))
    return task1, task2


class TestCompose:
    def test_report_shape(self):
        task1, task2 = _metrics_fixture()
        report = compose(task1, task2)
        data = report.to_dict()
        assert set(data["models"]) == {"m1", "m2"}
        block = data["models"]["m1"]
        assert set(block["sgs"]) == {"LGPD", "PDPA", "PIPEDA"}
        assert set(block["rcs"]["task1"]) == {"LGPD", "PDPA", "PIPEDA"}
        assert 0.0 <= block["ocs"] <= 1.0

    def test_deterministic(self):
        task1, task2 = _metrics_fixture(seed=9)
        a = compose(task1, task2).to_dict()
        b = compose(task1, task2).to_dict()
        assert a == b

    def test_mismatched_models_rejected(self):
        task1, task2 = _metrics_fixture()
        del task2["m2"]
        with pytest.raises(MissingLaw):
            compose(task1, task2)

    def test_pooled_covariance_flag(self):
        task1, task2 = _metrics_fixture(seed=21)
        split = compose(task1, task2, CompositeConfig())
        pooled = compose(task1, task2, CompositeConfig(pool_covariance_across_laws=True))
        assert split.rcs_task1 != pooled.rcs_task1


class TestConfigValidation:
    def test_rejects_bad_values(self):
        with pytest.raises(RegevalError):
            CompositeConfig(ridge=0.0)
        with pytest.raises(RegevalError):
            CompositeConfig(epsilon=0.0)
        with pytest.raises(RegevalError):
            CompositeConfig(alpha=-1.0)
