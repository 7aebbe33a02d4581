"""Eigensolver, PCA, trajectory model, and panel assembly."""

from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from prosocial.errors import (
    ArtifactError,
    NumericError,
    PanelError,
    TrainingError,
)
from prosocial.trajectory import (
    METRIC_NAMES,
    PROSOCIAL_METRICS,
    MetricPanel,
    assemble_panel,
    check_manifest,
    explained_variance,
    fit_pca,
    fit_standardizer,
    fit_trajectory_model,
    load_trajectory_model,
    save_trajectory_model,
    symmetric_eigen,
    trajectory_score,
)

from oracles import eig2_closed_form, eigh_descending


def _random_symmetric(rng: np.random.Generator, n: int) -> np.ndarray:
    a = rng.standard_normal((n, n))
    return (a + a.T) / 2.0


class TestSymmetricEigen:
    def test_identity(self):
        values, vectors = symmetric_eigen(np.eye(4))
        assert values == pytest.approx(np.ones(4))
        assert vectors.T @ vectors == pytest.approx(np.eye(4), abs=1e-12)

    def test_known_two_by_two(self):
        m = np.array([[2.0, 1.0], [1.0, 2.0]])
        values, _ = symmetric_eigen(m)
        assert values == pytest.approx([3.0, 1.0], abs=1e-12)
        assert values == pytest.approx(eig2_closed_form(m), abs=1e-12)

    def test_matches_reference_solver_across_sizes(self):
        rng = np.random.default_rng(71)
        for n in range(2, 23):
            m = _random_symmetric(rng, n)
            values, vectors = symmetric_eigen(m)
            ref_values, _ = eigh_descending(m)
            assert values == pytest.approx(ref_values, abs=1e-8)
            # eigenpairs satisfy the definition and stay orthonormal
            assert m @ vectors == pytest.approx(vectors * values, abs=1e-8)
            assert vectors.T @ vectors == pytest.approx(np.eye(n), abs=1e-9)

    def test_descending_order(self):
        rng = np.random.default_rng(72)
        values, _ = symmetric_eigen(_random_symmetric(rng, 9))
        assert np.all(np.diff(values) <= 1e-12)

    def test_rank_one_matrix(self):
        u = np.array([3.0, 0.0, 4.0])
        values, _ = symmetric_eigen(np.outer(u, u))
        assert values[0] == pytest.approx(25.0, abs=1e-10)
        assert values[1:] == pytest.approx([0.0, 0.0], abs=1e-10)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            symmetric_eigen(np.zeros((2, 3)))
        with pytest.raises(NumericError):
            symmetric_eigen(np.array([[np.nan, 0.0], [0.0, 1.0]]))


class TestFitPca:
    def test_ratios_sum_to_one_and_descend(self):
        rng = np.random.default_rng(73)
        z = rng.standard_normal((100, 6))
        z -= z.mean(axis=0)
        _, ratios = fit_pca(z)
        assert float(np.sum(ratios)) == pytest.approx(1.0, abs=1e-9)
        assert np.all(np.diff(ratios) <= 1e-12)

    def test_loadings_orthonormal(self):
        rng = np.random.default_rng(74)
        z = rng.standard_normal((60, 5))
        loadings, _ = fit_pca(z)
        assert loadings @ loadings.T == pytest.approx(np.eye(5), abs=1e-9)

    def test_orientation_pivot_positive(self):
        rng = np.random.default_rng(75)
        loadings, _ = fit_pca(rng.standard_normal((40, 7)))
        for row in loadings:
            assert row[int(np.argmax(np.abs(row)))] > 0.0

    def test_finds_planted_direction(self):
        rng = np.random.default_rng(76)
        direction = np.array([0.6, 0.0, 0.8])
        factor = rng.standard_normal(500)[:, None]
        z = factor * direction + rng.normal(scale=0.05, size=(500, 3))
        z -= z.mean(axis=0)
        loadings, ratios = fit_pca(z)
        assert abs(float(np.dot(loadings[0], direction))) > 0.99
        assert ratios[0] > 0.9

    def test_eigenvalues_match_reference_on_covariance(self):
        rng = np.random.default_rng(77)
        z = rng.standard_normal((80, 8))
        cov = z.T @ z / z.shape[0]
        values, _ = symmetric_eigen(cov)
        ref_values, _ = eigh_descending(cov)
        assert values == pytest.approx(ref_values, abs=1e-10)

    def test_zero_variance_rejected(self):
        with pytest.raises(NumericError):
            fit_pca(np.zeros((10, 4)))


class TestStandardizer:
    def test_matches_population_moments(self):
        rng = np.random.default_rng(78)
        panels = rng.standard_normal((30, 22))
        means, stds = fit_standardizer(panels)
        assert means == pytest.approx(panels.mean(axis=0))
        assert stds == pytest.approx(panels.std(axis=0, ddof=0))

    def test_needs_two_panels(self):
        with pytest.raises(TrainingError):
            fit_standardizer(np.ones((1, 22)))

    def test_rejects_non_finite(self):
        panels = np.ones((3, 22))
        panels[1, 4] = np.inf
        with pytest.raises(NumericError):
            fit_standardizer(panels)


def _random_panel_matrix(seed: int, rows: int = 40) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.standard_normal((rows, len(METRIC_NAMES))) * 2.0 + 1.0


class TestTrajectoryModel:
    def test_constant_metric_is_dropped(self):
        matrix = _random_panel_matrix(81)
        idx = METRIC_NAMES.index("donations")
        matrix[:, idx] = 3.0
        model = fit_trajectory_model(matrix)
        assert not model.kept[idx]
        assert model.loadings[0, idx] == 0.0
        # a dropped metric cannot move the score
        panel = matrix[0].copy()
        base = trajectory_score(model, panel)
        panel[idx] = 1e6
        assert trajectory_score(model, panel) == pytest.approx(base)

    def test_first_component_points_prosocially(self):
        for seed in (82, 83, 84, 85):
            model = fit_trajectory_model(_random_panel_matrix(seed))
            idx = [METRIC_NAMES.index(m) for m in PROSOCIAL_METRICS]
            assert float(np.mean(model.loadings[0, idx])) >= 0.0
            assert set(np.unique(model.sign_convention)) <= {1.0, -1.0}

    def test_score_is_linear_in_standard_units(self):
        matrix = _random_panel_matrix(86)
        model = fit_trajectory_model(matrix)
        assert trajectory_score(model, model.means) == pytest.approx(0.0, abs=1e-12)
        idx = METRIC_NAMES.index("gratitude")
        bumped = model.means.copy()
        bumped[idx] += 2.5 * model.stds[idx]
        expected = 2.5 * model.loadings[0, idx]
        assert trajectory_score(model, bumped) == pytest.approx(expected, abs=1e-10)

    def test_score_accepts_metric_panels(self):
        matrix = _random_panel_matrix(87)
        model = fit_trajectory_model(matrix)
        panel = MetricPanel(
            values=matrix[3].copy(), defined_mask=np.ones(22, dtype=bool)
        )
        assert trajectory_score(model, panel) == pytest.approx(
            trajectory_score(model, matrix[3])
        )

    def test_explained_variance_cumulative(self):
        model = fit_trajectory_model(_random_panel_matrix(88))
        k_max = len(model.explained_variance_ratio)
        previous = 0.0
        for k in range(1, k_max + 1):
            current = explained_variance(model, k)
            assert current >= previous - 1e-12
            previous = current
        assert explained_variance(model, k_max) == pytest.approx(1.0, abs=1e-9)
        with pytest.raises(ValueError):
            explained_variance(model, 0)
        with pytest.raises(ValueError):
            explained_variance(model, k_max + 1)

    def test_wrong_width_rejected(self):
        with pytest.raises(ValueError):
            fit_trajectory_model(np.ones((10, 5)))

    def test_too_little_variance_rejected(self):
        matrix = np.ones((10, len(METRIC_NAMES)))
        matrix[:, 0] = np.arange(10)
        with pytest.raises(TrainingError):
            fit_trajectory_model(matrix)

    def test_save_load_round_trip(self, tmp_path):
        model = fit_trajectory_model(_random_panel_matrix(89))
        path = tmp_path / "trajectory.model"
        save_trajectory_model(model, str(path))
        loaded = load_trajectory_model(str(path))
        assert loaded.metric_names == model.metric_names
        assert np.array_equal(loaded.means, model.means)
        assert np.array_equal(loaded.stds, model.stds)
        assert np.array_equal(loaded.kept, model.kept)
        assert np.array_equal(loaded.loadings, model.loadings)
        assert np.array_equal(
            loaded.explained_variance_ratio, model.explained_variance_ratio
        )
        assert np.array_equal(loaded.sign_convention, model.sign_convention)

    def test_load_rejects_corrupt_files(self, tmp_path):
        wrong = tmp_path / "wrong.model"
        wrong.write_text("format: something/2\n", encoding="utf-8")
        with pytest.raises(ArtifactError):
            load_trajectory_model(str(wrong))

        model = fit_trajectory_model(_random_panel_matrix(90))
        path = tmp_path / "trajectory.model"
        save_trajectory_model(model, str(path))
        text = path.read_text(encoding="utf-8")
        broken = tmp_path / "broken.model"
        broken.write_text(text.replace("components: 22", "components: 7"),
                          encoding="utf-8")
        with pytest.raises(ArtifactError):
            load_trajectory_model(str(broken))
        mangled = tmp_path / "mangled.model"
        mangled.write_text(
            "\n".join(
                ln for ln in text.splitlines() if not ln.startswith("means:")
            ) + "\n",
            encoding="utf-8",
        )
        with pytest.raises(ArtifactError):
            load_trajectory_model(str(mangled))

    def test_check_manifest(self, tmp_path):
        model = fit_trajectory_model(_random_panel_matrix(91))
        check_manifest(model, METRIC_NAMES)
        shuffled = list(METRIC_NAMES)
        shuffled[0], shuffled[1] = shuffled[1], shuffled[0]
        with pytest.raises(ArtifactError):
            check_manifest(model, shuffled)


class _ExplodingToxicity:
    config = None

    def score(self, text: str) -> float:
        raise RuntimeError("scorer unavailable")


class TestAssemblePanel:
    def test_fixture_spot_values(self, handmade_conversations, panel_context):
        laugh = assemble_panel(handmade_conversations["c05"], panel_context)
        assert laugh.value("laughter") == 6.0
        quiet = assemble_panel(handmade_conversations["c01"], panel_context)
        assert not quiet.defined("politeness")
        assert not quiet.defined("supportiveness")
        assert quiet.value("subsequent_comments") == 0.0

    def test_failure_names_the_metric(self, handmade_conversations, panel_context):
        broken = dataclasses.replace(panel_context, toxicity=_ExplodingToxicity())
        with pytest.raises(PanelError) as info:
            assemble_panel(handmade_conversations["c02"], broken)
        assert info.value.metric == "pct_nontoxic_untuned"

    def test_panel_shape_validation(self):
        with pytest.raises(ValueError):
            MetricPanel(values=np.zeros(5), defined_mask=np.ones(5, dtype=bool))
        with pytest.raises(ValueError):
            MetricPanel(values=np.zeros(22), defined_mask=np.ones(5, dtype=bool))
