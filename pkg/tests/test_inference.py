"""
Tests for likelihoods, the FPM bound, AIC bookkeeping, fitting, RrhoR and
the cross-modeling protocol.
"""

import math
from unittest.mock import patch

import numpy as np
import pytest
from numpy.testing import assert_allclose

from aic_tomography.errors import (
    DesignMismatch,
    EmptyDataset,
    OddShotCount,
    SampleTooSmall,
    TomographyError,
)
from aic_tomography.inference import (
    UNPHYSICAL_LOGLIK,
    aic,
    aicc,
    compare_m1_m2,
    cross_model_protocol,
    fit_mle,
    fpm_loglik_upper_bound,
    fpm_parameter_count,
    grid_log_likelihoods,
    log_likelihood,
    multinomial_log_likelihood,
    rank_models,
    rhor_iterate,
    state_log_likelihood,
)
from aic_tomography.measurement import (
    DESIGN_SIC,
    DESIGN_WITNESS,
    Dataset,
    MeasurementDesign,
    MeasurementSetting,
    Povm,
    collective_pauli_design,
    expected_dataset,
    product_sic_design,
    simulate_dataset,
)
from aic_tomography.states import (
    depolarize,
    dicke_state,
    model_m1,
    model_m2,
    pseudostate_from_counts,
    target_state,
)


@pytest.fixture
def rho_actual():
    return depolarize(dicke_state(2), 0.2)


class TestLikelihood:
    """Multinomial log-likelihood."""

    def test_uniform(self):
        value = multinomial_log_likelihood([np.full(4, 0.25)], [np.array([25, 25, 25, 25])])
        assert_allclose(value, 100 * math.log(0.25), atol=1e-9)
        assert_allclose(value, -138.629436, atol=1e-6)

    def test_zero_counts_ignore_zero_probabilities(self):
        value = multinomial_log_likelihood([np.array([0.0, 1.0])], [np.array([0, 10])])
        assert value == 0.0

    def test_observed_outcome_with_zero_probability(self):
        value = multinomial_log_likelihood([np.array([0.0, 1.0])], [np.array([1, 9])])
        assert value == UNPHYSICAL_LOGLIK

    def test_sums_over_settings(self):
        probs = [np.array([0.5, 0.5]), np.array([0.25, 0.75])]
        counts = [np.array([2, 2]), np.array([1, 3])]
        expected = 4 * math.log(0.5) + math.log(0.25) + 3 * math.log(0.75)
        assert_allclose(multinomial_log_likelihood(probs, counts), expected, atol=1e-12)

    def test_grid_matches_pointwise(self, rho_actual):
        data = simulate_dataset(rho_actual, collective_pauli_design(), 1000, seed=6)
        family = model_m1(target_state(2, 0.0))
        points = np.array([[0.0], [0.15], [0.3], [0.7], [1.0]])
        grid = grid_log_likelihoods(family, points, data)
        pointwise = [log_likelihood(family, p, data) for p in points]
        assert_allclose(grid, pointwise, rtol=1e-9)

    def test_state_log_likelihood_matches_family(self, rho_actual):
        data = simulate_dataset(rho_actual, product_sic_design(), 500, seed=2)
        family = model_m1(target_state(2, 0.0))
        assert_allclose(
            state_log_likelihood(family.evaluate([0.2]), data),
            log_likelihood(family, [0.2], data),
            rtol=1e-12,
        )

    def test_unphysical_pseudostate_point(self, rho_actual):
        data = expected_dataset(rho_actual, collective_pauli_design(), 1000)
        family = model_m2(target_state(2, 0.0), pseudostate_from_counts(data))
        assert log_likelihood(family, [0.0, 0.0], data) == UNPHYSICAL_LOGLIK
        assert math.isfinite(log_likelihood(family, [1.0, 0.0], data))


class TestFpmBound:
    """Likelihood of the observed frequencies."""

    def test_uniform_counts(self):
        data = Dataset(DESIGN_WITNESS, ("x", "y"), (np.full(16, 5), np.full(16, 5)))
        assert_allclose(fpm_loglik_upper_bound(data), 160 * math.log(1 / 16), atol=1e-9)

    def test_single_outcome_is_zero(self):
        vector = np.zeros(16, dtype=int)
        vector[3] = 50
        data = Dataset(DESIGN_WITNESS, ("x", "y"), (vector, vector))
        assert fpm_loglik_upper_bound(data) == 0.0

    def test_empty_setting(self):
        data = Dataset(DESIGN_WITNESS, ("x", "y"), (np.full(16, 2), np.zeros(16, dtype=int)))
        with pytest.raises(EmptyDataset):
            fpm_loglik_upper_bound(data)

    @pytest.mark.parametrize("seed", range(5))
    def test_dominates_m1_fit(self, rho_actual, seed):
        data = simulate_dataset(rho_actual, collective_pauli_design(), 400, seed=seed)
        fit = fit_mle(model_m1(target_state(2, 0.0)), data)
        assert fit.loglik <= fpm_loglik_upper_bound(data) + 1e-9

    def test_parameter_counts(self):
        assert fpm_parameter_count(product_sic_design()) == 255
        assert fpm_parameter_count(collective_pauli_design()) == 30


class TestInformationCriteria:
    """AIC and AICc."""

    def test_aic(self):
        assert aic(0.0, 1) == 2.0
        assert aic(-10.0, 3) == 26.0

    def test_aicc_small_model(self):
        assert_allclose(aicc(0.0, 1, 1000), 2.0 + 4.0 / 998.0, atol=1e-12)
        assert_allclose(aicc(0.0, 1, 1000), 2.004008, atol=1e-6)

    def test_aicc_fpm_correction(self):
        correction = aicc(0.0, 255, 1000) - aic(0.0, 255)
        assert_allclose(correction, 2 * 255 * 256 / 744, atol=1e-9)
        assert_allclose(correction, 175.48, atol=0.01)

    @pytest.mark.parametrize("n", [1, 2])
    def test_aicc_undefined(self, n):
        with pytest.raises(SampleTooSmall):
            aicc(0.0, 1, n)


class TestFitMle:
    """Grid scan plus bounded refinement."""

    @pytest.mark.parametrize("q", [0.1, 0.2, 0.5])
    def test_recovers_noise_weight_from_exact_data(self, q):
        rho = depolarize(target_state(2, 0.0), q)
        data = expected_dataset(rho, product_sic_design(), 1000)
        fit = fit_mle(model_m1(target_state(2, 0.0)), data)
        assert_allclose(fit.theta_hat[0], q, atol=1e-4)
        assert_allclose(fit.loglik, fpm_loglik_upper_bound(data), atol=1e-6)

    def test_maximally_mixed_data_pushes_to_boundary(self):
        data = expected_dataset(np.eye(16) / 16, product_sic_design(), 1000)
        fit = fit_mle(model_m1(target_state(2, 0.0)), data)
        assert fit.theta_hat[0] == pytest.approx(1.0, abs=1e-4)
        assert 0.0 <= fit.theta_hat[0] <= 1.0

    def test_variable_phase(self):
        rho = depolarize(target_state(2, 0.7), 0.2)
        data = expected_dataset(rho, product_sic_design(), 1000)
        fit = fit_mle(model_m1(target_state(2, 0.0), vary_phase=True), data)
        assert fit.param_names == ["q", "phi"]
        assert_allclose(fit.theta_hat, [0.2, 0.7], atol=1e-3)
        assert fit.K == 2

    def test_bookkeeping(self, rho_actual):
        data = simulate_dataset(rho_actual, collective_pauli_design(), 200, seed=1)
        fit = fit_mle(model_m2(target_state(2, 0.0), pseudostate_from_counts(data)), data)
        assert fit.K == 2
        assert fit.n_samples == 200
        assert_allclose(fit.aic, -2 * fit.loglik + 4, atol=1e-12)
        assert fit.aicc is not None

    def test_coarse_grid_rejected(self, rho_actual):
        data = simulate_dataset(rho_actual, collective_pauli_design(), 100, seed=0)
        with pytest.raises(TomographyError):
            fit_mle(model_m1(target_state(2, 0.0)), data, grid_step=0.1)


class TestRankModels:
    """AIC differences against the FPM."""

    def test_true_model_on_exact_sic_data(self, rho_actual):
        """L_M1 reaches the bound, so -dAIC is 2 * (255 - 1)."""
        data = expected_dataset(rho_actual, product_sic_design(), 1000)
        report = rank_models([model_m1(target_state(2, 0.0))], data)
        assert report.fpm.K == 255
        assert_allclose(report.neg_delta_aic[0], 508.0, atol=1e-3)
        assert report.preferred() == [True]

    def test_true_model_on_exact_witness_data(self, rho_actual):
        data = expected_dataset(rho_actual, collective_pauli_design(), 1000)
        report = rank_models([model_m1(target_state(2, 0.0))], data)
        assert report.fpm.K == 30
        assert_allclose(report.neg_delta_aic[0], 58.0, atol=1e-3)

    def test_orthogonal_target_loses(self, rho_actual):
        data = expected_dataset(rho_actual, product_sic_design(), 1_000_000)
        report = rank_models([model_m1(target_state(2, math.pi))], data)
        assert report.neg_delta_aic[0] < 0
        assert report.preferred() == [False]

    def test_fpm_k_override(self, rho_actual):
        data = expected_dataset(rho_actual, collective_pauli_design(), 1000)
        report = rank_models([model_m1(target_state(2, 0.0))], data, fpm_K=10)
        assert report.fpm.K == 10
        assert_allclose(report.neg_delta_aic[0], 18.0, atol=1e-3)

    def test_outcome_relabeling_leaves_ranking_unchanged(self, rho_actual):
        design = collective_pauli_design()
        data = simulate_dataset(rho_actual, design, 1000, seed=4)
        order = np.random.default_rng(8).permutation(16)
        relabeled_design = MeasurementDesign(
            design.design_id,
            tuple(
                MeasurementSetting(
                    setting.label,
                    Povm(setting.povm.effects[order], tuple(setting.povm.labels[i] for i in order)),
                    setting.allocation,
                )
                for setting in design.settings
            ),
        )
        relabeled = Dataset(data.design_id, data.labels, tuple(vector[order] for vector in data.counts), data.seed)
        families = [model_m1(target_state(2, 0.0)), model_m1(target_state(2, 1.0))]

        reference = rank_models(families, data)
        with patch("aic_tomography.measurement.design_by_id", return_value=relabeled_design):
            moved = rank_models(families, relabeled)
        assert moved.fpm.K == reference.fpm.K
        assert_allclose(moved.fpm.loglik_bound, reference.fpm.loglik_bound, rtol=1e-12)
        assert_allclose(moved.delta_aic, reference.delta_aic, atol=1e-6)

    def test_aicc_missing_for_small_samples(self, rho_actual):
        data = simulate_dataset(rho_actual, product_sic_design(), 100, seed=0)
        report = rank_models([model_m1(target_state(2, 0.0))], data)
        assert report.fpm.aicc is None
        assert report.delta_aicc == [None]


class TestRhoR:
    """Diluted RrhoR iteration."""

    def test_maximally_mixed_is_a_fixed_point(self):
        data = expected_dataset(np.eye(16) / 16, product_sic_design(), 1000)
        trace = rhor_iterate(data)
        assert trace.converged
        assert trace.iterations == 1
        assert_allclose(trace.state.matrix, np.eye(16) / 16, atol=1e-12)

    @pytest.mark.parametrize("seed", range(3))
    def test_likelihood_never_decreases(self, rho_actual, seed):
        data = simulate_dataset(rho_actual, product_sic_design(), 1000, seed=seed)
        trace = rhor_iterate(data, max_iters=200)
        assert np.all(np.diff(trace.log_likelihoods) >= 0.0)

    def test_closes_most_of_the_gap(self, rho_actual):
        data = simulate_dataset(rho_actual, product_sic_design(), 5000, seed=11)
        trace = rhor_iterate(data)
        start = trace.log_likelihoods[0]
        gap = fpm_loglik_upper_bound(data) - start
        assert (trace.log_likelihoods[-1] - start) / gap >= 0.85
        assert trace.log_likelihoods[-1] <= fpm_loglik_upper_bound(data) + 1e-9

    def test_empty_training_data(self):
        data = Dataset(DESIGN_SIC, ("sic",), (np.zeros(256, dtype=int),))
        with pytest.raises(EmptyDataset):
            rhor_iterate(data)


class TestCrossModeling:
    """Training/validation split protocol."""

    def test_witness_protocol(self, rho_actual):
        data = simulate_dataset(rho_actual, collective_pauli_design(), 1000, seed=3)
        report = cross_model_protocol(data, target_state(2, 0.0), DESIGN_WITNESS, seed=3)
        assert len(report.models) == 1
        assert report.fpm.K == 30
        assert report.models[0].K == 2
        assert report.models[0].n_samples == 500

    def test_sic_protocol(self, rho_actual):
        data = simulate_dataset(rho_actual, product_sic_design(), 1000, seed=1)
        report = cross_model_protocol(data, target_state(2, 0.0), DESIGN_SIC, seed=1)
        assert report.fpm.K == 255
        assert "base=mle" in report.models[0].name

    def test_reproducible(self, rho_actual):
        data = simulate_dataset(rho_actual, collective_pauli_design(), 400, seed=8)
        first = cross_model_protocol(data, target_state(2, 0.0), DESIGN_WITNESS, seed=8)
        second = cross_model_protocol(data, target_state(2, 0.0), DESIGN_WITNESS, seed=8)
        assert first.delta_aic == second.delta_aic

    def test_design_mismatch(self, rho_actual):
        data = simulate_dataset(rho_actual, collective_pauli_design(), 100, seed=0)
        with pytest.raises(DesignMismatch):
            cross_model_protocol(data, target_state(2, 0.0), DESIGN_SIC, seed=0)

    def test_odd_shots_per_setting(self, rho_actual):
        data = simulate_dataset(rho_actual, collective_pauli_design(), 102, seed=0)
        with pytest.raises(OddShotCount):
            cross_model_protocol(data, target_state(2, 0.0), DESIGN_WITNESS, seed=0)

    def test_identical_models_tie(self, rho_actual):
        data = simulate_dataset(rho_actual, collective_pauli_design(), 200, seed=2)
        family = model_m1(target_state(2, 0.0))
        assert compare_m1_m2(data, family, family) == 0.0
