"""
Tests for negativities and the collective-spin witness.
"""

import math
from itertools import permutations

import numpy as np
import pytest
from numpy.testing import assert_allclose

from aic_tomography.entanglement import (
    BALANCED_PARTITIONS,
    SINGLE_PARTITIONS,
    collective_spin,
    generalized_negativities,
    generalized_negativities_stack,
    negativities,
    negativity,
    phase_threshold,
    white_noise_curve,
    witness_expectation,
    witness_operator,
    witness_phase_curve,
    witness_threshold,
)
from aic_tomography.errors import InvalidPartition, NoSignChange, PseudostateRejected
from aic_tomography.measurement import collective_pauli_design, expected_dataset
from aic_tomography.states import (
    depolarize,
    dicke_state,
    pseudostate_from_counts,
    random_density_matrix,
    target_state,
)

CROSSING_PHASE = math.acos((math.sqrt(3) - 0.5) / 2)


@pytest.fixture
def rho_actual():
    return depolarize(dicke_state(2), 0.2)


class TestNegativity:
    """Bipartite negativity."""

    def test_bell_pair(self):
        psi = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
        assert_allclose(negativity(np.outer(psi, psi.conj()), [0]), 0.5, atol=1e-12)

    def test_pure_dicke_cuts(self):
        rho = dicke_state(2).projector()
        assert_allclose(negativity(rho, (0,)), 0.5, atol=1e-12)
        assert_allclose(negativity(rho, (0, 1)), 5 / 6, atol=1e-12)

    def test_complement_gives_same_value(self):
        rho = random_density_matrix(3)
        assert_allclose(negativity(rho, (0, 2)), negativity(rho, (1, 3)), atol=1e-10)

    def test_separable_states(self):
        assert negativity(np.eye(16) / 16, (0, 1)) == pytest.approx(0.0, abs=1e-14)
        product = np.zeros((16, 16))
        product[0, 0] = 1.0
        assert negativity(product, (0,)) == pytest.approx(0.0, abs=1e-14)

    def test_jacobi_agrees(self, rho_actual):
        assert_allclose(
            negativity(rho_actual, (0, 1), method="jacobi"),
            negativity(rho_actual, (0, 1)),
            atol=1e-9,
        )

    @pytest.mark.parametrize("partition", [(), (0, 1, 2, 3), (4,), (-1,)])
    def test_invalid_partitions(self, rho_actual, partition):
        with pytest.raises(InvalidPartition):
            negativity(rho_actual, partition)

    @pytest.mark.parametrize("seed", range(4))
    def test_convex_on_mixtures(self, seed):
        first = random_density_matrix(seed, rank=2).matrix
        second = random_density_matrix(seed + 100, rank=2).matrix
        for partition in BALANCED_PARTITIONS + SINGLE_PARTITIONS:
            for lam in (0.25, 0.5, 0.8):
                mixed = negativity(lam * first + (1 - lam) * second, partition)
                bound = lam * negativity(first, partition) + (1 - lam) * negativity(second, partition)
                assert mixed <= bound + 1e-12

    def test_pseudostate_rejected(self, rho_actual):
        pseudo = pseudostate_from_counts(expected_dataset(rho_actual, collective_pauli_design(), 1000))
        with pytest.raises(PseudostateRejected):
            negativity(pseudo, (0,))

    def test_stack_matches_single(self):
        states = [random_density_matrix(seed) for seed in range(4)]
        stack = np.stack([rho.matrix for rho in states])
        expected = [negativity(rho, (0, 3)) for rho in states]
        assert_allclose(negativities(stack, (0, 3)), expected, atol=1e-10)


class TestGeneralizedNegativities:
    """N0, N1 and N2."""

    def test_partition_sets(self):
        assert len(BALANCED_PARTITIONS) == 3
        assert len(SINGLE_PARTITIONS) == 4

    def test_noisy_dicke_values(self, rho_actual):
        """Mixing with weight 0.2 shifts each negative eigenvalue by 0.8 x and 0.0125."""
        triple = generalized_negativities(rho_actual)
        assert_allclose(triple.n2, 0.3875, atol=1e-10)
        assert_allclose(triple.n1, 0.8 * 5 / 6 - 3 * 0.0125, atol=1e-10)
        assert_allclose(triple.n0, 0.47697, atol=1e-5)
        assert triple.get("N1") == triple.n1

    def test_n0_is_weighted_geometric_mean(self):
        triple = generalized_negativities(random_density_matrix(9, rank=1))
        assert_allclose(triple.n0, (triple.n1 ** 3 * triple.n2 ** 4) ** (1 / 7), rtol=1e-12)

    def test_maximally_mixed_is_zero(self):
        triple = generalized_negativities(np.eye(16) / 16)
        assert (triple.n0, triple.n1, triple.n2) == (0.0, 0.0, 0.0)

    def test_stack_form(self, rho_actual):
        stack = np.stack([rho_actual.matrix, np.eye(16) / 16])
        values = generalized_negativities_stack(stack)
        triple = generalized_negativities(rho_actual)
        assert values.shape == (2, 3)
        assert_allclose(values[0], [triple.n0, triple.n1, triple.n2], atol=1e-10)
        assert_allclose(values[1], 0.0, atol=1e-14)


class TestWitness:
    """Collective-spin witness."""

    def test_spin_commutator(self):
        jx, jy, jz = (collective_spin(axis) for axis in "xyz")
        assert_allclose(jx @ jy - jy @ jx, 1j * jz, atol=1e-12)

    def test_operator_is_a_copy(self):
        w = witness_operator()
        w[0, 0] = 0.0
        assert witness_operator()[0, 0] != 0.0

    def test_maximally_mixed_value(self):
        assert_allclose(witness_expectation(np.eye(16) / 16), 1.5 + math.sqrt(3), atol=1e-12)

    def test_dicke_value(self):
        assert_allclose(witness_expectation(dicke_state(2).projector()), math.sqrt(3) - 2.5, atol=1e-12)

    def test_linear_in_noise(self):
        for alpha in (0.0, 0.1, 0.5, 1.0):
            value = witness_expectation(depolarize(dicke_state(2), alpha))
            assert_allclose(value, math.sqrt(3) - 2.5 + 4 * alpha, atol=1e-12)

    @pytest.mark.parametrize("seed", range(3))
    def test_linear_on_mixtures(self, seed):
        first = random_density_matrix(seed).matrix
        second = random_density_matrix(seed + 50, rank=3).matrix
        for lam in (0.1, 0.37, 0.9):
            assert_allclose(
                witness_expectation(lam * first + (1 - lam) * second),
                lam * witness_expectation(first) + (1 - lam) * witness_expectation(second),
                atol=1e-12,
            )

    def test_invariant_under_qubit_relabeling(self):
        w = witness_operator()
        tensor = w.reshape((2,) * 8)
        for order in permutations(range(4)):
            axes = list(order) + [4 + q for q in order]
            relabeled = tensor.transpose(axes).reshape(16, 16)
            assert_allclose(relabeled, w, atol=1e-12)

    def test_white_noise_threshold(self):
        root = witness_threshold(white_noise_curve(2), tol=1e-9)
        assert_allclose(root, (2.5 - math.sqrt(3)) / 4, atol=1e-8)
        assert_allclose(root, 0.1920, atol=1e-4)

    def test_phase_curve(self):
        phis = np.linspace(0.0, math.pi, 7)
        assert_allclose(
            witness_phase_curve(2, 0.0, phis),
            math.sqrt(3) - 0.5 - 2 * np.cos(phis),
            atol=1e-12,
        )

    def test_phase_crossing(self):
        root = phase_threshold(2, 0.0, tol=1e-9)
        assert_allclose(root, CROSSING_PHASE, atol=1e-8)
        assert root < math.pi / 3

    def test_noisy_curve_never_detects(self):
        phis = np.linspace(0.0, math.pi, 181)
        values = witness_phase_curve(2, 0.2, phis)
        assert np.all(values > 0)
        assert_allclose(values.min(), math.sqrt(3) - 0.1 - 1.6, atol=1e-12)
        with pytest.raises(NoSignChange):
            phase_threshold(2, 0.2)

    def test_phase_curve_matches_states(self):
        phi = 0.4
        rho = depolarize(target_state(2, phi), 0.3)
        assert_allclose(witness_phase_curve(2, 0.3, [phi])[0], witness_expectation(rho), atol=1e-12)

    def test_accepts_pseudostates(self, rho_actual):
        pseudo = pseudostate_from_counts(expected_dataset(rho_actual, collective_pauli_design(), 1000))
        assert_allclose(witness_expectation(pseudo), witness_expectation(rho_actual), atol=1e-12)
