"""
Self-checks of a build.

``quick`` runs the deterministic oracles (negativities, witness roots, AIC
identities, POVM structure, an exact-data fit). ``full`` adds the seeded
Monte Carlo sign-pattern and coverage checks, which take minutes.
"""

from __future__ import annotations

import logging
import math
import time
from typing import Callable, List, Optional, Tuple

import numpy as np

from .bayes import negativity_posterior, physicality_map, posterior_over_params
from .entanglement import (
    BALANCED_PARTITIONS,
    SINGLE_PARTITIONS,
    generalized_negativities,
    negativity,
    phase_threshold,
    white_noise_curve,
    witness_expectation,
    witness_phase_curve,
    witness_threshold,
)
from .inference import (
    aic,
    aicc,
    fit_mle,
    fpm_loglik_upper_bound,
    log_likelihood,
    rank_models,
    rhor_iterate,
)
from .measurement import (
    collective_pauli_design,
    expected_dataset,
    product_sic_design,
    simulate_dataset,
)
from .models import CheckResult, VerificationReport
from .states import (
    depolarize,
    dicke_state,
    model_m1,
    model_m2,
    pseudostate_from_counts,
    random_density_matrix,
    random_pure_state,
    target_state,
)

_LOG = logging.getLogger("aic_tomography.verification")

LEVELS = ("quick", "full")

REFERENCE_VALUES = {
    "alpha": 0.2,
    "n0": 0.4770,
    "n1": 0.6293,
    "n2": 0.3875,
    "negativity_tol": 5e-4,
    "alpha_threshold": 0.1920,
    "alpha_threshold_tol": 1e-4,
    "phase_crossing": math.acos((math.sqrt(3.0) - 0.5) / 2.0),
    "witness_mixed_trace": 1.5 + math.sqrt(3.0),
    "sic_fpm_K": 255,
    "witness_fpm_K": 30,
    "physical_fraction_band": (0.65, 0.80),
}

Check = Callable[[], CheckResult]


def _rho_actual():
    return depolarize(dicke_state(2), REFERENCE_VALUES["alpha"])


def _compare(name: str, value: float, expected: float, tol: float) -> CheckResult:
    return CheckResult(
        name=name,
        passed=bool(abs(value - expected) <= tol),
        value=float(value),
        expected=float(expected),
        tolerance=f"+/-{tol:g}",
    )


def _at_least(name: str, fraction: float, required: float, detail: str = "") -> CheckResult:
    return CheckResult(
        name=name,
        passed=bool(fraction >= required),
        value=float(fraction),
        expected=float(required),
        tolerance=">=",
        detail=detail,
    )


# ---------------------------------------------------------------------------
# Deterministic oracles
# ---------------------------------------------------------------------------

def _negativity_checks() -> List[Check]:
    def make(key: str) -> Check:
        def check() -> CheckResult:
            triple = generalized_negativities(_rho_actual())
            value = getattr(triple, key)
            return _compare(f"negativity_{key}_rho_actual", value, REFERENCE_VALUES[key],
                            REFERENCE_VALUES["negativity_tol"])
        check.__name__ = f"negativity_{key}_rho_actual"
        return check
    return [make("n0"), make("n1"), make("n2")]


def check_witness_threshold() -> CheckResult:
    root = witness_threshold(white_noise_curve(2))
    return _compare("witness_alpha_threshold", root, REFERENCE_VALUES["alpha_threshold"],
                    REFERENCE_VALUES["alpha_threshold_tol"])


def check_witness_threshold_closed_form() -> CheckResult:
    root = witness_threshold(white_noise_curve(2))
    return _compare("witness_alpha_threshold_closed_form", root, (2.5 - math.sqrt(3.0)) / 4.0, 1e-6)


def check_witness_phase_crossing() -> CheckResult:
    root = phase_threshold(2, 0.0)
    result = _compare("witness_phase_crossing", root, REFERENCE_VALUES["phase_crossing"], 1e-5)
    if root >= math.pi / 3:
        result.passed = False
        result.detail = "crossing not below pi/3"
    return result


def check_witness_mixture_positive() -> CheckResult:
    phis = np.arange(0.0, 2.0 * math.pi, math.pi / 90)
    smallest = float(witness_phase_curve(2, 0.2, phis).min())
    return CheckResult(
        name="witness_q02_never_negative",
        passed=smallest > 0.0,
        value=smallest,
        expected=0.0,
        tolerance=">",
    )


def check_witness_trace() -> CheckResult:
    value = witness_expectation(np.eye(16, dtype=complex) / 16)
    return _compare("witness_maximally_mixed", value, REFERENCE_VALUES["witness_mixed_trace"], 1e-12)


def check_aic_identities() -> CheckResult:
    loglik, k, n = -1234.5, 255, 1000
    identity_ok = aic(loglik, k) == -2.0 * loglik + 2.0 * k
    correction = aicc(loglik, k, n) - aic(loglik, k)
    expected = 2.0 * k * (k + 1) / (n - k - 1)
    result = _compare("aic_aicc_identities", correction, expected, 1e-9)
    result.passed = result.passed and identity_ok
    return result


def check_povm_structure() -> CheckResult:
    deviations = []
    for design in (product_sic_design(), collective_pauli_design()):
        for setting in design.settings:
            effects = setting.povm.effects
            deviations.append(float(np.max(np.abs(effects.sum(axis=0) - np.eye(effects.shape[1])))))
            deviations.append(float(max(0.0, -np.linalg.eigvalsh(effects)[:, 0].min())))
    worst = max(deviations)
    counts = (
        sum(s.povm.n_outcomes - 1 for s in product_sic_design().settings),
        sum(s.povm.n_outcomes - 1 for s in collective_pauli_design().settings),
    )
    passed = worst <= 1e-10 and counts == (REFERENCE_VALUES["sic_fpm_K"], REFERENCE_VALUES["witness_fpm_K"])
    return CheckResult(
        name="povm_completeness_and_positivity",
        passed=passed,
        value=worst,
        expected=0.0,
        tolerance="<=1e-10",
        detail=f"FPM K = {counts}",
    )


def check_exact_fit() -> CheckResult:
    target = dicke_state(2)
    rho = depolarize(target, 0.2)
    data = expected_dataset(rho, product_sic_design(), 10000)
    fit = fit_mle(model_m1(target), data)
    return _compare("fit_m1_exact_data", fit.theta_hat[0], 0.2, 1e-5)


def _schmidt_negativity(amplitudes: np.ndarray, partition: Tuple[int, ...], n_qubits: int = 4) -> float:
    rest = tuple(q for q in range(n_qubits) if q not in partition)
    tensor = amplitudes.reshape((2,) * n_qubits).transpose(partition + rest)
    singular = np.linalg.svd(tensor.reshape(2 ** len(partition), -1), compute_uv=False)
    return float((singular.sum() ** 2 - 1.0) / 2.0)


def make_schmidt_check(n_states: int) -> Check:
    def check() -> CheckResult:
        worst = 0.0
        for seed in range(n_states):
            psi = random_pure_state(seed)
            rho = psi.projector()
            for cut in BALANCED_PARTITIONS + SINGLE_PARTITIONS:
                worst = max(worst, abs(negativity(rho, cut) - _schmidt_negativity(psi.amplitudes, cut)))
        return CheckResult(
            name=f"negativity_schmidt_oracle_{n_states}",
            passed=worst <= 1e-9,
            value=worst,
            expected=0.0,
            tolerance="<=1e-9",
        )
    check.__name__ = f"negativity_schmidt_oracle_{n_states}"
    return check


# ---------------------------------------------------------------------------
# Seeded Monte Carlo checks
# ---------------------------------------------------------------------------

def _win_fraction(design, phi: float, n: int, seeds: range) -> float:
    rho = _rho_actual()
    family = model_m1(target_state(2, phi))
    wins = 0
    for seed in seeds:
        report = rank_models([family], simulate_dataset(rho, design, n, seed))
        wins += report.neg_delta_aic[0] > 0
    return wins / len(seeds)


def make_sign_check(name: str, design_factory, phi: float, n: int, want_win: bool, required: float,
                    n_seeds: int = 50) -> Check:
    def check() -> CheckResult:
        fraction = _win_fraction(design_factory(), phi, n, range(n_seeds))
        observed = fraction if want_win else 1.0 - fraction
        outcome = "wins" if want_win else "loses"
        return _at_least(name, observed, required, f"M1(phi={phi:.4g}) {outcome} at N={n}")
    check.__name__ = name
    return check


def check_physicality_band(n_seeds: int = 5) -> CheckResult:
    rho = _rho_actual()
    target = target_state(2, 0.0)
    low, high = REFERENCE_VALUES["physical_fraction_band"]
    fractions = []
    for n in (100, 1000, 10000):
        per_seed = [
            physicality_map(
                model_m2(target, pseudostate_from_counts(simulate_dataset(rho, collective_pauli_design(), n, seed)))
            ).physical_fraction
            for seed in range(n_seeds)
        ]
        fractions.append(float(np.mean(per_seed)))
    in_band = all(low <= f <= high for f in fractions)
    growing = all(b >= a for a, b in zip(fractions, fractions[1:]))
    return CheckResult(
        name="physicality_fraction_band",
        passed=in_band and growing,
        value=fractions[-1],
        expected=None,
        tolerance=f"[{low}, {high}], non-decreasing in N",
        detail="fractions at N=100,1000,10000: " + ", ".join(f"{f:.4f}" for f in fractions),
    )


def check_posterior_coverage(n_seeds: int = 50) -> CheckResult:
    rho = _rho_actual()
    family = model_m1(target_state(2, 0.0))
    covered = 0
    for seed in range(n_seeds):
        data = simulate_dataset(rho, collective_pauli_design(), 1000, seed)
        summary = negativity_posterior(posterior_over_params(family, data), family, "N0").summary
        covered += summary.contains(REFERENCE_VALUES["n0"])
    return _at_least("posterior_n0_coverage", covered / n_seeds, 0.9)


def check_fpm_bound_dominates(n_datasets: int = 200) -> CheckResult:
    worst = -math.inf
    target = dicke_state(2)
    family = model_m1(target)
    rng = np.random.default_rng(2024)
    for index in range(n_datasets):
        rho = random_density_matrix(index, rank=int(rng.integers(1, 17)))
        design = product_sic_design() if index % 2 else collective_pauli_design()
        data = simulate_dataset(rho, design, 200, index)
        bound = fpm_loglik_upper_bound(data)
        for q in np.linspace(0.0, 1.0, 11):
            worst = max(worst, log_likelihood(family, [q], data) - bound)
    return CheckResult(
        name="fpm_bound_dominates",
        passed=worst <= 1e-9,
        value=worst,
        expected=0.0,
        tolerance="<=1e-9",
    )


def check_rhor_monotone(n_runs: int = 20) -> CheckResult:
    worst = 0.0
    for seed in range(n_runs):
        data = simulate_dataset(random_density_matrix(seed), product_sic_design(), 500, seed)
        history = np.asarray(rhor_iterate(data, max_iters=100).log_likelihoods)
        worst = min(worst, float(np.min(np.diff(history), initial=0.0)))
    return CheckResult(
        name="rhor_likelihood_monotone",
        passed=worst >= 0.0,
        value=worst,
        expected=0.0,
        tolerance=">=0",
    )


def checks_for(level: str) -> List[Check]:
    if level not in LEVELS:
        raise ValueError(f"Unknown verification level '{level}', expected one of {LEVELS}")
    checks: List[Check] = _negativity_checks() + [
        check_witness_threshold,
        check_witness_threshold_closed_form,
        check_witness_phase_crossing,
        check_witness_mixture_positive,
        check_witness_trace,
        check_aic_identities,
        check_povm_structure,
        check_exact_fit,
        make_schmidt_check(10),
    ]
    if level == "full":
        checks += [
            make_sign_check("tomography_m1_phi0_wins_N10000", product_sic_design, 0.0, 10000, True, 0.95),
            make_sign_check("tomography_m1_phi_pi2_loses_N10000", product_sic_design, math.pi / 2, 10000, False, 0.95),
            make_sign_check("tomography_m1_phi_pi4_wins_N1000", product_sic_design, math.pi / 4, 1000, True, 0.80),
            make_sign_check("witness_m1_phi0_wins_N1000", collective_pauli_design, 0.0, 1000, True, 0.90),
            make_sign_check("witness_m1_phi_pi3_loses_N1000", collective_pauli_design, math.pi / 3, 1000, False, 0.90),
            check_physicality_band,
            check_posterior_coverage,
            check_fpm_bound_dominates,
            check_rhor_monotone,
            make_schmidt_check(100),
        ]
    return checks


def verify(level: str = "quick", checks: Optional[List[Check]] = None) -> VerificationReport:
    """Run every check of ``level``; exceptions become failed entries."""
    report = VerificationReport(level=level)
    for check in checks if checks is not None else checks_for(level):
        started = time.perf_counter()
        try:
            result = check()
        except Exception as exc:
            name = getattr(check, "__name__", "check")
            _LOG.error("Check %s raised: %s", name, exc)
            result = CheckResult(name=name, passed=False, detail=f"{type(exc).__name__}: {exc}")
        result.seconds = time.perf_counter() - started
        _LOG.info("%s %s (%.2fs)", "PASS" if result.passed else "FAIL", result.name, result.seconds)
        report.checks.append(result)
    return report
