"""
Likelihoods, maximum-likelihood fits and AIC ranking.

The full-parameter model (FPM) is never built as a state: its maximized
likelihood is bounded from above by the likelihood of the observed
frequencies themselves, and that bound is what the few-parameter models are
ranked against.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from itertools import product
from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from config_manager import get_fitting_config, get_rhor_config

from .errors import (
    AllPointsUnphysical,
    DesignMismatch,
    EmptyDataset,
    OddShotCount,
    SampleTooSmall,
    TomographyError,
)
from .measurement import (
    DESIGN_SIC,
    DESIGN_WITNESS,
    Dataset,
    MeasurementDesign,
    split_dataset,
    stack_probabilities,
)
from .models import FitResult, FpmBound, RankingReport
from .qcore import DensityMatrix, as_array
from .states import ModelFamily, PureState, model_m2, pseudostate_from_counts

_LOG = logging.getLogger("aic_tomography.inference")

UNPHYSICAL_LOGLIK = float("-inf")
_PENALTY = 1e30
_GRID_CHUNK = 2048


# ---------------------------------------------------------------------------
# Likelihoods
# ---------------------------------------------------------------------------

def _check_design(family: ModelFamily, dataset: Dataset) -> None:
    if family.dim != dataset.design.dim:
        raise DesignMismatch(
            f"{family.label} has dimension {family.dim}, design '{dataset.design_id}' has {dataset.design.dim}"
        )


def multinomial_log_likelihood(
    probabilities: Sequence[np.ndarray],
    counts: Sequence[np.ndarray],
) -> float:
    """
    ``sum_settings sum_k n_k ln p_k`` with 0 ln(.) = 0, compensated summation.

    Returns -inf if an observed outcome has ``p_k <= 0``.
    """
    terms: List[float] = []
    for probs, vector in zip(probabilities, counts):
        observed = np.asarray(vector) > 0
        p_obs = np.asarray(probs, dtype=float)[observed]
        if np.any(p_obs <= 0.0):
            return UNPHYSICAL_LOGLIK
        terms.extend((np.asarray(vector, dtype=float)[observed] * np.log(p_obs)).tolist())
    return math.fsum(terms)


def state_log_likelihood(rho, dataset: Dataset) -> float:
    """Log-likelihood of a fixed state (density matrix or pseudostate)."""
    stack = as_array(rho)[None, :, :]
    probs = [stack_probabilities(stack, setting.povm)[0] for setting, _ in dataset.items()]
    return multinomial_log_likelihood(probs, dataset.counts)


def log_likelihood(family: ModelFamily, theta: Sequence[float], dataset: Dataset) -> float:
    """
    Log-likelihood of ``family`` at ``theta``.

    Points where a pseudostate-based family leaves the PSD cone are not part
    of the model and score -inf.
    """
    _check_design(family, dataset)
    stack = family.density_stack(np.asarray(theta, dtype=float)[None, :])
    if not family.physical_mask(stack)[0]:
        return UNPHYSICAL_LOGLIK
    probs = [stack_probabilities(stack, setting.povm)[0] for setting, _ in dataset.items()]
    return multinomial_log_likelihood(probs, dataset.counts)


def grid_log_likelihoods(family: ModelFamily, points: np.ndarray, dataset: Dataset) -> np.ndarray:
    """Vectorized log-likelihood at every row of ``points``; -inf where excluded."""
    _check_design(family, dataset)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    result = np.empty(points.shape[0])
    settings = list(dataset.items())
    for start in range(0, points.shape[0], _GRID_CHUNK):
        chunk = points[start:start + _GRID_CHUNK]
        stack = family.density_stack(chunk)
        total = np.zeros(chunk.shape[0])
        invalid = ~family.physical_mask(stack)
        for setting, vector in settings:
            observed = np.asarray(vector) > 0
            if not observed.any():
                continue
            probs = stack_probabilities(stack, setting.povm)[:, observed]
            bad = np.any(probs <= 0.0, axis=1)
            invalid |= bad
            safe = np.where(probs > 0.0, probs, 1.0)
            total += np.log(safe) @ np.asarray(vector, dtype=float)[observed]
        total[invalid] = UNPHYSICAL_LOGLIK
        result[start:start + chunk.shape[0]] = total
    return result


def fpm_loglik_upper_bound(dataset: Dataset) -> float:
    """``sum n_k ln(n_k / N_setting)``: the likelihood of the observed frequencies."""
    terms: List[float] = []
    for label, vector in zip(dataset.labels, dataset.counts):
        shots = float(np.sum(vector))
        if shots <= 0:
            raise EmptyDataset(f"Setting '{label}' holds no shots")
        observed = np.asarray(vector, dtype=float)
        observed = observed[observed > 0]
        terms.extend((observed * np.log(observed / shots)).tolist())
    return math.fsum(terms)


def fpm_parameter_count(design: MeasurementDesign) -> int:
    """Independent outcome frequencies: ``sum_settings (outcomes - 1)``."""
    return sum(setting.povm.n_outcomes - 1 for setting in design.settings)


def aic(loglik: float, k: int) -> float:
    """``-2 L_M + 2K``."""
    return -2.0 * loglik + 2.0 * k


def aicc(loglik: float, k: int, n: float) -> float:
    """``AIC + 2K(K+1)/(N-K-1)``."""
    if n <= k + 1:
        raise SampleTooSmall(f"AICc needs N > K + 1 (N={n}, K={k})")
    return aic(loglik, k) + 2.0 * k * (k + 1) / (n - k - 1)


def _aicc_or_none(loglik: float, k: int, n: float) -> Optional[float]:
    try:
        return aicc(loglik, k, n)
    except SampleTooSmall:
        return None


# ---------------------------------------------------------------------------
# Maximum-likelihood fitting
# ---------------------------------------------------------------------------

def _axis_grid(lower: float, upper: float, step: float, periodic: bool) -> np.ndarray:
    if periodic:
        n = int(round((upper - lower) / step))
        return lower + step * np.arange(n)
    n = int(round((upper - lower) / step))
    return np.linspace(lower, upper, n + 1)


def parameter_grid(family: ModelFamily, grid_step: float, phi_step: float) -> np.ndarray:
    """Cartesian grid over the family's parameter box, ``(n, K)``."""
    axes = []
    for name, (lower, upper) in zip(family.param_names, family.bounds()):
        if name == "phi":
            axes.append(_axis_grid(lower, upper, phi_step, periodic=True))
        else:
            axes.append(_axis_grid(lower, upper, grid_step, periodic=False))
    return np.array(list(product(*axes)), dtype=float).reshape(-1, len(axes))


def fit_mle(
    family: ModelFamily,
    dataset: Dataset,
    grid_step: Optional[float] = None,
    refine_tol: Optional[float] = None,
    phi_step: Optional[float] = None,
) -> FitResult:
    """
    Coarse grid scan over the parameter box, then cyclic per-axis bounded
    refinement around the best grid point until no parameter moves by more
    than ``refine_tol``.
    """
    config = get_fitting_config()
    grid_step = config.grid_step if grid_step is None else grid_step
    refine_tol = config.refine_tol if refine_tol is None else refine_tol
    phi_step = config.phi_step if phi_step is None else phi_step
    if not 0.0 < grid_step <= 0.05:
        raise TomographyError(f"grid_step must lie in (0, 0.05], got {grid_step}")

    points = parameter_grid(family, grid_step, phi_step)
    values = grid_log_likelihoods(family, points, dataset)
    if not np.any(np.isfinite(values)):
        raise AllPointsUnphysical(f"No grid point of {family.label} is physical for this dataset")

    best_index = int(np.argmax(values))
    theta = points[best_index].copy()
    best_value = float(log_likelihood(family, theta, dataset))

    steps = [phi_step if name == "phi" else grid_step for name in family.param_names]
    bounds = family.bounds()
    for cycle in range(config.max_refine_cycles):
        previous = theta.copy()
        for axis, name in enumerate(family.param_names):
            lower = theta[axis] - steps[axis]
            upper = theta[axis] + steps[axis]
            if name != "phi":
                lower = max(lower, bounds[axis][0])
                upper = min(upper, bounds[axis][1])
            if upper - lower <= refine_tol:
                continue

            def objective(x: float, axis: int = axis) -> float:
                trial = theta.copy()
                trial[axis] = x
                value = log_likelihood(family, trial, dataset)
                return -value if math.isfinite(value) else _PENALTY

            result = minimize_scalar(
                objective, bounds=(lower, upper), method="bounded",
                options={"xatol": refine_tol},
            )
            candidate = theta.copy()
            candidate[axis] = float(result.x)
            value = log_likelihood(family, candidate, dataset)
            if math.isfinite(value) and value >= best_value:
                theta, best_value = candidate, value
        if np.max(np.abs(theta - previous)) < refine_tol:
            _LOG.debug("%s refined in %d cycle(s)", family.label, cycle + 1)
            break
    else:
        _LOG.warning("%s refinement stopped after %d cycles", family.label, config.max_refine_cycles)

    if family.vary_phase:
        theta[-1] = theta[-1] % (2.0 * np.pi)

    k = family.param_count
    n = dataset.total_shots
    return FitResult(
        name=family.label,
        param_names=list(family.param_names),
        theta_hat=[float(x) for x in theta],
        loglik=best_value,
        K=k,
        n_samples=n,
        aic=aic(best_value, k),
        aicc=_aicc_or_none(best_value, k, n),
    )


def rank_models(
    families: Sequence[ModelFamily],
    dataset: Dataset,
    fpm_K: Optional[int] = None,
    **fit_options,
) -> RankingReport:
    """
    Fit every family and compare its AIC with the FPM bound.

    ``delta_aic = AIC(model) - AIC(FPM)``; a negative value (positive
    ``neg_delta_aic``) means the simple model is preferred.
    """
    fpm_K = fpm_parameter_count(dataset.design) if fpm_K is None else fpm_K
    n = dataset.total_shots
    bound = fpm_loglik_upper_bound(dataset)
    fpm = FpmBound(K=fpm_K, loglik_bound=bound, aic=aic(bound, fpm_K), aicc=_aicc_or_none(bound, fpm_K, n))

    fits = [fit_mle(family, dataset, **fit_options) for family in families]
    delta_aic = [fit.aic - fpm.aic for fit in fits]
    delta_aicc = [
        None if fit.aicc is None or fpm.aicc is None else fit.aicc - fpm.aicc
        for fit in fits
    ]
    for fit, delta in zip(fits, delta_aic):
        _LOG.debug("%s: L=%.4f AIC=%.4f -dAIC=%.4f", fit.name, fit.loglik, fit.aic, -delta)
    return RankingReport(models=fits, fpm=fpm, delta_aic=delta_aic, delta_aicc=delta_aicc)


# ---------------------------------------------------------------------------
# Approximate MLE state (RrhoR)
# ---------------------------------------------------------------------------

@dataclass
class RhoRTrace:
    """Result of the fixed-point iteration with its likelihood history."""
    state: DensityMatrix
    log_likelihoods: List[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    diluted_steps: int = 0


def rhor_iterate(
    train: Dataset,
    max_iters: Optional[int] = None,
    tol: Optional[float] = None,
) -> RhoRTrace:
    """
    ``rho <- N[R rho R]`` with ``R = sum_k (n_k/N) / p_k(rho) E_k``, from I/D.

    When the plain step would lower the likelihood, the diluted step
    ``(I + tR) rho (I + tR)`` is taken with t halved until it does not.
    Stops when the gain drops below ``tol`` or after ``max_iters``.
    """
    config = get_rhor_config()
    max_iters = config.max_iters if max_iters is None else max_iters
    tol = config.tol if tol is None else tol

    total = train.total_shots
    if total <= 0:
        raise EmptyDataset("RrhoR needs at least one shot")

    effects, weights, flat = [], [], []
    for setting, vector in train.items():
        observed = np.asarray(vector) > 0
        effects.append(setting.povm.effects[observed])
        flat.append(setting.povm.flat_transposed()[observed])
        weights.append(np.asarray(vector, dtype=float)[observed] / total)
    effects = np.concatenate(effects)
    flat = np.concatenate(flat)
    weights = np.concatenate(weights)
    counts = weights * total
    dim = effects.shape[1]
    identity = np.eye(dim, dtype=complex)

    def loglik(rho: np.ndarray) -> float:
        probs = np.real(flat @ rho.reshape(-1))
        if np.any(probs <= 0.0):
            return UNPHYSICAL_LOGLIK
        return math.fsum((counts * np.log(probs)).tolist())

    def step(rho: np.ndarray, left: np.ndarray) -> np.ndarray:
        nxt = left @ rho @ left.conj().T
        nxt = 0.5 * (nxt + nxt.conj().T)
        return nxt / np.real(np.trace(nxt))

    rho = identity / dim
    current = loglik(rho)
    trace = RhoRTrace(state=DensityMatrix(rho), log_likelihoods=[current])

    for iteration in range(1, max_iters + 1):
        probs = np.real(flat @ rho.reshape(-1))
        r_op = np.tensordot(weights / probs, effects, axes=1)
        candidate = step(rho, r_op)
        value = loglik(candidate)
        if not value >= current:
            t = 1.0
            while t > 1e-12:
                candidate = step(rho, identity + t * r_op)
                value = loglik(candidate)
                if value >= current:
                    break
                t *= 0.5
            else:
                _LOG.warning("RrhoR stalled at iteration %d (no ascent direction)", iteration)
                trace.converged = True
                break
            trace.diluted_steps += 1
        if value < current:
            raise TomographyError("RrhoR likelihood decreased")
        gain = value - current
        rho, current = candidate, value
        trace.log_likelihoods.append(current)
        trace.iterations = iteration
        if gain < tol:
            trace.converged = True
            break
    else:
        _LOG.warning("RrhoR reached max_iters=%d (last gain above %.1e)", max_iters, tol)

    trace.state = DensityMatrix(rho)
    _LOG.debug(
        "RrhoR finished after %d iterations, L=%.6f, %d diluted step(s)",
        trace.iterations, current, trace.diluted_steps,
    )
    return trace


def approx_mle_state(
    train: Dataset,
    max_iters: Optional[int] = None,
    tol: Optional[float] = None,
) -> DensityMatrix:
    """Approximate maximum-likelihood state of the training data."""
    return rhor_iterate(train, max_iters=max_iters, tol=tol).state


# ---------------------------------------------------------------------------
# Cross modeling
# ---------------------------------------------------------------------------

def _require_even(dataset: Dataset) -> None:
    for label, shots in zip(dataset.labels, dataset.shots_per_setting):
        if dataset.is_integral and int(shots) % 2:
            raise OddShotCount(f"Setting '{label}' has an odd shot count ({int(shots)})")


def build_cross_model(train: Dataset, target: PureState, design: str) -> ModelFamily:
    """M2 family whose base is derived from the training half."""
    if design == DESIGN_SIC:
        base = approx_mle_state(train)
    elif design == DESIGN_WITNESS:
        base = pseudostate_from_counts(train)
    else:
        raise TomographyError(f"Unknown cross-modeling design: {design}")
    return model_m2(target, base)


def cross_model_protocol(
    dataset: Dataset,
    target: PureState,
    design: str,
    seed: int,
    **fit_options,
) -> RankingReport:
    """
    Split once into training and validation halves, build M2 from the
    training half and rank it against the FPM on the validation half only.
    """
    if dataset.design_id != design:
        raise DesignMismatch(f"Dataset design '{dataset.design_id}' does not match '{design}'")
    _require_even(dataset)
    train, validation = split_dataset(dataset, 0.5, seed)
    family = build_cross_model(train, target, design)
    return rank_models([family], validation, **fit_options)


def compare_m1_m2(
    validation: Dataset,
    m1: ModelFamily,
    m2: ModelFamily,
    **fit_options,
) -> float:
    """``AIC(M2) - AIC(M1)`` on one shared validation set."""
    fit_1 = fit_mle(m1, validation, **fit_options)
    fit_2 = fit_mle(m2, validation, **fit_options)
    return fit_2.aic - fit_1.aic
