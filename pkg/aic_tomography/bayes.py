"""
Grid posteriors over model parameters and their pushforward to the
generalized negativities.

The prior is uniform on the unit box; the phase is always held fixed.
Points where a pseudostate-based model is not PSD are excluded before
normalization.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from config_manager import get_posterior_config

from .entanglement import MONOTONES, generalized_negativities_stack
from .errors import AllZeroWeights, TomographyError
from .inference import grid_log_likelihoods, parameter_grid
from .measurement import Dataset
from .models import PosteriorSummary
from .states import ModelFamily

_LOG = logging.getLogger("aic_tomography.bayes")

_CHUNK = 2048


def _physical_points(family: ModelFamily, points: np.ndarray) -> np.ndarray:
    mask = np.empty(points.shape[0], dtype=bool)
    for start in range(0, points.shape[0], _CHUNK):
        chunk = points[start:start + _CHUNK]
        mask[start:start + chunk.shape[0]] = family.physical_mask(family.density_stack(chunk))
    return mask


@dataclass
class PosteriorGrid:
    """Normalized weights over a parameter grid."""

    param_names: Tuple[str, ...]
    points: np.ndarray
    loglik: np.ndarray
    weights: np.ndarray
    excluded: np.ndarray

    @classmethod
    def point_mass(cls, family: ModelFamily, theta: Sequence[float]) -> "PosteriorGrid":
        point = np.asarray(theta, dtype=float)[None, :]
        return cls(
            param_names=family.param_names,
            points=point,
            loglik=np.zeros(1),
            weights=np.ones(1),
            excluded=np.zeros(1, dtype=bool),
        )

    @property
    def retained(self) -> np.ndarray:
        return self.weights > 0.0

    def mean(self) -> np.ndarray:
        return self.weights @ self.points

    def mode(self) -> np.ndarray:
        return self.points[int(np.argmax(self.weights))]

    def variance(self) -> np.ndarray:
        centred = self.points - self.mean()
        return self.weights @ (centred ** 2)

    def marginal(self, name: str) -> Tuple[np.ndarray, np.ndarray]:
        """Distinct values of one parameter and the weight they carry."""
        column = self.points[:, self.param_names.index(name)]
        values, inverse = np.unique(column, return_inverse=True)
        return values, np.bincount(inverse, weights=self.weights, minlength=values.size)


def posterior_over_params(
    family: ModelFamily,
    dataset: Dataset,
    grid_step: Optional[float] = None,
) -> PosteriorGrid:
    """
    Uniform prior times likelihood on a regular grid of step ``grid_step``.

    Raises:
        AllZeroWeights: every grid point is unphysical or has zero likelihood
    """
    if family.vary_phase:
        raise TomographyError("Posteriors are computed at a fixed phase")
    grid_step = get_posterior_config().grid_step if grid_step is None else grid_step
    if not 0.0 < grid_step <= 0.05:
        raise TomographyError(f"grid_step must lie in (0, 0.05], got {grid_step}")

    points = parameter_grid(family, grid_step, grid_step)
    excluded = ~_physical_points(family, points)
    loglik = grid_log_likelihoods(family, points, dataset)
    usable = np.isfinite(loglik) & ~excluded
    if not usable.any():
        raise AllZeroWeights(f"Every grid point of {family.label} is excluded")

    log_weights = np.where(usable, loglik, -np.inf)
    weights = np.exp(log_weights - logsumexp(log_weights[usable]))
    weights[~usable] = 0.0
    weights /= weights.sum()
    _LOG.debug(
        "%s posterior: %d points, %d excluded, mode %s",
        family.label, points.shape[0], int(excluded.sum()), points[int(np.argmax(weights))],
    )
    return PosteriorGrid(
        param_names=family.param_names,
        points=points,
        loglik=loglik,
        weights=weights,
        excluded=excluded,
    )


@dataclass
class NegativityPosterior:
    """Weighted distribution of one monotone over the retained grid points."""

    which: str
    values: np.ndarray
    weights: np.ndarray
    bin_edges: np.ndarray
    histogram: np.ndarray
    summary: PosteriorSummary

    def histogram_rows(self) -> List[Tuple[float, float, float]]:
        return [
            (float(left), float(right), float(weight))
            for left, right, weight in zip(self.bin_edges[:-1], self.bin_edges[1:], self.histogram)
        ]


def weighted_interval(values: np.ndarray, weights: np.ndarray, mass: float) -> Tuple[float, float]:
    """Central (equal-tail) interval holding ``mass`` of the weight."""
    order = np.argsort(values, kind="stable")
    sorted_values = values[order]
    cdf = np.cumsum(weights[order])
    cdf /= cdf[-1]
    tail = 0.5 * (1.0 - mass)
    low = sorted_values[min(int(np.searchsorted(cdf, tail, side="left")), len(cdf) - 1)]
    high = sorted_values[min(int(np.searchsorted(cdf, 1.0 - tail, side="left")), len(cdf) - 1)]
    return float(low), float(high)


def negativity_posterior(
    grid: PosteriorGrid,
    family: ModelFamily,
    which: str = "N0",
    n_bins: Optional[int] = None,
    credible_mass: Optional[float] = None,
) -> NegativityPosterior:
    """Push the parameter posterior forward to N0, N1 or N2."""
    if which not in MONOTONES:
        raise TomographyError(f"Unknown monotone '{which}', expected one of {MONOTONES}")
    config = get_posterior_config()
    n_bins = config.n_bins if n_bins is None else n_bins
    credible_mass = config.credible_mass if credible_mass is None else credible_mass

    retained = grid.retained
    points = grid.points[retained]
    weights = grid.weights[retained]
    column = MONOTONES.index(which)
    values = np.empty(points.shape[0])
    for start in range(0, points.shape[0], _CHUNK):
        chunk = points[start:start + _CHUNK]
        values[start:start + chunk.shape[0]] = generalized_negativities_stack(
            family.density_stack(chunk)
        )[:, column]

    upper = max(1.0, float(values.max()))
    histogram, edges = np.histogram(values, bins=n_bins, range=(0.0, upper), weights=weights)
    low, high = weighted_interval(values, weights, credible_mass)
    summary = PosteriorSummary(
        which=which,
        mean=float(weights @ values),
        ci_low=low,
        ci_high=high,
        credible_mass=credible_mass,
    )
    return NegativityPosterior(
        which=which,
        values=values,
        weights=weights,
        bin_edges=edges,
        histogram=histogram,
        summary=summary,
    )


@dataclass
class PhysicalityMap:
    """PSD flags of an (epsilon, q) family over the unit square."""

    epsilon: np.ndarray
    q: np.ndarray
    physical: np.ndarray

    @property
    def physical_fraction(self) -> float:
        return float(np.mean(self.physical))

    def rows(self) -> List[Tuple[float, float, int]]:
        return [
            (float(e), float(q), int(self.physical[i, j]))
            for i, e in enumerate(self.epsilon)
            for j, q in enumerate(self.q)
        ]


def physicality_map(family: ModelFamily, grid_step: float = 0.01) -> PhysicalityMap:
    """Where on the (epsilon, q) grid the family is a physical state."""
    if family.param_names != ("epsilon", "q"):
        raise TomographyError(f"{family.label} is not an (epsilon, q) family")
    points = parameter_grid(family, grid_step, grid_step)
    n = int(round(1.0 / grid_step)) + 1
    axis = np.linspace(0.0, 1.0, n)
    mask = _physical_points(family, points).reshape(n, n)
    result = PhysicalityMap(epsilon=axis, q=axis, physical=mask)
    _LOG.debug("%s physical fraction %.4f", family.label, result.physical_fraction)
    return result
