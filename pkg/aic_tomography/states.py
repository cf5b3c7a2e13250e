"""
State construction: Dicke states, phase-misspecified targets, white-noise
mixtures, the few-parameter model families and the witness pseudostate.

Qubit 0 is the leftmost ket symbol and the most significant bit of the
basis index, so "the first qubit carries the wrong phase" means the phase
multiplies every basis state with index >= 8.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import AlphaOutOfRange, MissingSetting, TomographyError
from .qcore import (
    HERMITIAN_TOL,
    PSD_TOL,
    DensityMatrix,
    TraceOneMatrix,
    as_array,
    min_eigenvalues,
    pauli_word,
)

_LOG = logging.getLogger("aic_tomography.states")

N_QUBITS = 4
DIM = 2 ** N_QUBITS
NORM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PureState:
    """Unit-norm ket; ``excitations``/``phi`` record how a target was built."""

    amplitudes: np.ndarray
    excitations: Optional[int] = None
    phi: float = 0.0

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise TomographyError(f"Pure state must have unit norm, got {norm:.15g}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def overlap(self, other: "PureState") -> complex:
        """``<self|other>``."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def density_matrix(self) -> DensityMatrix:
        return DensityMatrix(self.projector())


class Pseudostate(TraceOneMatrix):
    """Trace-one Hermitian matrix that may have negative eigenvalues."""


def _weight_indices(n_excitations: int, n_qubits: int = N_QUBITS) -> List[int]:
    return [i for i in range(2 ** n_qubits) if bin(i).count("1") == n_excitations]


def _check_excitations(n_excitations: int) -> None:
    if n_excitations not in (1, 2):
        raise TomographyError(f"Only one or two excitations are supported, got {n_excitations}")


def _split_target_amplitudes(n_excitations: int) -> Tuple[np.ndarray, np.ndarray]:
    """Dicke amplitudes split into the qubit-0 ground and excited halves."""
    _check_excitations(n_excitations)
    indices = _weight_indices(n_excitations)
    value = 1.0 / np.sqrt(len(indices))
    ground = np.zeros(DIM, dtype=complex)
    excited = np.zeros(DIM, dtype=complex)
    first_qubit_bit = DIM // 2
    for index in indices:
        if index & first_qubit_bit:
            excited[index] = value
        else:
            ground[index] = value
    return ground, excited


def dicke_state(n_excitations: int) -> PureState:
    """Four-qubit Dicke state with equal real amplitudes on all weight-k basis states."""
    ground, excited = _split_target_amplitudes(n_excitations)
    return PureState(ground + excited, excitations=n_excitations, phi=0.0)


def target_state(n_excitations: int, phi: float) -> PureState:
    """Dicke state whose first-qubit-excited terms carry the phase ``e^{i phi}``."""
    ground, excited = _split_target_amplitudes(n_excitations)
    return PureState(ground + np.exp(1j * phi) * excited, excitations=n_excitations, phi=float(phi))


def target_projectors(n_excitations: int, phis: np.ndarray) -> np.ndarray:
    """Stack of ``|target(phi)><target(phi)|`` for every phi."""
    ground, excited = _split_target_amplitudes(n_excitations)
    phases = np.exp(1j * np.asarray(phis, dtype=float))
    kets = ground[None, :] + phases[:, None] * excited[None, :]
    return kets[:, :, None] * kets[:, None, :].conj()


def depolarize(psi: PureState, alpha: float) -> DensityMatrix:
    """``(1 - alpha)|psi><psi| + alpha * I/D``."""
    if not 0.0 <= alpha <= 1.0:
        raise AlphaOutOfRange(f"alpha must lie in [0, 1], got {alpha}")
    dim = psi.dim
    return DensityMatrix((1.0 - alpha) * psi.projector() + alpha * np.eye(dim, dtype=complex) / dim)


def random_pure_state(seed, n_qubits: int = N_QUBITS) -> PureState:
    """Haar-random ket from a seeded generator."""
    rng = np.random.default_rng(seed)
    amps = rng.standard_normal(2 ** n_qubits) + 1j * rng.standard_normal(2 ** n_qubits)
    return PureState(amps / np.linalg.norm(amps))


def random_density_matrix(seed, n_qubits: int = N_QUBITS, rank: Optional[int] = None) -> DensityMatrix:
    """Ginibre-random mixed state ``G G^dagger / Tr``."""
    rng = np.random.default_rng(seed)
    dim = 2 ** n_qubits
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho / np.real(np.trace(rho)))


class ModelKind(str, Enum):
    M1 = "M1"
    M2 = "M2"


@dataclass(frozen=True, eq=False)
class ModelFamily:
    """
    Few-parameter map from a parameter vector to a trace-one matrix.

    M1: theta = (q[, phi]); rho = (1-q)|target><target| + q I/D
    M2: theta = (epsilon, q[, phi]);
        rho = (1-eps)[(1-q) base + q |target><target|] + eps I/D
    With ``vary_phase`` the target phase becomes the last parameter.
    """

    kind: ModelKind
    target: PureState
    base: Optional[TraceOneMatrix] = None
    vary_phase: bool = False
    label: str = ""
    _mixed: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind == ModelKind.M2 and self.base is None:
            raise TomographyError("M2 families need a base state")
        if self.vary_phase and self.target.excitations is None:
            raise TomographyError("A variable phase requires a target built by target_state()")
        if self.base is not None and self.base.dim != self.target.dim:
            raise TomographyError("Base and target dimensions differ")
        object.__setattr__(self, "_mixed", np.eye(self.target.dim, dtype=complex) / self.target.dim)
        if not self.label:
            object.__setattr__(self, "label", self._default_label())

    def _default_label(self) -> str:
        phase = "phi" if self.vary_phase else f"phi={self.phi:.6g}"
        base = ""
        if self.kind == ModelKind.M2:
            base = ",base=observation" if self.has_pseudostate_base else ",base=mle"
        return f"{self.kind.value}({phase}{base})"

    @property
    def phi(self) -> float:
        return self.target.phi

    @property
    def has_pseudostate_base(self) -> bool:
        return isinstance(self.base, Pseudostate)

    @property
    def param_names(self) -> Tuple[str, ...]:
        names = ("q",) if self.kind == ModelKind.M1 else ("epsilon", "q")
        return names + (("phi",) if self.vary_phase else ())

    @property
    def param_count(self) -> int:
        return len(self.param_names)

    @property
    def dim(self) -> int:
        return self.target.dim

    def bounds(self) -> List[Tuple[float, float]]:
        limits = [(0.0, 1.0)] * (self.param_count - int(self.vary_phase))
        if self.vary_phase:
            limits.append((0.0, 2.0 * np.pi))
        return limits

    def _projectors(self, points: np.ndarray) -> np.ndarray:
        if self.vary_phase:
            return target_projectors(self.target.excitations, points[:, -1])
        return self.target.projector()[None, :, :]

    def density_stack(self, points: np.ndarray) -> np.ndarray:
        """Evaluate the family at every row of ``points`` -> ``(n, D, D)``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.param_count:
            raise TomographyError(
                f"{self.label} expects {self.param_count} parameters, got {points.shape[1]}"
            )
        projectors = self._projectors(points)
        if self.kind == ModelKind.M1:
            q = points[:, 0][:, None, None]
            return (1.0 - q) * projectors + q * self._mixed
        eps = points[:, 0][:, None, None]
        q = points[:, 1][:, None, None]
        base = as_array(self.base)[None, :, :]
        return (1.0 - eps) * ((1.0 - q) * base + q * projectors) + eps * self._mixed

    def physical_mask(self, stack: np.ndarray) -> np.ndarray:
        """PSD flags for a density stack; only pseudostate bases can leave the PSD cone."""
        if not self.has_pseudostate_base:
            return np.ones(stack.shape[0], dtype=bool)
        return min_eigenvalues(stack) >= -PSD_TOL

    def evaluate(self, theta: Sequence[float]) -> TraceOneMatrix:
        """Trace-one Hermitian output; a Pseudostate when the base is one."""
        matrix = self.density_stack(np.asarray(theta, dtype=float)[None, :])[0]
        if self.has_pseudostate_base:
            return Pseudostate(matrix)
        return DensityMatrix(matrix)

    def is_physical(self, theta: Sequence[float]) -> bool:
        stack = self.density_stack(np.asarray(theta, dtype=float)[None, :])
        return bool(self.physical_mask(stack)[0])

    def with_phase(self, phi: float) -> "ModelFamily":
        """Same family with a fixed target phase."""
        if self.target.excitations is None:
            raise TomographyError("Target was not built by target_state(); cannot rephase")
        return ModelFamily(
            kind=self.kind,
            target=target_state(self.target.excitations, phi),
            base=self.base,
            vary_phase=False,
        )


def model_m1(target: PureState, vary_phase: bool = False) -> ModelFamily:
    """White-noise family around ``target``: K=1, or K=2 with a variable phase."""
    return ModelFamily(kind=ModelKind.M1, target=target, vary_phase=vary_phase)


def model_m2(
    target: PureState,
    base: Union[DensityMatrix, Pseudostate],
    vary_phase: bool = False,
) -> ModelFamily:
    """Two-parameter family mixing a data-derived base with the target and white noise."""
    if abs(np.trace(base.matrix) - 1.0) > HERMITIAN_TOL:
        raise TomographyError("Base must have unit trace")
    return ModelFamily(kind=ModelKind.M2, target=target, base=base, vary_phase=vary_phase)


# ---------------------------------------------------------------------------
# Witness pseudostate
# ---------------------------------------------------------------------------

def correlator_supports(n_qubits: int = N_QUBITS) -> List[Tuple[int, ...]]:
    """All non-empty qubit subsets, smallest first."""
    return [subset for size in range(1, n_qubits + 1) for subset in combinations(range(n_qubits), size)]


def support_word(axis: str, support: Sequence[int], n_qubits: int = N_QUBITS) -> str:
    return "".join(axis if qubit in support else "I" for qubit in range(n_qubits))


def pseudostate_from_counts(dataset) -> Pseudostate:
    """
    Trace-one matrix reproducing every measured collective correlator.

    Each correlator of the all-x (all-y) setting becomes the coefficient
    ``<P>/16`` of its Pauli word; unmeasured words get zero and the identity
    keeps its fixed 1/16.
    """
    from .measurement import X_SETTING, Y_SETTING, empirical_correlators

    labels = dataset.labels
    for required in (X_SETTING, Y_SETTING):
        if required not in labels:
            raise MissingSetting(f"Dataset lacks the '{required}' setting")

    n_qubits = N_QUBITS
    dim = 2 ** n_qubits
    matrix = np.eye(dim, dtype=complex) / dim
    for setting, axis in ((X_SETTING, "X"), (Y_SETTING, "Y")):
        counts = dataset.counts_for(setting)
        if counts.sum() <= 0:
            raise MissingSetting(f"Setting '{setting}' holds no shots")
        for support, value in empirical_correlators(counts, n_qubits).items():
            matrix = matrix + (value / dim) * pauli_word(support_word(axis, support, n_qubits))
    _LOG.debug("Built observation pseudostate from %s shots", dataset.total_shots)
    return Pseudostate(matrix)
