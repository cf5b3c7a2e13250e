"""
Bipartite negativities, the generalized four-qubit negativities and the
collective-spin witness ``W = 7/2 + sqrt(3) - Jx^2 - Jy^2``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence, Tuple

import numpy as np
from scipy.optimize import bisect

from .errors import InvalidPartition, NoSignChange, PseudostateRejected
from .qcore import (
    MatrixLike,
    as_array,
    hermitian_eigenvalues,
    mask_from_subset,
    n_qubits_of,
    partial_transpose,
    pauli_word,
)
from .states import N_QUBITS, Pseudostate, depolarize, dicke_state, target_projectors

_LOG = logging.getLogger("aic_tomography.entanglement")

# AB|CD, AC|BD, AD|BC
BALANCED_PARTITIONS: Tuple[Tuple[int, ...], ...] = ((0, 1), (0, 2), (0, 3))
# A|BCD, B|ACD, C|ABD, D|ABC
SINGLE_PARTITIONS: Tuple[Tuple[int, ...], ...] = ((0,), (1,), (2,), (3,))

MONOTONES = ("N0", "N1", "N2")


def _checked_partition(partition: Iterable[int], n_qubits: int) -> Tuple[int, ...]:
    subset = tuple(sorted(set(int(q) for q in partition)))
    if not subset or len(subset) >= n_qubits:
        raise InvalidPartition(f"Partition must be a non-empty proper subset, got {subset}")
    if subset[0] < 0 or subset[-1] >= n_qubits:
        raise InvalidPartition(f"Partition {subset} names qubits outside 0..{n_qubits - 1}")
    return subset


def negativity(rho: MatrixLike, partition: Iterable[int], method: str = "lapack") -> float:
    """
    ``(||rho^T_S||_1 - 1) / 2``: the summed magnitude of the negative
    eigenvalues of the partial transpose on the qubits in ``partition``.
    """
    if isinstance(rho, Pseudostate):
        raise PseudostateRejected("Negativity is only defined for physical states")
    arr = as_array(rho)
    n_qubits = n_qubits_of(arr.shape[0])
    subset = _checked_partition(partition, n_qubits)
    transposed = partial_transpose(arr, mask_from_subset(subset, n_qubits))
    eigenvalues = hermitian_eigenvalues(transposed, method=method)
    return float(-np.sum(np.minimum(eigenvalues, 0.0)))


def negativities(stack: np.ndarray, partition: Iterable[int]) -> np.ndarray:
    """Negativity of every matrix in a ``(n, D, D)`` stack for one bipartition."""
    stack = np.asarray(stack, dtype=complex)
    n_qubits = n_qubits_of(stack.shape[-1])
    subset = _checked_partition(partition, n_qubits)
    transposed = partial_transpose(stack, mask_from_subset(subset, n_qubits))
    sym = 0.5 * (transposed + np.conj(np.swapaxes(transposed, -1, -2)))
    eigenvalues = np.linalg.eigvalsh(sym)
    return -np.sum(np.minimum(eigenvalues, 0.0), axis=-1)


def _geometric_mean(values: np.ndarray, axis: int = -1) -> np.ndarray:
    values = np.clip(values, 0.0, None)
    return np.prod(values, axis=axis) ** (1.0 / values.shape[axis])


@dataclass(frozen=True)
class NegativityTriple:
    """``n1`` over balanced cuts, ``n2`` over one-vs-three cuts, ``n0 = (n1^3 n2^4)^(1/7)``."""

    n0: float
    n1: float
    n2: float

    def get(self, which: str) -> float:
        return {"N0": self.n0, "N1": self.n1, "N2": self.n2}[which]


def generalized_negativities(rho: MatrixLike, method: str = "lapack") -> NegativityTriple:
    """Geometric means of the seven bipartite negativities of a four-qubit state."""
    balanced = np.array([negativity(rho, cut, method) for cut in BALANCED_PARTITIONS])
    single = np.array([negativity(rho, cut, method) for cut in SINGLE_PARTITIONS])
    n1 = float(_geometric_mean(balanced))
    n2 = float(_geometric_mean(single))
    n0 = float((n1 ** 3 * n2 ** 4) ** (1.0 / 7.0))
    return NegativityTriple(n0=n0, n1=n1, n2=n2)


def generalized_negativities_stack(stack: np.ndarray) -> np.ndarray:
    """``(n, 3)`` array of (N0, N1, N2) for a stack of four-qubit states."""
    balanced = np.stack([negativities(stack, cut) for cut in BALANCED_PARTITIONS], axis=-1)
    single = np.stack([negativities(stack, cut) for cut in SINGLE_PARTITIONS], axis=-1)
    n1 = _geometric_mean(balanced)
    n2 = _geometric_mean(single)
    n0 = (n1 ** 3 * n2 ** 4) ** (1.0 / 7.0)
    return np.stack([n0, n1, n2], axis=-1)


# ---------------------------------------------------------------------------
# Collective-spin witness
# ---------------------------------------------------------------------------

def collective_spin(axis: str, n_qubits: int = N_QUBITS) -> np.ndarray:
    """``J_axis = sum_j sigma_axis^(j) / 2``."""
    letter = axis.upper()
    total = np.zeros((2 ** n_qubits, 2 ** n_qubits), dtype=complex)
    for qubit in range(n_qubits):
        word = "".join(letter if j == qubit else "I" for j in range(n_qubits))
        total += pauli_word(word)
    return total / 2.0


@lru_cache(maxsize=None)
def _witness_matrix() -> np.ndarray:
    jx = collective_spin("x")
    jy = collective_spin("y")
    dim = jx.shape[0]
    w = (3.5 + np.sqrt(3.0)) * np.eye(dim, dtype=complex) - jx @ jx - jy @ jy
    w.setflags(write=False)
    return w


def witness_operator() -> np.ndarray:
    """The 16x16 witness matrix (a fresh, writable copy)."""
    return np.array(_witness_matrix())


def witness_expectation(rho: MatrixLike) -> float:
    """``Re Tr(W rho)``; pseudostates are accepted."""
    return float(np.real(np.einsum("ij,ji->", _witness_matrix(), as_array(rho))))


def witness_threshold(
    state_curve: Callable[[float], MatrixLike],
    lo: float = 0.0,
    hi: float = 1.0,
    tol: float = 1e-6,
) -> float:
    """Root of ``witness_expectation(state_curve(x))`` on ``[lo, hi]`` by bisection."""
    def value(x: float) -> float:
        return witness_expectation(state_curve(x))

    f_lo, f_hi = value(lo), value(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise NoSignChange(
            f"Witness has the same sign at both ends: {f_lo:.6g} at {lo}, {f_hi:.6g} at {hi}"
        )
    root = bisect(value, lo, hi, xtol=tol)
    _LOG.debug("Witness root at %.9f", root)
    return float(root)


def white_noise_curve(n_excitations: int = 2) -> Callable[[float], MatrixLike]:
    """``alpha -> (1 - alpha)|D><D| + alpha I/16``."""
    psi = dicke_state(n_excitations)
    return lambda alpha: depolarize(psi, alpha)


def witness_phase_curve(n_excitations: int, q: float, phis: Sequence[float]) -> np.ndarray:
    """``<W>`` of ``(1 - q)|target(phi)><target(phi)| + q I/16`` for every phi."""
    w = _witness_matrix()
    projectors = target_projectors(n_excitations, np.asarray(phis, dtype=float))
    pure = np.real(np.einsum("ij,nji->n", w, projectors))
    mixed = float(np.real(np.trace(w))) / w.shape[0]
    return (1.0 - q) * pure + q * mixed


def phase_threshold(n_excitations: int = 2, q: float = 0.0, tol: float = 1e-6) -> float:
    """Smallest phase in ``[0, pi]`` where the witness stops detecting the phased target."""
    return witness_threshold(
        lambda phi: _phase_state(n_excitations, q, phi), lo=0.0, hi=np.pi, tol=tol
    )


def _phase_state(n_excitations: int, q: float, phi: float) -> np.ndarray:
    projector = target_projectors(n_excitations, np.array([phi]))[0]
    dim = projector.shape[0]
    return (1.0 - q) * projector + q * np.eye(dim, dtype=complex) / dim
