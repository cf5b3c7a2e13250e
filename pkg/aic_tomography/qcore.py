"""
Dense complex linear algebra for few-qubit density matrices.

Matrices are plain ``numpy`` arrays (``complex128``, row-major). Everything
here is a pure function of its inputs; qubit 0 is the most significant bit of
a basis-state index, which is the ordering produced by left-to-right
Kronecker products.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple, Union

import numpy as np

from .errors import MaskLengthMismatch, NonHermitianInput, TomographyError

_LOG = logging.getLogger("aic_tomography.qcore")

HERMITIAN_TOL = 1e-10
EIGEN_INPUT_TOL = 1e-8
PSD_TOL = 1e-9
TRACE_TOL = 1e-10

IDENTITY_2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

PAULI = {"I": IDENTITY_2, "X": SIGMA_X, "Y": SIGMA_Y, "Z": SIGMA_Z}

MatrixLike = Union[np.ndarray, "TraceOneMatrix"]


def as_array(m: MatrixLike) -> np.ndarray:
    """Return the underlying complex array of a matrix or state object."""
    if isinstance(m, TraceOneMatrix):
        return m.matrix
    return np.asarray(m, dtype=complex)


def allclose(a: MatrixLike, b: MatrixLike, atol: float) -> bool:
    """Entrywise comparison with an explicit absolute tolerance."""
    a_arr, b_arr = as_array(a), as_array(b)
    if a_arr.shape != b_arr.shape:
        return False
    return bool(np.max(np.abs(a_arr - b_arr), initial=0.0) <= atol)


def kron(*factors: MatrixLike) -> np.ndarray:
    """Kronecker product of any number of factors, left to right."""
    result = np.eye(1, dtype=complex)
    for factor in factors:
        result = np.kron(result, as_array(factor))
    return result


def pauli_word(word: str) -> np.ndarray:
    """Tensor product of single-qubit Paulis, e.g. ``"XIIX"``."""
    return kron(*(PAULI[letter] for letter in word.upper()))


def hermiticity_error(m: MatrixLike) -> float:
    """Largest entrywise deviation ``max |A - A^dagger|``."""
    arr = as_array(m)
    return float(np.max(np.abs(arr - arr.conj().T), initial=0.0))


def is_hermitian(m: MatrixLike, tol: float = HERMITIAN_TOL) -> bool:
    arr = as_array(m)
    return arr.ndim == 2 and arr.shape[0] == arr.shape[1] and hermiticity_error(arr) <= tol


def _require_hermitian(arr: np.ndarray, tol: float) -> None:
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise NonHermitianInput(f"Expected a square matrix, got shape {arr.shape}")
    err = hermiticity_error(arr)
    if err > tol:
        raise NonHermitianInput(f"Matrix is not Hermitian: max |A - A^dagger| = {err:.3e} > {tol:.1e}")


def jacobi_eigh(
    m: MatrixLike,
    tol: float = 1e-12,
    max_sweeps: int = 100,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Cyclic Jacobi eigensolver for a complex Hermitian matrix.

    Each pair (p, q) is first rotated by a phase so that the off-diagonal
    element is real, then annihilated by a real Givens rotation. Sweeps stop
    once the off-diagonal Frobenius norm drops below ``tol``.

    Returns:
        (eigenvalues ascending, eigenvectors as columns)
    """
    a = np.array(as_array(m), dtype=complex)
    _require_hermitian(a, EIGEN_INPUT_TOL)
    a = 0.5 * (a + a.conj().T)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(1.0, float(np.linalg.norm(a)))

    for sweep in range(max_sweeps):
        off = np.sqrt(np.sum(np.abs(a) ** 2) - np.sum(np.abs(np.diag(a)) ** 2))
        if off < tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r < 1e-300:
                    continue
                phase = apq / r
                app, aqq = a[p, p].real, a[q, q].real
                theta = (aqq - app) / (2.0 * r)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]], dtype=complex)
                idx = [p, q]
                a[:, idx] = a[:, idx] @ rot
                a[idx, :] = rot.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                v[:, idx] = v[:, idx] @ rot
    else:
        _LOG.warning("Jacobi eigensolver hit max_sweeps=%d before converging", max_sweeps)

    eigenvalues = np.real(np.diag(a))
    order = np.argsort(eigenvalues)
    return eigenvalues[order], v[:, order]


def hermitian_eigenvalues(m: MatrixLike, method: str = "lapack") -> np.ndarray:
    """
    Real eigenvalues of a Hermitian matrix, ascending.

    Args:
        m: Hermitian matrix (within 1e-8 entrywise)
        method: ``"lapack"`` (numpy.linalg.eigvalsh) or ``"jacobi"``

    Raises:
        NonHermitianInput: if the Hermiticity tolerance is violated
    """
    arr = as_array(m)
    _require_hermitian(arr, EIGEN_INPUT_TOL)
    if method == "jacobi":
        return jacobi_eigh(arr)[0]
    if method != "lapack":
        raise TomographyError(f"Unknown eigensolver method: {method}")
    return np.linalg.eigvalsh(0.5 * (arr + arr.conj().T))


def min_eigenvalues(stack: np.ndarray) -> np.ndarray:
    """Smallest eigenvalue of every Hermitian matrix in a ``(n, D, D)`` stack."""
    stack = np.asarray(stack, dtype=complex)
    sym = 0.5 * (stack + np.conj(np.swapaxes(stack, -1, -2)))
    return np.linalg.eigvalsh(sym)[..., 0]


def is_psd(m: MatrixLike, tol: float = PSD_TOL) -> bool:
    """True iff the minimum eigenvalue is at least ``-tol``."""
    return bool(hermitian_eigenvalues(m)[0] >= -tol)


def n_qubits_of(dim: int) -> int:
    n = int(round(np.log2(dim)))
    if 2 ** n != dim:
        raise TomographyError(f"Dimension {dim} is not a power of two")
    return n


def partial_transpose(rho: MatrixLike, transpose_mask: Sequence[bool]) -> np.ndarray:
    """
    Transpose the tensor indices of the qubits flagged in ``transpose_mask``.

    Works on a single ``(D, D)`` matrix or a ``(..., D, D)`` stack.
    """
    arr = as_array(rho)
    dim = arr.shape[-1]
    n = n_qubits_of(dim)
    mask = [bool(flag) for flag in transpose_mask]
    if len(mask) != n:
        raise MaskLengthMismatch(f"Mask has {len(mask)} entries for {n} qubits")

    lead = arr.shape[:-2]
    k = len(lead)
    tensor = arr.reshape(lead + (2,) * (2 * n))
    axes = list(range(k + 2 * n))
    for qubit, flagged in enumerate(mask):
        if flagged:
            row_axis, col_axis = k + qubit, k + n + qubit
            axes[row_axis], axes[col_axis] = axes[col_axis], axes[row_axis]
    return tensor.transpose(axes).reshape(arr.shape)


def mask_from_subset(subset: Iterable[int], n_qubits: int) -> list[bool]:
    chosen = set(subset)
    return [qubit in chosen for qubit in range(n_qubits)]


@dataclass(frozen=True, eq=False)
class TraceOneMatrix:
    """Trace-one Hermitian matrix of dimension ``2**n``."""

    matrix: np.ndarray

    def __post_init__(self):
        arr = np.array(self.matrix, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise TomographyError(f"Expected a square matrix, got shape {arr.shape}")
        n_qubits_of(arr.shape[0])
        err = hermiticity_error(arr)
        if err > HERMITIAN_TOL:
            raise NonHermitianInput(f"State is not Hermitian: deviation {err:.3e}")
        trace = np.trace(arr)
        if abs(trace - 1.0) > TRACE_TOL:
            raise TomographyError(f"State trace must be 1, got {trace:.12g}")
        arr.setflags(write=False)
        object.__setattr__(self, "matrix", arr)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_qubits(self) -> int:
        return n_qubits_of(self.dim)

    def eigenvalues(self) -> np.ndarray:
        return hermitian_eigenvalues(self.matrix)

    def is_physical(self, tol: float = PSD_TOL) -> bool:
        return is_psd(self.matrix, tol)

    def expectation(self, operator: MatrixLike) -> float:
        """``Re Tr(rho O)``."""
        return float(np.real(np.einsum("ij,ji->", self.matrix, as_array(operator))))


@dataclass(frozen=True, eq=False)
class DensityMatrix(TraceOneMatrix):
    """Physical state: trace one, Hermitian and positive semi-definite."""

    def __post_init__(self):
        super().__post_init__()
        smallest = self.eigenvalues()[0]
        if smallest < -PSD_TOL:
            raise TomographyError(f"Density matrix is not PSD: min eigenvalue {smallest:.3e}")

    @classmethod
    def maximally_mixed(cls, n_qubits: int) -> "DensityMatrix":
        dim = 2 ** n_qubits
        return cls(np.eye(dim, dtype=complex) / dim)

    @classmethod
    def from_ket(cls, amplitudes: np.ndarray) -> "DensityMatrix":
        psi = np.asarray(amplitudes, dtype=complex)
        return cls(np.outer(psi, psi.conj()))
