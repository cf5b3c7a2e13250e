"""
Measurement designs, Born-rule outcome distributions and finite datasets.

Two designs are provided:

* ``sic``     – one setting: the four-qubit product of single-qubit SIC-POVMs
                (256 outcomes)
* ``witness`` – two settings: all qubits measured along x, and all along y
                (16 projectors each, half of the shots per setting)

Sampling never touches a global RNG: every call builds its own
``numpy.random.Generator`` (PCG64) from the given seed, and multi-setting
datasets draw each setting from a child of ``SeedSequence(seed)``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidDistribution,
    NegativeProbability,
    OddShotCount,
    TomographyError,
    TooFewShots,
)
from .qcore import PAULI, as_array, kron
from .models import DatasetRecord, SettingRecord

_LOG = logging.getLogger("aic_tomography.measurement")

DESIGN_SIC = "sic"
DESIGN_WITNESS = "witness"
SIC_SETTING = "sic"
X_SETTING = "x"
Y_SETTING = "y"

POVM_TOL = 1e-10
DISTRIBUTION_TOL = 1e-9
NEGATIVE_PROBABILITY_TOL = 1e-6

SeedLike = Union[int, np.random.SeedSequence, None]


@dataclass(frozen=True, eq=False)
class Povm:
    """Positive effects summing to the identity."""

    effects: np.ndarray
    labels: Tuple[str, ...]

    def __post_init__(self):
        effects = np.array(self.effects, dtype=complex)
        if effects.ndim != 3 or effects.shape[1] != effects.shape[2]:
            raise TomographyError(f"Effects must be a (k, D, D) stack, got {effects.shape}")
        if len(self.labels) != effects.shape[0]:
            raise TomographyError("One label per effect is required")
        dim = effects.shape[1]
        completeness = np.max(np.abs(effects.sum(axis=0) - np.eye(dim)))
        if completeness > POVM_TOL:
            raise TomographyError(f"Effects do not sum to identity (deviation {completeness:.2e})")
        smallest = np.linalg.eigvalsh(0.5 * (effects + np.conj(np.swapaxes(effects, 1, 2))))[:, 0].min()
        if smallest < -POVM_TOL:
            raise TomographyError(f"Effect is not positive (min eigenvalue {smallest:.2e})")
        effects.setflags(write=False)
        object.__setattr__(self, "effects", effects)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def dim(self) -> int:
        return self.effects.shape[1]

    @property
    def n_outcomes(self) -> int:
        return self.effects.shape[0]

    def flat_transposed(self) -> np.ndarray:
        """``(k, D*D)`` rows such that ``rho.ravel() @ rows.T`` gives ``Tr(rho E_k)``."""
        return np.swapaxes(self.effects, 1, 2).reshape(self.n_outcomes, -1)


@dataclass(frozen=True)
class MeasurementSetting:
    label: str
    povm: Povm
    allocation: float


@dataclass(frozen=True)
class MeasurementDesign:
    """Ordered settings with the fraction of shots spent on each."""

    design_id: str
    settings: Tuple[MeasurementSetting, ...]

    def __post_init__(self):
        total = sum(setting.allocation for setting in self.settings)
        if abs(total - 1.0) > 1e-12:
            raise TomographyError(f"Shot allocations must sum to 1, got {total}")

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(setting.label for setting in self.settings)

    @property
    def dim(self) -> int:
        return self.settings[0].povm.dim

    def setting(self, label: str) -> MeasurementSetting:
        for setting in self.settings:
            if setting.label == label:
                return setting
        raise KeyError(label)

    def shots_per_setting(self, shots: int) -> List[int]:
        """Exact integer allocation; raises instead of rounding."""
        if shots < 0:
            raise OddShotCount(f"Shot count must be non-negative, got {shots}")
        allocated = []
        for setting in self.settings:
            share = shots * setting.allocation
            if abs(share - round(share)) > 1e-9:
                raise OddShotCount(
                    f"{shots} shots cannot be split exactly over design '{self.design_id}'"
                )
            allocated.append(int(round(share)))
        return allocated


# ---------------------------------------------------------------------------
# Designs
# ---------------------------------------------------------------------------

SIC_BLOCH_VECTORS = np.array(
    [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float
) / np.sqrt(3.0)


def sic_povm_qubit() -> Povm:
    """Tetrahedral qubit SIC-POVM, ``E_k = (I + r_k . sigma) / 4``."""
    effects = [
        (PAULI["I"] + r[0] * PAULI["X"] + r[1] * PAULI["Y"] + r[2] * PAULI["Z"]) / 4.0
        for r in SIC_BLOCH_VECTORS
    ]
    return Povm(np.array(effects), labels=("0", "1", "2", "3"))


@lru_cache(maxsize=None)
def product_sic_design(n_qubits: int = 4) -> MeasurementDesign:
    """Single setting: every n-fold Kronecker product of the qubit SIC effects."""
    single = sic_povm_qubit()
    effects, labels = [], []
    for combo in product(range(single.n_outcomes), repeat=n_qubits):
        effects.append(kron(*(single.effects[k] for k in combo)))
        labels.append("".join(single.labels[k] for k in combo))
    povm = Povm(np.array(effects), labels=tuple(labels))
    return MeasurementDesign(DESIGN_SIC, (MeasurementSetting(SIC_SETTING, povm, 1.0),))


_EIGENKETS = {
    "x": (np.array([1, 1]) / np.sqrt(2), np.array([1, -1]) / np.sqrt(2)),
    "y": (np.array([1, 1j]) / np.sqrt(2), np.array([1, -1j]) / np.sqrt(2)),
}


def collective_povm(axis: str, n_qubits: int = 4) -> Povm:
    """Projectors onto product eigenstates of sigma_axis; bit 0 = '+', bit 1 = '-'."""
    plus, minus = _EIGENKETS[axis]
    single = [np.outer(ket, ket.conj()) for ket in (plus, minus)]
    effects, labels = [], []
    for bits in product((0, 1), repeat=n_qubits):
        effects.append(kron(*(single[b] for b in bits)))
        labels.append("".join("+" if b == 0 else "-" for b in bits))
    return Povm(np.array(effects), labels=tuple(labels))


@lru_cache(maxsize=None)
def collective_pauli_design(n_qubits: int = 4) -> MeasurementDesign:
    """Two settings (all-x, all-y) with half of the shots each."""
    return MeasurementDesign(
        DESIGN_WITNESS,
        (
            MeasurementSetting(X_SETTING, collective_povm("x", n_qubits), 0.5),
            MeasurementSetting(Y_SETTING, collective_povm("y", n_qubits), 0.5),
        ),
    )


def design_by_id(design_id: str) -> MeasurementDesign:
    if design_id == DESIGN_SIC:
        return product_sic_design()
    if design_id == DESIGN_WITNESS:
        return collective_pauli_design()
    raise TomographyError(f"Unknown design id: {design_id}")


def outcome_signs(n_qubits: int = 4) -> np.ndarray:
    """``(2**n, n)`` table of single-qubit eigenvalues (+1/-1) per collective outcome."""
    bits = np.array(list(product((0, 1), repeat=n_qubits)))
    return 1 - 2 * bits


def empirical_correlators(counts: np.ndarray, n_qubits: int = 4) -> Dict[Tuple[int, ...], float]:
    """
    The 2**n - 1 product expectation values available from one collective setting.

    Keys are qubit supports; the value is the frequency-weighted mean of the
    product of the +/-1 outcomes on that support.
    """
    from .states import correlator_supports

    counts = np.asarray(counts, dtype=float)
    freqs = counts / counts.sum()
    signs = outcome_signs(n_qubits)
    return {
        support: float(freqs @ np.prod(signs[:, list(support)], axis=1))
        for support in correlator_supports(n_qubits)
    }


# ---------------------------------------------------------------------------
# Born rule and sampling
# ---------------------------------------------------------------------------

def born_probabilities(rho, povm: Povm) -> np.ndarray:
    """
    ``p_k = Re Tr(rho E_k)``, tiny negatives clamped to zero.

    Raises:
        DimensionMismatch: state and effects differ in dimension
        NegativeProbability: some ``p_k < -1e-6`` (pseudostate outside the PSD cone)
    """
    arr = as_array(rho)
    if arr.shape != (povm.dim, povm.dim):
        raise DimensionMismatch(f"State of shape {arr.shape} vs effects of dimension {povm.dim}")
    probs = povm.flat_transposed() @ arr.reshape(-1)
    probs = np.real(probs)
    if probs.min() < -NEGATIVE_PROBABILITY_TOL:
        raise NegativeProbability(f"Born probability {probs.min():.3e} is negative")
    total = probs.sum()
    if abs(total - 1.0) > DISTRIBUTION_TOL:
        raise InvalidDistribution(f"Probabilities sum to {total:.12g}")
    return np.clip(probs, 0.0, None)


def stack_probabilities(stack: np.ndarray, povm: Povm) -> np.ndarray:
    """Unclamped Born probabilities for a ``(n, D, D)`` stack -> ``(n, k)``."""
    stack = np.asarray(stack, dtype=complex)
    flat = stack.reshape(stack.shape[0], -1)
    return np.real(flat @ povm.flat_transposed().T)


def sample_counts(probabilities: Sequence[float], shots: int, seed: SeedLike) -> np.ndarray:
    """Multinomial draw of ``shots`` outcomes; deterministic for a fixed seed."""
    probs = np.asarray(probabilities, dtype=float)
    if shots < 0:
        raise InvalidDistribution(f"Shot count must be non-negative, got {shots}")
    if probs.ndim != 1 or probs.size == 0:
        raise InvalidDistribution("Probabilities must be a non-empty vector")
    if probs.min() < -DISTRIBUTION_TOL or abs(probs.sum() - 1.0) > DISTRIBUTION_TOL:
        raise InvalidDistribution(f"Not a distribution: min={probs.min():.3e}, sum={probs.sum():.12g}")
    probs = np.clip(probs, 0.0, None)
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    return rng.multinomial(int(shots), probs).astype(np.int64)


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Dataset:
    """Per-setting outcome counts; integer for sampled data, real for expected counts."""

    design_id: str
    labels: Tuple[str, ...]
    counts: Tuple[np.ndarray, ...]
    seed: Optional[int] = None

    def __post_init__(self):
        if len(self.labels) != len(self.counts):
            raise TomographyError("One count vector per setting label is required")
        arrays = []
        for vector in self.counts:
            arr = np.array(vector)
            if not np.issubdtype(arr.dtype, np.integer):
                arr = arr.astype(float)
            if arr.ndim != 1 or (arr.size and arr.min() < 0):
                raise TomographyError("Counts must be non-negative vectors")
            arr.setflags(write=False)
            arrays.append(arr)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "counts", tuple(arrays))

    @property
    def design(self) -> MeasurementDesign:
        return design_by_id(self.design_id)

    @property
    def shots_per_setting(self) -> List[float]:
        return [float(vector.sum()) for vector in self.counts]

    @property
    def total_shots(self) -> float:
        return float(sum(self.shots_per_setting))

    @property
    def is_integral(self) -> bool:
        return all(np.issubdtype(vector.dtype, np.integer) for vector in self.counts)

    def counts_for(self, label: str) -> np.ndarray:
        return self.counts[self.labels.index(label)]

    def items(self) -> Iterable[Tuple[MeasurementSetting, np.ndarray]]:
        design = self.design
        for label, vector in zip(self.labels, self.counts):
            yield design.setting(label), vector

    def restricted(self, labels: Sequence[str]) -> "Dataset":
        """Dataset holding only the named settings."""
        return Dataset(
            self.design_id,
            tuple(labels),
            tuple(self.counts_for(label) for label in labels),
            self.seed,
        )

    def to_record(self) -> DatasetRecord:
        return DatasetRecord(
            design_id=self.design_id,
            seed=self.seed,
            settings=[
                SettingRecord(label=label, shots=vector.sum().item(), counts=vector.tolist())
                for label, vector in zip(self.labels, self.counts)
            ],
        )

    def to_json(self) -> str:
        return self.to_record().model_dump_json(indent=2)

    @classmethod
    def from_record(cls, record: DatasetRecord) -> "Dataset":
        return cls(
            design_id=record.design_id,
            labels=tuple(setting.label for setting in record.settings),
            counts=tuple(np.array(setting.counts) for setting in record.settings),
            seed=record.seed,
        )

    @classmethod
    def from_json(cls, text: str) -> "Dataset":
        return cls.from_record(DatasetRecord.model_validate(json.loads(text)))


def simulate_dataset(rho, design: MeasurementDesign, shots: int, seed: int) -> Dataset:
    """Sample ``shots`` outcomes of ``rho``, split over the settings exactly."""
    allocation = design.shots_per_setting(shots)
    streams = np.random.SeedSequence(seed).spawn(len(design.settings))
    counts = tuple(
        sample_counts(born_probabilities(rho, setting.povm), n_shots, stream)
        for setting, n_shots, stream in zip(design.settings, allocation, streams)
    )
    return Dataset(design.design_id, design.labels, counts, seed)


def expected_dataset(rho, design: MeasurementDesign, shots: int) -> Dataset:
    """Infinite-data surrogate: real-valued counts ``n_setting * p``."""
    allocation = design.shots_per_setting(shots)
    counts = tuple(
        n_shots * born_probabilities(rho, setting.povm)
        for setting, n_shots in zip(design.settings, allocation)
    )
    return Dataset(design.design_id, design.labels, counts, None)


def split_dataset(dataset: Dataset, fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """
    Shot-level split of every setting into (first, second) parts.

    Integer datasets draw the first part without replacement from the
    recorded shots (multivariate hypergeometric); expected-count datasets
    are split proportionally.
    """
    if not 0.0 < fraction < 1.0:
        raise TomographyError(f"Split fraction must lie in (0, 1), got {fraction}")
    streams = np.random.SeedSequence(seed).spawn(len(dataset.labels))
    first, second = [], []
    for vector, stream in zip(dataset.counts, streams):
        shots = vector.sum()
        if shots < 2:
            raise TooFewShots(f"Splitting needs at least 2 shots per setting, got {shots}")
        if np.issubdtype(vector.dtype, np.integer):
            n_first = int(round(fraction * int(shots)))
            rng = np.random.default_rng(stream)
            part = rng.multivariate_hypergeometric(vector.astype(np.int64), n_first)
        else:
            part = vector * fraction
        first.append(part)
        second.append(vector - part)
    return (
        Dataset(dataset.design_id, dataset.labels, tuple(first), dataset.seed),
        Dataset(dataset.design_id, dataset.labels, tuple(second), dataset.seed),
    )


def combine_datasets(a: Dataset, b: Dataset) -> Dataset:
    """Add the counts of two datasets taken with the same design."""
    if a.design_id != b.design_id or a.labels != b.labels:
        raise TomographyError("Datasets come from different designs")
    return Dataset(a.design_id, a.labels, tuple(x + y for x, y in zip(a.counts, b.counts)), a.seed)
