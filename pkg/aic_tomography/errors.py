"""
Exception types raised by the tomography library.

Every error is a ``ValueError`` subclass so that callers which only guard
against bad input keep working.
"""

from typing import Dict, Optional


class TomographyError(ValueError):
    """Base class for all library errors."""


class NonHermitianInput(TomographyError):
    """A matrix that must be Hermitian is not, within tolerance."""


class MaskLengthMismatch(TomographyError):
    """Partial-transpose mask length differs from the number of qubits."""


class AlphaOutOfRange(TomographyError):
    """Noise weight outside [0, 1]."""


class MissingSetting(TomographyError):
    """A required measurement setting is absent from the dataset."""


class DimensionMismatch(TomographyError):
    """State and measurement effects have different dimensions."""


class NegativeProbability(TomographyError):
    """A pseudostate produced a clearly negative Born probability."""


class InvalidDistribution(TomographyError):
    """Probabilities do not form a distribution."""


class TooFewShots(TomographyError):
    """A setting has too few shots for the requested operation."""


class OddShotCount(TomographyError):
    """Shots cannot be split exactly over the settings of a design."""


class DesignMismatch(TomographyError):
    """Dataset and model refer to incompatible measurement designs."""


class EmptyDataset(TomographyError):
    """A dataset setting holds no shots."""


class AllPointsUnphysical(TomographyError):
    """Every grid point of a pseudostate family lies outside the PSD region."""


class SampleTooSmall(TomographyError):
    """AICc is undefined because N <= K + 1."""


class InvalidPartition(TomographyError):
    """A bipartition must be a non-empty proper subset of the qubits."""


class NoSignChange(TomographyError):
    """A root search interval does not bracket a sign change."""


class AllZeroWeights(TomographyError):
    """Every posterior grid point was excluded."""


class PseudostateRejected(TomographyError):
    """An operation defined only for physical states received a pseudostate."""


class ConfigInvalid(TomographyError):
    """Experiment configuration failed validation."""

    def __init__(self, message: str, field_errors: Optional[Dict[str, str]] = None):
        super().__init__(message)
        self.field_errors: Dict[str, str] = dict(field_errors or {})

    def __str__(self) -> str:
        base = super().__str__()
        if not self.field_errors:
            return base
        details = "; ".join(f"{name}: {msg}" for name, msg in sorted(self.field_errors.items()))
        return f"{base} ({details})"
