"""
Pydantic record models for every JSON surface of the package.
"""

from .dataset_models import DatasetRecord, SettingRecord
from .report_models import (
    CheckResult,
    FitResult,
    FpmBound,
    PosteriorSummary,
    RankingReport,
    VerificationReport,
)
from .experiment_models import EXPERIMENT_IDS, ExperimentConfig, RunManifest

__all__ = [
    # Dataset records
    "DatasetRecord",
    "SettingRecord",

    # Reports
    "CheckResult",
    "FitResult",
    "FpmBound",
    "PosteriorSummary",
    "RankingReport",
    "VerificationReport",

    # Experiment configuration
    "EXPERIMENT_IDS",
    "ExperimentConfig",
    "RunManifest",
]
