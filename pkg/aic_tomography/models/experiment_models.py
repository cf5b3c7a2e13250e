"""
Experiment configuration and run-manifest models.

An ``ExperimentConfig`` describes one parameter sweep (one figure table);
``RunManifest`` records what was run so that every CSV can carry a hash of
its provenance.
"""

import hashlib
import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from ..errors import ConfigInvalid

EXPERIMENT_IDS = ("fig1a", "fig1b", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8")

# Experiments whose default target carries a single excitation.
_SINGLE_EXCITATION_DEFAULT = {"fig1a", "fig1b"}


class ExperimentConfig(BaseModel):
    """One sweep over (phi, N, seed)."""
    experiment: str = Field(description="Experiment id, one of fig1a..fig8")
    excitations: Optional[int] = Field(default=None, description="Dicke excitations of the target (1 or 2)")
    alpha: float = Field(default=0.2, description="White-noise weight of the true state")
    phis: List[float] = Field(default_factory=lambda: [0.0], description="Target phases in radians")
    Ns: List[int] = Field(default_factory=lambda: [1000], description="Total shot counts")
    seeds: List[int] = Field(default_factory=lambda: [0], description="Monte Carlo seeds")
    grid_step: float = Field(default=0.01, description="Grid step for epsilon and q")
    phi_step: float = Field(default=math.pi / 180, description="Grid step for a variable phase")
    posterior_grid_step: float = Field(default=0.01, description="Posterior grid step")
    n_bins: int = Field(default=50, description="Histogram bins over [0, 1]")
    output: Optional[str] = Field(default=None, description="CSV output path; None writes <output_dir>/<experiment>.csv")
    max_workers: Optional[int] = Field(default=None, description="Worker threads; None uses the runtime config")

    @field_validator("experiment")
    @classmethod
    def _known_experiment(cls, value: str) -> str:
        if value not in EXPERIMENT_IDS:
            raise ValueError(f"unknown experiment '{value}', expected one of {', '.join(EXPERIMENT_IDS)}")
        return value

    @field_validator("excitations")
    @classmethod
    def _one_or_two(cls, value: Optional[int]) -> Optional[int]:
        if value is not None and value not in (1, 2):
            raise ValueError("excitations must be 1 or 2")
        return value

    @field_validator("alpha")
    @classmethod
    def _alpha_range(cls, value: float) -> float:
        if not 0.0 <= value <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        return value

    @field_validator("Ns")
    @classmethod
    def _even_positive(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("at least one N is required")
        bad = [n for n in value if n <= 0 or n % 2]
        if bad:
            raise ValueError(f"every N must be positive and even, got {bad}")
        return value

    @field_validator("seeds")
    @classmethod
    def _seeds_present(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("at least one seed is required")
        return value

    @field_validator("phis")
    @classmethod
    def _phis_present(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("at least one phi is required")
        return value

    @field_validator("grid_step", "posterior_grid_step")
    @classmethod
    def _grid_step_range(cls, value: float) -> float:
        if not 0.0 < value <= 0.05:
            raise ValueError("grid steps must lie in (0, 0.05]")
        return value

    @field_validator("n_bins")
    @classmethod
    def _bins_positive(cls, value: int) -> int:
        if value <= 0:
            raise ValueError("n_bins must be positive")
        return value

    @model_validator(mode="after")
    def _default_excitations(self) -> "ExperimentConfig":
        if self.excitations is None:
            self.excitations = 1 if self.experiment in _SINGLE_EXCITATION_DEFAULT else 2
        return self

    @classmethod
    def parse(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        """Validate a raw dict, turning pydantic errors into ``ConfigInvalid``."""
        try:
            return cls.model_validate(data)
        except ValidationError as exc:
            field_errors = {
                ".".join(str(part) for part in error["loc"]) or "config": error["msg"]
                for error in exc.errors()
            }
            raise ConfigInvalid("Invalid experiment configuration", field_errors) from exc

    @classmethod
    def from_file(cls, path: Path, overrides: Optional[Dict[str, Any]] = None) -> "ExperimentConfig":
        """Load a JSON config and apply flag overrides on top."""
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except FileNotFoundError as exc:
            raise ConfigInvalid(f"Config file not found: {path}", {"config": "file not found"}) from exc
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"Config file is not valid JSON: {path}", {"config": str(exc)}) from exc
        if not isinstance(data, dict):
            raise ConfigInvalid("Config file must hold a JSON object", {"config": "not an object"})
        data.update({key: value for key, value in (overrides or {}).items() if value is not None})
        return cls.parse(data)


class RunManifest(BaseModel):
    """Provenance of one experiment run."""
    config: ExperimentConfig
    versions: Dict[str, str] = Field(default_factory=dict, description="Package versions used")
    seeds: List[int] = Field(default_factory=list)
    outputs: List[str] = Field(default_factory=list, description="Files written by the run")

    def sha256(self) -> str:
        """Hash of config, versions and seeds; output paths are not hashed."""
        payload = self.model_dump(mode="json", exclude={"outputs"})
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
