"""
Configuration management for the AIC tomography toolkit.
Handles loading, validating, and providing access to numerical settings.
"""

import os
import json
import math
from pathlib import Path
from typing import Dict, Any, Optional
from dataclasses import dataclass


@dataclass
class FittingConfig:
    """Grid scan and refinement settings for maximum-likelihood fits."""
    grid_step: float
    phi_step: float
    refine_tol: float
    max_refine_cycles: int


@dataclass
class RhoRConfig:
    """Stopping rules for the RrhoR fixed-point iteration."""
    max_iters: int
    tol: float


@dataclass
class PosteriorConfig:
    """Posterior grid settings."""
    grid_step: float
    n_bins: int
    credible_mass: float


@dataclass
class RuntimeConfig:
    """Experiment runner settings."""
    max_workers: int
    debug: bool
    output_dir: str


class ConfigManager:
    """Manages configuration loading and access."""

    def __init__(self, config_file: str = "aic_tomography_config.json"):
        self.config_file = Path(config_file)
        self._config: Optional[Dict[str, Any]] = None
        self._load_config()

    def _load_config(self) -> None:
        """Load configuration from file and environment variables."""
        self._config = self._get_default_config()

        if self.config_file.exists():
            try:
                with open(self.config_file, 'r', encoding='utf-8') as f:
                    file_config = json.load(f)
                    self._merge_config(file_config)
            except (json.JSONDecodeError, FileNotFoundError):
                # Keep defaults if the file is unreadable
                pass

        self._override_with_env()

    def _get_default_config(self) -> Dict[str, Any]:
        """Get default configuration."""
        return {
            "fitting": {
                "grid_step": 0.01,
                "phi_step": math.pi / 180,
                "refine_tol": 1e-6,
                "max_refine_cycles": 50
            },
            "rhor": {
                "max_iters": 2000,
                "tol": 1e-9
            },
            "posterior": {
                "grid_step": 0.01,
                "n_bins": 50,
                "credible_mass": 0.95
            },
            "runtime": {
                "max_workers": 4,
                "debug": False,
                "output_dir": "results"
            }
        }

    def _merge_config(self, file_config: Dict[str, Any]) -> None:
        """Merge file configuration with current config."""
        for section, values in file_config.items():
            if section in self._config and isinstance(values, dict):
                self._config[section].update(values)
            else:
                self._config[section] = values

    def _override_with_env(self) -> None:
        """Override configuration with environment variables."""
        float_overrides = {
            "AIC_GRID_STEP": ("fitting", "grid_step"),
            "AIC_PHI_STEP": ("fitting", "phi_step"),
            "AIC_REFINE_TOL": ("fitting", "refine_tol"),
            "AIC_RHOR_TOL": ("rhor", "tol"),
            "AIC_POSTERIOR_GRID_STEP": ("posterior", "grid_step"),
        }
        int_overrides = {
            "AIC_RHOR_MAX_ITERS": ("rhor", "max_iters"),
            "AIC_POSTERIOR_BINS": ("posterior", "n_bins"),
            "AIC_MAX_WORKERS": ("runtime", "max_workers"),
        }
        for env_name, (section, key) in float_overrides.items():
            if os.getenv(env_name):
                self._config[section][key] = float(os.getenv(env_name))

        for env_name, (section, key) in int_overrides.items():
            if os.getenv(env_name):
                self._config[section][key] = int(os.getenv(env_name))

        if os.getenv("AIC_DEBUG"):
            self._config["runtime"]["debug"] = os.getenv("AIC_DEBUG").lower() == "true"

        if os.getenv("AIC_OUTPUT_DIR"):
            self._config["runtime"]["output_dir"] = os.getenv("AIC_OUTPUT_DIR")

    def get_fitting_config(self) -> FittingConfig:
        """Get fitting configuration."""
        fitting = self._config["fitting"]
        return FittingConfig(
            grid_step=float(fitting["grid_step"]),
            phi_step=float(fitting["phi_step"]),
            refine_tol=float(fitting["refine_tol"]),
            max_refine_cycles=int(fitting.get("max_refine_cycles", 50))
        )

    def get_rhor_config(self) -> RhoRConfig:
        """Get RrhoR iteration configuration."""
        rhor = self._config["rhor"]
        return RhoRConfig(
            max_iters=int(rhor["max_iters"]),
            tol=float(rhor["tol"])
        )

    def get_posterior_config(self) -> PosteriorConfig:
        """Get posterior configuration."""
        posterior = self._config["posterior"]
        return PosteriorConfig(
            grid_step=float(posterior["grid_step"]),
            n_bins=int(posterior["n_bins"]),
            credible_mass=float(posterior.get("credible_mass", 0.95))
        )

    def get_runtime_config(self) -> RuntimeConfig:
        """Get runtime configuration."""
        runtime = self._config["runtime"]
        return RuntimeConfig(
            max_workers=int(runtime["max_workers"]),
            debug=bool(runtime["debug"]),
            output_dir=str(runtime["output_dir"])
        )

    def get_config(self) -> Dict[str, Any]:
        """Get raw configuration dictionary."""
        return self._config.copy()

    def reload(self) -> None:
        """Reload configuration from file."""
        self._load_config()

    def save_config(self) -> None:
        """Save current configuration to file."""
        with open(self.config_file, 'w', encoding='utf-8') as f:
            json.dump(self._config, f, indent=2, ensure_ascii=False)


# Global configuration instance
config_manager = ConfigManager()


def get_fitting_config() -> FittingConfig:
    """Get fitting configuration."""
    return config_manager.get_fitting_config()


def get_rhor_config() -> RhoRConfig:
    """Get RrhoR iteration configuration."""
    return config_manager.get_rhor_config()


def get_posterior_config() -> PosteriorConfig:
    """Get posterior configuration."""
    return config_manager.get_posterior_config()


def get_runtime_config() -> RuntimeConfig:
    """Get runtime configuration."""
    return config_manager.get_runtime_config()


def reload_config() -> None:
    """Reload configuration."""
    config_manager.reload()


def save_config() -> None:
    """Save configuration to file."""
    config_manager.save_config()
