"""
Figure-table experiments.

Each experiment id maps to one pipeline run for every (phi, N, seed) cell
of an ``ExperimentConfig``. Cells are independent and run on a thread
pool; rows are sorted before writing so the CSV does not depend on
completion order. Every CSV starts with a ``# manifest_sha256=...`` line
followed by the header, and the run manifest is written next to it.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from functools import lru_cache
from importlib.metadata import PackageNotFoundError, version
from itertools import product
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from config_manager import get_runtime_config

from .bayes import negativity_posterior, physicality_map, posterior_over_params
from .entanglement import witness_phase_curve
from .inference import (
    build_cross_model,
    compare_m1_m2,
    cross_model_protocol,
    rank_models,
)
from .measurement import (
    DESIGN_SIC,
    DESIGN_WITNESS,
    collective_pauli_design,
    product_sic_design,
    simulate_dataset,
    split_dataset,
)
from .models import ExperimentConfig, RunManifest
from .qcore import DensityMatrix
from .states import depolarize, dicke_state, model_m1, model_m2, pseudostate_from_counts, target_state

_LOG = logging.getLogger("aic_tomography.experiments")

Row = Tuple[object, ...]

CSV_COLUMNS: Dict[str, Tuple[str, ...]] = {
    "fig1a": ("phi", "N", "seed", "neg_delta_aic"),
    "fig1b": ("phi", "N", "seed", "neg_delta_aic"),
    "fig2": ("excitations", "phi", "N", "seed", "neg_delta_aic"),
    "fig3": ("phi", "N", "seed", "neg_delta_aic"),
    "fig4": ("phi", "q", "witness"),
    "fig5": ("phi", "N", "seed", "neg_delta_aic", "n0_mean", "n0_ci_low", "n0_ci_high"),
    "fig6": ("phi", "N", "seed", "epsilon", "q", "physical"),
    "fig7": ("phi", "N", "seed", "neg_delta_aic"),
    "fig8": ("phi", "N", "seed", "neg_delta_aic", "n2_mean", "n2_ci_low", "n2_ci_high"),
}

FIG2_EXCITATIONS = (1, 2)


# ---------------------------------------------------------------------------
# Formatting
# ---------------------------------------------------------------------------

def format_cell(value: object) -> str:
    """Integers verbatim, reals with 12 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    return str(value)


def write_csv(
    path: Path,
    columns: Sequence[str],
    rows: Iterable[Sequence[object]],
    manifest_hash: str = "",
) -> None:
    """UTF-8, comma separated, optional ``# manifest_sha256=`` comment first."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        if manifest_hash:
            f.write(f"# manifest_sha256={manifest_hash}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_cell(value) for value in row])


def package_versions() -> Dict[str, str]:
    versions = {}
    for name in ("aic-tomography", "numpy", "scipy", "pydantic"):
        try:
            versions[name] = version(name)
        except PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def manifest_path_for(csv_path: Path) -> Path:
    return csv_path.with_suffix(".manifest.json")


# ---------------------------------------------------------------------------
# Cells
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def actual_state(n_excitations: int, alpha: float) -> DensityMatrix:
    """The true state: the phase-free Dicke state with white noise."""
    return depolarize(dicke_state(n_excitations), alpha)


def _child_seed(seed: int, stream: int) -> int:
    return int(np.random.SeedSequence([seed, stream]).generate_state(1)[0])


@dataclass(frozen=True)
class Cell:
    phi: float
    N: int
    seed: int


def _split_seed(cell: Cell) -> int:
    """Split stream, independent of the sampling streams of ``cell.seed``."""
    return _child_seed(cell.seed, 2)


def _fit_options(config: ExperimentConfig) -> dict:
    return {"grid_step": config.grid_step, "phi_step": config.phi_step}


def _tomography_m1_delta(config: ExperimentConfig, cell: Cell, excitations: int) -> float:
    rho = actual_state(excitations, config.alpha)
    data = simulate_dataset(rho, product_sic_design(), cell.N, cell.seed)
    family = model_m1(target_state(excitations, cell.phi))
    return rank_models([family], data, **_fit_options(config)).neg_delta_aic[0]


def _tomography_m1(config: ExperimentConfig, cell: Cell) -> List[Row]:
    return [(cell.phi, cell.N, cell.seed, _tomography_m1_delta(config, cell, config.excitations))]


def _tomography_by_excitations(config: ExperimentConfig, cell: Cell) -> List[Row]:
    """Single- and double-excitation targets on the same cell."""
    return [
        (k, cell.phi, cell.N, cell.seed, _tomography_m1_delta(config, cell, k))
        for k in FIG2_EXCITATIONS
    ]


def _tomography_cross(config: ExperimentConfig, cell: Cell) -> List[Row]:
    rho = actual_state(config.excitations, config.alpha)
    data = simulate_dataset(rho, product_sic_design(), cell.N, cell.seed)
    target = target_state(config.excitations, cell.phi)
    report = cross_model_protocol(data, target, DESIGN_SIC, _split_seed(cell), **_fit_options(config))
    return [(cell.phi, cell.N, cell.seed, report.neg_delta_aic[0])]


def _witness_m1(config: ExperimentConfig, cell: Cell) -> List[Row]:
    rho = actual_state(config.excitations, config.alpha)
    data = simulate_dataset(rho, collective_pauli_design(), cell.N, cell.seed)
    family = model_m1(target_state(config.excitations, cell.phi))
    report = rank_models([family], data, **_fit_options(config))
    row: Row = (cell.phi, cell.N, cell.seed, report.neg_delta_aic[0])
    if config.experiment == "fig5":
        grid = posterior_over_params(family, data, config.posterior_grid_step)
        summary = negativity_posterior(grid, family, "N0", config.n_bins).summary
        row += (summary.mean, summary.ci_low, summary.ci_high)
    return [row]


def _witness_physicality(config: ExperimentConfig, cell: Cell) -> List[Row]:
    rho = actual_state(config.excitations, config.alpha)
    data = simulate_dataset(rho, collective_pauli_design(), cell.N, cell.seed)
    family = model_m2(target_state(config.excitations, cell.phi), pseudostate_from_counts(data))
    result = physicality_map(family, config.grid_step)
    return [(cell.phi, cell.N, cell.seed, e, q, flag) for e, q, flag in result.rows()]


def _witness_m1_vs_m2(config: ExperimentConfig, cell: Cell) -> List[Row]:
    rho = actual_state(config.excitations, config.alpha)
    design = collective_pauli_design()
    validation = simulate_dataset(rho, design, cell.N, cell.seed)
    extra = simulate_dataset(rho, design, cell.N, _child_seed(cell.seed, 1))
    target = target_state(config.excitations, cell.phi)
    m1 = model_m1(target)
    m2 = model_m2(target, pseudostate_from_counts(extra))
    delta = compare_m1_m2(validation, m1, m2, **_fit_options(config))
    return [(cell.phi, cell.N, cell.seed, -delta)]


def _witness_cross(config: ExperimentConfig, cell: Cell) -> List[Row]:
    rho = actual_state(config.excitations, config.alpha)
    data = simulate_dataset(rho, collective_pauli_design(), cell.N, cell.seed)
    train, validation = split_dataset(data, 0.5, _split_seed(cell))
    family = build_cross_model(train, target_state(config.excitations, cell.phi), DESIGN_WITNESS)
    report = rank_models([family], validation, **_fit_options(config))
    grid = posterior_over_params(family, validation, config.posterior_grid_step)
    summary = negativity_posterior(grid, family, "N2", config.n_bins).summary
    return [(cell.phi, cell.N, cell.seed, report.neg_delta_aic[0], summary.mean, summary.ci_low, summary.ci_high)]


_PIPELINES = {
    "fig1a": _tomography_m1,
    "fig1b": _tomography_cross,
    "fig2": _tomography_by_excitations,
    "fig3": _witness_m1,
    "fig5": _witness_m1,
    "fig6": _witness_physicality,
    "fig7": _witness_m1_vs_m2,
    "fig8": _witness_cross,
}


def _witness_curve_rows(config: ExperimentConfig) -> List[Row]:
    rows: List[Row] = []
    for q in sorted({0.0, config.alpha}):
        values = witness_phase_curve(config.excitations, q, config.phis)
        rows.extend((phi, q, value) for phi, value in zip(config.phis, values))
    return rows


def compute_rows(config: ExperimentConfig, max_workers: int = 1) -> List[Row]:
    """All rows of one experiment, sorted."""
    if config.experiment == "fig4":
        return sorted(_witness_curve_rows(config))

    pipeline = _PIPELINES[config.experiment]
    cells = [Cell(phi, n, seed) for phi, n, seed in product(config.phis, config.Ns, config.seeds)]
    rows: List[Row] = []
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        futures = {pool.submit(pipeline, config, cell): cell for cell in cells}
        for future in tqdm(as_completed(futures), total=len(futures), desc=config.experiment):
            cell = futures[future]
            try:
                rows.extend(future.result())
            except Exception as exc:
                _LOG.error("Cell phi=%s N=%d seed=%d failed: %s", cell.phi, cell.N, cell.seed, exc)
                for pending in futures:
                    pending.cancel()
                raise
    return sorted(rows)


def run_experiment(config: ExperimentConfig) -> RunManifest:
    """
    Run every cell, then write the CSV table and its manifest.

    Nothing is left on disk if the run fails part way.
    """
    runtime = get_runtime_config()
    max_workers = config.max_workers or runtime.max_workers
    csv_path = Path(config.output) if config.output else Path(runtime.output_dir) / f"{config.experiment}.csv"
    manifest_file = manifest_path_for(csv_path)
    manifest = RunManifest(
        config=config,
        versions=package_versions(),
        seeds=list(config.seeds),
        outputs=[str(csv_path), str(manifest_file)],
    )
    digest = manifest.sha256()
    _LOG.info(
        "Running %s: %d phi x %d N x %d seed(s), %d worker(s)",
        config.experiment, len(config.phis), len(config.Ns), len(config.seeds), max_workers,
    )
    started: List[Path] = []
    try:
        rows = compute_rows(config, max_workers)
        started.append(csv_path)
        write_csv(csv_path, CSV_COLUMNS[config.experiment], rows, digest)
        payload = manifest.model_dump(mode="json")
        payload["manifest_sha256"] = digest
        started.append(manifest_file)
        manifest_file.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except BaseException:
        for path in started:
            if path.exists():
                path.unlink()
                _LOG.warning("Removed partial output %s", path)
        raise
    _LOG.info("Wrote %d row(s) to %s", len(rows), csv_path)
    return manifest
