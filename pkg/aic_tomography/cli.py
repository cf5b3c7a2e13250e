#!/usr/bin/env python3
"""
aic-tomography – command-line surface
====================================

Subcommands:

* ``simulate``  – run one figure experiment from a JSON config, write CSV + manifest
* ``sample``    – simulate a dataset and store it as JSON
* ``rank``      – fit models to a stored dataset and rank them against the FPM bound
* ``posterior`` – negativity posterior of a model on a stored dataset
* ``physmap``   – PSD map of the observation-based two-parameter model
* ``verify``    – run the built-in oracle checks

Exit codes: 0 success, 1 failed checks or run error, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from config_manager import get_runtime_config

from .bayes import negativity_posterior, physicality_map, posterior_over_params
from .entanglement import MONOTONES
from .errors import ConfigInvalid, OddShotCount, TomographyError
from .experiments import actual_state, run_experiment, write_csv
from .inference import build_cross_model, rank_models
from .logging_config import setup_logging, stop_logging
from .measurement import (
    DESIGN_SIC,
    DESIGN_WITNESS,
    Dataset,
    design_by_id,
    expected_dataset,
    simulate_dataset,
    split_dataset,
)
from .models import ExperimentConfig
from .states import model_m1, model_m2, pseudostate_from_counts, target_state
from .verification import LEVELS, verify

_LOG = logging.getLogger("aic_tomography.cli")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


# ---------------------------------------------------------------------------
# CLI parsing
# ---------------------------------------------------------------------------

def _parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    p = argparse.ArgumentParser(
        prog="aic-tomography",
        description="Simulate measurements on noisy Dicke states, rank few-parameter models by AIC, and estimate negativities.",
        epilog="""
Examples:
  Reproduce a figure table:
    %(prog)s simulate --config configs/fig1a.json --N 1000 10000 --out results/fig1a.csv

  Store a witness dataset and rank phase guesses on it:
    %(prog)s sample --design witness --N 1000 --seed 7 --out data.json
    %(prog)s rank --data data.json --phi 0 0.5236 1.0472

  Posterior of N2 under the cross-modeled two-parameter model:
    %(prog)s posterior --data data.json --model m2 --which N2 --out-prefix results/n2
        """,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--debug", action="store_true", help="Verbose logging")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="Run a figure experiment from a JSON config")
    sim.add_argument("--config", type=Path, required=True, help="Experiment config (JSON)")
    sim.add_argument("--N", type=int, nargs="+", dest="Ns", help="Override the shot counts")
    sim.add_argument("--phi", type=float, nargs="+", dest="phis", help="Override the target phases")
    sim.add_argument("--seed", type=int, nargs="+", dest="seeds", help="Override the seeds")
    sim.add_argument("--out", dest="output", help="Override the CSV output path")

    smp = sub.add_parser("sample", help="Simulate one dataset of the true state")
    smp.add_argument("--design", choices=(DESIGN_SIC, DESIGN_WITNESS), default=DESIGN_WITNESS)
    smp.add_argument("--excitations", type=int, choices=(1, 2), default=2)
    smp.add_argument("--alpha", type=float, default=0.2, help="White-noise weight of the true state")
    smp.add_argument("--N", type=int, required=True, help="Total shots")
    smp.add_argument("--seed", type=int, default=0)
    smp.add_argument("--expected", action="store_true", help="Store exact expected counts instead of a sample")
    smp.add_argument("--out", type=Path, required=True, help="Dataset JSON path")

    def add_model_args(cmd: argparse.ArgumentParser) -> None:
        cmd.add_argument("--data", type=Path, required=True, help="Dataset JSON written by 'sample'")
        cmd.add_argument("--excitations", type=int, choices=(1, 2), default=2)
        cmd.add_argument("--model", choices=("m1", "m2"), default="m1",
                         help="m2 builds its base from one half of the data and scores the other half")
        cmd.add_argument("--seed", type=int, default=0, help="Split seed for m2")

    rnk = sub.add_parser("rank", help="Rank models against the FPM bound")
    add_model_args(rnk)
    rnk.add_argument("--phi", type=float, nargs="+", default=[0.0], help="Target phases, one model each")
    rnk.add_argument("--vary-phase", action="store_true", help="Fit the phase as an extra parameter (m1)")
    rnk.add_argument("--out", type=Path, help="Write the report JSON here instead of stdout")

    post = sub.add_parser("posterior", help="Negativity posterior on a stored dataset")
    add_model_args(post)
    post.add_argument("--phi", type=float, default=0.0)
    post.add_argument("--which", choices=MONOTONES, default="N0")
    post.add_argument("--grid-step", type=float, help="Posterior grid step")
    post.add_argument("--bins", type=int, help="Histogram bins")
    post.add_argument("--out-prefix", type=Path, required=True,
                      help="Writes <prefix>_hist.csv and <prefix>_summary.json")

    phys = sub.add_parser("physmap", help="PSD region of the observation-based model")
    phys.add_argument("--data", type=Path, help="Witness dataset JSON; simulated when omitted")
    phys.add_argument("--N", type=int, default=1000)
    phys.add_argument("--seed", type=int, default=0)
    phys.add_argument("--excitations", type=int, choices=(1, 2), default=2)
    phys.add_argument("--alpha", type=float, default=0.2)
    phys.add_argument("--phi", type=float, default=0.0)
    phys.add_argument("--grid-step", type=float, default=0.01)
    phys.add_argument("--out", type=Path, required=True, help="CSV with epsilon, q, physical")

    ver = sub.add_parser("verify", help="Run the built-in checks")
    ver.add_argument("--level", choices=LEVELS, default="quick")

    return p.parse_args(argv)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _load_dataset(path: Path) -> Dataset:
    try:
        return Dataset.from_json(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigInvalid(f"Dataset not found: {path}", {"data": "file not found"}) from exc
    except ValueError as exc:
        raise ConfigInvalid(f"Dataset is not valid: {path}", {"data": str(exc)}) from exc


def _cmd_simulate(args: argparse.Namespace) -> int:
    overrides = {"Ns": args.Ns, "phis": args.phis, "seeds": args.seeds, "output": args.output}
    config = ExperimentConfig.from_file(args.config, overrides)
    manifest = run_experiment(config)
    print(manifest.outputs[0])
    return EXIT_OK


def _cmd_sample(args: argparse.Namespace) -> int:
    rho = actual_state(args.excitations, args.alpha)
    design = design_by_id(args.design)
    try:
        design.shots_per_setting(args.N)
    except OddShotCount as exc:
        raise ConfigInvalid(str(exc), {"N": str(exc)}) from exc
    if args.expected:
        dataset = expected_dataset(rho, design, args.N)
    else:
        dataset = simulate_dataset(rho, design, args.N, args.seed)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(dataset.to_json() + "\n", encoding="utf-8")
    _LOG.info("Stored %s dataset with %d shots in %s", args.design, args.N, args.out)
    return EXIT_OK


def _families_and_data(args: argparse.Namespace, phis: List[float]):
    """M1 families on the whole dataset, or cross-modeled M2 families on the validation half."""
    dataset = _load_dataset(args.data)
    targets = [target_state(args.excitations, phi) for phi in phis]
    if args.model == "m1":
        vary = getattr(args, "vary_phase", False)
        return [model_m1(target, vary_phase=vary) for target in targets], dataset
    train, validation = split_dataset(dataset, 0.5, args.seed)
    families = [build_cross_model(train, target, dataset.design_id) for target in targets]
    return families, validation


def _cmd_rank(args: argparse.Namespace) -> int:
    phis = [0.0] if args.vary_phase else args.phi
    families, dataset = _families_and_data(args, phis)
    report = rank_models(families, dataset)
    text = report.model_dump_json(indent=2)
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return EXIT_OK


def _cmd_posterior(args: argparse.Namespace) -> int:
    families, dataset = _families_and_data(args, [args.phi])
    family = families[0]
    grid = posterior_over_params(family, dataset, args.grid_step)
    result = negativity_posterior(grid, family, args.which, args.bins)
    hist_path = Path(f"{args.out_prefix}_hist.csv")
    summary_path = Path(f"{args.out_prefix}_summary.json")
    write_csv(hist_path, ("bin_left", "bin_right", "weight"), result.histogram_rows())
    summary = result.summary.model_dump(include={"mean", "ci_low", "ci_high"})
    summary_path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    print(json.dumps(summary))
    return EXIT_OK


def _cmd_physmap(args: argparse.Namespace) -> int:
    if args.data:
        dataset = _load_dataset(args.data)
    else:
        rho = actual_state(args.excitations, args.alpha)
        dataset = simulate_dataset(rho, design_by_id(DESIGN_WITNESS), args.N, args.seed)
    family = model_m2(target_state(args.excitations, args.phi), pseudostate_from_counts(dataset))
    result = physicality_map(family, args.grid_step)
    write_csv(args.out, ("epsilon", "q", "physical"), result.rows())
    print(f"physical_fraction={result.physical_fraction:.12g}")
    return EXIT_OK


def _cmd_verify(args: argparse.Namespace) -> int:
    report = verify(args.level)
    print(report.to_table())
    failures = report.failures()
    if failures:
        _LOG.error("%d check(s) failed: %s", len(failures), ", ".join(c.name for c in failures))
        return EXIT_FAILED
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "sample": _cmd_sample,
    "rank": _cmd_rank,
    "posterior": _cmd_posterior,
    "physmap": _cmd_physmap,
    "verify": _cmd_verify,
}


# ---------------------------------------------------------------------------
# Main entry point
# ---------------------------------------------------------------------------

def main(argv: Optional[List[str]] = None) -> int:
    args = _parse_args(argv)
    setup_logging(args.debug or get_runtime_config().debug)
    try:
        return _COMMANDS[args.command](args)
    except ConfigInvalid as exc:
        _LOG.error("Configuration error: %s", exc)
        return EXIT_CONFIG
    except TomographyError as exc:
        _LOG.error("Run failed: %s", exc)
        return EXIT_FAILED
    finally:
        stop_logging()


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
