"""Command-line front end for the solver and the experiments.

Every subcommand reads an optional JSON run configuration, applies the flag
overrides and writes its results under ``--out``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from experiments.audit import experiment_eigen_audit
from experiments.comparisons import experiment_illprepared, experiment_wellprepared
from experiments.initial_data import build_initial_data
from experiments.presets import get_preset_names
from experiments.run_config import RunConfig, load_run_config
from solver.errors import SolverError
from solver.integrate import Model, Scheme, integrate
from solver.params import ModelParams
from solver.spectral_core import ReducedState, WaveIndex
from solver.state_io import read_state, write_state
from solver.wave_modes import (
    Branch,
    Flavor,
    decompose,
    decompose_soundproof,
    eigenvector,
    flavor_kinds,
    mode_gap_report,
    reconstruct,
)

logger = logging.getLogger(__name__)

VERSION = "0.1.0"
COMMANDS = ("modes", "simulate", "compare-wellprepared", "compare-illprepared", "audit", "project")


class UsageError(Exception):
    """Invalid combination of flags or an unreadable config file."""


def _index(text: str) -> WaveIndex:
    try:
        kx, ky, kz = (int(p) for p in text.split(","))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"index must be kx,ky,kz, got {text!r}") from e
    return WaveIndex(kx, ky, kz)


def _float_list(text: str) -> list[float]:
    try:
        return [float(p) for p in text.split(",") if p]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from e


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--preset", choices=get_preset_names(), help="Experiment scale")
    common.add_argument("--seed", type=int, help="Initial-data seed")
    common.add_argument("--resolution", help="N or NXxNYxNZ")
    common.add_argument(
        "--epsilon",
        type=float,
        action="append",
        help="Mach number; repeat to sweep in the compare commands",
    )
    common.add_argument("--nu", type=float, help="Stratification exponent in (0, 1/2)")
    common.add_argument("--sigma", type=float, help="Data exponent in (0, mu]")
    common.add_argument("--K", type=int, help="Truncation index of the ill-prepared metric")
    common.add_argument("--T", type=float, help="Final time")
    common.add_argument("--dt", type=float, help="Step size")
    common.add_argument("--scheme", choices=[s.value for s in Scheme], help="Time stepper")
    common.add_argument("--workers", type=int, help="Processes for the epsilon sweep")
    common.add_argument("--out", type=Path, default=Path("results"), help="Output directory (default: results)")
    common.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging level (default: WARNING)",
    )

    parser = argparse.ArgumentParser(
        prog="run_experiments",
        description="Pseudo-spectral compressible and soundproof stratified flow experiments",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    modes = sub.add_parser("modes", parents=[common], help="Eigenpairs and gaps at one wave index")
    modes.add_argument("--index", type=_index, default=WaveIndex(1, 0, 1), help="kx,ky,kz (default: 1,0,1)")

    simulate = sub.add_parser("simulate", parents=[common], help="Integrate one model and write its trajectory")
    simulate.add_argument("--model", choices=[m.value for m in Model], help="Model to integrate")
    simulate.add_argument("--snapshot", action="store_true", help="Also write the final state as final.stw")

    for name in ("compare-wellprepared", "compare-illprepared"):
        compare = sub.add_parser(name, parents=[common], help=f"Epsilon sweep ({name.split('-')[1]} data)")
        compare.add_argument("--plot", action="store_true", help="Write a log-log SVG plot")

    audit = sub.add_parser("audit", parents=[common], help="Eigenvalue pinching and gap-slope audit")
    audit.add_argument("--range", dest="index_range", type=int, help="Largest index per direction")
    audit.add_argument("--etas", type=_float_list, help="Comma-separated eta values")

    project = sub.add_parser("project", parents=[common], help="Branch projection of a .stw state")
    project.add_argument("--input", type=Path, required=True, help="State snapshot to project")
    project.add_argument(
        "--branches",
        default="mf,gw",
        help="Comma-separated branches to keep (default: mf,gw)",
    )
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge the config file (if any) with the flag overrides.

    Raises:
        UsageError: If the config file is missing or a value is invalid
    """
    try:
        config = load_run_config(args.config) if args.config else RunConfig()
    except FileNotFoundError as e:
        raise UsageError(str(e)) from e
    except (ValidationError, json.JSONDecodeError) as e:
        raise UsageError(f"Invalid config file {args.config}: {e}") from e

    data = config.model_dump(mode="json")
    params = data["params"]
    if args.epsilon:
        params["epsilon"] = args.epsilon[-1]
        data["epsilons"] = args.epsilon
    for flag in ("nu", "sigma"):
        if getattr(args, flag) is not None:
            params[flag] = getattr(args, flag)
    if args.seed is not None:
        data["spec"]["seed"] = args.seed
    for flag, key in (("preset", "preset"), ("resolution", "resolution"), ("K", "K"), ("workers", "workers")):
        if getattr(args, flag) is not None:
            data[key] = getattr(args, flag)
    if getattr(args, "model", None):
        data["model"] = args.model
    if getattr(args, "index_range", None) is not None:
        data["index_range"] = args.index_range
    if getattr(args, "etas", None):
        data["etas"] = args.etas

    overrides = {k: v for k, v in (("t_end", args.T), ("dt", args.dt), ("scheme", args.scheme)) if v is not None}
    try:
        merged = RunConfig.model_validate(data)
        if overrides:
            cfg = {**merged.resolved_cfg().model_dump(mode="json"), **overrides}
            merged = RunConfig.model_validate({**data, "cfg": cfg})
        return merged
    except (ValidationError, ValueError) as e:
        raise UsageError(str(e)) from e


def _write_json(path: Path, payload: dict[str, Any]) -> Path:
    path.write_text(json.dumps(payload, indent=2))
    print(f"Wrote {path}")
    return path


def _complex_list(values) -> list[list[float]]:
    return [[float(v.real), float(v.imag)] for v in values]


GAP_FIELDS = ("aw_freq_gap", "gw_freq_gap", "aw_vec_gap", "gw_vec_gap")
MODE_COLUMNS = ("kx", "ky", "kz", "eta", "flavor", "family", "branch", "omega", *GAP_FIELDS)


def _write_modes_csv(
    path: Path, index: WaveIndex, eta: float, pairs: list[dict[str, Any]], gaps: dict[str, float]
) -> Path:
    with path.open("w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=MODE_COLUMNS)
        writer.writeheader()
        for pair in pairs:
            row = {
                "kx": index.kx,
                "ky": index.ky,
                "kz": index.kz,
                "eta": repr(eta),
                "flavor": pair["flavor"],
                "family": pair["family"],
                "branch": pair["branch"],
                "omega": repr(pair["omega"]),
            }
            row.update({name: repr(gaps[name]) if name in gaps else "" for name in GAP_FIELDS})
            writer.writerow(row)
    return path


def run_modes(config: RunConfig, index: WaveIndex, out: Path) -> int:
    params = config.params
    eta = params.eta_value
    pairs = []
    for flavor in (Flavor.PERTURBED, Flavor.SOUNDPROOF, Flavor.PURE_ACOUSTIC):
        for kind in flavor_kinds(flavor):
            if not kind.admits(index):
                continue
            pair = eigenvector(kind, index, eta)
            pairs.append(
                {
                    "family": kind.family,
                    "flavor": flavor.value,
                    "branch": kind.branch.value,
                    "omega": pair.omega,
                    "vector": _complex_list(pair.vector),
                    "pressure": None if pair.pressure is None else _complex_list([pair.pressure])[0],
                }
            )
    gaps: dict[str, float] = {}
    if not index.horizontal_is_zero and index.kz != 0:
        report = mode_gap_report(index, eta)
        gaps = {name: getattr(report, name) for name in GAP_FIELDS}
        gaps.update(report.extras)
    payload: dict[str, Any] = {
        "index": [index.kx, index.ky, index.kz],
        "epsilon": params.epsilon,
        "nu": params.nu,
        "eta": params.eta,
        "modes": pairs,
    }
    if gaps:
        payload["gaps"] = gaps
    print(f"Wrote {_write_modes_csv(out / 'modes.csv', index, params.eta, pairs, gaps)}")
    _write_json(out / "modes.json", payload)
    return 0


def run_simulate(config: RunConfig, out: Path, snapshot: bool) -> int:
    params = config.params
    resolution = config.resolved_resolution()
    cfg = config.resolved_cfg()
    data = build_initial_data(config.spec, params, resolution)
    initial = {
        Model.FULL: data.full,
        Model.SOUNDPROOF: data.soundproof,
        Model.INTERMEDIATE: data.intermediate,
    }[config.model]
    print(f"Integrating {config.model.value} model on {resolution} to t={cfg.t_end} (dt={cfg.dt})")
    trajectory = integrate(config.model, initial, cfg, params)
    csv_path = trajectory.to_csv(out / "trajectory.csv")
    print(f"Wrote {csv_path}")
    summary = {
        "version": VERSION,
        "model": config.model.value,
        "resolution": str(resolution),
        "params": params.model_dump(mode="json"),
        "cfg": cfg.model_dump(mode="json"),
        "samples": len(trajectory),
        "final": {name: values[-1] for name, values in trajectory.diagnostics.items()},
    }
    if snapshot:
        path = write_state(
            out / "final.stw", trajectory.final_state, cfg.t_end, {"model": config.model.value}, params=params
        )
        summary["snapshot"] = path.name
        print(f"Wrote {path}")
    _write_json(out / "simulate.json", summary)
    return 0


def run_compare(config: RunConfig, out: Path, ill: bool, plot: bool) -> int:
    params = config.params
    resolution = config.resolved_resolution()
    if ill and config.K > resolution.max_resolved_index:
        raise UsageError(
            f"--K {config.K} exceeds the largest resolved index {resolution.max_resolved_index} of {resolution}"
        )
    common = dict(
        epsilons=config.resolved_epsilons(),
        nu=params.nu,
        sigma=params.sigma,
        resolution=resolution,
        T=config.resolved_cfg().t_end,
        spec=config.spec,
        params=params,
        cfg=config.resolved_cfg(),
        workers=config.workers,
    )
    if ill:
        table = experiment_illprepared(K=config.K, **common)
    else:
        table = experiment_wellprepared(**common)
    stem = table.name
    print(f"Wrote {table.to_csv(out / f'{stem}.csv')}")
    _write_json(out / f"{stem}.json", table.to_dict())
    for name, fit in table.fits().items():
        print(f"{name}: O(eps^{fit.slope:.2f} +- {fit.half_width:.2f})")
    if plot:
        print(f"Wrote {table.plot_svg(out / f'{stem}.svg', ['sup_error'])}")
    return 0


def run_audit(config: RunConfig, out: Path) -> int:
    report = experiment_eigen_audit(config.index_range, config.etas)
    print(f"Wrote {report.to_csv(out / 'gaps.csv')}")
    report.to_json(out / "audit.json")
    print(f"Wrote {out / 'audit.json'}")
    for name, fit in report.slopes.items():
        print(f"{name}: slope {fit.slope:.3f}")
    if not report.passed:
        print(
            f"{len(report.failures)} bound failure(s); slope failures: {report.slope_failures or 'none'}",
            file=sys.stderr,
        )
        return 1
    return 0


def run_project(config: RunConfig, source: Path, branches: str, out: Path) -> int:
    params: ModelParams = config.params
    try:
        kept = [Branch(b.strip()) for b in branches.split(",") if b.strip()]
    except ValueError as e:
        raise UsageError(f"Unknown branch in {branches!r}") from e
    state, header = read_state(source)
    if isinstance(state, ReducedState):
        dec = decompose_soundproof(state, params.eta)
    else:
        dec = decompose(state, params.eta)
    projected = reconstruct(dec.select(kept))
    path = write_state(
        out / "projected.stw",
        projected,
        header.get("t", 0.0),
        {"source": source.name, "branches": [b.value for b in kept]},
        params=params,
    )
    print(f"Wrote {path}")
    present = {fam.kind.branch for fam in dec.basis.families}
    norms = {branch.value: dec.branch_norm(branch) for branch in Branch if branch in present}
    _write_json(out / "branch_norms.json", {"eta": params.eta, "norms": norms})
    return 0


def cli_main(argv: Sequence[str] | None = None) -> int:
    """Run one subcommand.

    Returns:
        0 on success, 1 on numerical failure or a failed audit, 2 on usage errors
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = resolve_config(args)
        out: Path = args.out
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "modes":
            return run_modes(config, args.index, out)
        if args.command == "simulate":
            return run_simulate(config, out, args.snapshot)
        if args.command in ("compare-wellprepared", "compare-illprepared"):
            return run_compare(config, out, args.command == "compare-illprepared", args.plot)
        if args.command == "audit":
            return run_audit(config, out)
        return run_project(config, args.input, args.branches, out)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except SolverError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    except (ValueError, ArithmeticError) as e:
        logger.debug("Run failed", exc_info=True)
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
