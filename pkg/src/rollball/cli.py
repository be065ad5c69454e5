"""Command-line entry point.

Subcommands: trajectory (run one optimizer and dump its step records),
sweep (radius/step-size grid to CSV), verify (named geometry checks to
JSON reports), train (network benchmark with learning-curve CSV), and
offset (dump offset-profile samples for plotting).

Configuration comes from an optional JSON file (--config) plus flags;
flags win field by field. Exit codes: 0 success, 1 verify-check failure,
2 configuration error, 3 run error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import neural, serialize, verify
from .geometry import offset_profile
from .landscape import Landscape, catalogue_names, make_landscape
from .optimizer import (ProjectionConfig, Trajectory, WarmStart, run_gd,
                        run_rbo, run_sam, run_sgd)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_RUN = 3

# fixed seed fan-out offsets; one global seed reproduces everything
SWEEP_CELL_SEED_STRIDE = 7919


class ConfigError(ValueError):
    """Invalid or inconsistent configuration; maps to exit code 2."""


# ---------------------------------------------------------------------------
# configs
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    """One optimizer run. rho applies to rbo only, sam_rho to sam only;
    eta defaults depend on the optimizer when left unset."""

    landscape: str = "riemann"
    landscape_params: dict[str, Any] = field(default_factory=dict)
    optimizer: str = "rbo"
    theta0: list[float] | None = None
    rho: float | None = None
    eta: float | None = None
    steps: int = 100
    sam_rho: float | None = None
    seed: int | None = None
    gamma: float | None = None
    max_iters: int = 100
    grad_tol: float = 1e-8
    warm_start: str = "previous_contact"
    out: str = "trajectory.csv"
    format: str = "csv"

    def validated(self) -> "RunConfig":
        if self.optimizer not in ("rbo", "gd", "sgd", "sam"):
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        if self.rho is not None and self.optimizer != "rbo":
            raise ConfigError("rho applies to the rbo optimizer only")
        if self.sam_rho is not None and self.optimizer != "sam":
            raise ConfigError("sam_rho applies to the sam optimizer only")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"unknown output format {self.format!r}")
        if self.steps < 0:
            raise ConfigError("steps must be >= 0")
        try:
            WarmStart(self.warm_start)
        except ValueError:
            raise ConfigError(f"unknown warm_start {self.warm_start!r}") from None
        return self

    def filled(self) -> "RunConfig":
        """Apply per-optimizer hyperparameter defaults to unset fields."""
        cfg = RunConfig(**asdict(self))
        if cfg.optimizer == "rbo":
            cfg.rho = 1.0 if cfg.rho is None else cfg.rho
            cfg.eta = 6.0 if cfg.eta is None else cfg.eta
        elif cfg.optimizer == "sam":
            cfg.sam_rho = 0.05 if cfg.sam_rho is None else cfg.sam_rho
            cfg.eta = 0.01 if cfg.eta is None else cfg.eta
        else:
            cfg.eta = 0.01 if cfg.eta is None else cfg.eta
        return cfg

    def projection(self) -> ProjectionConfig:
        return ProjectionConfig(gamma=self.gamma, max_iters=self.max_iters,
                                grad_tol=self.grad_tol,
                                warm_start=WarmStart(self.warm_start))


@dataclass
class SweepConfig:
    """Radius/step-size grid. Radii are log-spaced; per radius the step
    sizes are log-spaced between eta_scale_min*rho and eta_scale_max*rho."""

    task: str = "landscape"
    landscape: str = "quadratic"
    landscape_params: dict[str, Any] = field(default_factory=dict)
    optimizer: str = "rbo"
    theta0: list[float] | None = None
    rho_min: float = 0.1
    rho_max: float = 10.0
    rho_count: int = 5
    eta_scale_min: float = 0.01
    eta_scale_max: float = 10.0
    eta_count: int = 5
    steps: int = 50
    epochs: int = 3
    batch_size: int = 128
    subset: int = 4096
    data_dir: str | None = None
    seed: int = 0
    parallelism: int = 1
    max_iters: int = 100
    out: str = "sweep.csv"

    def validated(self) -> "SweepConfig":
        if self.task not in ("landscape", "mlp"):
            raise ConfigError(f"unknown sweep task {self.task!r}")
        if self.rho_count < 1 or self.eta_count < 1:
            raise ConfigError("grid counts must be >= 1")
        if self.rho_min <= 0 or self.rho_min >= self.rho_max:
            raise ConfigError("need 0 < rho_min < rho_max")
        if self.eta_scale_min <= 0 or self.eta_scale_min >= self.eta_scale_max:
            raise ConfigError("need 0 < eta_scale_min < eta_scale_max")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")
        if self.optimizer != "rbo":
            raise ConfigError("sweeps grid over the ball radius; optimizer must be rbo")
        return self


def config_to_json(cfg) -> str:
    return json.dumps(asdict(cfg), indent=2, sort_keys=True) + "\n"


def config_from_mapping(cls, data: Mapping[str, Any]):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return cls(**data)


def _load_config_file(path: str | None) -> dict[str, Any]:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return data


def _merge_config(cls, file_data: Mapping[str, Any],
                  flag_data: Mapping[str, Any]):
    merged = dict(file_data)
    merged.update({k: v for k, v in flag_data.items() if v is not None})
    return config_from_mapping(cls, merged)


# ---------------------------------------------------------------------------
# shared flag parsing helpers
# ---------------------------------------------------------------------------

def _parse_param(text: str) -> tuple[str, Any]:
    if "=" not in text:
        raise ConfigError(f"--param expects KEY=VALUE, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        return key, json.loads(raw)
    except json.JSONDecodeError:
        return key, raw


def _parse_interval(text: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise ConfigError(f"--interval expects A:B, got {text!r}")
    try:
        a, b = float(parts[0]), float(parts[1])
    except ValueError:
        raise ConfigError(f"--interval expects numbers, got {text!r}") from None
    if a >= b:
        raise ConfigError(f"--interval needs A < B, got {text!r}")
    return a, b


def _parse_range(text: str) -> tuple[int, int]:
    parts = text.split(":")
    if len(parts) != 2:
        raise ConfigError(f"range flag expects A:B, got {text!r}")
    try:
        a, b = int(parts[0]), int(parts[1])
    except ValueError:
        raise ConfigError(f"range flag expects integers, got {text!r}") from None
    if a < 0 or a >= b:
        raise ConfigError(f"range flag needs 0 <= A < B, got {text!r}")
    return a, b


def _build_landscape(name: str, params: Mapping[str, Any]) -> Landscape:
    try:
        return make_landscape(name, params)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def _resolve_theta0(theta0: list[float] | None, landscape: Landscape) -> np.ndarray:
    if theta0 is None:
        return np.zeros(landscape.dim)
    arr = np.asarray(theta0, dtype=float)
    if arr.shape != (landscape.dim,):
        raise ConfigError(f"theta0 has {arr.size} coordinates but landscape "
                          f"{landscape.name!r} has dim {landscape.dim}")
    return arr


def _run_optimizer(cfg: RunConfig, landscape: Landscape,
                   theta0: np.ndarray) -> Trajectory:
    if cfg.optimizer == "rbo":
        return run_rbo(landscape, theta0, cfg.rho, cfg.eta, cfg.steps,
                       cfg.projection(), seed=cfg.seed)
    if cfg.optimizer == "gd":
        return run_gd(landscape, theta0, cfg.eta, cfg.steps)
    if cfg.optimizer == "sgd":
        return run_sgd(landscape, theta0, cfg.eta, cfg.steps, seed=cfg.seed)
    return run_sam(landscape, theta0, cfg.eta, cfg.sam_rho, cfg.steps,
                   seed=cfg.seed)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_trajectory(args: argparse.Namespace) -> int:
    flag_data = {
        "landscape": args.landscape,
        "landscape_params": dict(args.param) if args.param else None,
        "optimizer": args.optimizer,
        "theta0": args.theta0,
        "rho": args.rho, "eta": args.eta, "steps": args.steps,
        "sam_rho": args.sam_rho, "seed": args.seed,
        "gamma": args.gamma, "max_iters": args.max_iters,
        "grad_tol": args.grad_tol, "warm_start": args.warm_start,
        "out": args.out, "format": args.format,
    }
    cfg = _merge_config(RunConfig, _load_config_file(args.config), flag_data)
    cfg = cfg.validated().filled()
    landscape = _build_landscape(cfg.landscape, cfg.landscape_params)
    theta0 = _resolve_theta0(cfg.theta0, landscape)

    traj = _run_optimizer(cfg, landscape, theta0)
    if cfg.format == "csv":
        serialize.write_trajectory_csv(traj, cfg.out)
    else:
        serialize.write_trajectory_json(traj, cfg.out)
    last = traj.records[-1]
    print(f"{cfg.optimizer} on {landscape.name}: {len(traj.records)} records, "
          f"final loss {last.loss!r}, |theta| {float(np.linalg.norm(last.theta))!r} "
          f"-> {cfg.out}")
    if traj.error is not None:
        print(f"run aborted: {traj.error}", file=sys.stderr)
        return EXIT_RUN
    return EXIT_OK


def _sweep_grid(cfg: SweepConfig) -> list[tuple[int, float, float]]:
    """Flattened (cell_index, rho, eta) grid in deterministic order."""
    rhos = np.geomspace(cfg.rho_min, cfg.rho_max, cfg.rho_count)
    cells = []
    for i, rho in enumerate(rhos):
        etas = np.geomspace(cfg.eta_scale_min * rho, cfg.eta_scale_max * rho,
                            cfg.eta_count)
        for j, eta in enumerate(etas):
            cells.append((i * cfg.eta_count + j, float(rho), float(eta)))
    return cells


def _sweep_cell_landscape(cfg: SweepConfig, rho: float, eta: float,
                          seed: int) -> float:
    landscape = _build_landscape(cfg.landscape, cfg.landscape_params)
    theta0 = _resolve_theta0(cfg.theta0, landscape)
    traj = run_rbo(landscape, theta0, rho, eta, cfg.steps,
                   ProjectionConfig(max_iters=cfg.max_iters), seed=seed)
    if traj.error is not None:
        raise RuntimeError(traj.error)
    return traj.records[-1].loss


def _sweep_cell_mlp(cfg: SweepConfig, train, val, rho: float, eta: float,
                    seed: int) -> float:
    spec = neural.MlpSpec()
    _, stats = neural.train_mlp(spec, train, val, optimizer="rbo",
                                epochs=cfg.epochs, batch_size=cfg.batch_size,
                                eta=eta, rho=rho, seed=seed,
                                cfg=ProjectionConfig(max_iters=cfg.max_iters))
    return stats[-1].val_accuracy


def cmd_sweep(args: argparse.Namespace) -> int:
    flag_data = {
        "task": args.task,
        "landscape": args.landscape,
        "landscape_params": dict(args.param) if args.param else None,
        "theta0": args.theta0,
        "rho_min": args.rho_min, "rho_max": args.rho_max,
        "rho_count": args.rho_count,
        "eta_scale_min": args.eta_scale_min, "eta_scale_max": args.eta_scale_max,
        "eta_count": args.eta_count,
        "steps": args.steps, "epochs": args.epochs,
        "subset": args.subset, "data_dir": args.data_dir,
        "seed": args.seed, "parallelism": args.parallelism,
        "out": args.out,
    }
    cfg = _merge_config(SweepConfig, _load_config_file(args.config), flag_data)
    cfg = cfg.validated()

    if cfg.task == "mlp":
        train_full, test = neural.load_mnist(cfg.data_dir)
        train, val = train_full.split(50_000)
        if cfg.subset:
            train = train.subset(slice(0, cfg.subset))
    cells = _sweep_grid(cfg)

    def run_cell(cell: tuple[int, float, float]) -> tuple[float, float, float, str]:
        index, rho, eta = cell
        seed = cfg.seed + SWEEP_CELL_SEED_STRIDE * index
        try:
            if cfg.task == "landscape":
                metric = _sweep_cell_landscape(cfg, rho, eta, seed)
            else:
                metric = _sweep_cell_mlp(cfg, train, val, rho, eta, seed)
            return rho, eta, metric, ""
        except Exception as exc:  # cell failures stay in the grid as NaN
            return rho, eta, math.nan, str(exc)

    if cfg.parallelism == 1:
        results = [run_cell(c) for c in cells]
    else:
        with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
            results = list(pool.map(run_cell, cells))

    serialize.write_sweep_csv(results, cfg.out)
    failures = sum(1 for r in results if r[3])
    print(f"sweep: {len(results)} cells ({failures} failed) -> {cfg.out}")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    overrides = _load_config_file(args.config)
    names = args.checks or list(verify.available_checks())
    for name in names:
        if name not in verify.available_checks():
            raise ConfigError(f"unknown check {name!r}; available: "
                              f"{', '.join(verify.available_checks())}")
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)

    all_passed = True
    for name in names:
        report = verify.run_check(name, overrides.get(name, {}))
        serialize.write_check_report_json(report, out_dir / f"{name}.json")
        status = "PASS" if report.passed else "FAIL"
        print(f"{name}: {status} ({len(report.observations)} observations)")
        if not report.passed:
            all_passed = False
            for obs in report.observations:
                if not obs.ok:
                    print(f"  {obs.parameter} = {obs.value!r} "
                          f"exceeds {obs.bound!r}", file=sys.stderr)
    return EXIT_OK if all_passed else EXIT_CHECK_FAILED


def cmd_train(args: argparse.Namespace) -> int:
    optimizer = args.optimizer or "rbo"
    if optimizer not in ("rbo", "gd", "sgd", "sam"):
        raise ConfigError(f"unknown optimizer {optimizer!r}")
    if args.rho is not None and optimizer != "rbo":
        raise ConfigError("rho applies to the rbo optimizer only")
    if args.sam_rho is not None and optimizer != "sam":
        raise ConfigError("sam_rho applies to the sam optimizer only")
    eta = args.eta if args.eta is not None else (6.0 if optimizer == "rbo" else 0.01)
    epochs = args.epochs if args.epochs is not None else 10
    if epochs < 0:
        raise ConfigError("epochs must be >= 0")
    split = args.split if args.split is not None else 50_000

    train_full, _test = neural.load_mnist(args.data_dir)
    train, val = train_full.split(split)
    if args.subset_range is not None:
        a, b = _parse_range(args.subset_range)
        if b > train.n:
            raise ConfigError(f"subset range {a}:{b} exceeds the {train.n}-row "
                              "training split")
        train = train.subset(slice(a, b))

    spec = neural.MlpSpec()
    params, stats = neural.train_mlp(
        spec, train, val, optimizer=optimizer, epochs=epochs,
        batch_size=args.batch_size if args.batch_size is not None else 128,
        eta=eta, rho=args.rho if args.rho is not None else 1.0,
        sam_rho=args.sam_rho if args.sam_rho is not None else 0.05,
        seed=args.seed if args.seed is not None else 0,
        cfg=ProjectionConfig(max_iters=args.max_iters)
        if args.max_iters is not None else ProjectionConfig())

    out = args.out or "learning_curve.csv"
    serialize.write_learning_curve_csv(stats, out)
    last = stats[-1]
    print(f"{optimizer}: epoch {last.epoch} train loss {last.train_loss:.4f} "
          f"acc {last.train_accuracy:.4f} | val loss {last.val_loss:.4f} "
          f"acc {last.val_accuracy:.4f} -> {out}")
    return EXIT_OK


def cmd_offset(args: argparse.Namespace) -> int:
    params = dict(args.param) if args.param else {}
    landscape = _build_landscape(args.landscape or "riemann", params)
    if args.rho is None or args.rho <= 0:
        raise ConfigError("--rho must be given and positive")
    lo, hi = _parse_interval(args.interval or "0:6.283185307179586")
    theta_step = args.grid_step if args.grid_step is not None else 1e-3
    try:
        samples = offset_profile(landscape, args.rho, lo, hi, theta_step,
                                 h=args.h)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = args.out or "offset.csv"
    serialize.write_offset_csv(samples, out)
    print(f"offset of {landscape.name} at rho={args.rho:g}: "
          f"{samples.thetas.size} samples -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its fields")
    p.add_argument("--seed", type=int, help="global seed (fans out per component)")
    p.add_argument("--out", help="output path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rollball",
        description="Rolling-ball optimization and landscape geometry toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trajectory", help="run one optimizer, dump step records")
    _add_common(p)
    p.add_argument("--landscape", help=f"one of {', '.join(catalogue_names())}")
    p.add_argument("--param", action="append", type=_parse_param,
                   metavar="KEY=VALUE", help="landscape parameter (repeatable)")
    p.add_argument("--optimizer", choices=("rbo", "gd", "sgd", "sam"))
    p.add_argument("--theta0", type=float, nargs="+", metavar="X")
    p.add_argument("--rho", type=float, help="ball radius (rbo only)")
    p.add_argument("--eta", type=float, help="step size")
    p.add_argument("--steps", type=int, help="number of updates T")
    p.add_argument("--sam-rho", dest="sam_rho", type=float,
                   help="ascent radius (sam only)")
    p.add_argument("--gamma", type=float, help="inner projection step size")
    p.add_argument("--max-iters", dest="max_iters", type=int,
                   help="inner projection iteration cap")
    p.add_argument("--grad-tol", dest="grad_tol", type=float,
                   help="inner projection stop tolerance")
    p.add_argument("--warm-start", dest="warm_start",
                   choices=("previous_contact", "candidate_theta"))
    p.add_argument("--format", choices=("csv", "json"))
    p.set_defaults(handler=cmd_trajectory)

    p = sub.add_parser("sweep", help="radius/step-size grid to CSV")
    _add_common(p)
    p.add_argument("--task", choices=("landscape", "mlp"))
    p.add_argument("--landscape")
    p.add_argument("--param", action="append", type=_parse_param,
                   metavar="KEY=VALUE")
    p.add_argument("--theta0", type=float, nargs="+", metavar="X")
    p.add_argument("--rho-min", dest="rho_min", type=float)
    p.add_argument("--rho-max", dest="rho_max", type=float)
    p.add_argument("--rho-count", dest="rho_count", type=int)
    p.add_argument("--eta-scale-min", dest="eta_scale_min", type=float)
    p.add_argument("--eta-scale-max", dest="eta_scale_max", type=float)
    p.add_argument("--eta-count", dest="eta_count", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--subset", type=int, help="training subset size for mlp task")
    p.add_argument("--data-dir", dest="data_dir")
    p.add_argument("--parallelism", type=int)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("verify", help="run named checks, write JSON reports")
    _add_common(p)
    p.add_argument("checks", nargs="*",
                   help=f"subset of: {', '.join(verify.available_checks())} "
                        "(default: all)")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("train", help="train the network, write learning curve")
    _add_common(p)
    p.add_argument("--optimizer", choices=("rbo", "gd", "sgd", "sam"))
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--eta", type=float)
    p.add_argument("--rho", type=float, help="ball radius (rbo only)")
    p.add_argument("--sam-rho", dest="sam_rho", type=float)
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--data-dir", dest="data_dir",
                   help=f"IDX directory (default ${neural.DATA_DIR_ENV} or ./data)")
    p.add_argument("--split", type=int,
                   help="train/validation split point (default 50000)")
    p.add_argument("--subset-range", dest="subset_range", metavar="A:B",
                   help="train on rows A..B of the training split")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("offset", help="dump offset-profile samples")
    _add_common(p)
    p.add_argument("--landscape")
    p.add_argument("--param", action="append", type=_parse_param,
                   metavar="KEY=VALUE")
    p.add_argument("--rho", type=float)
    p.add_argument("--interval", metavar="A:B", help="theta interval (default 0:2pi)")
    p.add_argument("--grid-step", dest="grid_step", type=float,
                   help="theta sampling step (default 1e-3)")
    p.add_argument("--h", type=float, help="search lattice step "
                                           "(default min(rho/100, grid step))")
    p.set_defaults(handler=cmd_offset)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports bad flags itself
        code = exc.code if isinstance(exc.code, int) else EXIT_CONFIG
        return EXIT_CONFIG if code not in (EXIT_OK,) else code
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, RuntimeError, FloatingPointError, ValueError,
            KeyError) as exc:
        print(f"run error: {exc}", file=sys.stderr)
        return EXIT_RUN


if __name__ == "__main__":
    sys.exit(main())
