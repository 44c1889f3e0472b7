"""Command-line front end: simulate, generate, select, fit.

Configuration comes from an INI file (see docs/config.example.ini) with
flat key/value sections; command-line flags override it. All numeric
output is written as CSV or JSON with shortest round-trip float
formatting and no timestamps, so identical inputs give byte-identical
files.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical
failure (non-convergence, required rank not met, integration blow-up).
"""

from __future__ import annotations

import argparse
import configparser
import csv
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import seirs
from .data import DataParseError, NoiseSpec, generate, read_dataset_csv, write_dataset_csv
from .fitting import FitConfig, fit, write_fit_report, write_residuals_csv
from .linalg import RankDeficient
from .models import ModelSystem, simulate_with_output
from .ode import IntegrationError, IntegratorConfig, TimeGrid
from .subsets import (
    SubsetSpec,
    feasibility_cut,
    sweep_subsets,
    write_report_csv,
    write_scatter_csv,
)


class ConfigError(ValueError):
    """Bad or incomplete run configuration."""


@dataclass
class ModelEntry:
    system: ModelSystem
    nominal: dict[str, float]
    bounds: dict[str, tuple[float, float]]


MODELS = {
    "seirs": ModelEntry(
        system=seirs.SEIRS,
        nominal=seirs.NOMINAL.to_parameter_set().as_dict(),
        bounds=seirs.default_bounds(),
    ),
}

DEFAULTS = {
    "model": "seirs",
    "t0": 0.0,
    "span": 2.5,
    "cadence": 12,
    "sigma0_sq": seirs.SIGMA0_SQ,
    "seed": 0,
    "j_min": 1,
    "j_max": 5,
    "kappa_max": 1e11,
    "alpha_max": 1.0,
    "rel_tol": 1e-8,
    "abs_tol": 1e-10,
    "max_step": float("inf"),
    "max_steps": 100_000,
    "max_iterations": 200,
    "gradient_tol": 1e-8,
    "step_tol": 1e-10,
    "n_jobs": 1,
    "out": "out",
}


@dataclass
class RunConfig:
    model_name: str
    params: dict[str, float]
    grid: TimeGrid
    sigma0_sq: float
    seed: int
    j_min: int
    j_max: int
    kappa_max: float
    alpha_max: float
    integrator: IntegratorConfig
    max_iterations: int
    gradient_tol: float
    step_tol: float
    n_jobs: int
    out_dir: Path

    @property
    def model(self) -> ModelEntry:
        return MODELS[self.model_name]


def _get(section, key, cast, errors: list[str]):
    raw = section.get(key)
    if raw is None:
        return None
    try:
        return cast(raw)
    except ValueError:
        errors.append(f"field {key!r}: cannot parse {raw!r}")
        return None


def load_config(path: str | None, overrides: argparse.Namespace) -> RunConfig:
    """Merge defaults, INI file, and command-line overrides into a RunConfig."""
    ini = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    ini.optionxform = str  # parameter names are case-sensitive (S0, N, L, ...)
    if path is not None:
        if not Path(path).exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            ini.read(path)
        except configparser.Error as err:
            raise ConfigError(f"cannot parse config: {err}") from None

    errors: list[str] = []
    get = lambda sec, key, cast: _get(ini[sec], key, cast, errors) if ini.has_section(sec) else None

    model_name = (get("model", "name", str) or DEFAULTS["model"]).strip().lower()
    if model_name not in MODELS:
        raise ConfigError(f"field 'name': unknown model {model_name!r} (known: {sorted(MODELS)})")
    entry = MODELS[model_name]

    params = dict(entry.nominal)
    if ini.has_section("parameters"):
        section = ini["parameters"]
        unknown = [k for k in section if k not in entry.nominal]
        if unknown:
            raise ConfigError(f"field {unknown[0]!r}: not a parameter of model {model_name!r}")
        missing = [k for k in entry.nominal if k not in section]
        if missing:
            raise ConfigError(
                f"field {missing[0]!r}: [parameters] must list every parameter "
                f"of model {model_name!r} (missing: {', '.join(missing)})"
            )
        for k in entry.nominal:
            v = _get(section, k, float, errors)
            if v is not None:
                params[k] = v

    t0 = get("grid", "t0", float)
    span = get("grid", "span", float)
    cadence = get("grid", "cadence", int)
    if overrides.grid is not None:
        t0, span, cadence = _parse_grid_flag(overrides.grid)
    t0 = DEFAULTS["t0"] if t0 is None else t0
    span = DEFAULTS["span"] if span is None else span
    cadence = DEFAULTS["cadence"] if cadence is None else cadence

    sigma0_sq = get("noise", "sigma0_sq", float)
    seed = get("noise", "seed", int)
    if overrides.seed is not None:
        seed = overrides.seed

    def pick(value, key):
        return DEFAULTS[key] if value is None else value

    try:
        integ = IntegratorConfig(
            rel_tol=pick(get("integrator", "rel_tol", float), "rel_tol"),
            abs_tol=pick(get("integrator", "abs_tol", float), "abs_tol"),
            max_step=pick(get("integrator", "max_step", float), "max_step"),
            max_steps=pick(get("integrator", "max_steps", int), "max_steps"),
        )
    except ValueError as err:
        raise ConfigError(f"integrator: {err}") from None

    out_dir = overrides.out or get("output", "directory", str) or DEFAULTS["out"]

    if errors:
        raise ConfigError("; ".join(errors))

    try:
        grid = TimeGrid.regular(t0, span, cadence)
    except ValueError as err:
        raise ConfigError(f"grid: {err}") from None

    cfg = RunConfig(
        model_name=model_name,
        params=params,
        grid=grid,
        sigma0_sq=sigma0_sq if sigma0_sq is not None else DEFAULTS["sigma0_sq"],
        seed=seed if seed is not None else DEFAULTS["seed"],
        j_min=pick(get("search", "j_min", int), "j_min"),
        j_max=pick(get("search", "j_max", int), "j_max"),
        kappa_max=pick(get("search", "kappa_max", float), "kappa_max"),
        alpha_max=pick(get("search", "alpha_max", float), "alpha_max"),
        integrator=integ,
        max_iterations=pick(get("fit", "max_iterations", int), "max_iterations"),
        gradient_tol=pick(get("fit", "gradient_tol", float), "gradient_tol"),
        step_tol=pick(get("fit", "step_tol", float), "step_tol"),
        n_jobs=pick(get("search", "n_jobs", int), "n_jobs"),
        out_dir=Path(out_dir),
    )
    if cfg.sigma0_sq < 0:
        raise ConfigError("field 'sigma0_sq': must be nonnegative")
    _validate_params(cfg)
    return cfg


def _validate_params(cfg: RunConfig) -> None:
    if cfg.model_name == "seirs":
        try:
            seirs.SeirsParameters(**cfg.params)
        except (TypeError, ValueError) as err:
            raise ConfigError(f"parameters: {err}") from None


def _parse_grid_flag(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--grid expects t0:span:cadence, got {text!r}")
    try:
        return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"--grid expects numeric t0:span:cadence, got {text!r}") from None


def _theta(cfg: RunConfig) -> np.ndarray:
    names = cfg.model.system.param_names
    return np.array([cfg.params[n] for n in names])


def _subset_from_names(cfg: RunConfig, names_csv: str) -> SubsetSpec:
    names = tuple(n.strip() for n in names_csv.split(",") if n.strip())
    known = cfg.model.system.param_names
    for n in names:
        if n not in known:
            raise ConfigError(f"field 'subset': unknown parameter {n!r}")
    fixed = {n: cfg.params[n] for n in known if n not in names}
    return SubsetSpec(active=names, fixed=fixed)


def cmd_simulate(cfg: RunConfig) -> int:
    """Write trajectory.csv (t and state columns) and incidence.csv (t, z)."""
    traj, z = simulate_with_output(cfg.model.system, _theta(cfg), cfg.grid, cfg.integrator)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    state_names = ["S", "E", "I", "R"] if cfg.model_name == "seirs" else [
        f"x{i}" for i in range(cfg.model.system.state_dim)
    ]
    with (cfg.out_dir / "trajectory.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + state_names)
        for t, row in zip(traj.times, traj.states):
            writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])
    with (cfg.out_dir / "incidence.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "z"])
        for t, v in zip(cfg.grid.points, z):
            writer.writerow([repr(float(t)), repr(float(v))])
    print(f"wrote {cfg.out_dir / 'trajectory.csv'} and {cfg.out_dir / 'incidence.csv'}")
    return 0


def cmd_generate(cfg: RunConfig) -> int:
    """Write a synthetic dataset data_seed{S}.csv at the configured noise level."""
    noise = NoiseSpec(sigma0=float(np.sqrt(cfg.sigma0_sq)), seed=cfg.seed)
    dataset = generate(cfg.model.system, _theta(cfg), cfg.grid, noise, cfg.integrator)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.out_dir / f"data_seed{cfg.seed}.csv"
    write_dataset_csv(dataset, path)
    print(f"wrote {path} ({dataset.n} observations)")
    return 0


def cmd_select(cfg: RunConfig) -> int:
    """Screen subsets for p = 3+j_min .. 3+j_max; write ranked and scatter CSVs."""
    if not 1 <= cfg.j_min <= cfg.j_max <= 7:
        raise ConfigError("field 'j_min'/'j_max': need 1 <= j_min <= j_max <= 7")
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    feasible_lines = []
    for j in range(cfg.j_min, cfg.j_max + 1):
        p = j + 3
        reports = sweep_subsets(
            j, cfg.params, cfg.sigma0_sq, cfg.grid, cfg.integrator,
            model=cfg.model.system, n_jobs=cfg.n_jobs,
        )
        write_report_csv(reports, cfg.out_dir / f"subsets_p{p}.csv")
        write_scatter_csv(reports, cfg.out_dir / f"scatter_p{p}.csv")
        for r in feasibility_cut(reports, cfg.kappa_max, cfg.alpha_max):
            feasible_lines.append(
                f"  {r.subset.label:42s} kappa={r.kappa:12.3e}  alpha={r.score:12.3e}"
            )
        n_ok = sum(r.rank_ok for r in reports)
        print(f"p={p}: {len(reports)} subsets, {n_ok} full rank "
              f"-> {cfg.out_dir / f'subsets_p{p}.csv'}")
    print(f"\nfeasible subsets (kappa <= {cfg.kappa_max:g}, alpha <= {cfg.alpha_max:g}):")
    print("\n".join(feasible_lines) if feasible_lines else "  none")
    return 0


def cmd_fit(cfg: RunConfig, data_path: str, subset_csv: str) -> int:
    """Fit the subset to a dataset; write fit_report.json and residuals.csv."""
    dataset = read_dataset_csv(data_path)
    subset = _subset_from_names(cfg, subset_csv)
    fc = FitConfig.for_subset(
        subset, cfg.params, cfg.model.bounds,
        max_iterations=cfg.max_iterations,
        gradient_tol=cfg.gradient_tol,
        step_tol=cfg.step_tol,
    )
    result = fit(dataset, cfg.model.system, subset, fc, cfg.integrator, t0=cfg.grid.t0)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_fit_report(result, cfg.out_dir / "fit_report.json")
    write_residuals_csv(result, cfg.out_dir / "residuals.csv")

    print(f"subset {subset.label}: converged={result.converged} "
          f"iterations={result.iterations} J={result.objective:.6e} "
          f"sigma_hat_sq={result.sigma_hat_sq:.6e}")
    header = f"{'parameter':>10s} {'estimate':>14s} {'std error':>14s} {'cv':>12s}"
    print(header)
    for i, name in enumerate(result.param_names):
        se = f"{result.se[i]:14.6e}" if result.se is not None else " " * 14
        cv = f"{result.cv[i]:12.4e}" if result.cv is not None else " " * 12
        print(f"{name:>10s} {result.estimate[i]:14.6e} {se} {cv}")
    print(f"wrote {cfg.out_dir / 'fit_report.json'} and {cfg.out_dir / 'residuals.csv'}")
    return 0 if result.converged else 2


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 on usage errors, matching the CLI contract."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


_EPILOG = """\
configuration file sections and defaults (INI; flags override):
  [model]       name = seirs
  [parameters]  all model parameters (all-or-nothing; SEIRS nominal otherwise)
  [grid]        t0 = 0.0, span = 2.5, cadence = 12   (observations per year)
  [noise]       sigma0_sq = 500.0, seed = 0
  [search]      j_min = 1, j_max = 5, kappa_max = 1e11, alpha_max = 1.0, n_jobs = 1
  [integrator]  rel_tol = 1e-8, abs_tol = 1e-10, max_step = inf, max_steps = 100000
  [fit]         max_iterations = 200, gradient_tol = 1e-8, step_tol = 1e-10
  [output]      directory = out
an annotated example lives in docs/config.example.ini
"""


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="identifit",
        description="Parameter-subset identifiability screening and OLS fitting "
                    "for ODE models.",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (
        ("simulate", "integrate the model and write trajectory/incidence CSVs"),
        ("generate", "write a seeded synthetic dataset CSV"),
        ("select", "run the subset screening sweep and write ranked CSVs"),
        ("fit", "solve the least-squares inverse problem for one subset"),
    ):
        p = sub.add_parser(name, help=doc, description=doc)
        p.add_argument("--config", help="INI configuration file")
        p.add_argument("--out", help="output directory (default: out)")
        p.add_argument("--seed", type=int, help="noise seed (generate)")
        p.add_argument("--grid", help="t0:span:cadence, e.g. 0:2.5:12")
        if name == "fit":
            p.add_argument("--data", required=True, help="dataset CSV (t,y)")
            p.add_argument("--subset", required=True,
                           help="comma-separated active parameter names")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return int(err.code or 0)
    try:
        cfg = load_config(args.config, args)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "generate":
            return cmd_generate(cfg)
        if args.command == "select":
            return cmd_select(cfg)
        if args.command == "fit":
            return cmd_fit(cfg, args.data, args.subset)
        raise AssertionError(args.command)
    except (IntegrationError, RankDeficient) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 2
    except (ConfigError, DataParseError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
