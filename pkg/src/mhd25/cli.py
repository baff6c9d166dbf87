"""Command-line entry point.

Subcommands: symbol, simulate, lp-check, decay-fit, consistency.  Every run
writes its delimited outputs, rendered figures, and a manifest under --out.
Exit codes: 0 success, 1 property-check failure, 2 unknown subcommand or bad
flags, 3 configuration error, 4 guard abort.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io as mio
from . import plots
from .config import ConfigError, ExperimentConfig, load_config, load_preset, preset_names
from .diagnostics import DiagnosticsRecorder, default_fit_window, fit_decay
from .dyadic import DyadicBlocks
from .grid import Grid
from .initial import InitialSpec, generate_initial
from .lpsuite import random_band_field, run_lp_suite
from .solver import simulate
from .symbol import sweep
from .system import chain_rule_residual

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 3
EXIT_GUARD = 4


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_experiment(args) -> ExperimentConfig:
    if getattr(args, "config", None) and getattr(args, "preset", None):
        raise ConfigError("give --config or --preset, not both")
    if getattr(args, "config", None):
        return load_config(args.config)
    if getattr(args, "preset", None):
        return load_preset(args.preset)
    raise ConfigError("a configuration is required (--config PATH or --preset NAME)")


def cmd_symbol(args) -> int:
    out = _out_dir(args)
    if args.r_min <= 0 or args.r_max <= args.r_min or args.points < 2:
        raise ConfigError("need 0 < r-min < r-max and at least two points")
    r_values = np.logspace(np.log10(args.r_min), np.log10(args.r_max), args.points)
    rows = sweep(r_values, threads=args.threads)
    header = ["r", "re1", "im1", "re2", "im2", "re3", "im3", "abscissa"]
    mio.write_csv(out / "symbol_sweep.csv", header, ([float(v) for v in row] for row in rows))
    plots.save_symbol_figure(rows, out / "symbol_branches.png")
    mio.write_manifest(
        out,
        "symbol",
        {"r_min": args.r_min, "r_max": args.r_max, "points": args.points},
    )
    worst = float(np.max(rows[:, 7]))
    print(f"symbol sweep: {args.points} radii, max spectral abscissa {worst:.3e}")
    return EXIT_OK


def _run_experiment(cfg: ExperimentConfig, out: Path, seed: int | None):
    initial_spec = cfg.initial
    if seed is not None:
        initial_spec = InitialSpec(**{**initial_spec.to_dict(), "seed": seed})
    grid = cfg.grid
    blocks = DyadicBlocks(grid)
    state0 = generate_initial(initial_spec, grid, blocks)
    h0 = mio.write_state(out / "initial_state", state0, cfg.params)
    recorder = DiagnosticsRecorder(blocks, cfg.sigma, cfg.gamma_list, cfg.params)
    companion = DiagnosticsRecorder(blocks, cfg.sigma, cfg.gamma_list, cfg.params)
    traj = simulate(state0, cfg.solver, cfg.params, recorder, companion_recorder=companion)
    return traj, recorder, blocks, h0


def cmd_simulate(args) -> int:
    out = _out_dir(args)
    cfg = _load_experiment(args)
    traj, recorder, _, h0 = _run_experiment(cfg, out, args.seed)
    series = recorder.series
    mio.write_csv(out / "diagnostics.csv", series.header(), series.rows())
    hashes = {"initial_state": h0}
    if traj.final is not None:
        hashes["final_state"] = mio.write_state(out / "final_state", traj.final, cfg.params)
    if traj.phi_consistency:
        mio.write_csv(
            out / "consistency.csv",
            ["t", "phi_error_l2"],
            ([t, e] for t, e in traj.phi_consistency),
        )
    plots.save_diagnostics_figure(series, out / "diagnostics.png")
    resolved = cfg.to_dict()
    if args.seed is not None:
        resolved["initial"]["seed"] = args.seed
    mio.write_manifest(out, "simulate", resolved, hashes)
    print(
        f"simulate: {cfg.solver.formulation}, t_end={cfg.solver.t_end:g}, "
        f"termination={traj.termination}, sup|a|={traj.sup_abs_a:.3e}"
    )
    if traj.termination != "completed":
        print(f"guard abort: {traj.termination}", file=sys.stderr)
        return EXIT_GUARD
    return EXIT_OK


def cmd_lp_check(args) -> int:
    out = _out_dir(args)
    grid = Grid(args.n, args.length_over_pi * np.pi)
    blocks = DyadicBlocks(grid)
    results = run_lp_suite(grid, blocks, seeds=args.seeds, rng_seed=args.seed or 0)
    mio.write_json(out / "lp_report.json", [r.to_dict() for r in results])
    plots.save_partition_figure(blocks.family, out / "partition.png")

    rng = np.random.default_rng(args.seed or 0)
    sample = random_band_field(grid, rng)
    from .dyadic import BesovParams

    for tag, params in {
        "b0_low": BesovParams(0.0, 1, range="low"),
        "b3_high": BesovParams(3.0, 1, range="high"),
        "bminus1_low": BesovParams(-1.0, np.inf, range="low"),
    }.items():
        mio.write_norm_report(out / f"norm_report_{tag}.json", blocks.besov_report(sample, params))
    mio.write_manifest(
        out, "lp-check", {"n": args.n, "length_over_pi": args.length_over_pi, "seeds": args.seeds}
    )
    failed = [r.name for r in results if not r.passed]
    for r in results:
        mark = "pass" if r.passed else "FAIL"
        print(f"[{mark}] {r.name}: observed {r.observed:.3e} {r.comparison} {r.bound:.3e}")
    return EXIT_OK if not failed else EXIT_CHECK_FAILED


def cmd_decay_fit(args) -> int:
    out = _out_dir(args)
    try:
        columns = mio.read_csv_columns(args.input)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read {args.input}: {exc}") from exc
    if args.column not in columns:
        raise ConfigError(
            f"column {args.column!r} not in {args.input}; have {sorted(columns)}"
        )
    times = columns["t"]
    values = columns[args.column]
    window = (
        (args.t_min, args.t_max)
        if args.t_min is not None and args.t_max is not None
        else default_fit_window(times)
    )
    from .diagnostics import FitError

    try:
        fit = fit_decay(times, values, window)
    except FitError as exc:
        raise ConfigError(str(exc)) from exc
    expected = -(args.sigma + args.gamma) / 2.0
    report = {
        "column": args.column,
        "exponent": fit.exponent,
        "stderr": fit.stderr,
        "window": list(fit.window),
        "n_points": fit.n_points,
        "sigma": args.sigma,
        "gamma": args.gamma,
        "expected_exponent": expected,
    }
    mio.write_json(out / "decay_fit.json", report)
    plots.save_decay_figure(times, values, fit, out / "decay_fit.png", label=args.column)
    mio.write_manifest(out, "decay-fit", report)
    print(
        f"decay-fit: {args.column} ~ (1+t)^({fit.exponent:.4f} +/- {fit.stderr:.4f}), "
        f"expected {expected:+.3f}"
    )
    return EXIT_OK


def cmd_consistency(args) -> int:
    out = _out_dir(args)
    if not getattr(args, "config", None) and not getattr(args, "preset", None):
        args.preset = "consistency"
    cfg = _load_experiment(args)
    if cfg.solver.formulation != "both":
        raise ConfigError("the consistency command needs solver.formulation = 'both'")
    traj, recorder, blocks, h0 = _run_experiment(cfg, out, args.seed)
    mio.write_csv(
        out / "consistency.csv",
        ["t", "phi_error_l2"],
        ([t, e] for t, e in traj.phi_consistency),
    )
    times = [t for t, _ in traj.phi_consistency]
    errors = [e for _, e in traj.phi_consistency]
    plots.save_consistency_figure(times, errors, out / "consistency.png")

    rng = np.random.default_rng(cfg.initial.seed + 1)
    residuals = []
    for _ in range(args.residual_states):
        spec = InitialSpec(
            kind="random_spectrum",
            amplitude=0.05,
            seed=int(rng.integers(2**31)),
            band=cfg.initial.band,
            calibrate_x0=True,
        )
        st = generate_initial(spec, cfg.grid, blocks)
        residuals.append(chain_rule_residual(st, cfg.params))
    report = {
        "max_phi_error_l2": traj.max_phi_error(),
        "max_chain_rule_residual": float(np.max(residuals)) if residuals else 0.0,
        "residual_states": args.residual_states,
        "termination": traj.termination,
    }
    mio.write_json(out / "consistency_report.json", report)
    mio.write_manifest(out, "consistency", cfg.to_dict(), {"initial_state": h0})
    print(
        f"consistency: sup_t ||phi_evolved - phi(a,theta,b)|| = "
        f"{report['max_phi_error_l2']:.3e}, max chain-rule residual = "
        f"{report['max_chain_rule_residual']:.3e}"
    )
    if traj.termination != "completed":
        print(f"guard abort: {traj.termination}", file=sys.stderr)
        return EXIT_GUARD
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mhd25",
        description="Pseudospectral simulator and frequency-space analysis for "
        "a 2.5D compressible viscous non-resistive MHD system.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the data seed")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads (wall time only, never results)")

    p = sub.add_parser("symbol", help="eigenvalue sweep of the linear symbol")
    common(p)
    p.add_argument("--r-min", type=float, default=1e-3)
    p.add_argument("--r-max", type=float, default=1e3)
    p.add_argument("--points", type=int, default=200)
    p.set_defaults(func=cmd_symbol)

    p = sub.add_parser("simulate", help="integrate the MHD system")
    common(p)
    p.add_argument("--config", help="experiment configuration JSON")
    p.add_argument("--preset", help=f"shipped preset ({', '.join(preset_names())})")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("lp-check", help="run the dyadic-decomposition property suite")
    common(p)
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--length-over-pi", type=float, default=2.0)
    p.add_argument("--seeds", type=int, default=100)
    p.set_defaults(func=cmd_lp_check)

    p = sub.add_parser("decay-fit", help="fit a decay exponent from a diagnostics CSV")
    common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--column", default="lam_gamma_norm[0]")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--t-min", type=float, default=None)
    p.add_argument("--t-max", type=float, default=None)
    p.set_defaults(func=cmd_decay_fit)

    p = sub.add_parser("consistency", help="dual-formulation cross check")
    common(p)
    p.add_argument("--config")
    p.add_argument("--preset")
    p.add_argument("--residual-states", type=int, default=100)
    p.set_defaults(func=cmd_consistency)

    return parser


def main(argv=None) -> int:
    from .grid import GridError
    from .initial import InitialDataError
    from .solver import SolverConfigError
    from .system import ParameterError

    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SolverConfigError, GridError, InitialDataError, ParameterError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
