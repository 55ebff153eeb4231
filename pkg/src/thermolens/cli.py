"""Command-line entry point.

Exit codes: 0 success, 1 configuration or validation error, 2 solver error
(degeneracy, non-convergence), 3 I/O error.
"""
import argparse
import datetime
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import parse_config, preset_names, read_config_text
from .coupled import ball_diagnostics, run_simulation
from .energy import HNEG_SURROGATE, gronwall_certificate, gronwall_check
from .errors import ConfigError, InvalidParameterError, SolverError
from .fileio import OutputError, read_timeseries, write_sidecar, write_snapshot, write_timeseries
from .materials import q_of_theta
from .verification import (
    continuous_dependence_probe,
    convergence_study,
    modal_heat_run,
    modal_wave_run,
    sampled_lipschitz_ratios,
)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("thermolens")


def _load(name):
    text = read_config_text(name)
    return text, parse_config(text)


def _out_dir(args):
    path = Path(args.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _say(args, *parts):
    if not args.quiet:
        print(*parts)


def cmd_simulate(args):
    text, cfg = _load(args.config)
    out = _out_dir(args)
    started = time.perf_counter()
    result = run_simulation(cfg)
    elapsed = time.perf_counter() - started

    write_timeseries(result.reports, out / "series.csv")
    snap_dir = out / "snapshots"
    snap_dir.mkdir(exist_ok=True)
    for i, snap in enumerate(result.snapshots):
        write_snapshot(snap.p, snap_dir / f"p_{i:05d}.tlns")
        write_snapshot(snap.theta, snap_dir / f"theta_{i:05d}.tlns")
    if result.diagnostics.max_abs_p is not None:
        write_snapshot(result.diagnostics.max_abs_p, out / "max_abs_p.tlns")

    diag = result.diagnostics
    meta = {
        "version": __version__,
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "config_source": str(args.config),
        "config": text,
        "elapsed_s": elapsed,
        "steps": diag.steps,
        "times": [s.t for s in result.snapshots],
        "min_alpha": diag.min_alpha,
        "min_alpha_location": diag.min_alpha_location,
        "clamp_events": diag.clamp_events,
        "picard_iterations_max": max(diag.picard_iterations, default=0),
        "surrogates": HNEG_SURROGATE,
        "error": None if result.ok else str(result.error),
    }
    if result.snapshots:
        ball = ball_diagnostics(cfg, result.snapshots)
        meta["ball"] = vars(ball)
    write_sidecar(meta, out / "run.json")

    if not result.ok:
        print(f"error: {result.error}", file=sys.stderr)
        return EXIT_SOLVER
    _say(args, f"{diag.steps} steps in {elapsed:.1f} s; outputs in {out}")
    _say(args, f"min(1 - 2k p) = {diag.min_alpha:.6g}; max Picard iterations = {meta['picard_iterations_max']}")
    return EXIT_OK


def _verify_mms(args, cfg):
    if cfg.mms is None:
        raise ConfigError("verify mms needs an [mms] section", key="mms")
    result = run_simulation(cfg)
    if not result.ok:
        raise result.error
    final = result.snapshots[-1]
    p_ex, _, _ = cfg.mms.pressure(cfg.grid, final.t)
    th_ex, _ = cfg.mms.temperature(cfg.grid, final.t)
    _say(args, f"t = {final.t:.6g}")
    _say(args, f"error_p     = {cfg.grid.lp(final.p - p_ex, 2):.6e}")
    _say(args, f"error_theta = {cfg.grid.lp(final.theta - th_ex, 2):.6e}")


def _verify_modal(args, cfg):
    medium = replace(cfg.medium, Theta_a=0.0)
    heat = modal_heat_run(cfg.grid, medium, 1.0, cfg.dt, cfg.t_end)
    c2 = float(q_of_theta(cfg.law, 0.0))
    wave = modal_wave_run(cfg.grid, c2, cfg.medium.b, 1.0, 0.0, cfg.dt, cfg.t_end)
    _say(args, f"heat mode relative error = {heat:.6e}")
    _say(args, f"wave mode relative error = {wave:.6e}")


def _verify_convergence(args, cfg):
    study = convergence_study(cfg, threads=args.threads)
    lines = ["level,n,h,dt,error_p,error_theta,error"]
    for r in study.rows:
        lines.append(",".join(
            f"{r[k]}" if k in ("level", "n") else f"{r[k]:.17g}"
            for k in ("level", "n", "h", "dt", "error_p", "error_theta", "error")
        ))
    lines.append(f"orders,,{study.spatial_order:.6g},{study.temporal_order:.6g},,,")
    table = "\n".join(lines) + "\n"
    if args.output_dir:
        path = _out_dir(args) / "convergence.csv"
        try:
            path.write_text(table)
        except OSError as exc:
            raise OutputError(exc.strerror or str(exc), path) from exc
    _say(args, table.rstrip("\n"))
    _say(args, f"spatial order = {study.spatial_order:.4f}")
    _say(args, f"temporal order = {study.temporal_order:.4f}")


def cmd_verify(args):
    _, cfg = _load(args.config)
    {"mms": _verify_mms, "modal": _verify_modal, "convergence": _verify_convergence}[args.kind](
        args, cfg
    )
    return EXIT_OK


def cmd_probe(args):
    _, cfg = _load(args.config)
    if args.kind == "lipschitz":
        for n in (cfg.grid.n[0], 2 * cfg.grid.n[0] + 1):
            grid = cfg.with_grid(n).grid
            ratios = sampled_lipschitz_ratios(grid, cfg.absorption, n_pairs=args.pairs)
            _say(args, f"n = {n}: max ratio = {ratios.max():.6e}, mean = {ratios.mean():.6e}")
        return EXIT_OK
    delta = args.delta
    out = continuous_dependence_probe(cfg, [delta, 2 * delta], threads=args.threads)
    for d, nrm, rat in zip(out["deltas"], out["norms"], out["ratios"]):
        _say(args, f"delta = {d:.3e}: difference norm = {nrm:.6e}, norm/delta = {rat:.6e}")
    n1, n2 = out["norms"]
    _say(args, f"norm(2 delta) / norm(delta) = {n2 / n1 if n1 > 0 else float('nan'):.6f}")
    return EXIT_OK


def cmd_report(args):
    reports = read_timeseries(args.series)
    if not reports:
        _say(args, "empty series")
        return EXIT_OK
    E = np.array([r.E_total for r in reports])
    _say(args, f"reports: {len(reports)}, t in [{reports[0].t:.6g}, {reports[-1].t:.6g}]")
    _say(args, f"acoustic energy: start {E[0]:.6e}, end {E[-1]:.6e}, max {E.max():.6e}")
    _say(args, f"heat energy: end {reports[-1].E_theta:.6e}")
    min_alpha = min(r.min_alpha for r in reports)
    _say(args, f"min(1 - 2k p) = {min_alpha:.6g}")
    if len(reports) >= 3:
        fit = gronwall_check(reports)
        cert = gronwall_certificate(reports, fit.fitted_C)
        _say(args, f"Gronwall fit: C = {fit.fitted_C:.6e} (worst step {fit.worst_step}); "
                   f"integrated bound holds at {int(cert.sum())}/{len(cert)} report times")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="thermolens", description="Coupled nonlinear acoustics and bioheat simulator."
    )
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-dir", default=None, help="directory for output files")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")
    common.add_argument("--threads", type=int, default=1, help="worker threads for studies")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="run a configuration")
    p.add_argument("config", help=f"config file or preset ({', '.join(preset_names())})")
    p.set_defaults(func=cmd_simulate, default_out="thermolens-out")

    p = sub.add_parser("verify", parents=[common], help="verification runs")
    p.add_argument("kind", choices=("mms", "modal", "convergence"))
    p.add_argument("config")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("probe", parents=[common], help="empirical property probes")
    p.add_argument("kind", choices=("lipschitz", "dependence"))
    p.add_argument("config")
    p.add_argument("--delta", type=float, default=1e-3, help="perturbation size for dependence")
    p.add_argument("--pairs", type=int, default=100, help="random pairs for lipschitz")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("report", parents=[common], help="summarize an energy series CSV")
    p.add_argument("series")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.output_dir is None and getattr(args, "default_out", None):
        args.output_dir = args.default_out
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, InvalidParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
