"""Command line entry point: ``quenchlab {validate-ic,run,convergence}``.

Exit codes: 0 ok, 1 configuration error, 2 hypothesis failure, 3 runtime
failure (solver stall, quench before the comparison time).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import io
from .analysis import (
    InsufficientPointsError,
    QuenchedEarlyError,
    check_envelopes,
    convergence_study,
    estimate_order,
    fit_quench_rate,
    fit_window,
    lower_bound_T,
)
from .config import ConfigError, load_config
from .ic import validate
from .integrate import NONE, run

logger = logging.getLogger("quenchlab")

EXIT_OK, EXIT_CONFIG, EXIT_HYPOTHESIS, EXIT_RUNTIME = 0, 1, 2, 3


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _output_dir(args, loaded):
    if args.output_dir is not None:
        return Path(args.output_dir)
    if loaded.experiment.output_dir is not None:
        return loaded.experiment.output_dir
    return Path("output")


def summarize(rec, quench, cfg):
    """Summary payload plus the fit-window mask (None when there is no fit)."""
    payload = {
        "termination": rec.termination,
        "step_count": rec.step_count,
        "final_time": rec.final_state.t if rec.final_state is not None else None,
        "quench": quench.to_dict(),
        "bounds": None,
        "rate_fit": None,
        "envelope": None,
        "ic_validation": rec.ic_report.to_dict() if rec.ic_report is not None else None,
        "diagnostics": rec.diagnostics,
    }
    side = quench.side
    if side == NONE and rec.ic_report is not None:
        side = rec.ic_report.predicted_quench_side
    if side in ("left", "right"):
        payload["bounds"] = lower_bound_T(side, cfg.problem, cfg.ic).to_dict()
    mask = None
    if quench.side != NONE:
        bounds = lower_bound_T(quench.side, cfg.problem, cfg.ic)
        try:
            fit = fit_quench_rate(rec, quench, cfg.window_decades, cfg.fit_floor)
            payload["rate_fit"] = fit.to_dict()
            payload["envelope"] = check_envelopes(rec, quench, bounds, cfg.window_decades, cfg.fit_floor).to_dict()
            mask, _ = fit_window(rec, quench.T_est, cfg.window_decades, cfg.fit_floor)
        except InsufficientPointsError as exc:
            payload["rate_fit_error"] = str(exc)
    return payload, mask


def cmd_validate_ic(args):
    try:
        loaded = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    cfg = loaded.experiment
    report = validate(cfg.ic, cfg.problem)
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK if report.hypotheses_ok else EXIT_HYPOTHESIS


def cmd_run(args):
    try:
        loaded = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    cfg = loaded.experiment
    out = _output_dir(args, loaded)
    out.mkdir(parents=True, exist_ok=True)
    started = _now()
    t0 = time.perf_counter()
    rec, quench = run(cfg)
    elapsed = time.perf_counter() - t0

    paths = {
        "trajectory": out / "trajectory.csv",
        "summary": out / "summary.json",
        "loglog": out / "loglog.csv",
    }
    payload, mask = summarize(rec, quench, cfg)
    io.write_trajectory(rec, paths["trajectory"])
    if mask is None:
        mask = np.zeros(len(rec), dtype=bool)
    io.write_loglog(rec, quench, mask, paths["loglog"])
    io.write_json(paths["summary"], payload)
    _write_manifest(out, loaded, paths, started, elapsed)

    print(json.dumps({"termination": rec.termination, "quench": quench.to_dict(),
                      "rate_fit": payload["rate_fit"]}, indent=2))
    return EXIT_RUNTIME if rec.termination == "step_floor_stall" else EXIT_OK


def _write_manifest(out, loaded, paths, started, elapsed):
    manifest = {
        "config": loaded.raw,
        "config_path": str(loaded.source) if loaded.source else None,
        "artifacts": {k: str(p) for k, p in paths.items()},
        "started": started,
        "finished": _now(),
        "elapsed_seconds": elapsed,
        "version": f"quenchlab {__version__}",
    }
    # written last: its presence marks a complete run
    io.write_json(out / "manifest.json", manifest)


def _self_test():
    rng = np.random.default_rng(0)
    ref = rng.uniform(0.2, 0.8, 12)
    err = rng.uniform(1e-6, 1e-4, 12) * rng.choice([-1.0, 1.0], 12)
    first = estimate_order(ref + err, ref + err / 2.0, ref)
    second = estimate_order(ref + err, ref + err / 4.0, ref)
    return {"order_one": first.to_dict(), "order_two": second.to_dict()}


def cmd_convergence(args):
    if args.self_test:
        print(json.dumps(_self_test(), indent=2))
        return EXIT_OK
    if args.config is None:
        print("config error: --config is required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        loaded = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    cfg = loaded.experiment
    opts = loaded.analysis
    tau = opts.get("tau") or cfg.tau0
    t_compare = opts.get("t_compare")
    divisor = opts.get("ref_divisor") or 16
    if t_compare is None or not t_compare > 0.0:
        print("config error: [analysis] t_compare must be positive", file=sys.stderr)
        return EXIT_CONFIG
    if divisor < 4:
        print("config error: [analysis] ref_divisor must be at least 4", file=sys.stderr)
        return EXIT_CONFIG
    started = _now()
    t0 = time.perf_counter()
    try:
        report, _ = convergence_study(cfg.problem, cfg.ic, cfg.N, tau, t_compare, divisor)
    except QuenchedEarlyError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    payload = {"tau": tau, "t_compare": t_compare, "ref_divisor": divisor, "h": cfg.h, **report.to_dict()}
    out = _output_dir(args, loaded)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "convergence.json"
    io.write_json(path, payload)
    _write_manifest(out, loaded, {"convergence": path}, started, time.perf_counter() - t0)
    print(json.dumps({k: payload[k] for k in ("tau", "h", "median_order")}, indent=2))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="quenchlab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate-ic", help="check an initial condition against the hypotheses")
    p.add_argument("--config", required=True)
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_validate_ic)

    p = sub.add_parser("run", help="simulate to quench and write trajectory and summary")
    p.add_argument("--config", required=True)
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("convergence", help="observed temporal order from three fixed-step runs")
    p.add_argument("--config")
    p.add_argument("--output-dir")
    p.add_argument("--self-test", action="store_true", help="run on synthetic errors of order 1 and 2")
    p.set_defaults(func=cmd_convergence)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
