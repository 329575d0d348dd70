"""Command-line interface.

Exit codes: 0 success, 1 validation failure, 2 runtime singularity or
divergence, 3 verification failure.  ``SALVOGUIDE_OUTPUT_ROOT`` sets the
default directory under which run folders are created.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .errors import ConfigError, SalvoError
from .scenario import PRESETS, dump_scenario, parse_scenario, preset
from .sim import SimTrace, run_scenario
from .verification import check_stationarity, lyapunov_monitor

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_VERIFICATION = 0, 1, 2, 3
OUTPUT_ROOT_ENV = "SALVOGUIDE_OUTPUT_ROOT"

# sweepable parameters -> (config field, caster)
SWEEP_PARAMS = {
    "P1": ("P1", float), "P2": ("P2", float), "segments": ("segments", int),
    "dt": ("dt", float), "tf": ("tf", float), "kill_radius": ("kill_radius", float),
    "observer_decay": ("observer_decay", float), "radial_bias": ("radial_bias", float),
}


def output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "salvoguide-runs"))


def _reports(trace):
    opt = check_stationarity(trace)
    lyap = lyapunov_monitor(trace) if trace.A_T_hat is not None else None
    return opt, lyap


def _execute(cfg, out_dir, config_path=None, every=1, plots=True):
    from .output import emit_outputs

    trace = run_scenario(cfg)
    manifest = emit_outputs(trace, _reports(trace), out_dir, config_path=config_path,
                            every=every, plots=plots)
    return trace, manifest


def _report_run(trace, manifest):
    s = manifest.summary
    print(f"{trace.config.name}: law={trace.law} status={trace.status} t_end={s['t_end_s']:g} s")
    print(f"  terminal consensus error: {s['terminal_consensus_error_km']:.3e} km")
    if s.get("hit_spread_s") is not None:
        print(f"  hit spread: {s['hit_spread_s']:.6g} s")
    for d in trace.diagnostics:
        print(f"  diagnostic: {d}")
    print(f"  artifacts: {manifest.output_dir}")
    return EXIT_OK if trace.complete else EXIT_RUNTIME


def cmd_run(args):
    cfg = parse_scenario(args.config)
    out = Path(args.out) if args.out else output_root() / cfg.name
    return _report_run(*_execute(cfg, out, args.config, args.every, not args.no_plots))


def cmd_preset(args):
    cfg = preset(args.name)
    text = dump_scenario(cfg)
    if args.output:
        Path(args.output).write_text(text)
    elif not args.run:
        sys.stdout.write(text)
    if args.run:
        out = Path(args.out) if args.out else output_root() / cfg.name
        return _report_run(*_execute(cfg, out, None, args.every, not args.no_plots))
    return EXIT_OK


def cmd_verify(args):
    trace = SimTrace.load(args.trace)
    opt, lyap = _reports(trace)
    ok = True
    print(f"trace: law={trace.law} status={trace.status} samples={trace.t.size}")
    print(f"  J = {opt.J:.10g}   H(tf) = {opt.H_terminal:.3e}")
    print(f"  stationarity max |P1^2 dR + rho_R| = {np.max(opt.stationarity_R):.3e}, "
          f"|P2^2 dV_lam + rho_Vlam| = {np.max(opt.stationarity_Vlam):.3e}")
    print(f"  costate ODE residual max = {max(np.max(opt.costate_R_residual), np.max(opt.costate_Vlam_residual)):.3e}")
    print(f"  convex: {opt.convex}")
    if trace.law == "known":
        ok = opt.passed(args.tol)
    if lyap is not None:
        print(f"  Lyapunov monotone: {lyap.monotone} (max increase {lyap.max_increase:.3e}), "
              f"bound ok: {lyap.bound_ok} (max excess {lyap.max_bound_excess:.3e})")
        ok = ok and lyap.monotone
    if not trace.complete:
        print(f"  trace is {trace.status}: {'; '.join(trace.diagnostics)}")
        return EXIT_RUNTIME
    print("verification " + ("passed" if ok else "FAILED"))
    return EXIT_OK if ok else EXIT_VERIFICATION


def parse_range(text, cast=float):
    """``start:stop:count`` (inclusive linspace) or a comma list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range {text!r} must be start:stop:count")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        values = np.linspace(start, stop, count)
    else:
        values = [float(v) for v in text.split(",") if v.strip()]
    return [cast(v) for v in values]


def _sweep_one(job):
    cfg, out_dir, plots = job
    try:
        trace, manifest = _execute(cfg, out_dir, plots=plots)
    except SalvoError as exc:
        return {"status": "error", "message": str(exc)}
    s = manifest.summary
    return {"status": trace.status, "terminal_consensus_error_km": s["terminal_consensus_error_km"],
            "hit_spread_s": s["hit_spread_s"], "J": s["J"], "lyapunov_monotone": s["lyapunov_monotone"]}


def cmd_sweep(args):
    base = parse_scenario(args.config)
    if args.param not in SWEEP_PARAMS:
        raise ConfigError(f"cannot sweep {args.param!r}; choose from {sorted(SWEEP_PARAMS)}")
    fld, cast = SWEEP_PARAMS[args.param]
    values = parse_range(args.range, cast)
    root = Path(args.out) if args.out else output_root() / f"{base.name}-sweep-{args.param}"
    jobs = []
    for k, v in enumerate(values):
        cfg = base.with_changes(**{fld: v}, name=f"{base.name}-{args.param}-{k}")
        jobs.append((cfg, root / f"{k:03d}", args.plots))
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        results = list(pool.map(_sweep_one, jobs))
    root.mkdir(parents=True, exist_ok=True)
    rows = [{"index": k, args.param: v, **r} for k, (v, r) in enumerate(zip(values, results))]
    (root / "sweep.json").write_text(json.dumps(rows, indent=2))
    for r in rows:
        print(json.dumps(r))
    return EXIT_OK if all(r["status"] == "complete" for r in rows) else EXIT_RUNTIME


def build_parser():
    p = argparse.ArgumentParser(prog="salvoguide", description="Cooperative salvo guidance simulator")
    sub = p.add_subparsers(dest="command", required=True)

    def run_opts(sp):
        sp.add_argument("--out", help="run directory (default: $%s/<name>)" % OUTPUT_ROOT_ENV)
        sp.add_argument("--every", type=int, default=1, help="write every k-th sample")
        sp.add_argument("--no-plots", action="store_true")

    r = sub.add_parser("run", help="simulate a scenario file")
    r.add_argument("config")
    run_opts(r)
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="run the optimality and Lyapunov checks on a saved trace")
    v.add_argument("trace")
    v.add_argument("--tol", type=float, default=1e-5)
    v.set_defaults(func=cmd_verify)

    pr = sub.add_parser("preset", help="print (or run) a built-in scenario")
    pr.add_argument("name", choices=sorted(PRESETS))
    pr.add_argument("-o", "--output", help="write the scenario file here instead of stdout")
    pr.add_argument("--run", action="store_true", help="also simulate it")
    run_opts(pr)
    pr.set_defaults(func=cmd_preset)

    s = sub.add_parser("sweep", help="run a scenario over a range of one parameter")
    s.add_argument("config")
    s.add_argument("--param", required=True, choices=sorted(SWEEP_PARAMS))
    s.add_argument("--range", required=True, help="start:stop:count or comma list")
    s.add_argument("--jobs", type=int, default=None)
    s.add_argument("--out")
    s.add_argument("--plots", action="store_true", help="also write plots for every run")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SalvoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
