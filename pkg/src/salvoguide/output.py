"""Run artifacts: per-family CSV series, SVG plots, summary and manifest."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .scenario import dump_scenario  # noqa: E402
from .sim import detect_simultaneity  # noqa: E402

# deterministic element ids so repeated runs produce identical SVG bytes
matplotlib.rcParams["svg.hashsalt"] = "salvoguide"

LINESTYLES = ("-", "--", "-.", ":")

# family -> (trace attribute, y label)
FAMILIES = {
    "R": ("R", "R (km)"),
    "V_r": ("V_r", "V_r (km/s)"),
    "V_lambda": ("V_lam", "V_lambda (km/s)"),
    "A_Mr": ("A_Mr", "A_Mr (km/s^2)"),
    "A_Mlambda": ("A_Mlam", "A_Mlambda (km/s^2)"),
    "lambda": ("lam", "lambda (rad)"),
    "rho_R": ("rho_R", "rho_R"),
    "rho_Vlambda": ("rho_Vlam", "rho_Vlambda"),
}


@dataclass
class RunManifest:
    config_path: str | None
    law: str
    output_dir: str
    artifacts: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def _finite_or_none(x):
    x = float(x)
    return x if math.isfinite(x) else None


def summarize(trace, optimality=None, lyapunov=None) -> dict:
    out = {"status": trace.status, "law": trace.law, "diagnostics": list(trace.diagnostics),
           "t_end_s": float(trace.t[-1]), "hits": [[i, t] for i, t in trace.hits],
           "terminal_consensus_error_km": float(np.ptp(trace.R[-1])),
           "terminal_R_km": trace.R[-1].tolist(), "relay_error": trace.relay_error}
    if trace.complete:
        rep = detect_simultaneity(trace)
        out["hit_times_s"] = [_finite_or_none(v) for v in rep.hit_times]
        out["hit_spread_s"] = _finite_or_none(rep.spread)
        out["predicted_T_s"] = rep.predicted_T.tolist()
    else:
        out["hit_times_s"] = None
        out["hit_spread_s"] = None
        out["predicted_T_s"] = None
    out["J"] = None if optimality is None else _finite_or_none(optimality.J)
    out["H_terminal"] = None if optimality is None else _finite_or_none(optimality.H_terminal)
    out["lyapunov_monotone"] = None if lyapunov is None else bool(lyapunov.monotone)
    out["lyapunov_max_increase"] = None if lyapunov is None else float(lyapunov.max_increase)
    if trace.A_T_err is not None:
        e0 = np.abs(trace.A_T_err[0])
        out["observer_error_ratio"] = [_finite_or_none(v) for v in
                                       np.abs(trace.A_T_err[-1]) / np.where(e0 > 0, e0, np.nan)]
    return out


def _write_series(path, t, columns, header):
    data = np.column_stack([t, *columns])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=",".join(header), comments="")


def _plot(path, t, Y, ylabel, title):
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for j in range(Y.shape[1]):
        ax.plot(t, Y[:, j], LINESTYLES[j % len(LINESTYLES)], label=f"attacker {j + 1}")
    ax.set_xlabel("t (s)")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _plot_xy(path, trace, sl):
    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    P = trace.positions[sl]
    for j in range(trace.n):
        ax.plot(P[:, j, 0], P[:, j, 1], LINESTYLES[j % len(LINESTYLES)], label=f"attacker {j + 1}")
    T = trace.target_position[sl]
    ax.plot(T[:, 0], T[:, 1], "k-", lw=2, label="target")
    ax.set_xlabel("x (km)")
    ax.set_ylabel("y (km)")
    ax.set_title("trajectories")
    ax.set_aspect("equal", adjustable="datalim")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def emit_outputs(trace, reports=(None, None), directory=".", config_path=None, every=1,
                 plots=True) -> RunManifest:
    """Write the run directory and return its manifest.

    ``reports`` is ``(OptimalityReport | None, LyapunovReport | None)``.
    ``every`` decimates the written series and plots; summary metrics always
    use the full trace.  Truncated traces are written up to their last sample.

    Raises
    ------
    OSError
        If ``directory`` cannot be created or written.
    """
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    sl = slice(None, None, max(1, int(every)))
    t = trace.t[sl]
    ids = [f"attacker_{j + 1}" for j in range(trace.n)]
    written = []

    families = dict(FAMILIES)
    if trace.A_T_err is not None:
        families["A_T_error"] = ("A_T_err", "A_T - A_T_hat (km/s^2)")
    for fam, (attr, ylabel) in families.items():
        Y = getattr(trace, attr)[sl]
        csv = out / f"{fam}.csv"
        _write_series(csv, t, Y.T, ["t_s", *ids])
        written.append(csv.name)
        if plots:
            svg = out / f"{fam}.svg"
            _plot(svg, t, Y, ylabel, fam)
            written.append(svg.name)

    P = trace.positions[sl]
    T = trace.target_position[sl]
    cols = [T[:, 0], T[:, 1]] + [P[:, j, k] for j in range(trace.n) for k in (0, 1)]
    header = ["t_s", "target_x_km", "target_y_km"] + [f"{i}_{c}_km" for i in ids for c in ("x", "y")]
    _write_series(out / "positions.csv", t, cols, header)
    written.append("positions.csv")
    if plots:
        _plot_xy(out / "positions.svg", trace, sl)
        written.append("positions.svg")

    summary = summarize(trace, *reports)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    (out / "scenario.yaml").write_text(dump_scenario(trace.config))
    trace.save(out / "trace.npz")
    written += ["summary.json", "scenario.yaml", "trace.npz"]

    manifest = RunManifest(config_path=None if config_path is None else str(config_path),
                           law=trace.law, output_dir=str(out), artifacts=written, summary=summary)
    (out / "manifest.json").write_text(manifest.to_json())
    manifest.artifacts.append("manifest.json")
    return manifest
