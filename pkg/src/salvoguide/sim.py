"""Fixed-step propagation of a full engagement.

One integration loop advances, for every attacker, the polar relative state
``(R, lam, V_r, V_lam)``, the observer state ``z``, and the costates. It also
advances the target's absolute position and heading. Classical RK4 is used
at a fixed ``dt``, and every step is logged.

State vector layout (N attackers)::

    [R(N), lam(N), V_r(N), V_lam(N), z(N),
     rho_R(N), rho_Vlam(N), rho_R_flip(N), rho_Vlam_flip(N),
     x_T, y_T, gamma_T]

The ``*_flip`` costates use the alternative initialisation
``rho_R(t0) = V_r(t0)``, ``rho_Vlam(t0) = dV_lam(t0)``.  They are carried
alongside so that both sign conventions can be compared.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .errors import (BoundaryDataError, ConfigError, GeometryError, ModeError,
                     SegmentFeasibilityError)
from .graph import (CommGraph, consensus_terminal, contains_spanning_tree,
                    reachable_from, relay_over_graph)
from .guidance import (BoundaryData, anchor_segment, compute_gains, guidance_known,
                       reference_trajectory, segment_schedule)
from .integrate import rk4_step
from .kinematics import (AccelComponents, AttackerState, RelativeState, TargetState,
                         attacker_heading_from_relative, los_hat,
                         relative_derivatives, relative_from_absolute,
                         scalar_command_from_components, target_accel_components,
                         target_velocity, wrap_angle)
from .observer import FORCING_MODES, observer_derivative, forcing_signals

LAWS = ("known", "observed", "piecewise")
MANEUVERS = ("sinusoid", "exponential", "constant")
INITIAL_VELOCITY = ("boundary", "geometry")
PIECEWISE_TERMINALS = ("preset", "consensus")

# relative slack on the killing-radius test, absorbs round-off when R(tf) == R_c
HIT_SLACK = 1e-9


@dataclass(frozen=True)
class TargetManeuver:
    """Lateral target acceleration profile ``A_T(t)``.

    ``sinusoid``: ``amplitude * sin(omega * t + phase)``.
    ``exponential``: ``amplitude * exp(s * (t - t0))``, which is the exogenous model.
    ``constant``: ``amplitude``.
    """

    kind: str = "constant"
    amplitude: float = 0.0
    omega: float = 0.0
    phase: float = 0.0
    s: float = 0.0
    t0: float = 0.0

    def __post_init__(self):
        if self.kind not in MANEUVERS:
            raise ConfigError(f"unknown maneuver kind {self.kind!r}; expected one of {MANEUVERS}",
                              key="target.maneuver.kind")
        if self.kind == "exponential" and self.s > 0:
            raise ConfigError("exogenous decay s must be <= 0", key="target.maneuver.s_per_s")

    def accel(self, t):
        if self.kind == "sinusoid":
            return self.amplitude * np.sin(self.omega * t + self.phase)
        if self.kind == "exponential":
            return self.amplitude * np.exp(self.s * (t - self.t0))
        return self.amplitude + 0.0 * np.asarray(t, dtype=float)

    def accel_rate(self, t):
        if self.kind == "sinusoid":
            return self.amplitude * self.omega * np.cos(self.omega * t + self.phase)
        if self.kind == "exponential":
            return self.s * self.accel(t)
        return 0.0 * np.asarray(t, dtype=float)


def _vec(x, n=None):
    a = np.atleast_1d(np.asarray(x, dtype=float)).copy()
    if n is not None and a.size == 1 and n > 1:
        a = np.full(n, a[0])
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete, validated description of one engagement run.

    Attacker indices are 0-based in memory.  ``observers`` follows the same
    convention.  Scenario files use 1-based ids.
    """

    lam0: np.ndarray
    gamma0: np.ndarray
    R0: np.ndarray
    Vlam0: np.ndarray
    Rf: np.ndarray
    Vlamf: np.ndarray
    speeds: np.ndarray
    target_position: np.ndarray
    target_heading: float
    target_speed: float
    maneuver: TargetManeuver
    graph: CommGraph
    observers: tuple = (0,)
    law: str = "known"
    P1: np.ndarray = 1.0
    P2: np.ndarray = 1.0
    t0: float = 0.0
    tf: float = 15.0
    dt: float = 1e-3
    kill_radius: float = 0.01
    segments: int = 1
    piecewise_terminal: str = "preset"
    observer_decay: float | None = None
    observer_forcing: str = "tracking_error"
    observer_z0: float = 0.0
    initial_velocity: str = "boundary"
    radial_bias: float = 0.0
    name: str = "scenario"

    def __post_init__(self):
        n = np.size(self.R0)
        for f in ("lam0", "gamma0", "R0", "Vlam0", "Rf", "Vlamf", "speeds", "P1", "P2"):
            object.__setattr__(self, f, _vec(getattr(self, f), n))
        object.__setattr__(self, "target_position", _vec(self.target_position))
        object.__setattr__(self, "observers", tuple(int(o) for o in self.observers))
        for f in ("target_heading", "target_speed", "t0", "tf", "dt", "kill_radius",
                  "observer_z0", "radial_bias"):
            object.__setattr__(self, f, float(getattr(self, f)))
        object.__setattr__(self, "segments", int(self.segments))
        if self.observer_decay is not None:
            object.__setattr__(self, "observer_decay", float(self.observer_decay))
        self.validate()

    @property
    def n(self) -> int:
        return self.R0.size

    @property
    def n_steps(self) -> int:
        return int(round((self.tf - self.t0) / self.dt))

    @property
    def uses_observer(self) -> bool:
        return self.law != "known"

    @property
    def decay(self) -> float:
        """Exogenous-model constant ``s`` used by the observers."""
        if self.observer_decay is not None:
            return self.observer_decay
        return self.maneuver.s if self.maneuver.kind == "exponential" else 0.0

    def validate(self):
        n = self.n
        if n < 1:
            raise ConfigError("at least one attacker is required", key="attackers.R0_km")
        per_attacker = {"lam0": "attackers.lambda0_rad", "gamma0": "attackers.gamma0_rad",
                        "Vlam0": "attackers.Vlambda0_kmps", "Rf": "attackers.Rf_km",
                        "Vlamf": "attackers.Vlambdaf_kmps", "speeds": "attackers.speed_kmps",
                        "P1": "attackers.P1", "P2": "attackers.P2"}
        for f, key in per_attacker.items():
            if getattr(self, f).size != n:
                raise ConfigError(f"expected {n} values, got {getattr(self, f).size}", key=key)
        for f, key in {**per_attacker, "R0": "attackers.R0_km"}.items():
            if not np.all(np.isfinite(getattr(self, f))):
                raise ConfigError("values must be finite", key=key)
        if self.law not in LAWS:
            raise ConfigError(f"unknown law {self.law!r}; expected one of {LAWS}", key="law")
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}", key="time.dt_s")
        if not self.tf > self.t0:
            raise ConfigError(f"tf ({self.tf}) must exceed t0 ({self.t0})", key="time.tf_s")
        span = self.tf - self.t0
        if abs(self.n_steps * self.dt - span) > 1e-9 * span or self.n_steps < 1:
            raise ConfigError(f"dt={self.dt} does not divide the horizon {span}", key="time.dt_s")
        if self.target_position.shape != (2,):
            raise ConfigError("target position must have two coordinates", key="target.position_km")
        if not self.target_speed > 0:
            raise ConfigError("target speed must be positive", key="target.speed_kmps")
        if np.any(self.speeds <= 0):
            raise ConfigError("attacker speeds must be positive", key="attackers.speed_kmps")
        if np.any(self.speeds >= self.target_speed):
            bad = (np.flatnonzero(self.speeds >= self.target_speed) + 1).tolist()
            raise ConfigError(f"attackers {bad} are not slower than the target "
                              f"(V_i >= V_T = {self.target_speed})", key="attackers.speed_kmps")
        if np.any(self.P1 <= 0) or np.any(self.P2 <= 0):
            raise ConfigError("weights P1, P2 must be positive", key="attackers.P1")
        if np.any(self.R0 <= 0):
            raise ConfigError("initial ranges must be positive", key="attackers.R0_km")
        if not self.kill_radius > 0:
            raise ConfigError("killing radius must be positive", key="killing_radius_km")
        if self.graph.n != n:
            raise ConfigError(f"graph has {self.graph.n} nodes for {n} attackers", key="graph.weights")
        if not contains_spanning_tree(self.graph):
            raise ConfigError("communication graph has no directed spanning tree", key="graph.weights")
        if not self.observers or any(not 0 <= o < n for o in self.observers):
            raise ConfigError(f"observer ids must lie in 1..{n}", key="graph.observers")
        if len(reachable_from(self.graph, self.observers)) != n:
            raise ConfigError("target information from the observers does not reach every attacker",
                              key="graph.observers")
        if self.segments < 1 or self.n_steps % self.segments:
            raise ConfigError(f"segment count {self.segments} must be >= 1 and divide "
                              f"{self.n_steps} steps", key="piecewise.segments")
        if self.piecewise_terminal not in PIECEWISE_TERMINALS:
            raise ConfigError(f"piecewise terminal must be one of {PIECEWISE_TERMINALS}",
                              key="piecewise.terminal")
        if self.observer_forcing not in FORCING_MODES:
            raise ConfigError(f"observer forcing must be one of {FORCING_MODES}", key="observer.forcing")
        if self.observer_decay is not None and self.observer_decay > 0:
            raise ConfigError("observer decay s must be <= 0", key="observer.decay_per_s")
        if self.initial_velocity not in INITIAL_VELOCITY:
            raise ConfigError(f"initial_velocity must be one of {INITIAL_VELOCITY}",
                              key="attackers.initial_velocity")
        try:
            self.boundary()
        except BoundaryDataError as exc:
            raise ConfigError(str(exc), key="attackers.Rf_km") from exc

    def terminal(self):
        """Consensus terminals ``(Rf, Vlamf)`` fed to the gains."""
        return (consensus_terminal(self.graph, self.Rf),
                np.abs(consensus_terminal(self.graph, self.Vlamf)))

    def initial_attackers(self):
        los = np.stack([np.cos(self.lam0), np.sin(self.lam0)], axis=-1)
        pos = self.target_position - self.R0[:, None] * los
        return AttackerState(position=pos, heading=self.gamma0, speed=self.speeds)

    def initial_target(self):
        return TargetState(position=self.target_position, heading=self.target_heading,
                           speed=self.target_speed, accel=float(self.maneuver.accel(self.t0)))

    def geometry_velocity(self):
        """``(V_r, V_lam)`` implied by the headings and speeds at ``t0``."""
        rel = relative_from_absolute(self.initial_attackers(), self.initial_target())
        return np.asarray(rel.V_r), np.asarray(rel.V_lam)

    def boundary(self) -> BoundaryData:
        Rf, Vlf = self.terminal()
        Vlam0 = self.Vlam0 if self.initial_velocity == "boundary" else self.geometry_velocity()[1]
        return BoundaryData(t0=self.t0, tf=self.tf, R0=self.R0, Vlam0=Vlam0, Rf=Rf, Vlamf=Vlf)

    def with_changes(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        """Nested plain-python form mirroring the scenario file layout."""
        m = self.maneuver
        man = {"kind": m.kind}
        if m.kind == "sinusoid":
            man.update(amplitude_kmps2=m.amplitude, omega_radps=m.omega, phase_rad=m.phase)
        elif m.kind == "exponential":
            man.update(A_T0_kmps2=m.amplitude, s_per_s=m.s)
        else:
            man.update(amplitude_kmps2=m.amplitude)
        lst = lambda a: [float(v) for v in a]  # noqa: E731
        return {
            "name": self.name,
            "law": self.law,
            "time": {"t0_s": self.t0, "tf_s": self.tf, "dt_s": self.dt},
            "attackers": {
                "lambda0_rad": lst(self.lam0), "gamma0_rad": lst(self.gamma0),
                "R0_km": lst(self.R0), "Vlambda0_kmps": lst(self.Vlam0),
                "Rf_km": lst(self.Rf), "Vlambdaf_kmps": lst(self.Vlamf),
                "speed_kmps": lst(self.speeds), "P1": lst(self.P1), "P2": lst(self.P2),
                "initial_velocity": self.initial_velocity,
            },
            "target": {"position_km": lst(self.target_position), "heading_rad": self.target_heading,
                       "speed_kmps": self.target_speed, "maneuver": man},
            "graph": {"weights": [lst(r) for r in self.graph.weights],
                      "observers": [o + 1 for o in self.observers]},
            "observer": {"decay_per_s": self.observer_decay, "forcing": self.observer_forcing,
                         "z0_kmps2": self.observer_z0},
            "killing_radius_km": self.kill_radius,
            "piecewise": {"segments": self.segments, "terminal": self.piecewise_terminal},
            "radial_command_bias_kmps2": self.radial_bias,
        }


@dataclass
class SimTrace:
    """Per-step log of one run.  Every series shares the time grid ``t``.

    Per-attacker series have shape ``(M, N)``; positions ``(M, N, 2)``.
    Observer series are ``None`` for the ``known`` law.
    """

    config: ScenarioConfig
    t: np.ndarray
    R: np.ndarray
    lam: np.ndarray
    V_r: np.ndarray
    V_lam: np.ndarray
    dV_r: np.ndarray
    dV_lam: np.ndarray
    A_Mr: np.ndarray
    A_Mlam: np.ndarray
    A_Mi: np.ndarray
    A_Mi_residual: np.ndarray
    xi: np.ndarray
    phi: np.ndarray
    attacker_heading: np.ndarray
    attacker_speed: np.ndarray
    positions: np.ndarray
    R_star: np.ndarray
    V_r_star: np.ndarray
    V_lam_star: np.ndarray
    dV_lam_star: np.ndarray
    K1: np.ndarray
    K2: np.ndarray
    rho_R: np.ndarray
    rho_Vlam: np.ndarray
    rho_R_flip: np.ndarray
    rho_Vlam_flip: np.ndarray
    target_position: np.ndarray
    target_heading: np.ndarray
    A_T: np.ndarray
    dA_T: np.ndarray
    A_T_hat: np.ndarray | None = None
    dA_T_hat: np.ndarray | None = None
    A_T_err: np.ndarray | None = None
    lyapunov: np.ndarray | None = None
    status: str = "complete"
    diagnostics: list = field(default_factory=list)
    hits: list = field(default_factory=list)
    segments: list = field(default_factory=list)
    relay_error: float = 0.0

    @property
    def law(self) -> str:
        return self.config.law

    @property
    def complete(self) -> bool:
        return self.status == "complete"

    @property
    def n(self) -> int:
        return self.R.shape[1]

    def initial_gains(self):
        b = self.config.boundary()
        return b, compute_gains(b, self.config.P1, self.config.P2)

    def require_observer(self):
        if self.A_T_hat is None:
            raise ModeError(f"trace from the {self.law!r} law has no observer series")

    def save(self, path):
        arrays = {}
        meta = {"status": self.status, "diagnostics": list(self.diagnostics),
                "hits": [list(h) for h in self.hits], "segments": self.segments,
                "relay_error": self.relay_error, "config": self.config.to_dict()}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, np.ndarray):
                arrays[f.name] = v
        np.savez_compressed(path, __meta__=np.array(json.dumps(meta)), **arrays)

    @classmethod
    def load(cls, path):
        from .scenario import config_from_dict

        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["__meta__"]))
            arrays = {k: data[k] for k in data.files if k != "__meta__"}
        kw = {f.name: arrays.get(f.name) for f in fields(cls) if f.name in arrays}
        return cls(config=config_from_dict(meta["config"]), status=meta["status"],
                   diagnostics=meta["diagnostics"], hits=[tuple(h) for h in meta["hits"]],
                   segments=meta["segments"], relay_error=meta["relay_error"], **kw)


@dataclass(frozen=True)
class SimultaneityReport:
    """Hit times (``nan`` for no hit), their spread, and the predicted common impact."""

    hit_times: np.ndarray
    spread: float
    predicted_T: np.ndarray
    t_c: np.ndarray

    @property
    def all_hit(self) -> bool:
        return bool(np.all(np.isfinite(self.hit_times)))


def lyapunov_value(R_star, V_r_star, V_lam_star, A_T_err):
    """``0.5 * (|R*|^2 + |V_r*|^2 + |V_lam*|^2 + |A_T_err|^2)`` per sample."""
    sq = lambda a: np.sum(np.square(np.asarray(a, dtype=float)), axis=-1)  # noqa: E731
    return 0.5 * (sq(R_star) + sq(V_r_star) + sq(V_lam_star) + sq(A_T_err))


class _Engagement:
    """Right-hand side of the full state for one scenario."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.n = cfg.n
        self.b = None
        self.g = None

    def set_anchor(self, b, g):
        self.b, self.g = b, g

    def unpack(self, y):
        n = self.n
        return {"R": y[0:n], "lam": y[n:2 * n], "V_r": y[2 * n:3 * n], "V_lam": y[3 * n:4 * n],
                "z": y[4 * n:5 * n], "x_T": y[-3], "y_T": y[-2], "gamma_T": y[-1]}

    def evaluate(self, t, y, detail=False):
        cfg, b, g, n = self.cfg, self.b, self.g, self.n
        s = self.unpack(y)
        lam_w = wrap_angle(s["lam"])
        phi = s["gamma_T"] - los_hat(lam_w)
        rel = RelativeState(R=s["R"], lam=lam_w, V_r=s["V_r"], V_lam=s["V_lam"], phi=phi)
        if not np.all(np.isfinite(y)):
            raise FloatingPointError("non-finite state")
        A_T = float(cfg.maneuver.accel(t))
        A_Tr, A_Tl = target_accel_components(A_T, phi)
        if cfg.law == "known":
            cmd = guidance_known(rel, (A_Tr, A_Tl), g, b, t)
        else:
            cmd = guidance_known(rel, target_accel_components(s["z"], phi), g, b, t)
        A_Mr = cmd.A_Mr + cfg.radial_bias
        dR, dlam, dV_r, dV_lam = relative_derivatives(rel, AccelComponents(A_Mr, cmd.A_Mlam, A_Tr, A_Tl))
        if cfg.uses_observer:
            sig = forcing_signals(cfg.observer_forcing, rel, cmd.V_r_star, cmd.V_lam_star)
            dz = observer_derivative(s["z"], rel, cfg.decay, sig)
        else:
            dz = np.zeros(n)
        K1sq, K2sq = g.K1 ** 2, g.K2 ** 2
        drho_R = -K1sq * s["R"]
        drho_V = -K2sq * s["V_lam"]
        gT = s["gamma_T"]
        dy = np.concatenate([dR, dlam, dV_r, dV_lam, dz, drho_R, drho_V, drho_R, drho_V,
                             [-cfg.target_speed * np.cos(gT), -cfg.target_speed * np.sin(gT),
                              A_T / cfg.target_speed]])
        if not detail:
            return dy
        return dy, {"rel": rel, "cmd": cmd, "A_Mr": A_Mr, "A_T": A_T, "dV_r": dV_r,
                    "dV_lam": dV_lam, "dz": dz}

    def __call__(self, t, y):
        return self.evaluate(t, y)


def _initial_state(cfg: ScenarioConfig, eng: _Engagement):
    n = cfg.n
    b = cfg.boundary()
    g = compute_gains(b, cfg.P1, cfg.P2)
    if cfg.initial_velocity == "boundary":
        V_r0 = reference_trajectory(g, b, cfg.t0).V_r
        V_l0 = cfg.Vlam0
    else:
        V_r0, V_l0 = cfg.geometry_velocity()
    z0 = np.full(n, cfg.observer_z0)
    zeros = np.zeros(n)
    y = np.concatenate([cfg.R0, cfg.lam0, V_r0, V_l0, z0, zeros, zeros, zeros, zeros,
                        cfg.target_position, [cfg.target_heading]])
    eng.set_anchor(b, g)
    _, d = eng.evaluate(cfg.t0, y, detail=True)
    P1sq, P2sq = cfg.P1 ** 2, cfg.P2 ** 2
    y[5 * n:6 * n] = -P1sq * V_r0
    y[6 * n:7 * n] = -P2sq * d["dV_lam"]
    y[7 * n:8 * n] = V_r0
    y[8 * n:9 * n] = d["dV_lam"]
    return y, b, g


_PER_ATTACKER = ("R", "lam", "V_r", "V_lam", "dV_r", "dV_lam", "A_Mr", "A_Mlam", "A_Mi",
                 "A_Mi_residual", "xi", "phi", "attacker_heading", "attacker_speed",
                 "R_star", "V_r_star", "V_lam_star", "dV_lam_star", "K1", "K2",
                 "rho_R", "rho_Vlam", "rho_R_flip", "rho_Vlam_flip",
                 "A_T_hat", "dA_T_hat", "A_T_err")


def run_scenario(cfg: ScenarioConfig) -> SimTrace:
    """Integrate ``cfg`` from ``t0`` to ``tf`` and log every step.

    Singular geometry (``R <= 0``), non-finite values and infeasible piecewise
    segments do not raise.  The trace is truncated at the last good sample,
    ``status`` is set to ``"singular"``, ``"diverged"`` or ``"infeasible"``,
    and the offending step is recorded in ``diagnostics``.
    """
    n, M = cfg.n, cfg.n_steps + 1
    t_grid = np.linspace(cfg.t0, cfg.tf, M)
    eng = _Engagement(cfg)
    y, b, g = _initial_state(cfg, eng)

    log = {k: np.full((M, n), np.nan) for k in _PER_ATTACKER}
    tpos = np.full((M, 2), np.nan)
    thead = np.full(M, np.nan)
    A_T = np.full(M, np.nan)
    dA_T = np.full(M, np.nan)
    seg_starts = {}
    if cfg.law == "piecewise":
        per = cfg.n_steps // cfg.segments
        times = segment_schedule(cfg.t0, cfg.tf, cfg.segments)
        seg_starts = {k * per: (times[k], times[k + 1]) for k in range(cfg.segments)}
    terminal = (cfg.tf, *cfg.terminal())
    segments = []
    diagnostics = []
    status = "complete"

    # relay the observers' measurements to everyone once, as a consistency check
    att = cfg.initial_attackers()
    relayed = relay_over_graph(cfg.graph, cfg.observers, att.position,
                               {o: (cfg.R0[o], wrap_angle(cfg.lam0[o])) for o in cfg.observers},
                               cfg.target_speed)
    relay_error = max(max(abs(relayed[i][0] - cfg.R0[i]),
                          abs(np.angle(np.exp(1j * (relayed[i][1] - cfg.lam0[i]))))) for i in range(n))

    def record(i, t, y):
        _, d = eng.evaluate(t, y, detail=True)
        rel, cmd = d["rel"], d["cmd"]
        st = eng.unpack(y)
        head, speed = attacker_heading_from_relative(rel, st["gamma_T"], cfg.target_speed)
        xi = head - rel.lam
        rel_xi = RelativeState(R=rel.R, lam=rel.lam, V_r=rel.V_r, V_lam=rel.V_lam, xi=xi, phi=rel.phi)
        a, resid = scalar_command_from_components(
            AccelComponents(d["A_Mr"], cmd.A_Mlam, 0.0, 0.0), rel_xi)
        vals = {"R": st["R"], "lam": st["lam"], "V_r": st["V_r"], "V_lam": st["V_lam"],
                "dV_r": d["dV_r"], "dV_lam": d["dV_lam"], "A_Mr": d["A_Mr"], "A_Mlam": cmd.A_Mlam,
                "A_Mi": a, "A_Mi_residual": resid, "xi": xi, "phi": rel.phi,
                "attacker_heading": head, "attacker_speed": speed, "R_star": cmd.R_star,
                "V_r_star": cmd.V_r_star, "V_lam_star": cmd.V_lam_star,
                "dV_lam_star": -eng.g.rate2 * cmd.V_lam_star, "K1": eng.g.K1, "K2": eng.g.K2,
                "rho_R": y[5 * n:6 * n], "rho_Vlam": y[6 * n:7 * n],
                "rho_R_flip": y[7 * n:8 * n], "rho_Vlam_flip": y[8 * n:9 * n]}
        if cfg.uses_observer:
            vals.update(A_T_hat=st["z"], dA_T_hat=d["dz"], A_T_err=d["A_T"] - st["z"])
        for k, v in vals.items():
            log[k][i] = v
        tpos[i] = (st["x_T"], st["y_T"])
        thead[i] = st["gamma_T"]
        A_T[i] = d["A_T"]
        dA_T[i] = cfg.maneuver.accel_rate(t)

    last = -1
    for i in range(M):
        t = t_grid[i]
        try:
            if i in seg_starts:
                t_k, t_next = seg_starts[i]
                st = eng.unpack(y)
                if cfg.piecewise_terminal == "preset":
                    b, g = anchor_segment(st["R"], st["V_lam"], t_k, t_next, cfg.P1, cfg.P2,
                                          terminal=terminal)
                else:
                    b, g = anchor_segment(st["R"], st["V_lam"], t_k, t_next, cfg.P1, cfg.P2,
                                          graph=cfg.graph)
                eng.set_anchor(b, g)
                segments.append({"t_start": float(t_k), "t_end": float(b.tf),
                                 "R_start": b.R0.tolist(), "Vlam_start": b.Vlam0.tolist(),
                                 "Rf": b.Rf.tolist(), "Vlamf": b.Vlamf.tolist(),
                                 "K1": g.K1.tolist(), "K2": g.K2.tolist()})
            record(i, t, y)
            last = i
            if i < M - 1:
                y = rk4_step(eng, t, y, t_grid[i + 1] - t)
        except SegmentFeasibilityError as exc:
            status = "infeasible"
            diagnostics.append(f"step {i} (t={t:.6g} s): {exc}")
            break
        except GeometryError as exc:
            status = "singular"
            diagnostics.append(f"step {i} (t={t:.6g} s): singular geometry: {exc}")
            break
        except FloatingPointError as exc:
            status = "diverged"
            diagnostics.append(f"step {i} (t={t:.6g} s): {exc}")
            break

    keep = slice(0, last + 1)
    arrays = {k: v[keep] for k, v in log.items()}
    if not cfg.uses_observer:
        for k in ("A_T_hat", "dA_T_hat", "A_T_err"):
            arrays[k] = None
    positions = tpos[keep, None, :] - arrays["R"][..., None] * np.stack(
        [np.cos(arrays["lam"]), np.sin(arrays["lam"])], axis=-1)
    lyap = None
    if cfg.uses_observer:
        lyap = lyapunov_value(arrays["R_star"], arrays["V_r_star"], arrays["V_lam_star"],
                              arrays["A_T_err"])
    trace = SimTrace(config=cfg, t=t_grid[keep], positions=positions,
                     target_position=tpos[keep], target_heading=thead[keep], A_T=A_T[keep],
                     dA_T=dA_T[keep], lyapunov=lyap, status=status, diagnostics=diagnostics,
                     segments=segments, relay_error=float(relay_error), **arrays)
    trace.hits = _hit_events(trace, cfg.kill_radius)
    return trace


def _crossings(t, R, R_c):
    """First time each column of ``R`` reaches ``R_c``; ``nan`` when it never does."""
    thresh = R_c * (1.0 + HIT_SLACK)
    out = np.full(R.shape[1], np.nan)
    for j in range(R.shape[1]):
        idx = np.flatnonzero(R[:, j] <= thresh)
        if idx.size == 0:
            continue
        k = idx[0]
        if k == 0 or R[k, j] == R[k - 1, j]:
            out[j] = t[k]
        else:
            # linear interpolation inside the crossing step
            w = (R[k - 1, j] - R_c) / (R[k - 1, j] - R[k, j])
            out[j] = t[k - 1] + min(max(w, 0.0), 1.0) * (t[k] - t[k - 1])
    return out


def _hit_events(trace: SimTrace, R_c):
    times = _crossings(trace.t, trace.R, R_c)
    return [(int(j) + 1, float(times[j])) for j in np.argsort(times, kind="stable") if np.isfinite(times[j])]


def detect_simultaneity(trace: SimTrace, R_c=None) -> SimultaneityReport:
    """Hit times, spread and the predicted common impact ``T = tf + |R(tf)/V_r(tf)|``.

    Attackers that never reach ``R_c`` get ``nan`` hit times.  The spread is
    taken over the attackers that did hit, and is ``nan`` when none did.
    """
    if not trace.complete:
        raise ValueError(f"trace is {trace.status}, detection needs a complete run to tf")
    R_c = trace.config.kill_radius if R_c is None else float(R_c)
    times = _crossings(trace.t, trace.R, R_c)
    hit = times[np.isfinite(times)]
    spread = float(hit.max() - hit.min()) if hit.size else float("nan")
    t_c = np.abs(trace.R[-1] / trace.V_r[-1])
    return SimultaneityReport(hit_times=times, spread=spread, predicted_T=trace.t[-1] + t_c, t_c=t_c)


def target_velocity_series(trace: SimTrace):
    """Inertial target velocity along the trace, ``(M, 2)``."""
    return target_velocity(trace.target_heading, trace.config.target_speed)


__all__ = ["ScenarioConfig", "SimTrace", "SimultaneityReport", "TargetManeuver",
           "detect_simultaneity", "lyapunov_value", "run_scenario", "LAWS"]
