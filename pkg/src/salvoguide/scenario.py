"""Scenario files (YAML) and the two built-in presets.

Keys carry their units (``R0_km``, ``dt_s``, ...).  Attacker ids in files are
1-based.  Every validation error names the file and the line of the
offending key.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError
from .graph import CommGraph
from .sim import ScenarioConfig, TargetManeuver

# published initial data for the four attackers and the target
TABLE_LAMBDA0 = [-0.8851, 0.6528, -1.3135, 1.2178]
TABLE_GAMMA0 = [0.6283, -1.0472, -1.0472, 1.5708]
TABLE_R0 = [7.1063, 10.7005, 9.8234, 10.1242]
TABLE_VLAMBDA0 = [-1.6342, 0.3099, -0.8881, -0.0722]
TABLE_TERMINAL = 0.01
TARGET_POSITION = [6.5, 0.5]
TARGET_HEADING = 1.0472
TARGET_SPEED = 1.0
ATTACKER_SPEED = 0.7

_SCHEMA = {
    "name": str,
    "law": str,
    "time": {"t0_s": float, "tf_s": float, "dt_s": float},
    "attackers": {"lambda0_rad": list, "gamma0_rad": list, "R0_km": list,
                  "Vlambda0_kmps": list, "Rf_km": list, "Vlambdaf_kmps": list,
                  "speed_kmps": list, "P1": list, "P2": list, "initial_velocity": str},
    "target": {"position_km": list, "heading_rad": float, "speed_kmps": float,
               "maneuver": {"kind": str, "amplitude_kmps2": float, "omega_radps": float,
                            "phase_rad": float, "A_T0_kmps2": float, "s_per_s": float}},
    "graph": {"weights": list, "observers": list},
    "observer": {"decay_per_s": float, "forcing": str, "z0_kmps2": float},
    "killing_radius_km": float,
    "piecewise": {"segments": int, "terminal": str},
    "radial_command_bias_kmps2": float,
}
_REQUIRED = ("attackers.lambda0_rad", "attackers.gamma0_rad", "attackers.R0_km",
             "attackers.Vlambda0_kmps", "attackers.Rf_km", "attackers.Vlambdaf_kmps",
             "attackers.speed_kmps", "target.position_km", "target.heading_rad",
             "target.speed_kmps", "graph.weights", "time.tf_s")


def _line_map(text):
    """``{dotted.key: 1-based line}`` for every mapping key in the document."""
    lines = {}

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                key = f"{prefix}.{k.value}" if prefix else str(k.value)
                lines[key] = k.start_mark.line + 1
                walk(v, key)

    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return lines
    if root is not None:
        walk(root, "")
    return lines


def _line_for(lines, key):
    while key:
        if key in lines:
            return lines[key]
        key = key.rpartition(".")[0]
    return None


def _check_schema(data, schema, prefix=""):
    if not isinstance(data, dict):
        raise ConfigError(f"expected a mapping at {prefix or 'top level'}", key=prefix or None)
    for k, v in data.items():
        key = f"{prefix}.{k}" if prefix else str(k)
        if k not in schema:
            raise ConfigError(f"unknown key {key!r}", key=key)
        want = schema[k]
        if isinstance(want, dict):
            _check_schema(v, want, key)
        elif v is None:
            if key != "observer.decay_per_s":
                raise ConfigError(f"{key} must not be empty", key=key)
        elif want is float:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{key} must be a number, got {v!r}", key=key)
        elif want is int:
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigError(f"{key} must be an integer, got {v!r}", key=key)
        elif want is list:
            if not isinstance(v, list):
                raise ConfigError(f"{key} must be a list, got {v!r}", key=key)
        elif not isinstance(v, want):
            raise ConfigError(f"{key} must be a {want.__name__}, got {v!r}", key=key)


def _get(d, dotted, default=None):
    for part in dotted.split("."):
        if not isinstance(d, dict) or part not in d:
            return default
        d = d[part]
    return d


def _numbers(key, value):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must contain only numbers", key=key) from None
    return arr


def config_from_dict(data, source=None, lines=None) -> ScenarioConfig:
    """Build and validate a config from the nested file layout."""
    lines = lines or {}
    try:
        _check_schema(data, _SCHEMA)
        for key in _REQUIRED:
            if _get(data, key) is None:
                raise ConfigError(f"missing required key {key!r}", key=key.rpartition(".")[0] or key)
        a = data["attackers"]
        n = len(a["R0_km"])
        man = _get(data, "target.maneuver", {}) or {}
        kind = man.get("kind", "constant")
        t0 = float(_get(data, "time.t0_s", 0.0))
        if kind == "exponential":
            maneuver = TargetManeuver(kind=kind, amplitude=float(man.get("A_T0_kmps2", 0.0)),
                                      s=float(man.get("s_per_s", 0.0)), t0=t0)
        else:
            maneuver = TargetManeuver(kind=kind, amplitude=float(man.get("amplitude_kmps2", 0.0)),
                                      omega=float(man.get("omega_radps", 0.0)),
                                      phase=float(man.get("phase_rad", 0.0)))
        weights = _numbers("graph.weights", data["graph"]["weights"])
        try:
            graph = CommGraph(weights)
        except ValueError as exc:
            raise ConfigError(str(exc), key="graph.weights") from None
        observers = _get(data, "graph.observers", [1])
        if not all(isinstance(o, int) and not isinstance(o, bool) for o in observers):
            raise ConfigError("observer ids must be integers", key="graph.observers")
        vec = {k: _numbers(f"attackers.{k}", a[k]) for k in
               ("lambda0_rad", "gamma0_rad", "R0_km", "Vlambda0_kmps", "Rf_km",
                "Vlambdaf_kmps", "speed_kmps")}
        return ScenarioConfig(
            name=str(data.get("name", "scenario")),
            law=str(data.get("law", "known")),
            t0=t0, tf=float(data["time"]["tf_s"]), dt=float(_get(data, "time.dt_s", 1e-3)),
            lam0=vec["lambda0_rad"], gamma0=vec["gamma0_rad"], R0=vec["R0_km"],
            Vlam0=vec["Vlambda0_kmps"], Rf=vec["Rf_km"], Vlamf=vec["Vlambdaf_kmps"],
            speeds=vec["speed_kmps"],
            P1=_numbers("attackers.P1", a.get("P1", [1.0] * n)),
            P2=_numbers("attackers.P2", a.get("P2", [1.0] * n)),
            initial_velocity=str(a.get("initial_velocity", "boundary")),
            target_position=_numbers("target.position_km", data["target"]["position_km"]),
            target_heading=float(data["target"]["heading_rad"]),
            target_speed=float(data["target"]["speed_kmps"]),
            maneuver=maneuver, graph=graph, observers=tuple(o - 1 for o in observers),
            observer_decay=_get(data, "observer.decay_per_s"),
            observer_forcing=str(_get(data, "observer.forcing", "tracking_error")),
            observer_z0=float(_get(data, "observer.z0_kmps2", 0.0)),
            kill_radius=float(data.get("killing_radius_km", 0.01)),
            segments=int(_get(data, "piecewise.segments", 1)),
            piecewise_terminal=str(_get(data, "piecewise.terminal", "preset")),
            radial_bias=float(data.get("radial_command_bias_kmps2", 0.0)),
        )
    except ConfigError as exc:
        if exc.line is None and exc.source is None:
            raise ConfigError(exc.bare_message, line=_line_for(lines, exc.key or ""),
                              source=source, key=exc.key) from None
        raise


def parse_scenario(path) -> ScenarioConfig:
    """Read and validate a scenario file.

    Raises
    ------
    ConfigError
        With ``source`` and ``line`` set to the offending key's location.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario: {exc.strerror}", source=str(path)) from None
    return parse_scenario_text(text, source=str(path))


def parse_scenario_text(text, source="<string>") -> ScenarioConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed YAML: {getattr(exc, 'problem', exc)}",
                          line=mark.line + 1 if mark else None, source=source) from None
    if not isinstance(data, dict):
        raise ConfigError("scenario must be a mapping", line=1, source=source)
    return config_from_dict(data, source=source, lines=_line_map(text))


def dump_scenario(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False, default_flow_style=None)


def write_scenario(cfg: ScenarioConfig, path):
    Path(path).write_text(dump_scenario(cfg))


def _table_config(**changes):
    n = len(TABLE_R0)
    base = dict(
        lam0=TABLE_LAMBDA0, gamma0=TABLE_GAMMA0, R0=TABLE_R0, Vlam0=TABLE_VLAMBDA0,
        Rf=[TABLE_TERMINAL] * n, Vlamf=[TABLE_TERMINAL] * n, speeds=[ATTACKER_SPEED] * n,
        target_position=TARGET_POSITION, target_heading=TARGET_HEADING, target_speed=TARGET_SPEED,
        # weights N/(N-1) make (1/N) A x return the common preset terminal unchanged
        graph=CommGraph.complete(n, n / (n - 1)), observers=(0,),
        P1=1.0, P2=1.0, t0=0.0, dt=1e-3, kill_radius=TABLE_TERMINAL,
    )
    base.update(changes)
    return ScenarioConfig(**base)


def example1(**changes) -> ScenarioConfig:
    """Known sinusoidal target maneuver ``0.1 sin(10 t)`` over 15 s."""
    kw = dict(name="example1", law="known", tf=15.0,
              maneuver=TargetManeuver(kind="sinusoid", amplitude=0.1, omega=10.0))
    kw.update(changes)
    return _table_config(**kw)


def example2(**changes) -> ScenarioConfig:
    """Unknown exponential maneuver (``s = -2``) estimated by the observers, 8 s."""
    kw = dict(name="example2", law="observed", tf=8.0,
              maneuver=TargetManeuver(kind="exponential", amplitude=0.1, s=-2.0))
    kw.update(changes)
    return _table_config(**kw)


PRESETS = {"example1": example1, "example2": example2}


def preset(name, **changes) -> ScenarioConfig:
    try:
        return PRESETS[name](**changes)
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}") from None
