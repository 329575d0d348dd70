"""Directed communication topology among the attackers.

``weights[i, j] > 0`` means attacker ``i`` receives information from
attacker ``j`` (information flows j -> i).  Indices are 0-based here; scenario
files use 1-based attacker ids.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, GeometryInconsistencyError
from .kinematics import wrap_angle

ARCSIN_TOL = 1e-9


@dataclass(frozen=True)
class CommGraph:
    weights: np.ndarray

    def __post_init__(self):
        A = np.array(self.weights, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {A.shape}")
        if np.any(A < 0) or not np.all(np.isfinite(A)):
            raise ValueError("adjacency weights must be finite and non-negative")
        if np.any(np.diag(A) != 0):
            raise ValueError("self-loops are not permitted (non-zero diagonal)")
        A.setflags(write=False)
        object.__setattr__(self, "weights", A)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def receivers_of(self, j):
        """Attackers that receive information directly from ``j``."""
        return np.flatnonzero(self.weights[:, j] > 0)

    @classmethod
    def complete(cls, n, weight=1.0):
        A = np.full((n, n), float(weight))
        np.fill_diagonal(A, 0.0)
        return cls(A)


def reachable_from(graph: CommGraph, sources) -> set[int]:
    seen = set(int(s) for s in sources)
    queue = deque(sorted(seen))
    while queue:
        j = queue.popleft()
        for i in graph.receivers_of(j):
            if int(i) not in seen:
                seen.add(int(i))
                queue.append(int(i))
    return seen


def contains_spanning_tree(graph: CommGraph) -> bool:
    """True iff some root reaches every attacker along information-flow edges."""
    return any(len(reachable_from(graph, [r])) == graph.n for r in range(graph.n))


def consensus_terminal(graph: CommGraph, terminal_values):
    """Neighbour-weighted terminal ``(1/N) * A @ x``."""
    x = np.asarray(terminal_values, dtype=float)
    if x.shape[0] != graph.n:
        raise ValueError(f"expected {graph.n} terminal values, got {x.shape[0]}")
    return graph.weights @ x / graph.n


@dataclass(frozen=True)
class RelayObservation:
    """What attacker ``observer_id`` (i) passes to a neighbour j.

    ``r_ij`` is the i -> j separation and ``alpha`` its inertial bearing.
    """

    observer_id: int
    V_T: float
    R_i: float
    lam_i: float
    r_ij: float
    alpha: float


def relay_target_info(obs: RelayObservation):
    """Range and LOS angle of the target as seen from the neighbour.

    Law of cosines for the range, law of sines for the angle, with the arcsin
    branch chosen from the sign of the LOS-parallel leg so obtuse triangles
    are handled.
    """
    if obs.R_i <= 0:
        raise GeometryError("observer range must be positive")
    if obs.r_ij < 0:
        raise ValueError("separation must be non-negative")
    delta = obs.lam_i - obs.alpha
    R_j = np.sqrt(max(obs.R_i ** 2 + obs.r_ij ** 2 - 2.0 * obs.R_i * obs.r_ij * np.cos(delta), 0.0))
    if R_j <= 1e-12 * max(obs.R_i, obs.r_ij):
        raise GeometryError("relayed attacker coincides with the target")
    arg = obs.r_ij * np.sin(delta) / R_j
    if abs(arg) > 1.0 + ARCSIN_TOL:
        raise GeometryInconsistencyError(f"arcsin argument {arg!r} outside [-1, 1]")
    arg = min(1.0, max(-1.0, arg))
    turn = np.arcsin(arg)
    if obs.R_i - obs.r_ij * np.cos(delta) < 0.0:
        turn = np.copysign(np.pi, arg) - turn
    return float(R_j), wrap_angle(obs.lam_i + turn)


def relay_over_graph(graph: CommGraph, observers, positions, measurements, V_T):
    """Propagate target range/LOS from the observing attackers to everyone.

    Breadth-first along information-flow edges starting from the observers in
    index order; the first value an attacker receives is kept.

    Parameters
    ----------
    positions : (N, 2) array
        Attacker positions, known to each attacker and its neighbours.
    measurements : dict
        ``{i: (R_i, lam_i)}`` for each observing attacker.

    Returns
    -------
    dict ``{i: (R_i, lam_i, source)}`` where ``source`` is the attacker the
    value came from (``i`` itself for observers).
    """
    positions = np.asarray(positions, dtype=float)
    known = {}
    queue = deque()
    for o in sorted(int(o) for o in observers):
        R_o, lam_o = measurements[o]
        known[o] = (float(R_o), wrap_angle(lam_o), o)
        queue.append(o)
    while queue:
        j = queue.popleft()
        R_j, lam_j, _ = known[j]
        for i in graph.receivers_of(j):
            i = int(i)
            if i in known:
                continue
            d = positions[i] - positions[j]
            obs = RelayObservation(observer_id=j, V_T=V_T, R_i=R_j, lam_i=lam_j,
                                   r_ij=float(np.hypot(*d)), alpha=float(np.arctan2(d[1], d[0])))
            R_i, lam_i = relay_target_info(obs)
            known[i] = (R_i, lam_i, j)
            queue.append(i)
    missing = sorted(set(range(graph.n)) - set(known))
    if missing:
        raise GeometryError(f"attackers {[m + 1 for m in missing]} cannot receive target information")
    return known
