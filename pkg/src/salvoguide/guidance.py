"""Two-point-boundary-value gains, exponential references and guidance laws.

For each attacker the optimal relative range and LOS-normal velocity are
single exponentials pinned at both ends,

    R*(t)     = Rf   * exp(-(K1/P1) (t - tf))
    V_lam*(t) = sgn * Vlf * exp(-(K2/P2) (t - tf)),   sgn = sign(V_lam(t0))

with ``K = P * ln(terminal / initial) / (t0 - tf)``.  The law cancels the
polar coupling terms and the (known or estimated) target acceleration and
injects the reference derivatives, so the closed loop obeys
``dV_r = -(K1/P1) V_r*`` and ``dV_lam = -(K2/P2) V_lam*``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (BoundaryDataError, GeometryError, ReferenceRangeError,
                     SegmentFeasibilityError, TimeOrderError)
from .graph import CommGraph, consensus_terminal
from .kinematics import RelativeState, target_accel_components

# slack for evaluating references at the window ends from accumulated grids
TIME_SLACK = 1e-9


@dataclass(frozen=True)
class BoundaryData:
    t0: float
    tf: float
    R0: np.ndarray
    Vlam0: np.ndarray
    Rf: np.ndarray
    Vlamf: np.ndarray

    def __post_init__(self):
        for name in ("R0", "Vlam0", "Rf", "Vlamf"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        if not self.tf > self.t0:
            raise TimeOrderError(f"tf ({self.tf}) must exceed t0 ({self.t0})")
        if np.any(self.Rf <= 0) or np.any(self.R0 <= 0):
            raise BoundaryDataError("ranges must be strictly positive (logarithmic gains)")
        if np.any(self.Vlamf <= 0) or np.any(self.Vlam0 == 0):
            raise BoundaryDataError("LOS-normal boundary magnitudes must be strictly positive")
        if np.any(self.Rf > self.R0):
            bad = np.flatnonzero(self.Rf > self.R0) + 1
            raise BoundaryDataError(f"terminal range exceeds initial range for attackers {bad.tolist()}")
        if np.any(self.Vlamf > np.abs(self.Vlam0)):
            bad = np.flatnonzero(self.Vlamf > np.abs(self.Vlam0)) + 1
            raise BoundaryDataError(f"terminal |V_lam| exceeds initial |V_lam| for attackers {bad.tolist()}")

    @property
    def sign(self):
        return np.sign(self.Vlam0)


@dataclass(frozen=True)
class GuidanceGains:
    P1: np.ndarray
    P2: np.ndarray
    K1: np.ndarray
    K2: np.ndarray

    @property
    def rate1(self):
        """Exponential rate ``K1/P1`` of the range reference (1/s)."""
        return self.K1 / self.P1

    @property
    def rate2(self):
        return self.K2 / self.P2


class Reference(NamedTuple):
    R: np.ndarray
    V_r: np.ndarray
    V_lam: np.ndarray
    dV_lam: np.ndarray


@dataclass(frozen=True)
class GuidanceCommand:
    A_Mr: np.ndarray
    A_Mlam: np.ndarray
    V_r_star: np.ndarray
    V_lam_star: np.ndarray
    R_star: np.ndarray


def compute_gains(b: BoundaryData, P1, P2) -> GuidanceGains:
    P1 = np.broadcast_to(np.asarray(P1, dtype=float), b.R0.shape).copy()
    P2 = np.broadcast_to(np.asarray(P2, dtype=float), b.R0.shape).copy()
    if np.any(P1 <= 0) or np.any(P2 <= 0):
        raise BoundaryDataError("weights P1, P2 must be strictly positive")
    span = b.t0 - b.tf
    K1 = P1 * (np.log(b.Rf) - np.log(b.R0)) / span
    K2 = P2 * (np.log(b.Vlamf) - np.log(np.abs(b.Vlam0))) / span
    return GuidanceGains(P1=P1, P2=P2, K1=K1, K2=K2)


def reference_trajectory(g: GuidanceGains, b: BoundaryData, t) -> Reference:
    if t < b.t0 - TIME_SLACK or t > b.tf + TIME_SLACK:
        raise ReferenceRangeError(f"t={t!r} outside [{b.t0}, {b.tf}]")
    k1, k2 = g.rate1, g.rate2
    R = b.Rf * np.exp(-k1 * (t - b.tf))
    V_lam = b.sign * b.Vlamf * np.exp(-k2 * (t - b.tf))
    return Reference(R=R, V_r=-k1 * R, V_lam=V_lam, dV_lam=-k2 * V_lam)


def guidance_known(rel: RelativeState, target_acc_components, g: GuidanceGains,
                   b: BoundaryData, t) -> GuidanceCommand:
    """Command for an exactly known target acceleration ``(A_Tr, A_Tlam)``."""
    if np.any(np.asarray(rel.R) <= 0):
        raise GeometryError("relative distance must be positive")
    A_Tr, A_Tlam = target_acc_components
    ref = reference_trajectory(g, b, t)
    A_Mr = rel.V_lam ** 2 / rel.R + A_Tr + g.rate1 * ref.V_r
    A_Mlam = -rel.V_r * rel.V_lam / rel.R + A_Tlam + g.rate2 * ref.V_lam
    return GuidanceCommand(A_Mr=A_Mr, A_Mlam=A_Mlam, V_r_star=ref.V_r,
                           V_lam_star=ref.V_lam, R_star=ref.R)


def guidance_observed(rel: RelativeState, A_T_hat, g: GuidanceGains,
                      b: BoundaryData, t) -> GuidanceCommand:
    """Same law with the target acceleration replaced by an observer estimate.

    The radial channel tracks ``V_r*`` and the lateral channel ``V_lam*``,
    as in the known-acceleration law.
    """
    return guidance_known(rel, target_accel_components(A_T_hat, rel.phi), g, b, t)


def anchor_segment(R_k, Vlam_k, t_k, t_next, P1, P2, graph: CommGraph | None = None,
                   terminal: tuple | None = None):
    """Boundary data and gains for one piecewise segment.

    With ``terminal=None`` the segment ends at ``t_next`` on the neighbour
    consensus of the current states, ``(1/N) A R_k`` and ``(1/N) A V_lam_k``
    (sign carried from ``V_lam_k``).  With ``terminal=(tf, Rf, Vlamf)`` the
    segment re-plans from the current state toward the fixed terminal at ``tf``.

    Raises
    ------
    SegmentFeasibilityError
        If a terminal does not contract the current state.
    """
    R_k = np.asarray(R_k, dtype=float)
    Vlam_k = np.asarray(Vlam_k, dtype=float)
    if terminal is None:
        if graph is None:
            raise ValueError("consensus segments need the communication graph")
        t_end = t_next
        Rf = consensus_terminal(graph, R_k)
        Vlamf = np.abs(consensus_terminal(graph, Vlam_k))
    else:
        t_end, Rf, Vlamf = terminal
    try:
        b = BoundaryData(t0=t_k, tf=t_end, R0=R_k, Vlam0=Vlam_k, Rf=Rf, Vlamf=Vlamf)
    except BoundaryDataError as exc:
        raise SegmentFeasibilityError(f"segment starting at t={t_k:g} s is infeasible: {exc}") from exc
    return b, compute_gains(b, P1, P2)


def piecewise_guidance(rel_all: RelativeState, graph: CommGraph, A_T_hat, segment,
                       P1, P2, terminal=None, t=None):
    """Closed-loop piecewise command on ``segment = (t_k, t_next)``.

    ``rel_all`` is the state at ``t_k`` used for re-anchoring; the command is
    evaluated at ``t`` (default ``t_k``) with the same state.  Returns
    ``(command, boundary, gains)``.
    """
    t_k, t_next = segment
    if not t_next > t_k:
        raise TimeOrderError("segment times must be increasing")
    b, g = anchor_segment(rel_all.R, rel_all.V_lam, t_k, t_next, P1, P2, graph, terminal)
    cmd = guidance_observed(rel_all, A_T_hat, g, b, t_k if t is None else t)
    return cmd, b, g


def segment_schedule(t0, tf, count):
    """Uniform segment boundaries ``[t0, ..., tf]``."""
    if count < 1:
        raise ValueError("segment count must be >= 1")
    return np.linspace(t0, tf, count + 1)


def piecewise_total_time(seg_times, R_k, V_r_k):
    """Total engagement time estimate ``sum(t_{k+1} - t_k + |R_k / V_r_k|)``.

    Reported as a diagnostic only; the sum counts the coasting term once per
    segment.
    """
    seg_times = np.asarray(seg_times, dtype=float)
    R_k = np.asarray(R_k, dtype=float)
    V_r_k = np.asarray(V_r_k, dtype=float)
    durations = np.diff(seg_times)
    return np.sum(durations[:, None] + np.abs(R_k / V_r_k), axis=0)
