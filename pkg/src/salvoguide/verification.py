"""Numerical oracles for optimality and stability of simulated traces.

* ``evaluate_cost``: quadratic cost by composite trapezoid.
* ``check_stationarity``: costate/stationarity residuals, convexity and the
  Hamiltonian along the trace.
* ``lyapunov_monitor``: composite Lyapunov function of the reference states
  and the observation error, with its analytic derivative bound.
* ``optimality_certificate``: compares the exponential optimum against
  endpoint-preserving sine-bump competitors on a scalar instance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ReferenceRangeError

# default tolerance for the sample-wise Lyapunov checks
LYAPUNOV_TOL = 1e-6


def cost_integrand(R, V_r, V_lam, dV_lam, P1, P2, K1, K2):
    """Per-sample integrand ``0.5 * sum(P1^2 dR^2 + P2^2 dV_lam^2 + K1^2 R^2 + K2^2 V_lam^2)``."""
    terms = 0.5 * (np.square(P1 * V_r) + np.square(P2 * dV_lam)
                   + np.square(K1 * R) + np.square(K2 * V_lam))
    return np.sum(terms, axis=-1) if np.ndim(terms) > 1 else terms


def cost_functional(t, R, V_r, V_lam, dV_lam, P1, P2, K1, K2):
    """Composite-trapezoid cost over the grid ``t``.  Arrays are ``(M,)`` or ``(M, N)``."""
    return float(np.trapezoid(cost_integrand(R, V_r, V_lam, dV_lam, P1, P2, K1, K2), t))


def _require_full(trace):
    cfg = trace.config
    if not trace.complete or abs(trace.t[-1] - cfg.tf) > 1e-9 * max(1.0, abs(cfg.tf)):
        raise ReferenceRangeError(f"trace does not cover [{cfg.t0}, {cfg.tf}] "
                                  f"(status {trace.status}, ends at {trace.t[-1]:g} s)")


def _trace_gains(trace, gains):
    if gains is None:
        P1, P2 = trace.config.P1, trace.config.P2
        return P1, P2, trace.K1, trace.K2
    return gains.P1, gains.P2, gains.K1, gains.K2


def evaluate_cost(trace, gains=None) -> float:
    """Cost of a complete trace.  ``gains`` defaults to the per-sample gains logged in the trace.

    Raises
    ------
    ReferenceRangeError
        If the trace was truncated before ``tf``.
    """
    _require_full(trace)
    P1, P2, K1, K2 = _trace_gains(trace, gains)
    return cost_functional(trace.t, trace.R, trace.V_r, trace.V_lam, trace.dV_lam, P1, P2, K1, K2)


@dataclass(frozen=True)
class OptimalityReport:
    J: float
    H_series: np.ndarray
    H_terminal: float
    stationarity_R: np.ndarray
    stationarity_Vlam: np.ndarray
    stationarity_R_flip: np.ndarray
    stationarity_Vlam_flip: np.ndarray
    costate_R_residual: np.ndarray
    costate_Vlam_residual: np.ndarray
    convex_P1: np.ndarray
    convex_P2: np.ndarray

    @property
    def convex(self) -> bool:
        return bool(np.all(self.convex_P1) and np.all(self.convex_P2))

    @property
    def max_residual(self) -> float:
        return float(max(np.max(self.stationarity_R), np.max(self.stationarity_Vlam),
                         np.max(self.costate_R_residual), np.max(self.costate_Vlam_residual)))

    def passed(self, tol=1e-5) -> bool:
        return self.convex and self.max_residual < tol


def hamiltonian(R, V_r, V_lam, dV_lam, rho_R, rho_Vlam, P1, P2, K1, K2):
    """``H = L + rho_R . dR + rho_Vlam . dV_lam`` summed over attackers."""
    L = 0.5 * (np.square(P1 * V_r) + np.square(P2 * dV_lam)
               + np.square(K1 * R) + np.square(K2 * V_lam))
    return np.sum(L + rho_R * V_r + rho_Vlam * dV_lam, axis=-1)


def check_stationarity(trace, gains=None) -> OptimalityReport:
    """Residuals of the first-order optimality conditions along ``trace``.

    Stationarity ``P1^2 dR + rho_R`` and ``P2^2 dV_lam + rho_Vlam`` use the
    logged costates.  The costate equations ``d(rho_R) + K1^2 R`` are checked by
    fourth-order central differences of the logged series.  Residuals are
    per-attacker maxima over the samples.  Both costate sign conventions are
    reported.  Truncated traces are evaluated on whatever samples exist, so
    ``J`` is ``nan`` for them.
    """
    P1, P2, K1, K2 = _trace_gains(trace, gains)
    t = trace.t
    st_R = np.max(np.abs(P1 ** 2 * trace.V_r + trace.rho_R), axis=0)
    st_V = np.max(np.abs(P2 ** 2 * trace.dV_lam + trace.rho_Vlam), axis=0)
    st_Rp = np.max(np.abs(P1 ** 2 * trace.V_r + trace.rho_R_flip), axis=0)
    st_Vp = np.max(np.abs(P2 ** 2 * trace.dV_lam + trace.rho_Vlam_flip), axis=0)
    if t.size >= 5:
        seg = _segment_pieces(trace)
        co_R = np.zeros(trace.n)
        co_V = np.zeros(trace.n)
        for lo, hi in seg:
            if hi - lo < 5:
                continue
            h = (t[hi - 1] - t[lo]) / (hi - lo - 1)
            inner = slice(lo + 2, hi - 2)
            K1s = np.broadcast_to(K1, trace.R.shape)[inner]
            K2s = np.broadcast_to(K2, trace.R.shape)[inner]
            dR = _central4(trace.rho_R[lo:hi], h)
            dV = _central4(trace.rho_Vlam[lo:hi], h)
            co_R = np.maximum(co_R, np.max(np.abs(dR + K1s ** 2 * trace.R[inner]), axis=0))
            co_V = np.maximum(co_V, np.max(np.abs(dV + K2s ** 2 * trace.V_lam[inner]), axis=0))
    else:
        co_R = co_V = np.full(trace.n, np.nan)
    H = hamiltonian(trace.R, trace.V_r, trace.V_lam, trace.dV_lam, trace.rho_R, trace.rho_Vlam,
                    P1, P2, K1, K2)
    try:
        J = evaluate_cost(trace, gains)
    except ReferenceRangeError:
        J = float("nan")
    P1a = np.broadcast_to(np.asarray(P1, dtype=float), (trace.n,))
    P2a = np.broadcast_to(np.asarray(P2, dtype=float), (trace.n,))
    return OptimalityReport(J=J, H_series=H, H_terminal=float(H[-1]),
                            stationarity_R=st_R, stationarity_Vlam=st_V,
                            stationarity_R_flip=st_Rp, stationarity_Vlam_flip=st_Vp,
                            costate_R_residual=co_R, costate_Vlam_residual=co_V,
                            convex_P1=P1a ** 2 > 0, convex_P2=P2a ** 2 > 0)


def _central4(f, h):
    """Fourth-order central first derivative at the interior points ``f[2:-2]``."""
    return (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * h)


def _segment_pieces(trace):
    """Index ranges over which the gains are constant (one per piecewise segment)."""
    K = np.asarray(trace.K1)
    if K.ndim < 2 or K.shape[0] < 2:
        return [(0, trace.t.size)]
    change = np.flatnonzero(np.any(K[1:] != K[:-1], axis=1)) + 1
    edges = [0, *change.tolist(), trace.t.size]
    return list(zip(edges[:-1], edges[1:]))


@dataclass(frozen=True)
class LyapunovReport:
    V_series: np.ndarray
    dV_series: np.ndarray
    bound_series: np.ndarray
    monotone: bool
    max_increase: float
    bound_ok: bool
    max_bound_excess: float


def lyapunov_check(t, R_star, V_r_star, V_lam_star, dV_lam_star, rate1, rate2, A_T_err,
                   dA_T_err, tol=LYAPUNOV_TOL) -> LyapunovReport:
    """Lyapunov series, analytic derivative and the reference-decay bound.

    ``V = 0.5 (|R*|^2 + |V_r*|^2 + |V_lam*|^2 + |A_T_err|^2)``.  Its
    derivative uses ``dR* = V_r*``, ``dV_r* = -rate1 V_r*`` and the supplied
    ``dV_lam*`` and ``dA_T_err``.  The bound is
    ``-sum(rate2 V_lam*^2) - sum(rate1 (1 + rate1^2) R*^2)``.
    """
    def s(a):
        a = np.asarray(a, dtype=float)
        return np.sum(a, axis=-1) if a.ndim > 1 else a

    V = 0.5 * s(np.square(R_star) + np.square(V_r_star) + np.square(V_lam_star)
                + np.square(A_T_err))
    dV = s(R_star * V_r_star - rate1 * np.square(V_r_star) + V_lam_star * dV_lam_star
           + A_T_err * dA_T_err)
    bound = -s(rate2 * np.square(V_lam_star) + rate1 * (1.0 + np.square(rate1)) * np.square(R_star))
    inc = float(np.max(np.diff(V))) if V.size > 1 else 0.0
    excess = float(np.max(dV - bound)) if V.size else 0.0
    return LyapunovReport(V_series=V, dV_series=dV, bound_series=bound,
                          monotone=inc <= tol, max_increase=inc,
                          bound_ok=excess <= tol, max_bound_excess=excess)


def lyapunov_monitor(trace, tol=LYAPUNOV_TOL) -> LyapunovReport:
    """Lyapunov analysis of an observer-mode trace.

    Raises
    ------
    ModeError
        For ``known``-law traces, which carry no observer series.
    """
    trace.require_observer()
    cfg = trace.config
    rate1 = trace.K1 / cfg.P1
    rate2 = trace.K2 / cfg.P2
    dA_err = trace.dA_T[:, None] - trace.dA_T_hat
    return lyapunov_check(trace.t, trace.R_star, trace.V_r_star, trace.V_lam_star,
                          trace.dV_lam_star, rate1, rate2, trace.A_T_err, dA_err, tol)


def exponential_reference(t, R0, Rf, t0, tf):
    """Scalar optimal range ``Rf exp(-k (t - tf))`` and its rate ``k``."""
    k = np.log(R0 / Rf) / (tf - t0)
    return Rf * np.exp(-k * (np.asarray(t) - tf)), k


def bump_trajectory(t, R, dR, amplitude, t0, tf):
    """Add ``amplitude * sin(pi (t - t0) / (tf - t0))`` to ``R`` (and its derivative to ``dR``)."""
    w = np.pi / (tf - t0)
    arg = w * (np.asarray(t) - t0)
    return R + amplitude * np.sin(arg), dR + amplitude * w * np.cos(arg)


@dataclass(frozen=True)
class OptimalityCertificate:
    J_optimal: float
    J_closed_form: float
    J_comparison: np.ndarray
    amplitudes: np.ndarray

    @property
    def relative_quadrature_error(self) -> float:
        return abs(self.J_optimal - self.J_closed_form) / abs(self.J_closed_form)

    @property
    def optimal_is_best(self) -> bool:
        return bool(np.all(self.J_optimal < self.J_comparison))


def optimality_certificate(R0=7.1063, Rf=0.01, t0=0.0, tf=15.0, n_comparisons=20, dt=1e-3,
                           seed=0, P1=1.0) -> OptimalityCertificate:
    """Scalar instance: exponential optimum vs ``n_comparisons`` random sine bumps.

    Amplitudes are drawn uniformly from ``[-0.1, 0.1] * R0``.  The closed form
    ``(k/2)(R0^2 - Rf^2)`` uses ``P1 = 1`` scaling, ``K1 = P1 k``.
    """
    n = int(round((tf - t0) / dt))
    t = np.linspace(t0, tf, n + 1)
    R, k = exponential_reference(t, R0, Rf, t0, tf)
    dR = -k * R
    K1 = P1 * k
    zero = np.zeros_like(t)

    def J(R_, dR_):
        return cost_functional(t, R_, dR_, zero, zero, P1, 1.0, K1, 0.0)

    rng = np.random.default_rng(seed)
    amps = rng.uniform(-0.1, 0.1, n_comparisons) * R0
    comps = np.array([J(*bump_trajectory(t, R, dR, a, t0, tf)) for a in amps])
    closed = P1 ** 2 * (k / 2.0) * (R0 ** 2 - Rf ** 2)
    return OptimalityCertificate(J_optimal=J(R, dR), J_closed_form=closed,
                                 J_comparison=comps, amplitudes=amps)
