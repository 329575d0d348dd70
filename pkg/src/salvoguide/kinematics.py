"""Planar attacker/target engagement geometry.

Conventions
-----------
* The LOS angle ``lam`` is the inertial angle of the attacker -> target
  displacement, counter-clockwise from +x, normalised to ``[0, 2*pi)``.
* ``lam_hat`` is the reversed LOS, ``lam - pi`` on ``[pi, 2*pi)`` and
  ``lam + pi`` on ``[0, pi)``.
* Attacker bearing ``xi = gamma_i - lam``; target bearing
  ``phi = gamma_T - lam_hat``.
* The target heading ``gamma_T`` is referenced to the reversed-LOS frame, so
  the target's inertial velocity is ``-V_T * (cos gamma_T, sin gamma_T)``.
  With this convention the polar velocity components

      V_r   = V_T cos(phi) - V_i cos(xi)
      V_lam = V_T sin(phi) - V_i sin(xi)

  and the target acceleration components ``A_Tr = -A_T sin(phi)``,
  ``A_Tlam = A_T cos(phi)`` are the exact Cartesian projections onto the LOS
  unit vector and its counter-clockwise normal.

All functions broadcast over numpy arrays so the same code evaluates one
attacker or all N at once.  Units: km, km/s, km/s^2, s, rad.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class TargetState:
    position: np.ndarray
    heading: float
    speed: float
    accel: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        if not np.all(np.asarray(self.speed) > 0):
            raise ValueError("target speed must be positive")


@dataclass(frozen=True)
class AttackerState:
    position: np.ndarray
    heading: float | np.ndarray
    speed: float | np.ndarray
    accel: float | np.ndarray = 0.0
    id: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        if not np.all(np.asarray(self.speed) > 0):
            raise ValueError("attacker speed must be positive")


@dataclass(frozen=True)
class RelativeState:
    """Polar state of one attacker (or an array of attackers) w.r.t. the target."""

    R: float | np.ndarray
    lam: float | np.ndarray
    V_r: float | np.ndarray
    V_lam: float | np.ndarray
    xi: float | np.ndarray = np.nan
    phi: float | np.ndarray = np.nan

    @property
    def lam_hat(self):
        return los_hat(wrap_angle(self.lam))


@dataclass(frozen=True)
class AccelComponents:
    A_Mr: float | np.ndarray
    A_Mlam: float | np.ndarray
    A_Tr: float | np.ndarray
    A_Tlam: float | np.ndarray


def wrap_angle(angle):
    """Map angles onto ``[0, 2*pi)``."""
    wrapped = np.mod(angle, TWO_PI)
    # np.mod returns exactly 2*pi for tiny negative inputs
    wrapped = np.where(wrapped >= TWO_PI, 0.0, wrapped)
    return wrapped if wrapped.ndim else float(wrapped)


def los_hat(lam):
    """Reversed LOS angle for ``lam`` already on ``[0, 2*pi)``."""
    lam = np.asarray(lam, dtype=float)
    out = np.where(lam >= np.pi, lam - np.pi, lam + np.pi)
    return out if out.ndim else float(out)


def target_velocity(heading, speed):
    return -np.asarray(speed)[..., None] * np.stack(
        [np.cos(heading), np.sin(heading)], axis=-1)


def attacker_velocity(heading, speed):
    return np.asarray(speed)[..., None] * np.stack(
        [np.cos(heading), np.sin(heading)], axis=-1)


def target_accel_components(A_T, phi):
    """LOS-frame components ``(A_Tr, A_Tlam)`` of a lateral target acceleration."""
    return -A_T * np.sin(phi), A_T * np.cos(phi)


def attacker_accel_components(A_M, xi):
    """LOS-frame components ``(A_Mr, A_Mlam)`` of a scalar attacker command."""
    return A_M * np.sin(xi), -A_M * np.cos(xi)


def polar_velocity(V_T, phi, V_M, xi):
    """``(V_r, V_lam)`` from speeds and bearing angles."""
    V_r = V_T * np.cos(phi) - V_M * np.cos(xi)
    V_lam = V_T * np.sin(phi) - V_M * np.sin(xi)
    return V_r, V_lam


def relative_from_absolute(attacker: AttackerState, target: TargetState) -> RelativeState:
    """Polar relative state of ``attacker`` with respect to ``target``.

    ``attacker.position`` may be ``(2,)`` or ``(N, 2)``.
    """
    d = target.position - attacker.position
    R = np.hypot(d[..., 0], d[..., 1])
    if np.any(R <= 0.0):
        raise GeometryError("attacker and target positions coincide")
    lam = wrap_angle(np.arctan2(d[..., 1], d[..., 0]))
    xi = attacker.heading - lam
    phi = target.heading - los_hat(lam)
    V_r, V_lam = polar_velocity(target.speed, phi, attacker.speed, xi)
    if np.ndim(R) == 0:
        R, V_r, V_lam, xi, phi = (float(v) for v in (R, V_r, V_lam, xi, phi))
    return RelativeState(R=R, lam=lam, V_r=V_r, V_lam=V_lam, xi=xi, phi=phi)


def relative_derivatives(rel: RelativeState, acc: AccelComponents):
    """Time derivatives ``(dR, dlam, dV_r, dV_lam)`` of the polar state."""
    R = rel.R
    if np.any(np.asarray(R) <= 0.0):
        raise GeometryError(f"relative distance must be positive, got min R={np.min(R)!r}")
    dR = rel.V_r
    dlam = rel.V_lam / R
    dV_r = rel.V_lam ** 2 / R - acc.A_Mr + acc.A_Tr
    dV_lam = -rel.V_lam * rel.V_r / R - acc.A_Mlam + acc.A_Tlam
    return dR, dlam, dV_r, dV_lam


def scalar_command_from_components(acc: AccelComponents, rel: RelativeState):
    """Least-squares scalar lateral command for the LOS-frame pair.

    The single-channel vehicle can only realise ``(a sin xi, -a cos xi)``;
    returns ``(a, residual_norm)``.  Diagnostics only.
    """
    s, c = np.sin(rel.xi), np.cos(rel.xi)
    a = acc.A_Mr * s - acc.A_Mlam * c
    residual = np.abs(acc.A_Mr * c + acc.A_Mlam * s)
    return a, residual


def attacker_position_from_relative(rel: RelativeState, target: TargetState):
    if np.any(np.asarray(rel.R) < 0.0):
        raise GeometryError("relative distance must be non-negative")
    R = np.asarray(rel.R, dtype=float)
    los = np.stack([np.cos(rel.lam), np.sin(rel.lam)], axis=-1)
    return target.position - R[..., None] * los


def attacker_heading_from_relative(rel: RelativeState, target_heading, target_speed):
    """Inertial heading and speed implied by a polar state and the target motion.

    Used to recover ``xi`` when the relative dynamics are integrated directly.
    """
    lam = np.asarray(rel.lam, dtype=float)
    e_r = np.stack([np.cos(lam), np.sin(lam)], axis=-1)
    e_n = np.stack([-np.sin(lam), np.cos(lam)], axis=-1)
    v_rel = np.asarray(rel.V_r)[..., None] * e_r + np.asarray(rel.V_lam)[..., None] * e_n
    v_M = target_velocity(target_heading, target_speed) - v_rel
    return np.arctan2(v_M[..., 1], v_M[..., 0]), np.hypot(v_M[..., 0], v_M[..., 1])


def propagate_absolute(attacker: AttackerState, target: TargetState, duration, dt,
                       attacker_accel=None, target_accel=None):
    """Fly both vehicles with their heading ODEs using classical RK4.

    ``attacker_accel(t)`` / ``target_accel(t)`` return lateral accelerations;
    constants from the states are used when omitted.  Returns the final
    ``(AttackerState, TargetState)``.
    """
    from .integrate import rk4_step

    a_M = attacker_accel or (lambda t: attacker.accel)
    a_T = target_accel or (lambda t: target.accel)
    n_att = np.size(attacker.heading)
    V_M = np.broadcast_to(np.asarray(attacker.speed, dtype=float), (n_att,))
    V_T = float(target.speed)

    def rhs(t, y):
        pm = y[:2 * n_att].reshape(n_att, 2)
        gm = y[2 * n_att:3 * n_att]
        gt = y[-1]
        dpm = attacker_velocity(gm, V_M)
        dpt = target_velocity(gt, V_T)
        dgm = np.broadcast_to(a_M(t), (n_att,)) / V_M
        return np.concatenate([dpm.ravel(), dgm, dpt, [a_T(t) / V_T]])

    y = np.concatenate([np.reshape(attacker.position, -1),
                        np.atleast_1d(attacker.heading).astype(float),
                        target.position, [target.heading]])
    n = int(round(duration / dt))
    t = 0.0
    for _ in range(n):
        y = rk4_step(rhs, t, y, dt)
        t += dt
    pos = y[:2 * n_att].reshape(n_att, 2)
    head = y[2 * n_att:3 * n_att]
    if np.ndim(attacker.heading) == 0:
        pos, head = pos[0], float(head[0])
    new_att = AttackerState(position=pos, heading=head, speed=attacker.speed,
                            accel=attacker.accel, id=attacker.id)
    new_tgt = TargetState(position=y[-3:-1], heading=float(y[-1]), speed=target.speed,
                          accel=target.accel)
    return new_att, new_tgt
