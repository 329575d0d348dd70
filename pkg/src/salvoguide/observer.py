"""Exogenous target-acceleration model and the per-attacker disturbance observer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FORCING_MODES = ("tracking_error", "reference", "measured")


@dataclass(frozen=True)
class ExoModel:
    """``dA_T/dt = s * A_T`` with ``A_T(t0) = A_T0``; ``s <= 0``."""

    s: float
    A_T0: float
    t0: float = 0.0

    def __post_init__(self):
        if self.s > 0:
            raise ValueError(f"exogenous decay constant must be <= 0, got s={self.s}")


def exo_step_truth(model: ExoModel, t):
    return model.A_T0 * np.exp(model.s * (np.asarray(t) - model.t0))


def observer_derivative(z, rel, s, forcing=None):
    """Right-hand side of the observer state ``z`` (the estimate of ``A_T``).

    ``dz = s z + cos(phi) V_lam - sin(phi) V_r`` where ``(V_r, V_lam)`` come from
    ``forcing`` when given, otherwise from the measured relative state.
    """
    if forcing is None:
        V_r, V_lam = rel.V_r, rel.V_lam
    else:
        V_r, V_lam = forcing
    return s * z + np.cos(rel.phi) * V_lam - np.sin(rel.phi) * V_r


def forcing_signals(mode, rel, V_r_star, V_lam_star):
    """Velocity pair fed to the observer for a given forcing mode.

    ``tracking_error`` uses the deviation of the relative velocities from
    their optimal references, ``reference`` the references themselves and
    ``measured`` the raw relative velocities.
    """
    if mode == "tracking_error":
        return rel.V_r - V_r_star, rel.V_lam - V_lam_star
    if mode == "reference":
        return V_r_star, V_lam_star
    if mode == "measured":
        return rel.V_r, rel.V_lam
    raise ValueError(f"unknown observer forcing {mode!r}; expected one of {FORCING_MODES}")
