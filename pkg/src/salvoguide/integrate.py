"""Fixed-step classical Runge-Kutta integration."""

import numpy as np


def rk4_step(f, t, y, dt):
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_solve(f, t_grid, y0):
    """Integrate ``y' = f(t, y)`` over a monotone grid; returns ``(len(t_grid), n)``."""
    t_grid = np.asarray(t_grid, dtype=float)
    out = np.empty((t_grid.size, np.size(y0)))
    y = np.asarray(y0, dtype=float)
    out[0] = y
    for i in range(t_grid.size - 1):
        y = rk4_step(f, t_grid[i], y, t_grid[i + 1] - t_grid[i])
        out[i + 1] = y
    return out
