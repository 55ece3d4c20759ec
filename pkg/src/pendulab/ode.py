"""Fixed-step classical Runge-Kutta integration and conservation monitors."""
import math
from dataclasses import dataclass

import numba
import numpy as np

from .core import (ConservedQuantity, DomainError, Field, IntegrationError,
                   Trajectory, as_state, conserved, euler_top_kernel,
                   pendulum_kernel, zero_kernel)

MAX_STEPS = 10 ** 8


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid ``t0, t0+dt, ...`` with a shortened last step onto ``t1``."""

    t0: float
    t1: float
    dt: float

    def __post_init__(self):
        for name in ("t0", "t1", "dt"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if not self.t1 > self.t0:
            raise DomainError(f"t1 must exceed t0 (t0={self.t0}, t1={self.t1})")
        if not self.dt > 0:
            raise DomainError(f"dt must be positive, got {self.dt}")
        if (self.t1 - self.t0) / self.dt > MAX_STEPS:
            raise DomainError(
                f"grid would need more than {MAX_STEPS} steps")

    @property
    def n_steps(self):
        span = (self.t1 - self.t0) / self.dt
        n = math.floor(span + 1e-9)
        if self.t0 + n * self.dt < self.t1 - 1e-9 * self.dt:
            n += 1
        return max(n, 1)

    def times(self):
        """Grid nodes, the last one exactly ``t1``."""
        n = self.n_steps
        t = self.t0 + self.dt * np.arange(n + 1, dtype=np.float64)
        t[-1] = self.t1
        return t


def rk4_step(f, t, s, dt):
    """One classical four-stage Runge-Kutta step of ``y' = f(t, y)``."""
    s = np.asarray(s, dtype=np.float64)
    k1 = np.asarray(f(t, s), dtype=np.float64)
    k2 = np.asarray(f(t + 0.5 * dt, s + 0.5 * dt * k1), dtype=np.float64)
    k3 = np.asarray(f(t + 0.5 * dt, s + 0.5 * dt * k2), dtype=np.float64)
    k4 = np.asarray(f(t + dt, s + dt * k3), dtype=np.float64)
    out = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise IntegrationError("non-finite RK4 stage", t)
    return out


# Kernels passed as first-class functions defeat numba's on-disk cache, so
# the built-in fields go through the tag-dispatched loop below instead.
@numba.njit
def _rk4_loop(kernel, p, times, y0):
    n = times.shape[0]
    out = np.empty((n, y0.shape[0]))
    out[0] = y0
    y = y0.copy()
    for i in range(n - 1):
        t = times[i]
        h = times[i + 1] - t
        k1 = kernel(t, y, p)
        k2 = kernel(t + 0.5 * h, y + 0.5 * h * k1, p)
        k3 = kernel(t + 0.5 * h, y + 0.5 * h * k2, p)
        k4 = kernel(t + h, y + h * k3, p)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        for j in range(y.shape[0]):
            if not math.isfinite(y[j]):
                return out, i
        out[i + 1] = y
    return out, -1


_BUILTIN_TAGS = {euler_top_kernel: 0, pendulum_kernel: 1, zero_kernel: 2}


@numba.njit(cache=True)
def _builtin(tag, t, y, p):
    if tag == 0:
        return euler_top_kernel(t, y, p)
    if tag == 1:
        return pendulum_kernel(t, y, p)
    return zero_kernel(t, y, p)


@numba.njit(cache=True)
def _rk4_builtin_loop(tag, p, times, y0):
    n = times.shape[0]
    out = np.empty((n, y0.shape[0]))
    out[0] = y0
    y = y0.copy()
    for i in range(n - 1):
        t = times[i]
        h = times[i + 1] - t
        k1 = _builtin(tag, t, y, p)
        k2 = _builtin(tag, t + 0.5 * h, y + 0.5 * h * k1, p)
        k3 = _builtin(tag, t + 0.5 * h, y + 0.5 * h * k2, p)
        k4 = _builtin(tag, t + h, y + h * k3, p)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        for j in range(y.shape[0]):
            if not math.isfinite(y[j]):
                return out, i
        out[i + 1] = y
    return out, -1


def integrate(f, s0, grid):
    """Integrate ``y' = f(t, y)`` with RK4 on ``grid``; returns a Trajectory.

    ``f`` is either a :class:`~pendulab.core.Field` (compiled loop) or any
    Python callable ``f(t, y)``.
    """
    y0 = as_state(s0, name="initial state")
    times = grid.times()
    if isinstance(f, Field):
        tag = _BUILTIN_TAGS.get(f.kernel)
        if tag is None:
            states, failed = _rk4_loop(f.kernel, f.params, times, y0)
        else:
            states, failed = _rk4_builtin_loop(tag, f.params, times, y0)
        if failed >= 0:
            raise IntegrationError("non-finite RK4 stage", times[failed])
        return Trajectory(times, states)
    states = np.empty((len(times), len(y0)))
    states[0] = y0
    y = y0
    for i in range(len(times) - 1):
        y = rk4_step(f, times[i], y, times[i + 1] - times[i])
        states[i + 1] = y
    return Trajectory(times, states)


def conservation_drift(traj, q):
    """Max over the grid of ``|q(s(t)) - q(s(t0))|``."""
    if traj.dim != 3:
        raise DomainError(
            f"conservation_drift needs Euler-top states, got dim {traj.dim}")
    values = conserved(ConservedQuantity(q), traj.states)
    return float(np.max(np.abs(values - values[0])))
