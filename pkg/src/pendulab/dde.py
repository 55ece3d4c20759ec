"""Constant-delay integration by the method of steps.

RK4 on a fixed grid; delayed values come from cubic Hermite interpolation of
stored (state, derivative) pairs.  Before ``t0`` the history is the constant
initial state.
"""
import enum
import math
from dataclasses import dataclass

import numba
import numpy as np

from .core import DomainError, IntegrationError, Trajectory, as_state

NODE_SNAP = 1e-9


class ConfigurationError(DomainError):
    pass


class DelayedSystem(enum.IntEnum):
    EULER_TOP_DELAY_Z = 0   # x3' = x1(t-tau) x2(t-tau)
    EULER_TOP_DELAY_X = 1   # x1' = x2(t-tau) x3(t-tau)
    PENDULUM_DELAY_H = 2    # theta'' + 2H sin theta(t-tau) = 0
    PENDULUM_DELAY_K = 3    # theta'' + 2K sin theta(t-tau) = 0

    @property
    def dim(self):
        return 3 if self < 2 else 2

    @property
    def is_pendulum(self):
        return self >= 2


@dataclass(frozen=True)
class DelaySpec:
    """Delay ``tau`` with constant history (the initial state) before t0."""

    tau: float

    def __post_init__(self):
        if not (math.isfinite(self.tau) and self.tau > 0):
            raise DomainError(f"tau must be positive and finite, got {self.tau}")


@numba.njit(cache=True)
def _delayed_rhs(tag, level, y, yd, out):
    if tag == 0:
        out[0] = y[1] * y[2]
        out[1] = -y[0] * y[2]
        out[2] = yd[0] * yd[1]
    elif tag == 1:
        out[0] = yd[1] * yd[2]
        out[1] = -y[0] * y[2]
        out[2] = y[0] * y[1]
    else:
        out[0] = y[1]
        out[1] = -2.0 * level * math.sin(yd[0])


@numba.njit(cache=True)
def _hermite(y0, f0, y1, f1, h, s, out):
    s2 = s * s
    s3 = s2 * s
    h00 = 2.0 * s3 - 3.0 * s2 + 1.0
    h10 = s3 - 2.0 * s2 + s
    h01 = -2.0 * s3 + 3.0 * s2
    h11 = s3 - s2
    for j in range(out.shape[0]):
        out[j] = h00 * y0[j] + h10 * h * f0[j] + h01 * y1[j] + h11 * h * f1[j]


@numba.njit(cache=True)
def _lookup(s, t0, dt, y_init, ybuf, fbuf, m, out):
    if s <= t0 + NODE_SNAP * dt:
        out[:] = y_init
        return
    u = (s - t0) / dt
    i = int(math.floor(u))
    frac = u - i
    if frac < NODE_SNAP:
        out[:] = ybuf[i % m]
    elif frac > 1.0 - NODE_SNAP:
        out[:] = ybuf[(i + 1) % m]
    else:
        a = i % m
        b = (i + 1) % m
        _hermite(ybuf[a], fbuf[a], ybuf[b], fbuf[b], dt, frac, out)


@numba.njit(cache=True)
def _dde_loop(tag, level, tau, y0, t0, dt, times, stride):
    n_nodes = times.shape[0]
    dim = y0.shape[0]
    m = int(math.ceil(tau / dt)) + 4
    ybuf = np.empty((m, dim))
    fbuf = np.empty((m, dim))
    n_out = (n_nodes - 1) // stride + 1
    if (n_nodes - 1) % stride != 0:
        n_out += 1
    out_t = np.empty(n_out)
    out_y = np.empty((n_out, dim))
    out_f = np.empty((n_out, dim))

    y = y0.copy()
    tmp = np.empty(dim)
    yd = np.empty(dim)
    k1 = np.empty(dim)
    k2 = np.empty(dim)
    k3 = np.empty(dim)
    k4 = np.empty(dim)
    ybuf[0] = y
    k = 0
    for n in range(n_nodes - 1):
        t = times[n]
        h = times[n + 1] - t
        _lookup(t - tau, t0, dt, y0, ybuf, fbuf, m, yd)
        _delayed_rhs(tag, level, y, yd, k1)
        fbuf[n % m] = k1
        if n % stride == 0:
            out_t[k] = t
            out_y[k] = y
            out_f[k] = k1
            k += 1
        _lookup(t + 0.5 * h - tau, t0, dt, y0, ybuf, fbuf, m, yd)
        for j in range(dim):
            tmp[j] = y[j] + 0.5 * h * k1[j]
        _delayed_rhs(tag, level, tmp, yd, k2)
        for j in range(dim):
            tmp[j] = y[j] + 0.5 * h * k2[j]
        _delayed_rhs(tag, level, tmp, yd, k3)
        _lookup(t + h - tau, t0, dt, y0, ybuf, fbuf, m, yd)
        for j in range(dim):
            tmp[j] = y[j] + h * k3[j]
        _delayed_rhs(tag, level, tmp, yd, k4)
        finite = True
        for j in range(dim):
            y[j] = y[j] + (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
            finite = finite and math.isfinite(y[j])
        if not finite:
            return out_t[:k], out_y[:k], out_f[:k], n
        ybuf[(n + 1) % m] = y

    t = times[n_nodes - 1]
    _lookup(t - tau, t0, dt, y0, ybuf, fbuf, m, yd)
    _delayed_rhs(tag, level, y, yd, k1)
    out_t[k] = t
    out_y[k] = y
    out_f[k] = k1
    return out_t, out_y, out_f, -1


class DenseHistory:
    """Cubic Hermite interpolant of a delayed solution on a uniform grid."""

    def __init__(self, times, states, derivatives, initial):
        self.times = np.asarray(times, dtype=np.float64)
        self.states = np.asarray(states, dtype=np.float64)
        self.derivatives = np.asarray(derivatives, dtype=np.float64)
        self.initial = np.asarray(initial, dtype=np.float64)
        self.t0 = self.times[0]
        self.dt = self.times[1] - self.times[0] if len(self.times) > 1 else 0.0

    def __call__(self, s):
        if s <= self.t0:
            return self.initial.copy()
        if s > self.times[-1]:
            raise DomainError(
                f"history lookup at t={s} beyond stored range "
                f"[{self.t0}, {self.times[-1]}]")
        i = min(int(np.searchsorted(self.times, s, side="right")) - 1,
                len(self.times) - 2)
        h = self.times[i + 1] - self.times[i]
        frac = (s - self.times[i]) / h
        if frac < NODE_SNAP:
            return self.states[i].copy()
        if frac > 1.0 - NODE_SNAP:
            return self.states[i + 1].copy()
        out = np.empty(self.states.shape[1])
        _hermite(self.states[i], self.derivatives[i],
                 self.states[i + 1], self.derivatives[i + 1], h, frac, out)
        return out


def integrate_dde(system, s0, delay, grid, level=0.0, stride=1,
                  return_history=False):
    """Integrate a delayed Euler top or delayed pendulum on ``grid``.

    ``level`` is the H or K coefficient of the pendulum systems.  Only every
    ``stride``-th node (and the last) is stored in the returned trajectory;
    with ``return_history=True`` (stride 1 only) a :class:`DenseHistory`
    is returned alongside.
    """
    system = DelayedSystem(system)
    y0 = as_state(s0, system.dim, name="initial state")
    if system.is_pendulum and not level > 0:
        raise ConfigurationError(f"level must be positive, got {level}")
    if grid.dt > delay.tau / 4:
        raise ConfigurationError(
            f"dt={grid.dt} exceeds tau/4={delay.tau / 4}")
    if stride < 1 or (return_history and stride != 1):
        raise ConfigurationError("stride must be >= 1, and 1 for dense history")
    times = grid.times()
    out_t, out_y, out_f, failed = _dde_loop(
        int(system), float(level), float(delay.tau), y0, float(grid.t0),
        float(grid.dt), times, int(stride))
    if failed >= 0:
        raise IntegrationError("non-finite state", times[failed])
    traj = Trajectory(out_t, out_y)
    if return_history:
        return traj, DenseHistory(out_t, out_y, out_f, y0)
    return traj


def delayed_pendulum_rhs(t, s, level, delay, history):
    """``(ω(t), −2·level·sin θ(t − τ))`` with θ(t − τ) read from ``history``.

    ``history`` is any callable mapping a time to a pendulum state, e.g. a
    :class:`DenseHistory`.
    """
    theta, omega = as_state(s, 2)
    lagged = history(t - delay.tau)
    return np.array([omega, -2.0 * level * math.sin(lagged[0])])


def frozen_first_window(system, s0, level=0.0):
    """Vector field of the first delay window, where delayed terms equal the
    constant history ``s0``."""
    system = DelayedSystem(system)
    frozen = as_state(s0, system.dim)

    def f(t, y):
        out = np.empty(system.dim)
        _delayed_rhs(int(system), float(level),
                     np.asarray(y, dtype=np.float64), frozen, out)
        return out
    return f
