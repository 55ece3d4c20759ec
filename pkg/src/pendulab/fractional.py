"""Caputo-fractional integration with the Adams-Bashforth-Moulton scheme.

Each equation carries its own order.  A component of order ``q`` is
advanced through the Volterra form

    y(t) = sum_{k < ceil(q)} y^(k)(0) t^k / k!  +  I^q f(t, y)(t)

with product-rectangle (predictor) and product-trapezoid (corrector)
weights.  One corrector pass per step (PECE), full memory.
"""
import enum
import math
from dataclasses import dataclass

import numba
import numpy as np

from .core import DomainError, IntegrationError, Trajectory, as_state


@dataclass(frozen=True)
class FractionalOrder:
    alpha: float

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha}")


class MixedOrderSystem(enum.IntEnum):
    EULER_TOP_FRAC_Z = 0   # orders (1, 1, alpha)
    EULER_TOP_FRAC_X = 1   # orders (alpha, 1, 1)
    PENDULUM_FRAC_H = 2    # D^(alpha+1) theta + 2H sin theta = 0
    PENDULUM_FRAC_K = 3    # D^(alpha+1) theta + 2K sin theta = 0

    @property
    def is_pendulum(self):
        return self >= 2

    def orders(self, alpha):
        if self == MixedOrderSystem.EULER_TOP_FRAC_Z:
            return (1.0, 1.0, alpha)
        if self == MixedOrderSystem.EULER_TOP_FRAC_X:
            return (alpha, 1.0, 1.0)
        return (alpha + 1.0,)


def predictor_weights(q, n, dt):
    """Product-rectangle weights ``b_j``, j = 0..n-1, for the step onto t_n:
    ``dt^q / Γ(q+1) * ((n-j)^q - (n-1-j)^q)``."""
    j = np.arange(n, dtype=np.float64)
    scale = dt ** q / math.gamma(q + 1.0)
    return scale * ((n - j) ** q - (n - 1 - j) ** q)


def corrector_weights(q, n, dt):
    """Product-trapezoid weights ``a_j``, j = 0..n, for the step onto t_n."""
    scale = dt ** q / math.gamma(q + 2.0)
    a = np.empty(n + 1)
    a[0] = (n - 1) ** (q + 1) - (n - 1 - q) * n ** q
    j = np.arange(1, n, dtype=np.float64)
    a[1:n] = ((n - j + 1) ** (q + 1) + (n - j - 1) ** (q + 1)
              - 2.0 * (n - j) ** (q + 1))
    a[n] = 1.0
    return scale * a


def abm_weights(alpha, n, dt=1.0):
    """Predictor and corrector weights ``(b, a)`` for the step onto ``t_n``."""
    if not alpha > 0:
        raise DomainError(f"order must be positive, got {alpha}")
    if n < 1:
        raise DomainError(f"need n >= 1, got {n}")
    return predictor_weights(alpha, n, dt), corrector_weights(alpha, n, dt)


# Kernel tables indexed by distance d = n - j so the sums are convolutions.
def _kernel_tables(q, n_max, dt):
    d = np.arange(n_max + 2, dtype=np.float64)
    pred = dt ** q / math.gamma(q + 1.0) * (
        d ** q - np.maximum(d - 1.0, 0.0) ** q)
    pred[0] = 0.0
    corr = np.zeros(n_max + 2)
    dd = d[1:]
    corr[1:] = dt ** q / math.gamma(q + 2.0) * (
        (dd + 1.0) ** (q + 1) + (dd - 1.0) ** (q + 1) - 2.0 * dd ** (q + 1))
    start = np.zeros(n_max + 2)
    start[1:] = dt ** q / math.gamma(q + 2.0) * (
        (dd - 1.0) ** (q + 1) - (dd - 1.0 - q) * dd ** q)
    return pred, corr, start


@numba.njit(cache=True)
def _rhs(tag, level, y, out):
    if tag <= 1:
        out[0] = y[1] * y[2]
        out[1] = -y[0] * y[2]
        out[2] = y[0] * y[1]
    else:
        out[0] = -2.0 * level * math.sin(y[0])


@numba.njit(cache=True)
def _abm_loop(tag, level, y0, taylor1, pred, corr, start, ends, n_steps):
    """Shared PECE sweep.  ``taylor1`` holds y'(0) for components of order
    above one (zero otherwise).  Memory sums run in ascending j."""
    dim = y0.shape[0]
    f = np.empty((n_steps + 1, dim))
    y = np.empty((n_steps + 1, dim))
    y[0] = y0
    tmp = np.empty(dim)
    fp = np.empty(dim)
    _rhs(tag, level, y0, tmp)
    f[0] = tmp
    for n in range(1, n_steps + 1):
        # predictor
        yp = np.empty(dim)
        t_n = ends[n]
        for c in range(dim):
            s = 0.0
            for j in range(n):
                s += pred[c, n - j] * f[j, c]
            yp[c] = y0[c] + taylor1[c] * t_n + s
            if not math.isfinite(yp[c]):
                return y[:n], f[:n], n
        _rhs(tag, level, yp, fp)
        # corrector
        for c in range(dim):
            s = start[c, n] * f[0, c]
            for j in range(1, n):
                s += corr[c, n - j] * f[j, c]
            s += corr[c, 0] * fp[c]
            y[n, c] = y0[c] + taylor1[c] * t_n + s
        _rhs(tag, level, y[n], tmp)
        f[n] = tmp
    return y, f, -1


def _integrate_abm(tag, level, y0, taylor1, orders, n_steps, dt):
    dim = len(y0)
    pred = np.empty((dim, n_steps + 2))
    corr = np.empty((dim, n_steps + 2))
    start = np.empty((dim, n_steps + 2))
    for c, q in enumerate(orders):
        p, k, s = _kernel_tables(q, n_steps, dt)
        pred[c] = p
        corr[c] = k
        corr[c, 0] = dt ** q / math.gamma(q + 2.0)
        start[c] = s
    ends = dt * np.arange(n_steps + 1, dtype=np.float64)
    y, f, failed = _abm_loop(tag, float(level), y0, taylor1,
                             pred, corr, start, ends, n_steps)
    if failed >= 0:
        raise IntegrationError("non-finite prediction", ends[failed])
    return y, f


def _fractional_integral_of(f_values, q, dt):
    """Product-trapezoid approximation of ``I^q f`` at every node."""
    n_steps = len(f_values) - 1
    _, corr, start = _kernel_tables(q, n_steps, dt)
    corr[0] = dt ** q / math.gamma(q + 2.0)
    return _trapezoid_convolution(f_values, corr, start)


@numba.njit(cache=True)
def _trapezoid_convolution(f, corr, start):
    n_total = f.shape[0]
    out = np.zeros(n_total)
    for n in range(1, n_total):
        s = start[n] * f[0]
        for j in range(1, n + 1):
            s += corr[n - j] * f[j]
        out[n] = s
    return out


def integrate_fractional(system, s0, order, grid, level=0.0, omega0=0.0):
    """Integrate a mixed-order Euler top or a fractional pendulum.

    The grid must be uniform: ``(t1 - t0)`` an integer multiple of ``dt``.
    For the pendulum systems ``s0`` is ``theta(0)`` (or ``(theta, omega)``)
    and the trajectory carries ``(theta, theta')``; the rate is recovered as
    ``omega0 + I^alpha f``.
    """
    system = MixedOrderSystem(system)
    if not isinstance(order, FractionalOrder):
        order = FractionalOrder(float(order))
    alpha = order.alpha
    times = grid.times()
    n_steps = len(times) - 1
    if abs((times[-1] - times[-2]) - grid.dt) > 1e-9 * grid.dt:
        raise DomainError("fractional integration needs a uniform grid; "
                          "choose dt dividing t1 - t0")
    dt = grid.dt
    orders = system.orders(alpha)

    if system.is_pendulum:
        if not level > 0:
            raise DomainError(f"level must be positive, got {level}")
        s = np.atleast_1d(np.asarray(s0, dtype=np.float64))
        if s.shape[0] == 2:
            omega0 = s[1]
        theta0 = as_state(s[:1], 1, name="theta(0)")
        taylor1 = np.array([float(omega0)])
        y, f = _integrate_abm(int(system), level, theta0, taylor1, orders,
                              n_steps, dt)
        omega = float(omega0) + _fractional_integral_of(f[:, 0], alpha, dt)
        states = np.column_stack([y[:, 0], omega])
        return Trajectory(times, states)

    y0 = as_state(s0, 3, name="initial state")
    y, _ = _integrate_abm(int(system), 0.0, y0, np.zeros(3), orders,
                          n_steps, dt)
    return Trajectory(times, y)
