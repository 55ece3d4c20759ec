"""Maps between pendulum motions and Euler-top orbits on level surfaces.

Levels use the unsquared convention: the H-surface is
``½(x1² + x2²) = H`` and the K-surface ``½(x2² + x3²) = K``.

H-surface:  x = (√(2H) cos θ/2,  √(2H) sin θ/2,  −ω/2)
K-surface:  x = (−ω/2,  √(2K) sin θ/2,  √(2K) cos θ/2)

where θ solves ``θ'' + 2·level·sin θ = 0``.
"""
import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import DomainError, Trajectory


class Axis(enum.Enum):
    H = "H"
    K = "K"


class ConstraintViolation(DomainError):
    def __init__(self, message, node=None, deviation=None):
        super().__init__(message)
        self.node = node
        self.deviation = deviation


@dataclass(frozen=True)
class LevelSurface:
    axis: Axis
    level: float

    def __post_init__(self):
        object.__setattr__(self, "axis", Axis(self.axis))
        if not (math.isfinite(self.level) and self.level > 0):
            raise DomainError(f"level must be positive, got {self.level}")

    def deviation(self, states):
        """``½(xa² + xb²) − level`` node-wise for the surface's pair."""
        s = np.asarray(states, dtype=np.float64)
        if self.axis is Axis.H:
            a, b = s[..., 0], s[..., 1]
        else:
            a, b = s[..., 1], s[..., 2]
        return 0.5 * (a * a + b * b) - self.level


def pendulum_to_euler(theta_traj, surface):
    """Euler-top trajectory on ``surface`` built from a pendulum run."""
    theta = theta_traj.states[:, 0]
    omega = theta_traj.states[:, 1]
    r = math.sqrt(2.0 * surface.level)
    c = r * np.cos(0.5 * theta)
    s = r * np.sin(0.5 * theta)
    spin = -0.5 * omega
    if surface.axis is Axis.H:
        states = np.column_stack([c, s, spin])
    else:
        states = np.column_stack([spin, s, c])
    return Trajectory(theta_traj.times, states)


def euler_to_pendulum(x_traj, surface, tol=1e-6):
    """Recover ``(θ, ω)`` from an Euler-top trajectory lying on ``surface``.

    θ is taken from ``2·atan2`` and unwrapped onto a continuous branch.
    Raises :class:`ConstraintViolation` if any node is off the surface by
    more than ``tol``.
    """
    x = x_traj.states
    if x.shape[1] != 3:
        raise DomainError("expected an Euler-top trajectory")
    dev = np.abs(surface.deviation(x))
    worst = int(np.argmax(dev))
    if dev[worst] > tol:
        raise ConstraintViolation(
            f"trajectory leaves the {surface.axis.value}-surface "
            f"(level {surface.level}) by {dev[worst]:.3e} at node {worst}, "
            f"t={x_traj.times[worst]}", worst, float(dev[worst]))
    if surface.axis is Axis.H:
        half = np.arctan2(x[:, 1], x[:, 0])
        omega = -2.0 * x[:, 2]
    else:
        half = np.arctan2(x[:, 1], x[:, 2])
        omega = -2.0 * x[:, 0]
    theta = 2.0 * np.unwrap(half)
    if len(theta) > 1 and np.max(np.abs(np.diff(theta))) >= math.pi:
        raise DomainError("angle jumps by pi or more between nodes; "
                          "sample the trajectory more finely")
    return Trajectory(x_traj.times, np.column_stack([theta, omega]))


def _first_derivative(y, h):
    return (-y[4:] + 8.0 * y[3:-1] - 8.0 * y[1:-3] + y[:-4]) / (12.0 * h)


def residual_report(traj, which="euler_top", level=None):
    """Max over interior nodes of ``|D y − rhs(y)|`` per component.

    ``D`` is the fourth-order central difference, so the grid must be
    uniform.  ``which`` is ``"euler_top"`` or ``"pendulum"`` (with
    ``level``); the pendulum residuals are those of ``θ' = ω`` and
    ``ω' = −2·level·sin θ``.
    """
    t = traj.times
    y = traj.states
    if len(t) < 5:
        raise DomainError("residual_report needs at least 5 nodes")
    steps = np.diff(t)
    h = steps[0]
    if np.max(np.abs(steps - h)) > 1e-9 * h:
        raise DomainError("residual_report needs a uniform grid")
    dy = np.column_stack([_first_derivative(y[:, c], h)
                          for c in range(y.shape[1])])
    mid = y[2:-2]
    if which == "euler_top":
        rhs = np.column_stack([mid[:, 1] * mid[:, 2], -mid[:, 0] * mid[:, 2],
                               mid[:, 0] * mid[:, 1]])
    elif which == "pendulum":
        if level is None:
            raise DomainError("pendulum residual needs the level")
        rhs = np.column_stack([mid[:, 1], -2.0 * level * np.sin(mid[:, 0])])
    else:
        raise DomainError(f"unknown residual kind {which!r}")
    return np.max(np.abs(dy - rhs), axis=0)
