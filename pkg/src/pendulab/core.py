"""Phase-space types, vector fields and conserved functionals.

States are plain float64 arrays: ``(x1, x2, x3)`` for the Euler top and
``(theta, omega)`` for the pendulum.  The angle is never wrapped.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numba
import numpy as np


class DomainError(ValueError):
    """Input outside the domain of an operation."""


class IntegrationError(ArithmeticError):
    """A numerical integration produced a non-finite value."""

    def __init__(self, message, t=None):
        super().__init__(message if t is None else f"{message} (t={t!r})")
        self.t = t


def as_state(s, dim=None, name="state"):
    """Return ``s`` as a finite 1-d float64 array, checking its length."""
    arr = np.array(s, dtype=np.float64, ndmin=1)
    if arr.ndim != 1 or (dim is not None and arr.shape[0] != dim):
        raise DomainError(f"{name} must have shape ({dim},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} has non-finite components: {arr}")
    return arr


@dataclass(frozen=True)
class Harmonic:
    """Forcing signal ``amplitude * sin(frequency * t + phase)``."""

    amplitude: float = 0.0
    frequency: float = 0.0
    phase: float = 0.0

    def __call__(self, t):
        return self.amplitude * np.sin(self.frequency * t + self.phase)


@dataclass(frozen=True)
class PendulumParams:
    """Coefficients of the damped, forced pendulum

    theta'' + 2h sin(theta) + f1(t) cos(theta) + f2(t) sin(theta)
            + sum_p alphas[p] * theta' |theta'|^(p-1) = 0
    """

    h: float = 0.5
    f1: Harmonic = field(default_factory=Harmonic)
    f2: Harmonic = field(default_factory=Harmonic)
    alphas: tuple = (0.0,)

    def __post_init__(self):
        if not (math.isfinite(self.h) and self.h >= 0):
            raise DomainError(f"h must be finite and >= 0, got {self.h}")
        alphas = tuple(float(a) for a in self.alphas) or (0.0,)
        object.__setattr__(self, "alphas", alphas)
        packed = self.packed()
        if not np.all(np.isfinite(packed)):
            raise DomainError("pendulum coefficients must be finite")

    def packed(self):
        """Flat parameter vector consumed by the compiled kernel."""
        return np.array(
            [self.h,
             self.f1.amplitude, self.f1.frequency, self.f1.phase,
             self.f2.amplitude, self.f2.frequency, self.f2.phase,
             *self.alphas],
            dtype=np.float64,
        )


class ConservedQuantity(enum.Enum):
    """The three Hamiltonians and three Casimirs of the Euler top.

    ``C1`` equals ``-H2`` identically; both tags are kept.
    """

    H1 = "H1"
    H2 = "H2"
    H3 = "H3"
    C1 = "C1"
    C2 = "C2"
    C3 = "C3"


@dataclass
class Trajectory:
    """Time grid and the states sampled on it (one row per node)."""

    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        states = np.asarray(self.states, dtype=np.float64)
        if states.ndim == 1:
            states = states[:, None]
        self.states = states
        if self.times.ndim != 1 or len(self.times) < 1:
            raise ValueError("times must be a non-empty 1-d array")
        if states.shape[0] != self.times.shape[0]:
            raise ValueError(
                f"{states.shape[0]} states for {self.times.shape[0]} times")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    @property
    def dim(self):
        return self.states.shape[1]

    @property
    def final(self):
        return self.states[-1]


# -- compiled kernels: f(t, y, p) -> dy/dt --------------------------------

@numba.njit(cache=True)
def euler_top_kernel(t, y, p):
    out = np.empty(3)
    out[0] = y[1] * y[2]
    out[1] = -y[0] * y[2]
    out[2] = y[0] * y[1]
    return out


@numba.njit(cache=True)
def pendulum_kernel(t, y, p):
    theta = y[0]
    omega = y[1]
    f1 = p[1] * math.sin(p[2] * t + p[3])
    f2 = p[4] * math.sin(p[5] * t + p[6])
    damping = 0.0
    absw = abs(omega)
    for k in range(7, p.shape[0]):
        power = k - 7
        a = p[k]
        if a == 0.0:
            continue
        if power == 0:
            # Coulomb reading of alpha_0 * omega / |omega|, sign(0) = 0
            if omega > 0.0:
                damping += a
            elif omega < 0.0:
                damping -= a
        elif power == 1:
            damping += a * omega
        else:
            damping += a * omega * absw ** (power - 1)
    out = np.empty(2)
    out[0] = omega
    out[1] = (-2.0 * p[0] * math.sin(theta) - f1 * math.cos(theta)
              - f2 * math.sin(theta) - damping)
    return out


@numba.njit(cache=True)
def zero_kernel(t, y, p):
    return np.zeros(y.shape[0])


class Field:
    """A vector field ``f(t, y)`` backed by a compiled kernel ``k(t, y, p)``.

    Integrators recognise ``Field`` instances and run them through compiled
    loops; any other callable ``f(t, y)`` goes through the generic path.
    """

    def __init__(self, kernel, params=(), dim=None, name=None):
        self.kernel = kernel
        self.params = np.ascontiguousarray(params, dtype=np.float64)
        self.dim = dim
        self.name = name or getattr(kernel, "__name__", "field")

    def __call__(self, t, y):
        return self.kernel(float(t), np.ascontiguousarray(y, dtype=np.float64),
                           self.params)

    def __repr__(self):
        return f"Field({self.name}, params={self.params.tolist()})"


def euler_top_field():
    return Field(euler_top_kernel, np.zeros(1), dim=3, name="euler_top")


def pendulum_field(params=None):
    params = PendulumParams() if params is None else params
    return Field(pendulum_kernel, params.packed(), dim=2, name="pendulum")


def zero_field(dim):
    return Field(zero_kernel, np.zeros(1), dim=dim, name="zero")


# -- public operations ------------------------------------------------------

def euler_top_rhs(s):
    """Right-hand side ``(x2 x3, -x1 x3, x1 x2)`` of the free Euler top."""
    x1, x2, x3 = as_state(s, 3)
    return np.array([x2 * x3, -x1 * x3, x1 * x2])


def pendulum_rhs(t, s, params):
    """Time derivative ``(theta', omega')`` of the forced, damped pendulum."""
    y = as_state(s, 2)
    if not math.isfinite(t):
        raise DomainError(f"t must be finite, got {t}")
    return pendulum_kernel(float(t), y, params.packed())


_FUNCTIONALS: dict[ConservedQuantity, Callable] = {
    ConservedQuantity.H1: lambda x1, x2, x3: 0.5 * (x1 * x1 + x2 * x2),
    ConservedQuantity.H2: lambda x1, x2, x3: -0.5 * (x2 * x2 + x3 * x3),
    ConservedQuantity.H3: lambda x1, x2, x3: x1 * x1 - x3 * x3,
    ConservedQuantity.C1: lambda x1, x2, x3: 0.5 * (x2 * x2 + x3 * x3),
    ConservedQuantity.C2: lambda x1, x2, x3: 0.5 * (x1 * x1 - x2 * x2),
    ConservedQuantity.C3: lambda x1, x2, x3: x1 * x1 + x2 * x2,
}

_GRADIENTS: dict[ConservedQuantity, Callable] = {
    ConservedQuantity.H1: lambda x1, x2, x3: (x1, x2, 0.0 * x3),
    ConservedQuantity.H2: lambda x1, x2, x3: (0.0 * x1, -x2, -x3),
    ConservedQuantity.H3: lambda x1, x2, x3: (2 * x1, 0.0 * x2, -2 * x3),
    ConservedQuantity.C1: lambda x1, x2, x3: (0.0 * x1, x2, x3),
    ConservedQuantity.C2: lambda x1, x2, x3: (x1, -x2, 0.0 * x3),
    ConservedQuantity.C3: lambda x1, x2, x3: (2 * x1, 2 * x2, 0.0 * x3),
}


def conserved(q, s):
    """Evaluate conserved functional ``q`` at ``s``.

    ``s`` may be a single state or an ``(N, 3)`` array of states, in which
    case an array of N values is returned.
    """
    q = ConservedQuantity(q)
    arr = np.asarray(s, dtype=np.float64)
    if arr.shape[-1] != 3:
        raise DomainError(f"expected Euler-top states, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("non-finite state")
    value = _FUNCTIONALS[q](arr[..., 0], arr[..., 1], arr[..., 2])
    return float(value) if arr.ndim == 1 else value


def conserved_gradient(q, s):
    """Gradient of functional ``q`` at a single state ``s``."""
    x1, x2, x3 = as_state(s, 3)
    return np.array(_GRADIENTS[ConservedQuantity(q)](x1, x2, x3), dtype=float)


def level_constants(s0):
    """Levels ``(H, K) = (½(x1²+x2²), ½(x2²+x3²))`` through ``s0``."""
    x1, x2, x3 = as_state(s0, 3)
    return 0.5 * (x1 * x1 + x2 * x2), 0.5 * (x2 * x2 + x3 * x3)


def pendulum_energy(theta, omega, h):
    """``½ω² − 2h cos θ``, conserved by the unforced, undamped pendulum."""
    return 0.5 * np.asarray(omega) ** 2 - 2.0 * h * np.cos(theta)

