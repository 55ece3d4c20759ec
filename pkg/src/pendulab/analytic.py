"""Closed-form solutions of the Euler top and the simple pendulum.

Level constants follow the squared convention here:
``x1² + x2² = 2H²`` and ``x2² + x3² = 2K²``.
"""
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import DomainError
from .elliptic import complete_K, jacobi_sn_cn_dn


def _heteroclinic_residual(signs, a=1.0, ts=(-1.3, -0.4, 0.0, 0.7, 2.1)):
    """Largest residual of the Euler-top equations along a signed sech/tanh
    orbit.  Uses the exact derivatives d sech = -sech tanh, d tanh = sech²."""
    s1, s2, s3 = signs
    worst = 0.0
    for t in ts:
        sech = 1.0 / math.cosh(a * t)
        tanh = math.tanh(a * t)
        x1, x2, x3 = s1 * a * sech, s2 * a * tanh, s3 * a * sech
        dx1 = -s1 * a * a * sech * tanh
        dx2 = s2 * a * a * sech * sech
        dx3 = -s3 * a * a * sech * tanh
        worst = max(worst, abs(dx1 - x2 * x3), abs(dx2 + x1 * x3),
                    abs(dx3 - x1 * x2))
    return worst


def _discover_patterns():
    return frozenset(
        signs for signs in itertools.product((1, -1), repeat=3)
        if _heteroclinic_residual(signs) < 1e-14)


VALID_PATTERNS = _discover_patterns()


@dataclass(frozen=True)
class SignPattern:
    """Signs ``(s1, s2, s3)`` of a heteroclinic orbit.

    Only patterns with ``s1 * s2 * s3 == -1`` solve the equations.
    """

    s1: int
    s2: int
    s3: int

    def __post_init__(self):
        if (self.s1, self.s2, self.s3) not in VALID_PATTERNS:
            raise DomainError(
                f"sign pattern {(self.s1, self.s2, self.s3)} does not solve "
                f"the Euler top; valid: {sorted(VALID_PATTERNS)}")


def heteroclinic(H, t, pattern=SignPattern(1, 1, -1)):
    """Orbit ``a (s1 sech at, s2 tanh at, s3 sech at)`` with ``a = H√2``.

    Lies on ``H = K``; tends to the equilibrium ``(0, s2 a, 0)`` as t → ∞.
    """
    if not H > 0:
        raise DomainError(f"H must be positive, got {H}")
    a = H * math.sqrt(2.0)
    t = np.asarray(t, dtype=np.float64)
    sech = 1.0 / np.cosh(a * t)
    tanh = np.tanh(a * t)
    out = np.stack([pattern.s1 * a * sech, pattern.s2 * a * tanh,
                    pattern.s3 * a * sech], axis=-1)
    return out


def jacobi_modulus(H, K):
    return H / K


def jacobi_frequency(H, K):
    return K * math.sqrt(2.0)


def jacobi_orbit(H, K, t):
    """Euler-top orbit through ``(H√2, 0, K√2)`` for ``0 < H < K``.

    With ``k = H/K`` and ``u = K√2 t``::

        x1 = H√2 cn(u; k),  x2 = -H√2 sn(u; k),  x3 = K√2 dn(u; k)

    x1 and x2 have period ``4 K(k) / (K√2)``; x3 has half of that.
    """
    if not (0 < H < K):
        raise DomainError(f"need 0 < H < K, got H={H}, K={K}; "
                          "use heteroclinic() for H == K")
    k = jacobi_modulus(H, K)
    u = jacobi_frequency(H, K) * np.asarray(t, dtype=np.float64)
    sn, cn, dn = jacobi_sn_cn_dn(u, k)
    r2 = math.sqrt(2.0)
    return np.stack(np.broadcast_arrays(H * r2 * cn, -H * r2 * sn, K * r2 * dn),
                    axis=-1)


def jacobi_periods(H, K):
    """``(period of x1 and x2, period of x3)`` of :func:`jacobi_orbit`."""
    quarter = complete_K(jacobi_modulus(H, K)) / jacobi_frequency(H, K)
    return 4.0 * quarter, 2.0 * quarter


def pendulum_analytic(theta0, h, t):
    """Angle of ``θ'' + 2h sin θ = 0`` released at rest from ``theta0``.

    θ(t) = 2 arcsin(k sn(K(k) − √(2h) t; k)),  k = sin(θ0/2).
    """
    if not (0.0 < theta0 < math.pi):
        raise DomainError(f"theta0 must lie in (0, pi), got {theta0}")
    if not h > 0:
        raise DomainError(f"h must be positive, got {h}")
    k = math.sin(0.5 * theta0)
    u = complete_K(k) - math.sqrt(2.0 * h) * np.asarray(t, dtype=np.float64)
    sn, _, _ = jacobi_sn_cn_dn(u, k)
    return 2.0 * np.arcsin(k * np.asarray(sn))


def pendulum_period(theta0, h):
    """Exact period ``4 K(sin(θ0/2)) / √(2h)``."""
    return 4.0 * complete_K(math.sin(0.5 * theta0)) / math.sqrt(2.0 * h)
