"""Jacobi elliptic functions and the complete elliptic integral K(k).

All functions take the *modulus* k (0 <= k <= 1), not the parameter m = k**2
used by scipy.special.ellipj / ellipk.  Passing m where k is expected gives
silently wrong answers, so the argument is named ``k`` everywhere.
"""
import math

import numpy as np

from .core import DomainError

AGM_TOL = 1e-15
AGM_MAXITER = 64


class DivergenceError(DomainError):
    """K(k) is infinite at k = 1."""


def _check_modulus(k):
    k = float(k)
    if not (0.0 <= k <= 1.0):
        raise DomainError(f"modulus must lie in [0, 1], got {k}")
    return k


def _complementary(k):
    # sqrt(1 - k^2) without cancellation near k = 1
    return math.sqrt((1.0 - k) * (1.0 + k))


def agm(a, b):
    """Arithmetic-geometric mean of two nonnegative numbers."""
    for _ in range(AGM_MAXITER):
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        if abs(a - b) < AGM_TOL:
            break
    return 0.5 * (a + b)


def complete_K(k):
    """Complete elliptic integral of the first kind, K(k) = π / (2 AGM(1, k'))."""
    k = _check_modulus(k)
    if k == 1.0:
        raise DivergenceError("K(k) diverges at k = 1")
    return math.pi / (2.0 * agm(1.0, _complementary(k)))


def _landen_sequence(k):
    a = [1.0]
    c = [k]
    b = _complementary(k)
    for _ in range(AGM_MAXITER):
        an = 0.5 * (a[-1] + b)
        cn = 0.5 * (a[-1] - b)
        b = math.sqrt(a[-1] * b)
        a.append(an)
        c.append(cn)
        if abs(cn) < AGM_TOL:
            break
    return a, c


def _sncndn(u, k):
    if k == 0.0:
        return np.sin(u), np.cos(u), np.ones_like(u)
    if k == 1.0:
        sech = 1.0 / np.cosh(u)
        return np.tanh(u), sech, sech

    # descending Landen / AGM sequence (DLMF 22.20.ii)
    a, c = _landen_sequence(k)
    n = len(a) - 1
    phi = (2.0 ** n) * a[n] * u
    for i in range(n, 0, -1):
        phi = 0.5 * (phi + np.arcsin(c[i] / a[i] * np.sin(phi)))
    sn = np.sin(phi)
    # dn >= k' > 0, so the factored square root is well conditioned; the
    # Landen ratio cn / cos(phi_1 - phi_0) loses digits for large |u|.
    dn = np.sqrt((1.0 - k * sn) * (1.0 + k * sn))
    return sn, np.cos(phi), dn


def jacobi_sn_cn_dn(u, k):
    """Return ``(sn, cn, dn)`` of argument ``u`` and modulus ``k``.

    ``u`` may be a scalar or an array; outputs have the same shape.
    """
    k = _check_modulus(k)
    uu = np.asarray(u, dtype=np.float64)
    if not np.all(np.isfinite(uu)):
        raise DomainError("arguments must be finite")
    sn, cn, dn = _sncndn(uu, k)
    if uu.ndim == 0:
        return float(sn), float(cn), float(dn)
    return sn, cn, dn
