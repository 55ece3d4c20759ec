"""Verification suites: each check compares an observed number with a bound.

Every suite is a function returning a list of :class:`Check`; ``SUITES``
maps suite names to those functions.  Reports contain no wall-clock
timings, so repeated runs give byte-identical JSON.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import analytic, correspondence as corr, dde, elliptic, fractional
from . import stochastic as sde
from .core import (ConservedQuantity, PendulumParams, Trajectory,
                   euler_top_field, pendulum_energy, pendulum_field)
from .ode import GridSpec, conservation_drift, integrate

EULER_IC = (0.1, 0.1, 0.2)
DELAY_IC = (0.1, 0.05, 0.2)
FRAC_IC = (0.1, 0.1, 0.3)
SDE_A_IC = (0.1, 0.1, 0.1)
SDE_B_IC = (1.0, 0.8, 0.2)
PENDULUM_SDE_IC = (1.0, 0.8)
MASTER_SEED = 0


@dataclass
class Check:
    suite: str
    check: str
    observed: float
    bound: float
    relation: str = "<="

    @property
    def passed(self):
        o, b = self.observed, self.bound
        if not math.isfinite(o):
            return False
        if self.relation == "<=":
            return o <= b
        if self.relation == ">=":
            return o >= b
        if self.relation == "<":
            return o < b
        if self.relation == "in":
            return b[0] <= o <= b[1]
        raise ValueError(self.relation)

    def as_dict(self):
        bound = list(self.bound) if self.relation == "in" else self.bound
        return {"suite": self.suite, "check": self.check,
                "observed": float(self.observed), "bound": bound,
                "relation": self.relation, "pass": bool(self.passed)}


def period_from_crossings(t, y):
    """Mean spacing of upward crossings of ``y`` through its midrange."""
    y = np.asarray(y) - 0.5 * (np.max(y) + np.min(y))
    idx = np.nonzero((y[:-1] < 0) & (y[1:] >= 0))[0]
    if len(idx) < 2:
        return float("nan")
    tc = t[idx] - y[idx] * (t[idx + 1] - t[idx]) / (y[idx + 1] - y[idx])
    return float(np.mean(np.diff(tc)))


# -- suites -------------------------------------------------------------------

def conservation():
    out = []
    traj = integrate(euler_top_field(), EULER_IC, GridSpec(0.0, 100.0, 1e-3))
    for q in ConservedQuantity:
        out.append(Check("conservation", f"euler-top drift {q.value}",
                         conservation_drift(traj, q), 1e-8))
    p = integrate(pendulum_field(PendulumParams(h=0.5)), (2.0, 0.0),
                  GridSpec(0.0, 100.0, 1e-3))
    e = pendulum_energy(p.states[:, 0], p.states[:, 1], 0.5)
    out.append(Check("conservation", "pendulum energy drift",
                     float(np.max(np.abs(e - e[0]))), 1e-8))
    return out


def elliptic_suite():
    out = []
    k = math.sqrt(0.5)
    nodes, weights = np.polynomial.legendre.leggauss(64)
    theta = 0.25 * math.pi * (nodes + 1.0)
    quad = 0.25 * math.pi * float(np.sum(
        weights / np.sqrt(1.0 - k * k * np.sin(theta) ** 2)))
    out.append(Check("elliptic", "K(sqrt(1/2)) vs Gauss-Legendre",
                     abs(elliptic.complete_K(k) - quad), 1e-12))
    rng = np.random.default_rng(11)
    worst = 0.0
    for u, kk in zip(rng.uniform(-10, 10, 1000), rng.uniform(0, 1, 1000)):
        sn, cn, dn = elliptic.jacobi_sn_cn_dn(u, kk)
        worst = max(worst, abs(cn * cn - (1 - sn * sn)),
                    abs(dn * dn - (1 - kk * kk * sn * sn)))
    out.append(Check("elliptic", "pythagorean identities", worst, 1e-12))
    h = 1e-5
    worst = 0.0
    for u, kk in zip(rng.uniform(-5, 5, 200), rng.uniform(0, 0.99, 200)):
        fd = (elliptic.jacobi_sn_cn_dn(u + h, kk)[0]
              - elliptic.jacobi_sn_cn_dn(u - h, kk)[0]) / (2 * h)
        _, cn, dn = elliptic.jacobi_sn_cn_dn(u, kk)
        worst = max(worst, abs(fd - cn * dn))
    out.append(Check("elliptic", "d sn/du = cn dn", worst, 1e-6))
    return out


def analytic_suite():
    out = []
    H, K = 1.0, 2.0
    g = GridSpec(0.0, 10.0, 1e-3)
    traj = integrate(euler_top_field(), analytic.jacobi_orbit(H, K, 0.0), g)
    exact = analytic.jacobi_orbit(H, K, traj.times)
    out.append(Check("analytic", "RK4 vs jacobi_orbit H=1 K=2",
                     float(np.max(np.abs(traj.states - exact))), 1e-6))
    p13, p3 = analytic.jacobi_periods(H, K)
    out.append(Check("analytic", "x1 period relative error",
                     abs(period_from_crossings(traj.times, traj.states[:, 0])
                         / p13 - 1), 1e-3))
    out.append(Check("analytic", "x3 period relative error",
                     abs(period_from_crossings(traj.times, traj.states[:, 2])
                         / p3 - 1), 1e-3))
    x = analytic.jacobi_orbit(H, K, traj.times)
    lev = max(np.max(np.abs(x[:, 0] ** 2 + x[:, 1] ** 2 - 2 * H * H)),
              np.max(np.abs(x[:, 1] ** 2 + x[:, 2] ** 2 - 2 * K * K)))
    out.append(Check("analytic", "jacobi_orbit level constraints", lev, 1e-12))

    het0 = analytic.heteroclinic(1.0, 0.0)
    ht = integrate(euler_top_field(), het0, GridSpec(0.0, 5.0, 1e-4))
    out.append(Check("analytic", "RK4 shadows heteroclinic H=K=1",
                     float(np.max(np.abs(
                         ht.states - analytic.heteroclinic(1.0, ht.times)))),
                     1e-4))
    tt = np.arange(0.0, 10.0 + 1e-12, 1e-3)
    res = corr.residual_report(Trajectory(tt, analytic.heteroclinic(0.5, tt)))
    out.append(Check("analytic", "heteroclinic residual", float(res.max()),
                     1e-6))

    pg = GridSpec(0.0, 20.0, 1e-4)
    p = integrate(pendulum_field(PendulumParams(h=0.5)), (2.0, 0.0), pg)
    out.append(Check("analytic", "pendulum_analytic vs RK4 theta0=2",
                     float(np.max(np.abs(
                         p.states[:, 0] - analytic.pendulum_analytic(
                             2.0, 0.5, p.times)))), 1e-6))
    return out


def correspondence_suite():
    out = []
    g = GridSpec(0.0, 20.0, 1e-4)
    p = integrate(pendulum_field(PendulumParams(h=0.5)), (-3.8, 0.0), g)
    for axis in corr.Axis:
        surf = corr.LevelSurface(axis, 0.5)
        x = corr.pendulum_to_euler(p, surf)
        out.append(Check("correspondence",
                         f"pendulum -> Euler top ({axis.value}-surface) residual",
                         float(corr.residual_report(x).max()), 1e-5))
    e = integrate(euler_top_field(), EULER_IC, GridSpec(0.0, 100.0, 1e-3))
    for axis, level in ((corr.Axis.H, 0.01), (corr.Axis.K, 0.025)):
        theta = corr.euler_to_pendulum(e, corr.LevelSurface(axis, level))
        out.append(Check("correspondence",
                         f"Euler top -> pendulum ({axis.value}-surface) residual",
                         float(corr.residual_report(
                             theta, "pendulum", level).max()), 1e-5))
    return out


def delay_suite():
    out = []
    g = GridSpec(0.0, 50.0, 0.01)
    d1 = dde.DelaySpec(1.0)
    z = dde.integrate_dde(dde.DelayedSystem.EULER_TOP_DELAY_Z, DELAY_IC, d1, g)
    out.append(Check("delay", "euler-top-dde-z H1 drift",
                     conservation_drift(z, "H1"), 1e-8))
    x = dde.integrate_dde(dde.DelayedSystem.EULER_TOP_DELAY_X, DELAY_IC, d1, g)
    out.append(Check("delay", "euler-top-dde-x C1 drift",
                     conservation_drift(x, "C1"), 1e-8))

    tiny = dde.integrate_dde(dde.DelayedSystem.EULER_TOP_DELAY_Z, DELAY_IC,
                             dde.DelaySpec(1e-6), GridSpec(0.0, 1.0, 1e-7),
                             stride=1000)
    ref = integrate(euler_top_field(), DELAY_IC, GridSpec(0.0, 1.0, 1e-4))
    out.append(Check("delay", "tau=1e-6 vs classical RK4",
                     float(np.max(np.abs(tiny.final - ref.final))), 1e-4))

    w = dde.integrate_dde(dde.DelayedSystem.PENDULUM_DELAY_H, (2.0, 0.0), d1,
                          GridSpec(0.0, 1.0, 0.01), level=0.5)
    closed = 2.0 - 0.5 * math.sin(2.0) * w.times ** 2
    out.append(Check("delay", "pendulum-dde-h first window closed form",
                     float(np.max(np.abs(w.states[:, 0] - closed))), 1e-10))

    worst = 0.0
    for system, ic in ((dde.DelayedSystem.EULER_TOP_DELAY_Z, DELAY_IC),
                       (dde.DelayedSystem.EULER_TOP_DELAY_X, DELAY_IC),
                       (dde.DelayedSystem.PENDULUM_DELAY_K, (2.0, 0.0))):
        level = 0.3 if system.is_pendulum else 0.0
        wg = GridSpec(0.0, 1.0, 0.01)
        a = dde.integrate_dde(system, ic, d1, wg, level=level)
        b = integrate(dde.frozen_first_window(system, ic, level), ic, wg)
        worst = max(worst, float(np.max(np.abs(a.states - b.states))))
    out.append(Check("delay", "first window vs frozen-history RK4", worst,
                     1e-10))

    k = dde.integrate_dde(dde.DelayedSystem.PENDULUM_DELAY_K, (2.0, 0.0), d1, g,
                          level=0.3)
    out.append(Check("delay", "pendulum-dde-k K=0.3 finite on [0,50]",
                     float(np.all(np.isfinite(k.states))), 1.0, ">="))
    return out


def fractional_suite():
    out = []
    g = GridSpec(0.0, 50.0, 1e-3)
    one = fractional.integrate_fractional(
        fractional.MixedOrderSystem.PENDULUM_FRAC_H, (-3.1, 0.0), 1.0, g,
        level=0.5)
    ref = integrate(pendulum_field(PendulumParams(h=0.5)), (-3.1, 0.0), g)
    out.append(Check("fractional", "alpha=1 pendulum vs RK4",
                     float(np.max(np.abs(one.states[:, 0] - ref.states[:, 0]))),
                     1e-3))
    frac = fractional.integrate_fractional(
        fractional.MixedOrderSystem.PENDULUM_FRAC_H, (-3.1, 0.0), 0.8, g,
        level=0.5)
    t, th = frac.times, np.abs(frac.states[:, 0])
    late, early = th[t >= 40].max(), th[t <= 10].max()
    out.append(Check("fractional", "alpha=0.8 amplitude ratio late/early",
                     float(late / early), 1.0, "<"))

    eg = GridSpec(0.0, 50.0, 1e-2)
    z = fractional.integrate_fractional(
        fractional.MixedOrderSystem.EULER_TOP_FRAC_Z, FRAC_IC, 0.8, eg)
    out.append(Check("fractional", "euler-top-frac-z H1 drift",
                     conservation_drift(z, "H1"), 1e-6))
    x = fractional.integrate_fractional(
        fractional.MixedOrderSystem.EULER_TOP_FRAC_X, FRAC_IC, 0.8, eg)
    out.append(Check("fractional", "euler-top-frac-x C1 drift",
                     conservation_drift(x, "C1"), 1e-6))
    k = fractional.integrate_fractional(
        fractional.MixedOrderSystem.PENDULUM_FRAC_K, (-3.1, 0.0), 0.8,
        GridSpec(0.0, 20.0, 1e-2), level=0.3)
    out.append(Check("fractional", "pendulum-frac-k finite",
                     float(np.all(np.isfinite(k.states))), 1.0, ">="))
    return out


def sde_convergence():
    out = []
    spec = sde.euler_top_sde_a()
    levels = [6, 7, 8, 9, 10]
    dts, errs = sde.strong_errors(spec, SDE_A_IC, 1.0, 1.0, levels, 14, 200,
                                  MASTER_SEED)
    out.append(Check("sde-convergence", "EM strong order slope",
                     sde.loglog_slope(dts, errs[sde.Scheme.EM]), (0.4, 0.6),
                     "in"))
    out.append(Check("sde-convergence", "Milstein strong order slope",
                     sde.loglog_slope(dts, errs[sde.Scheme.MILSTEIN]),
                     (0.85, 1.15), "in"))
    dts, gaps = sde.interpretation_gap(spec, SDE_A_IC, 1.0, 1.0, levels, 200,
                                       MASTER_SEED)
    out.append(Check("sde-convergence", "Ito/Stratonovich gap slope",
                     sde.loglog_slope(dts, gaps), 0.5, ">="))
    return out


def sde_moments():
    out = []
    spec = sde.euler_top_sde_a()
    stats = sde.ensemble(spec, SDE_A_IC, 10_000, MASTER_SEED,
                         GridSpec(1.0, 2.1, 1e-3), sde.Scheme.MILSTEIN)
    i = int(np.argmin(np.abs(stats.times - 2.0)))
    h = stats.times[i + 1] - stats.times[i]
    slope = (stats.mean[i + 1, 1] - stats.mean[i - 1, 1]) / (2 * h)
    target = -stats.second_moments[i, 0, 2]
    ci = stats.second_moment_ci[i, 0, 2]
    out.append(Check("sde-moments",
                     "d E[x2]/dt + E[x1 x3] at t=2 in units of CI",
                     abs(slope - target) / ci, 3.0))

    b = sde.euler_top_sde_b()
    grid = GridSpec(1.0, 10.0, 1e-3)
    path = sde.generate_wiener(MASTER_SEED, grid.n_steps, grid.dt, 3, 1.0)
    tb = sde.integrate_sde(b, SDE_B_IC, path, sde.Scheme.EM)
    out.append(Check("sde-moments", "euler-top-sde-b finite on [1,10]",
                     float(np.all(np.isfinite(tb.states))), 1.0, ">="))
    p = sde.pendulum_sde(0.5)
    path = sde.generate_wiener(MASTER_SEED, grid.n_steps, grid.dt, 2, 1.0)
    tp = sde.integrate_sde(p, PENDULUM_SDE_IC, path, sde.Scheme.EM)
    out.append(Check("sde-moments", "pendulum-sde finite on [1,10]",
                     float(np.all(np.isfinite(tp.states))), 1.0, ">="))
    return out


SUITES = {
    "conservation": conservation,
    "elliptic": elliptic_suite,
    "analytic": analytic_suite,
    "correspondence": correspondence_suite,
    "delay": delay_suite,
    "fractional": fractional_suite,
    "sde-convergence": sde_convergence,
    "sde-moments": sde_moments,
}


def run(name="all"):
    if name == "all":
        names = list(SUITES)
    elif name in SUITES:
        names = [name]
    else:
        raise KeyError(f"unknown suite {name!r}; choose from "
                       f"{', '.join(['all', *SUITES])}")
    checks = []
    for n in names:
        checks.extend(SUITES[n]())
    return checks
