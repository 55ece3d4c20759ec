"""Stochastic Euler tops and the stochastic pendulum.

Wiener increments are reproducible from a 64-bit seed and can be refined
dyadically by Brownian bridging.  Schemes operate on batches: ``x`` has
shape ``(..., n)`` and ``dW`` shape ``(..., d)``.

Diffusion is diagonal in the sense that every Wiener column drives at most
one state component (``noise_rows``).  Square-root diffusions are evaluated
at ``max(x, 0)`` (full truncation).
"""
import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .core import DomainError, IntegrationError, Trajectory, as_state

SEED_MASK = (1 << 64) - 1
CHUNK = 256


class UnsupportedNoise(DomainError):
    pass


class Interpretation(enum.Enum):
    ITO = "ito"
    STRATONOVICH = "strat"


class Scheme(enum.Enum):
    EM = "em"
    MILSTEIN = "milstein"
    HEUN = "heun"

    @property
    def interpretation(self):
        return (Interpretation.STRATONOVICH if self is Scheme.HEUN
                else Interpretation.ITO)


# -- Wiener paths -------------------------------------------------------------

def _check_seed(seed):
    seed = int(seed)
    if not 0 <= seed <= SEED_MASK:
        raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


QUANTUM_BITS = 40


def _quantum(base_dt):
    """Absolute grid for the increments of a path generated with step
    ``base_dt``: a power of two about 2^-40 of its standard deviation.

    Increments of every refinement level are multiples of this grid and
    far below 2^53 grid units, so their sums and differences are exact.
    """
    return 2.0 ** (math.floor(math.log2(math.sqrt(base_dt))) - QUANTUM_BITS)


def _snap(x, quantum):
    return np.round(x / quantum) * quantum


def _split(coarse, gauss, half_dt, quantum):
    """Split coarse increments into halves ``a + b == coarse`` exactly.

    ``a`` is drawn from the Brownian-bridge law and snapped to ``quantum``;
    ``coarse`` already lies on that grid, so ``b = coarse - a`` is exact.
    """
    a = _snap(0.5 * coarse + math.sqrt(half_dt / 2.0) * gauss, quantum)
    return a, coarse - a


@dataclass(frozen=True)
class WienerPath:
    """``d`` independent Brownian motions sampled with step ``dt`` from ``t0``.

    ``increments`` has shape ``(d, n)``; ``level`` counts bridge refinements
    applied to the originally generated path.
    """

    seed: int
    dt: float
    increments: np.ndarray
    t0: float = 0.0
    level: int = 0

    @property
    def d(self):
        return self.increments.shape[0]

    @property
    def n(self):
        return self.increments.shape[1]

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(self.n + 1)

    def values(self):
        """W at the nodes, shape ``(d, n + 1)``, with W(t0) = 0."""
        w = np.zeros((self.d, self.n + 1))
        np.cumsum(self.increments, axis=1, out=w[:, 1:])
        return w

    def refine(self):
        """Path at ``dt/2`` whose consecutive pairs sum to these increments."""
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.level + 1,))
        gauss = np.random.default_rng(ss).standard_normal(self.increments.shape)
        quantum = _quantum(self.dt * 2.0 ** self.level)
        first, second = _split(self.increments, gauss, self.dt / 2.0, quantum)
        fine = np.empty((self.d, 2 * self.n))
        fine[:, 0::2] = first
        fine[:, 1::2] = second
        return WienerPath(self.seed, self.dt / 2.0, fine, self.t0, self.level + 1)

    def coarsen(self):
        """Path at ``2 dt`` formed by pairwise sums (``n`` must be even)."""
        if self.n % 2:
            raise DomainError("coarsening needs an even number of increments")
        inc = self.increments[:, 0::2] + self.increments[:, 1::2]
        return WienerPath(self.seed, 2.0 * self.dt, inc, self.t0,
                          self.level - 1)


def generate_wiener(seed, n, dt, d, t0=0.0):
    """Reproducible path of ``n`` N(0, dt) increments for ``d`` components.

    Samples are snapped to a dyadic grid ~2^-40 sd wide so that bridge
    refinements sum back exactly.
    """
    seed = _check_seed(seed)
    if n < 1 or d < 1:
        raise DomainError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    inc = _snap(math.sqrt(dt) * rng.standard_normal((d, n)), _quantum(dt))
    return WienerPath(seed, float(dt), inc, float(t0))


def path_seed(master, index):
    """Seed of path ``index`` in an ensemble keyed by ``master``."""
    ss = np.random.SeedSequence([_check_seed(master), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


# -- SDE specifications -------------------------------------------------------

@dataclass(frozen=True)
class SdeSpec:
    """``dx = f(t, x) dt + sum_j g_j(x) dW_j`` under ``interpretation``.

    ``diffusion(x)`` returns the full ``(..., n, d)`` matrix and
    ``diffusion_partials(x)`` the ``(..., n, d, n)`` tensor
    ``∂g_{ij}/∂x_k``.  ``noise_rows[j]`` names the component driven by
    column j (``None`` for a zero column); ``noise_rows=None`` marks
    non-diagonal noise.
    """

    name: str
    dim: int
    n_noise: int
    drift: Callable
    diffusion: Callable
    diffusion_partials: Optional[Callable] = None
    noise_rows: Optional[tuple] = None
    interpretation: Interpretation = Interpretation.ITO
    params: dict = field(default_factory=dict)


class _ShiftedDrift:
    """``base(t, x) + sign * ½ Σ g ∂g``; converting back returns ``base``."""

    def __init__(self, base, spec, sign):
        self.base = base
        self.spec = spec
        self.sign = sign

    def __call__(self, t, x):
        return self.base(t, x) + self.sign * noise_induced_drift(self.spec, x)


def noise_induced_drift(spec, x):
    """``½ Σ_j Σ_k g_{kj} ∂g_{ij}/∂x_k`` for every component i."""
    if spec.diffusion_partials is None:
        raise DomainError(f"{spec.name}: diffusion partials are required")
    g = spec.diffusion(x)
    dg = spec.diffusion_partials(x)
    return 0.5 * np.einsum("...kj,...ijk->...i", g, dg)


def convert(spec, target):
    """The same process written under ``target`` interpretation."""
    target = Interpretation(target)
    if spec.interpretation is target:
        return spec
    drift = spec.drift
    if isinstance(drift, _ShiftedDrift):
        new = drift.base
    else:
        sign = -1.0 if target is Interpretation.STRATONOVICH else 1.0
        new = _ShiftedDrift(drift, spec, sign)
    return replace(spec, drift=new, interpretation=target)


def strat_drift(spec):
    """Stratonovich drift ``f - ½ Σ g ∂g/∂x`` of an Itô spec."""
    if spec.interpretation is not Interpretation.ITO:
        raise DomainError("strat_drift expects an Itô specification")
    return convert(spec, Interpretation.STRATONOVICH).drift


def ito_drift(spec):
    """Itô drift of a Stratonovich spec (inverse of :func:`strat_drift`)."""
    if spec.interpretation is not Interpretation.STRATONOVICH:
        raise DomainError("ito_drift expects a Stratonovich specification")
    return convert(spec, Interpretation.ITO).drift


def _diag_matrix(values, rows, n):
    values = np.asarray(values)
    out = np.zeros(values.shape[:-1] + (n, len(rows)))
    for j, r in enumerate(rows):
        if r is not None:
            out[..., r, j] = values[..., j]
    return out


def _diag_partials(values, rows, n):
    values = np.asarray(values)
    out = np.zeros(values.shape[:-1] + (n, len(rows), n))
    for j, r in enumerate(rows):
        if r is not None:
            out[..., r, j, r] = values[..., j]
    return out


def _euler_top_drift(t, x):
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    return np.stack([x2 * x3, -x1 * x3, x1 * x2], axis=-1)


def _sqrt_trunc(x):
    return np.sqrt(np.maximum(x, 0.0))


def _sqrt_trunc_deriv(x):
    pos = x > 0
    safe = np.where(pos, x, 1.0)
    return np.where(pos, 0.5 / np.sqrt(safe), 0.0)


def euler_top_sde_a():
    """Multiplicative noise ``x1 dW1`` on x1, additive ``dW3`` on x3."""
    rows = (0, None, 2)

    def diffusion(x):
        x = np.asarray(x)
        vals = np.stack([x[..., 0], np.zeros_like(x[..., 0]),
                         np.ones_like(x[..., 0])], axis=-1)
        return _diag_matrix(vals, rows, 3)

    def partials(x):
        x = np.asarray(x)
        one = np.ones_like(x[..., 0])
        vals = np.stack([one, 0 * one, 0 * one], axis=-1)
        return _diag_partials(vals, rows, 3)

    return SdeSpec("euler-top-sde-a", 3, 3, _euler_top_drift, diffusion,
                   partials, rows)


def euler_top_sde_b():
    """Square-root noise ``sqrt(x_i) dW_i`` on every component."""
    rows = (0, 1, 2)
    return SdeSpec(
        "euler-top-sde-b", 3, 3, _euler_top_drift,
        lambda x: _diag_matrix(_sqrt_trunc(np.asarray(x)), rows, 3),
        lambda x: _diag_partials(_sqrt_trunc_deriv(np.asarray(x)), rows, 3),
        rows)


def pendulum_sde(level=0.5):
    """Pendulum ``x1' = x2, x2' = -2H sin x1`` with square-root noise."""
    rows = (0, 1)

    def drift(t, x):
        return np.stack([x[..., 1], -2.0 * level * np.sin(x[..., 0])], axis=-1)

    return SdeSpec(
        "pendulum-sde", 2, 2, drift,
        lambda x: _diag_matrix(_sqrt_trunc(np.asarray(x)), rows, 2),
        lambda x: _diag_partials(_sqrt_trunc_deriv(np.asarray(x)), rows, 2),
        rows, params={"level": level})


def constant_noise_spec(drift, dim, scale=1.0, name="additive"):
    """Diagonal additive noise of the given scale on every component."""
    rows = tuple(range(dim))

    def diffusion(x):
        x = np.asarray(x)
        return _diag_matrix(np.full(x.shape, float(scale)), rows, dim)

    def partials(x):
        x = np.asarray(x)
        return _diag_partials(np.zeros(x.shape), rows, dim)

    return SdeSpec(name, dim, dim, drift, diffusion, partials, rows)


# -- one-step schemes ---------------------------------------------------------

def _require(spec, interpretation, scheme):
    if spec.interpretation is not interpretation:
        raise DomainError(
            f"{scheme} needs the {interpretation.value} form of {spec.name}; "
            f"use convert()")


def em_step(spec, t, x, dW, dt):
    """Euler-Maruyama: ``x + f dt + G dW``."""
    _require(spec, Interpretation.ITO, "em")
    return (x + spec.drift(t, x) * dt
            + np.einsum("...ij,...j->...i", spec.diffusion(x), dW))


def milstein_step(spec, t, x, dW, dt):
    """EM plus ``½ Σ_j (g_j·∇) g_j (dW_j² - dt)`` (diagonal noise only)."""
    _require(spec, Interpretation.ITO, "milstein")
    if spec.noise_rows is None:
        raise UnsupportedNoise(
            f"{spec.name}: Milstein needs diagonal noise (no Lévy areas)")
    if spec.diffusion_partials is None:
        raise DomainError(f"{spec.name}: diffusion partials are required")
    g = spec.diffusion(x)
    dg = spec.diffusion_partials(x)
    lg = np.einsum("...kj,...ijk->...ij", g, dg)
    return (x + spec.drift(t, x) * dt
            + np.einsum("...ij,...j->...i", g, dW)
            + 0.5 * np.einsum("...ij,...j->...i", lg, dW * dW - dt))


def heun_strat_step(spec, t, x, dW, dt):
    """Stratonovich Heun: EM predictor, trapezoidal corrector."""
    _require(spec, Interpretation.STRATONOVICH, "heun")
    f0 = spec.drift(t, x)
    g0 = spec.diffusion(x)
    xp = x + f0 * dt + np.einsum("...ij,...j->...i", g0, dW)
    f1 = spec.drift(t + dt, xp)
    g1 = spec.diffusion(xp)
    return (x + 0.5 * (f0 + f1) * dt
            + 0.5 * np.einsum("...ij,...j->...i", g0 + g1, dW))


_STEPPERS = {
    Scheme.EM: em_step,
    Scheme.MILSTEIN: milstein_step,
    Scheme.HEUN: heun_strat_step,
}


def simulate(spec, x0, increments, dt, scheme, t0=0.0, record=True):
    """Run ``scheme`` on a batch of paths.

    ``x0`` has shape ``(n,)`` or ``(P, n)``; ``increments`` has shape
    ``(d, N)`` or ``(P, d, N)``.  Returns states of shape ``(..., N+1, n)``
    when ``record`` else the end states.
    """
    scheme = Scheme(scheme)
    step = _STEPPERS[scheme]
    _require(spec, scheme.interpretation, scheme.value)
    inc = np.asarray(increments, dtype=np.float64)
    if inc.shape[-2] != spec.n_noise:
        raise DomainError(f"{spec.name} needs {spec.n_noise} Wiener "
                          f"components, path has {inc.shape[-2]}")
    n_steps = inc.shape[-1]
    x = np.broadcast_to(np.asarray(x0, dtype=np.float64),
                        inc.shape[:-2] + (spec.dim,)).copy()
    if record:
        out = np.empty(inc.shape[:-2] + (n_steps + 1, spec.dim))
        out[..., 0, :] = x
    for i in range(n_steps):
        x = step(spec, t0 + i * dt, x, inc[..., i], dt)
        if record:
            out[..., i + 1, :] = x
    if not np.all(np.isfinite(x)):
        raise IntegrationError(f"non-finite state in {spec.name}")
    return out if record else x


def integrate_sde(spec, x0, path, scheme):
    """Integrate ``spec`` along one Wiener path; trajectory on path nodes."""
    x0 = as_state(x0, spec.dim, name="initial state")
    if path.d != spec.n_noise:
        raise DomainError(f"{spec.name} needs {spec.n_noise} Wiener "
                          f"components, path has {path.d}")
    states = simulate(spec, x0, path.increments, path.dt, scheme, path.t0)
    return Trajectory(path.times, states)


# -- ensembles ----------------------------------------------------------------

@dataclass
class EnsembleStats:
    """Per-time moments over ``paths`` trajectories.

    ``ci`` is the 95% half-width ``1.96 sd / sqrt(M)`` of each mean;
    ``second_moments[t, i, j]`` estimates ``E[x_i x_j]`` with half-widths
    ``second_moment_ci``.
    """

    times: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    ci: np.ndarray
    second_moments: np.ndarray
    second_moment_ci: np.ndarray
    paths: int


class _Accumulator:
    """Chan-style merge of (count, mean, M2) computed on shifted data."""

    def __init__(self):
        self.count = 0
        self.mean = None
        self.m2 = None

    def add(self, block):
        nb = block.shape[0]
        mean_b = block.mean(axis=0)
        m2_b = ((block - mean_b) ** 2).sum(axis=0)
        if self.count == 0:
            self.count, self.mean, self.m2 = nb, mean_b, m2_b
            return
        na = self.count
        n = na + nb
        delta = mean_b - self.mean
        self.mean = self.mean + delta * (nb / n)
        self.m2 = self.m2 + m2_b + delta * delta * (na * nb / n)
        self.count = n

    def variance(self):
        return self.m2 / (self.count - 1)


def _chunk_paths(spec, x0, master, start, stop, n_steps, dt, t0, scheme):
    inc = np.stack([generate_wiener(path_seed(master, i), n_steps, dt,
                                    spec.n_noise, t0).increments
                    for i in range(start, stop)])
    return simulate(spec, x0, inc, dt, scheme, t0)


def ensemble(spec, x0, paths, master_seed, grid, scheme, workers=1):
    """Monte Carlo moments of ``spec`` on ``grid`` over ``paths`` paths.

    Path i uses the seed ``path_seed(master_seed, i)``.  Paths are processed
    in fixed blocks of ``CHUNK`` and merged in ascending order, so results
    do not depend on ``workers``.
    """
    if paths < 2:
        raise DomainError(f"need at least 2 paths, got {paths}")
    x0 = as_state(x0, spec.dim, name="initial state")
    times = grid.times()
    n_steps = len(times) - 1
    dt = grid.dt
    if abs((times[-1] - times[-2]) - dt) > 1e-9 * dt:
        raise DomainError("ensembles need dt dividing t1 - t0")
    bounds = [(s, min(s + CHUNK, paths)) for s in range(0, paths, CHUNK)]

    def run(b):
        return _chunk_paths(spec, x0, master_seed, b[0], b[1], n_steps, dt,
                            grid.t0, scheme)

    first = run(bounds[0])
    ref = first[0]
    ref_prod = ref[:, :, None] * ref[:, None, :]
    states_acc = _Accumulator()
    prod_acc = _Accumulator()

    def absorb(block):
        states_acc.add(block - ref)
        prod = block[..., :, None] * block[..., None, :]
        prod_acc.add(prod - ref_prod)

    absorb(first)
    rest = bounds[1:]
    if workers > 1 and rest:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for block in pool.map(run, rest):
                absorb(block)
    else:
        for b in rest:
            absorb(run(b))

    mean = ref + states_acc.mean
    var = states_acc.variance()
    ci = 1.96 * np.sqrt(var / paths)
    second = ref_prod + prod_acc.mean
    second_ci = 1.96 * np.sqrt(prod_acc.variance() / paths)
    return EnsembleStats(times, mean, var, ci, second, second_ci, paths)


# -- convergence studies ------------------------------------------------------

def shared_paths(master, paths, t0, T, coarse_level, fine_levels, d):
    """Wiener increments on dyadic grids ``dt = T 2^-level`` sharing one
    Brownian path per index.  Returns ``{level: (paths, d, N)}``."""
    want = sorted(set(fine_levels) | {coarse_level})
    out = {lvl: [] for lvl in want}
    n0 = 2 ** coarse_level
    for i in range(paths):
        w = generate_wiener(path_seed(master, i), n0, T / n0, d, t0)
        level = coarse_level
        while True:
            if level in out:
                out[level].append(w.increments)
            if level == want[-1]:
                break
            w = w.refine()
            level += 1
    return {lvl: np.stack(v) for lvl, v in out.items()}


def loglog_slope(dts, errors):
    slope, _ = np.polyfit(np.log(dts), np.log(errors), 1)
    return float(slope)


def strong_errors(spec, x0, t0, T, levels, ref_level, paths, master,
                  schemes=(Scheme.EM, Scheme.MILSTEIN), ref_scheme=Scheme.MILSTEIN):
    """RMS end-state error of each scheme against a fine reference run on
    the same Brownian paths.  Returns ``(dts, {scheme: errors})``."""
    incs = shared_paths(master, paths, t0, T, min(levels), list(levels) + [ref_level],
                        spec.n_noise)
    ref_dt = T / 2 ** ref_level
    ref_spec = convert(spec, Scheme(ref_scheme).interpretation)
    ref = simulate(ref_spec, x0, incs[ref_level], ref_dt, ref_scheme, t0,
                   record=False)
    dts = np.array([T / 2 ** lvl for lvl in levels])
    errors = {}
    for scheme in schemes:
        scheme = Scheme(scheme)
        s = convert(spec, scheme.interpretation)
        errs = []
        for lvl, dt in zip(levels, dts):
            end = simulate(s, x0, incs[lvl], dt, scheme, t0, record=False)
            errs.append(math.sqrt(np.mean(np.sum((end - ref) ** 2, axis=-1))))
        errors[scheme] = np.array(errs)
    return dts, errors


def interpretation_gap(spec, x0, t0, T, levels, paths, master):
    """RMS end-state gap between the Itô form under Milstein and the
    converted Stratonovich form under Heun, on shared paths."""
    incs = shared_paths(master, paths, t0, T, min(levels), levels, spec.n_noise)
    ito = convert(spec, Interpretation.ITO)
    strat = convert(spec, Interpretation.STRATONOVICH)
    dts = np.array([T / 2 ** lvl for lvl in levels])
    gaps = []
    for lvl, dt in zip(levels, dts):
        a = simulate(ito, x0, incs[lvl], dt, Scheme.MILSTEIN, t0, record=False)
        b = simulate(strat, x0, incs[lvl], dt, Scheme.HEUN, t0, record=False)
        gaps.append(math.sqrt(np.mean(np.sum((a - b) ** 2, axis=-1))))
    return dts, np.array(gaps)
