"""Command-line front end: ``pendulab simulate | verify | ensemble``.

Settings are resolved as command-line flags, then the JSON file given by
``--config``, then defaults.  Every setting a system does not use is
rejected rather than ignored.

Level conventions: for the pendulum systems ``--level`` is the coefficient
in ``theta'' + 2*level*sin(theta) = 0``, i.e. the H or K of the level
surfaces ``x1^2 + x2^2 = 2H`` and ``x2^2 + x3^2 = 2K``.  The closed-form
Jacobi orbits are written instead with ``x1^2 + x2^2 = 2H^2``; simulate
reports both readings of an Euler-top initial condition on stderr.
"""
import argparse
import dataclasses
import json
import math
import os
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import dde, fractional, stochastic, verify
from .core import (DomainError, IntegrationError, PendulumParams,
                   euler_top_field, pendulum_field)
from .ode import GridSpec, integrate

EULER_HEADER = ("x1", "x2", "x3")
PENDULUM_HEADER = ("theta", "omega")


@dataclass(frozen=True)
class SystemInfo:
    kind: str          # ode | dde | frac | sde
    pendulum: bool
    description: str
    tag: Optional[int] = None


SYSTEMS = {
    "euler-top": SystemInfo("ode", False, "free Euler top"),
    "pendulum": SystemInfo("ode", True, "simple pendulum"),
    "euler-top-dde-z": SystemInfo(
        "dde", False, "Euler top, x3' uses x1 x2 at t - tau",
        dde.DelayedSystem.EULER_TOP_DELAY_Z),
    "euler-top-dde-x": SystemInfo(
        "dde", False, "Euler top, x1' uses x2 x3 at t - tau",
        dde.DelayedSystem.EULER_TOP_DELAY_X),
    "pendulum-dde-h": SystemInfo(
        "dde", True, "pendulum with delayed restoring force (H)",
        dde.DelayedSystem.PENDULUM_DELAY_H),
    "pendulum-dde-k": SystemInfo(
        "dde", True, "pendulum with delayed restoring force (K)",
        dde.DelayedSystem.PENDULUM_DELAY_K),
    "euler-top-frac-z": SystemInfo(
        "frac", False, "Euler top, Caputo order alpha on x3",
        fractional.MixedOrderSystem.EULER_TOP_FRAC_Z),
    "euler-top-frac-x": SystemInfo(
        "frac", False, "Euler top, Caputo order alpha on x1",
        fractional.MixedOrderSystem.EULER_TOP_FRAC_X),
    "pendulum-frac-h": SystemInfo(
        "frac", True, "pendulum of Caputo order alpha + 1 (H)",
        fractional.MixedOrderSystem.PENDULUM_FRAC_H),
    "pendulum-frac-k": SystemInfo(
        "frac", True, "pendulum of Caputo order alpha + 1 (K)",
        fractional.MixedOrderSystem.PENDULUM_FRAC_K),
    "euler-top-sde-a": SystemInfo(
        "sde", False, "Euler top, noise x1 dW1 and dW3"),
    "euler-top-sde-b": SystemInfo(
        "sde", False, "Euler top, square-root noise on every component"),
    "pendulum-sde": SystemInfo(
        "sde", True, "pendulum with square-root noise"),
}

# Default initial data, taken from the reference experiments of each family.
EULER_DEFAULT_IC = {
    "ode": (0.1, 0.1, 0.2),
    "dde": (0.1, 0.05, 0.2),
    "frac": (0.1, 0.1, 0.3),
}
SDE_DEFAULT_IC = {
    "euler-top-sde-a": (0.1, 0.1, 0.1),
    "euler-top-sde-b": (1.0, 0.8, 0.2),
}


class ConfigError(ValueError):
    """Invalid run configuration; ``field`` names the offending setting."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass
class RunConfig:
    """Every setting of a run.  ``None`` means "not given"."""

    system: Optional[str] = None
    t0: Optional[float] = None
    t1: Optional[float] = None
    dt: Optional[float] = None
    ic: Optional[list] = None
    theta0: Optional[float] = None
    omega0: Optional[float] = None
    level: Optional[float] = None
    tau: Optional[float] = None
    alpha: Optional[float] = None
    interpretation: Optional[str] = None
    scheme: Optional[str] = None
    seed: Optional[int] = None
    paths: Optional[int] = None

    @classmethod
    def field_names(cls):
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"not valid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be a JSON object")
        known = set(cls.field_names())
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown configuration field")
        return cls(**data)

    def to_json(self):
        data = {k: v for k, v in dataclasses.asdict(self).items()
                if v is not None}
        return json.dumps(data, indent=2, sort_keys=True) + "\n"

    def merged(self, override):
        """Copy of ``self`` with every non-None field of ``override``."""
        changes = {k: v for k, v in dataclasses.asdict(override).items()
                   if v is not None}
        return dataclasses.replace(self, **changes)


def _allowed_fields(system, command):
    info = SYSTEMS[system]
    allowed = {"system", "t0", "t1", "dt"}
    allowed |= {"theta0", "omega0", "level"} if info.pendulum else {"ic"}
    if info.kind == "dde":
        allowed.add("tau")
    elif info.kind == "frac":
        allowed.add("alpha")
    elif info.kind == "sde":
        allowed |= {"interpretation", "scheme", "seed"}
        if command == "ensemble":
            allowed.add("paths")
    return allowed


def _required_fields(system, command):
    info = SYSTEMS[system]
    required = {"system"}
    if info.pendulum:
        required.add("level")
    if info.kind == "dde":
        required.add("tau")
    elif info.kind == "frac":
        required.add("alpha")
    if command == "ensemble":
        required.add("paths")
    return required


def _number(field, value, positive=False):
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ConfigError(field, f"expected a number, got {value!r}") from None
    if not math.isfinite(x):
        raise ConfigError(field, "must be finite")
    if positive and not x > 0:
        raise ConfigError(field, f"must be positive, got {x}")
    return x


@dataclass(frozen=True)
class Run:
    """A fully validated run description."""

    system: str
    grid: GridSpec
    state: tuple
    level: float = 0.0
    tau: float = 0.0
    alpha: float = 1.0
    scheme: Optional[stochastic.Scheme] = None
    seed: int = 0
    paths: int = 0

    @property
    def info(self):
        return SYSTEMS[self.system]

    @property
    def header(self):
        return PENDULUM_HEADER if self.info.pendulum else EULER_HEADER


def resolve(config, command="simulate"):
    """Validate ``config`` for ``command`` and fill in defaults."""
    if config.system is None:
        raise ConfigError("system", "required; choose from "
                          + ", ".join(SYSTEMS))
    if config.system not in SYSTEMS:
        raise ConfigError("system", f"unknown system {config.system!r}; "
                          "choose from " + ", ".join(SYSTEMS))
    info = SYSTEMS[config.system]
    if command == "ensemble" and info.kind != "sde":
        raise ConfigError("system", f"{config.system} is deterministic; "
                          "ensemble needs a stochastic system")
    given = {k for k, v in dataclasses.asdict(config).items() if v is not None}
    allowed = _allowed_fields(config.system, command)
    for name in RunConfig.field_names():
        if name in given and name not in allowed:
            raise ConfigError(name, f"not used by {config.system} "
                              f"({command})")
    for name in sorted(_required_fields(config.system, command)):
        if name not in given:
            raise ConfigError(name, f"required by {config.system}")

    t0 = _number("t0", config.t0 if config.t0 is not None
                 else (1.0 if info.kind == "sde" else 0.0))
    t1 = _number("t1", config.t1 if config.t1 is not None else t0 + 10.0)
    dt = _number("dt", config.dt if config.dt is not None else 1e-3,
                 positive=True)
    if not t1 > t0:
        raise ConfigError("t1", f"must exceed t0 ({t1} <= {t0})")
    try:
        grid = GridSpec(t0, t1, dt)
    except DomainError as exc:
        raise ConfigError("dt", str(exc)) from None

    if info.pendulum:
        default = (1.0, 0.8) if info.kind == "sde" else (2.0, 0.0)
        theta0 = _number("theta0", config.theta0 if config.theta0 is not None
                         else default[0])
        omega0 = _number("omega0", config.omega0 if config.omega0 is not None
                         else default[1])
        state = (theta0, omega0)
    else:
        if config.ic is None:
            state = (EULER_DEFAULT_IC[info.kind] if info.kind != "sde"
                     else SDE_DEFAULT_IC[config.system])
        else:
            ic = config.ic
            if isinstance(ic, str):
                ic = [s for s in ic.split(",") if s.strip()]
            if not isinstance(ic, (list, tuple)) or len(ic) != 3:
                raise ConfigError("ic", "expected three comma-separated "
                                  "components x1,x2,x3")
            state = tuple(_number("ic", v) for v in ic)

    kwargs = {}
    if info.pendulum:
        kwargs["level"] = _number("level", config.level, positive=True)
    if info.kind == "dde":
        kwargs["tau"] = _number("tau", config.tau, positive=True)
        if dt > kwargs["tau"] / 4:
            raise ConfigError("dt", f"must not exceed tau/4 = "
                              f"{kwargs['tau'] / 4} (got {dt})")
    if info.kind == "frac":
        alpha = _number("alpha", config.alpha)
        if not 0 < alpha <= 1:
            raise ConfigError("alpha", f"must lie in (0, 1], got {alpha}")
        kwargs["alpha"] = alpha
        n = (t1 - t0) / dt
        if abs(n - round(n)) > 1e-9 * max(1.0, n):
            raise ConfigError("dt", "must divide t1 - t0 for fractional "
                              "systems")
    if info.kind == "sde":
        kwargs["scheme"] = _resolve_scheme(config)
        seed = 0 if config.seed is None else config.seed
        if isinstance(seed, bool) or not isinstance(seed, int) \
                or not 0 <= seed < 2 ** 64:
            raise ConfigError("seed", "must be an integer in [0, 2^64)")
        kwargs["seed"] = seed
        n = (t1 - t0) / dt
        if abs(n - round(n)) > 1e-9 * max(1.0, n):
            raise ConfigError("dt", "must divide t1 - t0 for stochastic "
                              "systems")
    if command == "ensemble":
        paths = config.paths
        if isinstance(paths, bool) or not isinstance(paths, int) or paths < 2:
            raise ConfigError("paths", f"must be an integer >= 2, got {paths!r}")
        kwargs["paths"] = paths
    return Run(config.system, grid, state, **kwargs)


def _resolve_scheme(config):
    """The scheme integrates the form named by the interpretation: EM and
    Milstein run the Itô form, Heun the Stratonovich form."""
    interp = None
    if config.interpretation is not None:
        try:
            interp = stochastic.Interpretation(config.interpretation)
        except ValueError:
            raise ConfigError("interpretation", "expected ito or strat, got "
                              f"{config.interpretation!r}") from None
    if config.scheme is None:
        if interp is stochastic.Interpretation.STRATONOVICH:
            return stochastic.Scheme.HEUN
        return stochastic.Scheme.EM
    try:
        scheme = stochastic.Scheme(config.scheme)
    except ValueError:
        raise ConfigError("scheme", "expected em, milstein or heun, got "
                          f"{config.scheme!r}") from None
    if interp is not None and scheme.interpretation is not interp:
        raise ConfigError("scheme", f"{scheme.value} integrates the "
                          f"{scheme.interpretation.value} form, but "
                          f"interpretation is {interp.value}")
    return scheme


def sde_spec(run):
    if run.system == "euler-top-sde-a":
        spec = stochastic.euler_top_sde_a()
    elif run.system == "euler-top-sde-b":
        spec = stochastic.euler_top_sde_b()
    else:
        spec = stochastic.pendulum_sde(run.level)
    return stochastic.convert(spec, run.scheme.interpretation)


def simulate(run):
    """Trajectory of a resolved run."""
    info = run.info
    if info.kind == "ode":
        field = (pendulum_field(PendulumParams(h=run.level)) if info.pendulum
                 else euler_top_field())
        return integrate(field, run.state, run.grid)
    if info.kind == "dde":
        return dde.integrate_dde(info.tag, run.state, dde.DelaySpec(run.tau),
                                 run.grid, level=run.level)
    if info.kind == "frac":
        return fractional.integrate_fractional(
            info.tag, run.state, run.alpha, run.grid, level=run.level)
    spec = sde_spec(run)
    path = stochastic.generate_wiener(run.seed, run.grid.n_steps, run.grid.dt,
                                      spec.n_noise, run.grid.t0)
    return stochastic.integrate_sde(spec, run.state, path, run.scheme)


def format_rows(columns):
    """CSV body lines, every number with 17 significant digits."""
    data = np.column_stack(columns)
    return "\n".join(",".join(format(v, ".17g") for v in row)
                     for row in data.tolist()) + "\n"


def trajectory_csv(run, traj):
    header = ",".join(("t",) + run.header) + "\n"
    return header + format_rows([traj.times, traj.states])


def ensemble_csv(stats):
    n = stats.mean.shape[1]
    names = ["t"]
    for prefix in ("mean", "var", "ci"):
        names += [f"{prefix}_{i + 1}" for i in range(n)]
    return ",".join(names) + "\n" + format_rows(
        [stats.times, stats.mean, stats.var, stats.ci])


def level_note(state):
    """Both readings of the level constants through an Euler-top state."""
    x1, x2, x3 = state
    a = 0.5 * (x1 * x1 + x2 * x2)
    b = 0.5 * (x2 * x2 + x3 * x3)
    return (f"levels: H={a:.17g}, K={b:.17g} (x1^2+x2^2=2H, x2^2+x3^2=2K); "
            f"H={math.sqrt(a):.17g}, K={math.sqrt(b):.17g} "
            f"(x1^2+x2^2=2H^2, x2^2+x3^2=2K^2)")


# -- argument parsing -----------------------------------------------------------

def _ic(text):
    return [s for s in text.split(",") if s.strip()]


def _add_run_flags(p, ensemble=False):
    p.add_argument("--config", metavar="PATH",
                   help="JSON file with RunConfig fields "
                        f"({', '.join(RunConfig.field_names())})")
    p.add_argument("--system", choices=list(SYSTEMS), metavar="ID",
                   help="system id: " + "; ".join(
                       f"{k} ({v.description})" for k, v in SYSTEMS.items()))
    p.add_argument("--ic", type=_ic, metavar="X1,X2,X3",
                   help="Euler-top initial state")
    p.add_argument("--theta0", type=float, help="pendulum initial angle")
    p.add_argument("--omega0", type=float, help="pendulum initial rate")
    p.add_argument("--level", type=float,
                   help="H or K in theta'' + 2*level*sin(theta) = 0")
    p.add_argument("--t0", type=float, help="start time")
    p.add_argument("--t1", type=float, help="end time")
    p.add_argument("--dt", type=float, help="step size")
    p.add_argument("--tau", type=float, help="delay (delayed systems)")
    p.add_argument("--alpha", type=float,
                   help="fractional order in (0, 1] (fractional systems)")
    p.add_argument("--interpretation", choices=["ito", "strat"],
                   help="form of a stochastic system to integrate")
    p.add_argument("--scheme", choices=["em", "milstein", "heun"],
                   help="stochastic scheme (em/milstein: ito, heun: strat)")
    p.add_argument("--seed", type=int, help="Wiener path seed")
    if ensemble:
        p.add_argument("--paths", type=int, help="number of paths M >= 2")
        p.add_argument("--workers", type=int, default=1,
                       help="threads; output does not depend on this")
    p.add_argument("--output", metavar="PATH",
                   help="output file (default: standard output)")
    p.add_argument("--save-config", metavar="PATH",
                   help="write the merged configuration as JSON")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pendulab",
        description="Euler top and pendulum laboratory: classical, delayed, "
                    "fractional and stochastic variants.",
        epilog="systems: " + ", ".join(SYSTEMS),
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate", help="write a trajectory as CSV")
    _add_run_flags(sim)
    ver = sub.add_parser("verify", help="run verification suites")
    ver.add_argument("suite", nargs="?", default="all",
                     help="one of: " + ", ".join(["all", *verify.SUITES]))
    ver.add_argument("--output", metavar="PATH")
    ens = sub.add_parser("ensemble", help="write ensemble moments as CSV")
    _add_run_flags(ens, ensemble=True)
    return parser


def config_from_args(args):
    """Merge defaults, ``--config`` file and flags into a RunConfig."""
    base = RunConfig()
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError("config", f"cannot read {args.config}: "
                              f"{exc.strerror}") from None
        base = RunConfig.from_json(text)
    flags = RunConfig(**{name: getattr(args, name, None)
                         for name in RunConfig.field_names()})
    return base.merged(flags)


def _emit(text, output):
    if output:
        with open(output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            # reader went away (e.g. ``| head``); silence the flush at exit
            os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "verify":
        try:
            checks = verify.run(args.suite)
        except KeyError as exc:
            parser.error(exc.args[0])
        report = [c.as_dict() for c in checks]
        _emit(json.dumps(report, indent=2) + "\n", args.output)
        return 0 if all(c.passed for c in checks) else 1

    try:
        config = config_from_args(args)
        run = resolve(config, args.command)
    except (ConfigError, TypeError) as exc:
        parser.error(str(exc))
    if args.save_config:
        with open(args.save_config, "w", encoding="utf-8") as fh:
            fh.write(config.to_json())

    try:
        if args.command == "simulate":
            if not run.info.pendulum:
                print(level_note(run.state), file=sys.stderr)
            text = trajectory_csv(run, simulate(run))
        else:
            stats = stochastic.ensemble(sde_spec(run), run.state, run.paths,
                                        run.seed, run.grid, run.scheme,
                                        workers=max(1, args.workers))
            text = ensemble_csv(stats)
    except (DomainError, IntegrationError) as exc:
        print(f"pendulab: error: {exc}", file=sys.stderr)
        return 1
    _emit(text, args.output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
