"""Numerical laboratory for the Euler top and the mathematical pendulum.

Classical, delayed, Caputo-fractional and stochastic variants, with
Jacobi-elliptic closed forms as oracles and maps between pendulum motions
and Euler-top orbits on level surfaces.
"""
from .analytic import (SignPattern, heteroclinic, jacobi_orbit,
                       jacobi_periods, pendulum_analytic)
from .core import (ConservedQuantity, DomainError, Field, Harmonic,
                   IntegrationError, PendulumParams, Trajectory, conserved,
                   euler_top_field, euler_top_rhs, level_constants,
                   pendulum_field, pendulum_rhs)
from .correspondence import (Axis, ConstraintViolation, LevelSurface,
                             euler_to_pendulum, pendulum_to_euler,
                             residual_report)
from .dde import DelayedSystem, DelaySpec, integrate_dde
from .elliptic import complete_K, jacobi_sn_cn_dn
from .fractional import (FractionalOrder, MixedOrderSystem, abm_weights,
                         integrate_fractional)
from .ode import GridSpec, conservation_drift, integrate, rk4_step
from .stochastic import (Interpretation, Scheme, SdeSpec, WienerPath,
                         ensemble, generate_wiener, integrate_sde)

__version__ = "0.1.0"
