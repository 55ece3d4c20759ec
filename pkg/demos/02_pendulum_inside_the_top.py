"""A pendulum drawn on a level surface of the Euler top, and back again."""
import math

import numpy as np

from pendulab import GridSpec, integrate
from pendulab.analytic import heteroclinic, jacobi_orbit, jacobi_periods
from pendulab.core import PendulumParams, euler_top_field, pendulum_field
from pendulab.correspondence import (Axis, LevelSurface, euler_to_pendulum,
                                     pendulum_to_euler, residual_report)
from pendulab.verify import period_from_crossings

# 1. Pendulum theta'' = -2h sin(theta), released from -3.8 (beyond the top).
h = 0.5
pend = integrate(pendulum_field(PendulumParams(h=h)), (-3.8, 0.0),
                 GridSpec(0.0, 20.0, 1e-4))

# 2. Map it onto the H- and K-surfaces.  The image solves the Euler top:
#    the finite-difference residual of x' = f(x) stays at discretization size.
for axis in Axis:
    top = pendulum_to_euler(pend, LevelSurface(axis, h))
    print(f"{axis.value}-surface image: residual "
          f"{residual_report(top).max():.2e}")

# 3. Go the other way: any on-surface Euler-top run gives a pendulum.
top = integrate(euler_top_field(), (0.1, 0.1, 0.2), GridSpec(0.0, 100.0, 1e-3))
for axis, level in ((Axis.H, 0.01), (Axis.K, 0.025)):
    theta = euler_to_pendulum(top, LevelSurface(axis, level))
    print(f"angle read off the {axis.value}-surface: pendulum residual "
          f"{residual_report(theta, 'pendulum', level).max():.2e}")

# 4. Closed forms.  For H < K the top moves along Jacobi elliptic functions;
#    for H = K it follows a sech/tanh orbit between two equilibria.
H, K = 1.0, 2.0
run = integrate(euler_top_field(), jacobi_orbit(H, K, 0.0),
                GridSpec(0.0, 10.0, 1e-3))
print("RK4 vs elliptic orbit:",
      f"{np.abs(run.states - jacobi_orbit(H, K, run.times)).max():.1e}")
p13, p3 = jacobi_periods(H, K)
print(f"periods x1: {period_from_crossings(run.times, run.states[:, 0]):.6f}"
      f" (closed form {p13:.6f}), x3: "
      f"{period_from_crossings(run.times, run.states[:, 2]):.6f}"
      f" (closed form {p3:.6f})")
t = np.linspace(0.0, 5.0, 6)
print("heteroclinic H=K=1, x2(t) = sqrt2 tanh(sqrt2 t):")
print(np.round(heteroclinic(1.0, t)[:, 1], 6), "->", round(math.sqrt(2), 6))
