"""Delay and memory: what survives when the top or pendulum looks back?"""
import numpy as np

from pendulab import GridSpec
from pendulab.dde import DelayedSystem, DelaySpec, integrate_dde
from pendulab.fractional import MixedOrderSystem, integrate_fractional
from pendulab.ode import conservation_drift

# Delaying only the x3 equation keeps x1^2 + x2^2 fixed, because x1 and x2
# still rotate into each other instantaneously.  C1 is lost.
g = GridSpec(0.0, 50.0, 0.01)
z = integrate_dde(DelayedSystem.EULER_TOP_DELAY_Z, (0.1, 0.05, 0.2),
                  DelaySpec(1.0), g)
print(f"delay on x3:  H1 drift {conservation_drift(z, 'H1'):.1e}, "
      f"C1 drift {conservation_drift(z, 'C1'):.1e}")

# The delayed pendulum with theta(0) = 2 sits on a parabola for one delay.
w = integrate_dde(DelayedSystem.PENDULUM_DELAY_H, (2.0, 0.0), DelaySpec(1.0),
                  GridSpec(0.0, 10.0, 0.01), level=0.5)
print("delayed pendulum theta at t = 0, 1, 5, 10:",
      np.round(w.states[[0, 100, 500, 1000], 0], 4))

# A Caputo derivative of order alpha + 1 on the pendulum adds memory.  For
# alpha = 1 nothing changes; for alpha = 0.8 the swing dies down.
g = GridSpec(0.0, 50.0, 1e-3)
for alpha in (1.0, 0.8):
    f = integrate_fractional(MixedOrderSystem.PENDULUM_FRAC_H, (-3.1, 0.0),
                             alpha, g, level=0.5)
    th = np.abs(f.states[:, 0])
    print(f"alpha={alpha}: max|theta| on [0,10] {th[f.times <= 10].max():.3f},"
          f" on [40,50] {th[f.times >= 40].max():.3f}")
