"""Noise on the top: convergence orders, Ito vs Stratonovich, moments."""
import numpy as np

from pendulab import GridSpec
from pendulab import stochastic as sde

spec = sde.euler_top_sde_a()          # noise x1 dW1 on x1 and dW3 on x3
x0 = (0.1, 0.1, 0.1)
levels = [6, 7, 8, 9, 10]             # dt = 2^-6 ... 2^-10

# Strong error against a 2^-14 reference on the same Brownian paths.
dts, errs = sde.strong_errors(spec, x0, 1.0, 1.0, levels, 14, 200, 0)
for scheme, e in errs.items():
    print(f"{scheme.value:9s} errors", " ".join(f"{v:.2e}" for v in e),
          f" slope {sde.loglog_slope(dts, e):.3f}")

# Stratonovich form, converted to Ito, integrated by Heun and EM on shared
# paths: the two answers merge as dt shrinks.
dts, gaps = sde.interpretation_gap(spec, x0, 1.0, 1.0, levels, 200, 0)
print(f"Ito/Stratonovich gap slope {sde.loglog_slope(dts, gaps):.3f}")

# Moments: the drift of x2 is -x1 x3 with no noise, so dE[x2]/dt = -E[x1 x3].
stats = sde.ensemble(spec, x0, 10_000, 0, GridSpec(1.0, 2.1, 1e-3),
                     sde.Scheme.MILSTEIN, workers=4)
i = int(np.argmin(np.abs(stats.times - 2.0)))
h = stats.times[i + 1] - stats.times[i]
lhs = (stats.mean[i + 1, 1] - stats.mean[i - 1, 1]) / (2 * h)
rhs = -stats.second_moments[i, 0, 2]
print(f"t=2: dE[x2]/dt = {lhs:.5f}, -E[x1 x3] = {rhs:.5f} "
      f"(+- {stats.second_moment_ci[i, 0, 2]:.5f})")
