"""
Bias bounds and the identified set for a ratio
==============================================

A population design with a hidden confounder A: compute the long and short
estimands exactly, bound the short ones using the true sensitivity values
and turn the two bound intervals into a set for the ratio.
"""

import numpy as np

from ivovb import SensitivityConfig, ShortEstimates, bias_bound_gamma, bias_bound_lambda, theta_bounds
from ivovb.identify import phi_arrays
from ivovb.simdgp import oracle_config, oracle_truth, random_spec

# a LATE design with two observed covariates and a binary confounder
spec = random_spec("late", seed=1, x_levels=(2, 3), a_levels=2)
truth = oracle_truth(spec)
print(f"long:  lambda={truth.lambda_:.4f}  gamma={truth.gamma:.4f}  theta={truth.theta:.4f}")
print(f"short: lambda={truth.lambda_s:.4f}  gamma={truth.gamma_s:.4f}  theta={truth.theta_s:.4f}")

# unit-free strengths of A and the correlation of the gaps
print(f"C_alpha={truth.C_alpha:.3f}  C_Y={truth.C_Y:.3f}  C_D={truth.C_D:.3f}  "
      f"rho_Y={truth.rho_Y:+.3f}  rho_D={truth.rho_D:+.3f}")

# treat the population short values as if they were estimates
est = ShortEstimates(truth.lambda_s, truth.gamma_s, truth.v_s2, truth.sigma_Ys2,
                     truth.sigma_Ds2, np.eye(5), n=1)
cfg = oracle_config(truth)
lam = bias_bound_lambda(est, cfg)
gam = bias_bound_gamma(est, cfg)
print(f"lambda in [{lam[0]:.4f}, {lam[1]:.4f}], gamma in [{gam[0]:.4f}, {gam[1]:.4f}]")

# the ratio set: every t where lambda - gamma t can be zero
bs = theta_bounds(*lam, *gam)
print("theta set:", bs.theta_set, "| case:", bs.case)
print("true theta inside:", bs.theta_set.lo <= truth.theta <= bs.theta_set.hi)

# the same set read off the sign of the bounds on lambda - gamma t
pad = 0.25 * (bs.theta_set.hi - bs.theta_set.lo)
t = np.linspace(bs.theta_set.lo - pad, bs.theta_set.hi + pad, 9)
lo, hi = phi_arrays(*lam, *gam, t)
for ti, a, b in zip(t, lo, hi):
    print(f"  t={ti:+.3f}  phi in [{a:+.4f}, {b:+.4f}]  {'keep' if a <= 0 <= b else ''}")

# a much stronger confounder: both intervals reach zero and nothing is ruled out
weak = SensitivityConfig(c_alpha=1.0, c_y=cfg.c_y, c_d=10.0)
print("stronger confounder:", theta_bounds(*bias_bound_lambda(est, weak),
                                                          *bias_bound_gamma(est, weak)).theta_set)
