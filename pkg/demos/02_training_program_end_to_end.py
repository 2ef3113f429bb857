"""
End-to-end run on a synthetic job-training experiment
=====================================================

Earnings-scale data with an offer of training (Z), take-up (D) and five
discrete covariates. An unobserved "motivation" index drives take-up and
earnings. The script estimates the short parameters, calibrates sensitivity
values against observed covariate groups and prints every interval family.
Set DEMO_OUT to also write the reports as JSON.
"""

import json
import os

from ivovb import (
    LearnerSpec,
    SensitivityConfig,
    benchmark_calibrate,
    bias_bound_gamma,
    bias_bound_lambda,
    ci_report,
    crossfit_estimate,
    max_over_groups,
    repeated_crossfit,
    robustness_threshold,
    theta_bounds,
)
from ivovb.simdgp import generate, jtpa_like_spec, oracle_truth

spec = jtpa_like_spec("late", n=5102, seed=0)
truth = oracle_truth(spec)
data = generate(spec).dataset
names = {"x1": "age group", "x2": "race", "x3": "married", "x4": "diploma", "x5": "prior work"}
print(f"n={data.n}, offered {data.z.mean():.2f}, took up {data.d.mean():.2f}")

# short-version estimates: forests, 5 folds, median over 2 splits
forest = LearnerSpec(trees=100, min_leaf=5, seed=7)
est = repeated_crossfit(data, "late", forest, K=5, L=2, seed=0).estimates
for key, val, se in zip(("lambda_s", "gamma_s", "v_s2", "sigma_Ys2", "sigma_Ds2"), est.vector, est.se):
    print(f"  {key:<10} {val:12.4f}  se {se:.4f}")
print(f"  theta_s    {est.theta_s:12.1f}  (population short value {truth.theta_s:.1f})")

# benchmarks: how much would A add if it were as strong as each group?
full = crossfit_estimate(data, "late", forest, K=5, seed=0)
bench = [benchmark_calibrate(data, "late", [col], spec=forest, K=5, seed=0, label=label, full=full)
         for col, label in names.items() if col in ("x1", "x2", "x5")]
for b in bench:
    print(f"  {b.group:<11} G=({b.g_alpha:.3f}, {b.g_y:.3f}, {b.g_d:.3f})  "
          f"C=({b.c_alpha:.3f}, {b.c_y:.3f}, {b.c_d:.3f})")
best = max_over_groups(bench)
# earnings are noisy enough that the observed groups add almost nothing for Y
# and D; keep the benchmarked C_alpha and posit a modest floor for the others
cfg = SensitivityConfig(best["c_alpha"], max(best["c_y"], 0.1), max(best["c_d"], 0.1))
print(f"scenario: C_alpha={cfg.c_alpha:.3f}  C_Y={cfg.c_y:.3f}  C_D={cfg.c_d:.3f}")

# bounds and the ratio set at the benchmarked strength
lam, gam = bias_bound_lambda(est, cfg), bias_bound_gamma(est, cfg)
bs = theta_bounds(*lam, *gam)
print(f"lambda in [{lam[0]:.1f}, {lam[1]:.1f}]  gamma in [{gam[0]:.4f}, {gam[1]:.4f}]")
print("theta set:", bs.theta_set)

# confidence intervals: bound CIs, the inverted ratio CI and the shrinkage family
rep = ci_report(est, cfg, tau=0.025, stoye_resolution=101)
print("lambda CI", rep.lambda_ci, "\ngamma CI", rep.gamma_ci, "\ntheta CI", rep.theta0_ci)
print("conventional theta CI", rep.conventional["theta"])
for key, r in rep.stoye.items():
    s = r.summary() if hasattr(r, "summary") else r
    print(f"  shrinkage {key:<6} ci={s.ci} z_l={s.z_l_star:.3f} z_u={s.z_u_star:.3f} "
          f"delta*={s.delta_star:.4g} min_obj={s.min_objective:.4g} rho={s.rho_hat:.3f}")

# how strong must A be before the lambda and gamma intervals reach zero?
for target in ("lambda", "gamma"):
    r = robustness_threshold(est, target)
    print(f"  robustness {target}: zeta* = {r.zeta_star:.4f}")

out = os.environ.get("DEMO_OUT")
if out:
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "report.json"), "w") as fh:
        json.dump({"estimates": est.to_dict(), "benchmarks": [b.to_dict() for b in bench],
                   "bounds": bs.to_dict(), "ci": rep.to_dict()}, fh, indent=2, default=str)
