"""Command-line front end.

Every subcommand writes machine-readable JSON, a plain-text report and a
``manifest.json`` (config hash, seed, package versions) into ``--out``.

Exit codes: 0 ok, 2 input error, 3 first-stage failure, 4 solver failure.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .crossfit import repeated_crossfit
from .identify import theta_bounds
from .inference import (
    ci_report,
    contour_grid,
    invert_theta_ci,
    phi_curve,
    robustness_threshold,
    write_grid_csv,
)
from .learners import LearnerSpec
from .model import (
    Estimand,
    SensitivityConfig,
    ShortEstimates,
    ValidationError,
    read_csv,
    read_groups,
)
from .sensitivity import benchmark_calibrate, bias_bound_gamma, bias_bound_lambda, max_over_groups
from .stoye import StoyeSolverError

EXIT_OK, EXIT_INPUT, EXIT_FIRST_STAGE, EXIT_SOLVER = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    estimand: str = "late"
    data: Optional[str] = None
    estimate: Optional[str] = None
    groups: Optional[str] = None
    learner: LearnerSpec = field(default_factory=LearnerSpec)
    K: int = 5
    L: int = 5
    seed: int = 0
    tau: float = 0.025
    stoye_tau: Optional[float] = None
    sensitivity: SensitivityConfig = field(default_factory=SensitivityConfig)
    k_alpha: float = 1.0
    k_y: float = 1.0
    k_d: float = 1.0
    t_min: Optional[float] = None
    t_max: Optional[float] = None
    t_points: int = 201
    zeta_max: float = 1.0
    zeta_points: int = 101
    out: str = "out"
    workers: int = 1
    design: str = "random"
    design_seed: int = 0
    n: int = 2000
    reps: int = 500
    strength: float = 1.0

    def validate(self, need_data: bool = True):
        Estimand.parse(self.estimand)
        if self.K < 2:
            raise ConfigError(f"k-folds must be >= 2, got {self.K}")
        if self.L < 1:
            raise ConfigError(f"replications must be >= 1, got {self.L}")
        if not 0.0 < self.tau <= 0.5:
            raise ConfigError(f"tau must lie in (0, 0.5], got {self.tau}")
        if self.stoye_tau is not None and not 0.0 < self.stoye_tau <= 0.5:
            raise ConfigError(f"stoye_tau must lie in (0, 0.5], got {self.stoye_tau}")
        if (self.t_min is None) != (self.t_max is None):
            raise ConfigError("set both t_min and t_max or neither")
        if self.t_min is not None and not self.t_min < self.t_max:
            raise ConfigError("t_min must be below t_max")
        if need_data and self.data is None and self.estimate is None:
            raise ConfigError("no input: pass --data (or --estimate where supported)")
        for label, path in (("data", self.data), ("estimate", self.estimate), ("groups", self.groups)):
            if path is not None and not Path(path).exists():
                raise ConfigError(f"{label} file not found: {path}")

    @property
    def t_range(self):
        return None if self.t_min is None else (self.t_min, self.t_max)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["learner"] = self.learner.to_dict()
        d["sensitivity"] = self.sensitivity.__dict__.copy()
        return d

    def digest(self) -> str:
        blob = json.dumps(_clean(self.to_dict()), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


_RUN_KEYS = {
    "estimand": str, "data": str, "estimate": str, "groups": str, "k_folds": int,
    "replications": int, "seed": int, "tau": float, "stoye_tau": float, "out": str,
    "workers": int,
}
_SENS_KEYS = ("c_alpha", "c_y", "c_d", "rho_y_abs", "rho_d_abs")
_GRID_KEYS = {"t_min": float, "t_max": float, "t_points": int, "zeta_max": float, "zeta_points": int}
_SIM_KEYS = {"design": str, "design_seed": int, "n": int, "reps": int, "strength": float}


def load_config(path: Optional[str]) -> RunConfig:
    """Read an INI file with sections run, learner, sensitivity, grids, simulate."""
    cfg = RunConfig()
    if path is None:
        return cfg
    if not Path(path).exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    parser.read(path)
    known = {"run", "learner", "sensitivity", "grids", "simulate"}
    extra = set(parser.sections()) - known
    if extra:
        raise ConfigError(f"unknown config section(s): {', '.join(sorted(extra))}")
    updates = {}
    try:
        if parser.has_section("run"):
            for key, val in parser.items("run"):
                if key not in _RUN_KEYS:
                    raise ConfigError(f"unknown key [run] {key}")
                name = {"k_folds": "K", "replications": "L"}.get(key, key)
                updates[name] = _RUN_KEYS[key](val)
        if parser.has_section("learner"):
            updates["learner"] = LearnerSpec.from_mapping(dict(parser.items("learner")))
        if parser.has_section("sensitivity"):
            sens = {}
            for key, val in parser.items("sensitivity"):
                if key in _SENS_KEYS:
                    sens[key] = float(val)
                elif key in ("k_alpha", "k_y", "k_d"):
                    updates[key] = float(val)
                elif key == "groups":
                    updates["groups"] = val
                else:
                    raise ConfigError(f"unknown key [sensitivity] {key}")
            updates["sensitivity"] = SensitivityConfig(**sens)
        for section, keys in (("grids", _GRID_KEYS), ("simulate", _SIM_KEYS)):
            if parser.has_section(section):
                for key, val in parser.items(section):
                    if key not in keys:
                        raise ConfigError(f"unknown key [{section}] {key}")
                    updates[key] = keys[key](val)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}") from exc
    return replace(cfg, **updates)


def _apply_flags(cfg: RunConfig, args) -> RunConfig:
    updates = {}
    flag_map = {
        "data": "data", "estimand": "estimand", "tau": "tau", "k_folds": "K",
        "seed": "seed", "out": "out", "workers": "workers", "estimate": "estimate",
        "groups": "groups", "stoye_tau": "stoye_tau", "n": "n", "design": "design",
    }
    for flag, name in flag_map.items():
        val = getattr(args, flag, None)
        if val is not None:
            updates[name] = val
    if getattr(args, "reps", None) is not None:
        updates["reps" if args.command == "simulate" else "L"] = args.reps
    sens = {}
    for key in _SENS_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            sens[key] = val
    if sens:
        base = cfg.sensitivity.__dict__.copy()
        base.update(sens)
        updates["sensitivity"] = SensitivityConfig(**base)
    if getattr(args, "learner", None) is not None:
        updates["learner"] = replace(cfg.learner, kind=args.learner)
    cfg = replace(cfg, **updates)
    if cfg.workers is None or cfg.workers < 1:
        cfg = replace(cfg, workers=1)
    return cfg


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------

def _clean(obj):
    """Make ``obj`` strict-JSON friendly (no NaN/inf, plain types)."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if hasattr(obj, "to_dict"):
        return _clean(obj.to_dict())
    return obj


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")


def _write_manifest(out: Path, cfg: RunConfig, command: str, files) -> None:
    import scipy
    import sklearn

    _write_json(out / "manifest.json", {
        "command": command,
        "config": cfg.to_dict(),
        "config_sha256": cfg.digest(),
        "seed": cfg.seed,
        "versions": {
            "ivovb": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "scikit-learn": sklearn.__version__,
        },
        "outputs": sorted(files),
    })


def _fmt(x) -> str:
    if x is None:
        return "n/a"
    x = float(x)
    if math.isnan(x):
        return "n/a"
    if math.isinf(x):
        return "+inf" if x > 0 else "-inf"
    return f"{x:,.4f}"


def _fmt_ci(ci) -> str:
    if ci is None:
        return "(empty)"
    return f"[{_fmt(ci[0])}, {_fmt(ci[1])}]"


# --------------------------------------------------------------------------
# pipeline pieces
# --------------------------------------------------------------------------

def _estimate(cfg: RunConfig):
    """Return ``(ShortEstimates, extra_dict, dataset_or_None)``."""
    if cfg.estimate is not None and cfg.data is None:
        payload = json.loads(Path(cfg.estimate).read_text())
        est = ShortEstimates.from_dict(payload.get("estimates", payload))
        return est, {"source": str(cfg.estimate)}, None
    data = read_csv(cfg.data)
    res = repeated_crossfit(data, cfg.estimand, cfg.learner, cfg.K, cfg.L, cfg.seed, cfg.workers)
    extra = {
        "fold_lambda": res.fold_lambda,
        "fold_gamma": res.fold_gamma,
        "theta_dml1": res.theta_dml1,
        "theta_undefined": res.theta_undefined,
        "replications": res.n_replications,
        "K": cfg.K,
    }
    return res.estimates, extra, data


def _sensitivity(cfg: RunConfig, data, report: dict) -> SensitivityConfig:
    """Direct config, or benchmark-calibrated maxima when groups are given."""
    if cfg.groups is None:
        return cfg.sensitivity
    if data is None:
        raise ConfigError("benchmark groups need --data")
    results = _benchmark_all(cfg, data)
    best = max_over_groups(results)
    report["benchmark"] = {"groups": [r.to_dict() for r in results], "max": best}
    s = cfg.sensitivity
    return SensitivityConfig(best["c_alpha"], best["c_y"], best["c_d"], s.rho_y_abs, s.rho_d_abs)


def _benchmark_all(cfg: RunConfig, data):
    from .crossfit import crossfit_estimate

    groups = read_groups(cfg.groups)
    full = crossfit_estimate(data, cfg.estimand, cfg.learner, cfg.K, cfg.seed)
    return [
        benchmark_calibrate(data, cfg.estimand, cols, cfg.k_alpha, cfg.k_y, cfg.k_d,
                            cfg.learner, cfg.K, cfg.seed, label=name, full=full)
        for name, cols in groups.items()
    ]


def _estimate_text(est: ShortEstimates, extra: dict) -> list:
    se = est.se
    lines = [f"estimand: {est.estimand.value}    n = {est.n}", "", "short-version estimates"]
    for name, val, s in zip(("lambda_s", "gamma_s", "v_s2", "sigma_Ys2", "sigma_Ds2"), est.vector, se):
        lines.append(f"  {name:<10} {_fmt(val):>18}   se {_fmt(s)}")
    lines.append(f"  {'theta_s':<10} {_fmt(est.theta_s):>18}   delta-method 95% CI {_fmt_ci(est.theta_ci(0.95))}")
    if "theta_dml1" in extra:
        lines.append(f"  {'theta DML1':<10} {_fmt(extra['theta_dml1']):>18}   (average of fold ratios)")
    return lines


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_estimate(cfg: RunConfig, out: Path) -> int:
    est, extra, _ = _estimate(cfg)
    _write_json(out / "estimate.json", {"estimates": est.to_dict(), "diagnostics": extra})
    lines = _estimate_text(est, extra)
    if extra.get("theta_undefined"):
        lines.append("  warning: |gamma_s| < 1e-12, theta_s undefined")
    (out / "estimate.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    _write_manifest(out, cfg, "estimate", ["estimate.json", "estimate.txt"])
    return EXIT_OK


def _bounds_lines(bs, est=None, sens=None) -> list:
    def point(name):
        return "" if est is None else f"   (point {_fmt(getattr(est, name))})"

    lines = []
    if sens is not None:
        lines.append(
            f"sensitivity: C_alpha={sens.c_alpha:.4g} C_Y={sens.c_y:.4g} C_D={sens.c_d:.4g} "
            f"|rho_Y|={sens.rho_y_abs:.4g} |rho_D|={sens.rho_d_abs:.4g}"
        )
    lines += [
        f"  lambda bounds  [{_fmt(bs.lambda_lo)}, {_fmt(bs.lambda_hi)}]" + point("lambda_s"),
        f"  gamma bounds   [{_fmt(bs.gamma_lo)}, {_fmt(bs.gamma_hi)}]" + point("gamma_s"),
        f"  case: {bs.case}",
    ]
    s = bs.theta_set
    if s is None:
        lines.append("  theta set: undefined (first-stage bound endpoint at zero)")
    elif s.kind == "interval":
        lines.append(f"  theta set: [{_fmt(s.lo)}, {_fmt(s.hi)}]" + point("theta_s"))
    elif s.kind == "union_of_rays":
        lines.append(f"  theta set: (-inf, {_fmt(s.left_hi)}] U [{_fmt(s.right_lo)}, +inf)")
    else:
        lines.append("  theta set: whole real line")
    if bs.first_stage_failure:
        lines.append("  FIRST-STAGE FAILURE: the first-stage bounds include or straddle zero; stop here.")
    return lines


def cmd_bounds(cfg: RunConfig, out: Path) -> int:
    est, extra, data = _estimate(cfg)
    report = {"estimates": est.to_dict()}
    sens = _sensitivity(cfg, data, report)
    lam = bias_bound_lambda(est, sens)
    gam = bias_bound_gamma(est, sens)
    bs = theta_bounds(*lam, *gam)
    report.update({"sensitivity": sens.__dict__, "bounds": bs.to_dict()})
    _write_json(out / "bounds.json", report)
    lines = _bounds_lines(bs, est, sens)
    (out / "bounds.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    _write_manifest(out, cfg, "bounds", ["bounds.json", "bounds.txt"])
    return EXIT_FIRST_STAGE if bs.first_stage_failure else EXIT_OK


def _stoye_row(label, r) -> str:
    if hasattr(r, "summary"):
        r = r.summary()
    return (f"  {label:<7} CI* {_fmt_ci(r.ci):<34} z_l* {r.z_l_star:.3f}  z_u* {r.z_u_star:.3f}  "
            f"Delta* {_fmt(r.delta_star)}  Min.Obj {_fmt(r.min_objective)}  rho {r.rho_hat:.4f}")


def cmd_ci(cfg: RunConfig, out: Path) -> int:
    est, extra, data = _estimate(cfg)
    report = {"estimates": est.to_dict()}
    sens = _sensitivity(cfg, data, report)
    bs = theta_bounds(*bias_bound_lambda(est, sens), *bias_bound_gamma(est, sens))
    try:
        rep = ci_report(est, sens, cfg.tau, cfg.stoye_tau, cfg.t_range, cfg.t_points)
    except StoyeSolverError as exc:
        _write_json(out / "ci_error.json", {"error": str(exc), "diagnostics": exc.diagnostics})
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    inv = invert_theta_ci(est, sens, cfg.tau, cfg.t_range)
    theta_stoye = rep.stoye["theta"]
    lo, hi = theta_stoye.ci.lo, theta_stoye.ci.hi
    if theta_stoye.ci.empty:
        lo, hi = est.theta_s - 1.0, est.theta_s + 1.0
    centre = 0.5 * (lo + hi) if math.isfinite(lo) and math.isfinite(hi) else (est.theta_s if math.isfinite(est.theta_s) else 0.0)
    span = (hi - lo) if math.isfinite(lo) and math.isfinite(hi) else 10.0 * max(1.0, abs(centre))
    t_grid = np.linspace(centre - span, centre + span, cfg.t_points)
    write_grid_csv(out / "phi_curve.csv", phi_curve(est, sens, cfg.tau, t_grid), "t")
    report.update({
        "sensitivity": sens.__dict__,
        "bounds": bs.to_dict(),
        "ci": rep.to_dict(),
        "theta0_ci_detail": inv.to_dict(),
    })
    _write_json(out / "ci.json", report)
    lvl = 1 - 2 * cfg.tau
    stoye_lvl = 1 - (cfg.stoye_tau if cfg.stoye_tau is not None else 2 * cfg.tau)
    conv = rep.conventional
    lines = _bounds_lines(bs, est, sens) + [
        "",
        f"bound confidence intervals (level {lvl:.3f}; conventional = zero sensitivity)",
        f"  lambda   OVB-adjusted {_fmt_ci(rep.lambda_ci):<34} conventional {_fmt_ci(conv['lambda'])}",
        f"  gamma    OVB-adjusted {_fmt_ci(rep.gamma_ci):<34} conventional {_fmt_ci(conv['gamma'])}",
        f"  theta0   OVB-adjusted {_fmt_ci(rep.theta0_ci):<34} conventional {_fmt_ci(conv['theta'])}",
        "",
        f"shrinkage confidence intervals (level {stoye_lvl:.3f}); theta row averages over t",
        _stoye_row("lambda", rep.stoye["lambda"]),
        _stoye_row("gamma", rep.stoye["gamma"]),
        _stoye_row("theta0", theta_stoye),
    ]
    (out / "ci.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    _write_manifest(out, cfg, "ci", ["ci.json", "ci.txt", "phi_curve.csv"])
    return EXIT_FIRST_STAGE if bs.first_stage_failure else EXIT_OK


def cmd_contour(cfg: RunConfig, out: Path) -> int:
    est, extra, _ = _estimate(cfg)
    zetas = np.linspace(0.0, cfg.zeta_max, cfg.zeta_points)
    files = []
    summary = {}
    lines = []
    for target, rho in (("lambda", cfg.sensitivity.rho_y_abs), ("gamma", cfg.sensitivity.rho_d_abs)):
        table = contour_grid(est, rho, cfg.tau, zetas, target)
        name = f"contour_{target}.csv"
        write_grid_csv(out / name, table, "zeta")
        files.append(name)
        thr = robustness_threshold(est, target, rho, cfg.tau)
        summary[target] = thr.to_dict()
        note = " (not significant at zero sensitivity)" if thr.not_significant else ""
        lines.append(f"{target}: robustness threshold C*C_alpha = {_fmt(thr.zeta_star)}{note}")
    _write_json(out / "contour.json", {"thresholds": summary, "zeta_grid": zetas})
    files.append("contour.json")
    (out / "contour.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    _write_manifest(out, cfg, "contour", files + ["contour.txt"])
    return EXIT_OK


def cmd_benchmark(cfg: RunConfig, out: Path) -> int:
    if cfg.groups is None:
        raise ConfigError("benchmark needs --groups (or [sensitivity] groups)")
    if cfg.data is None:
        raise ConfigError("benchmark needs --data")
    data = read_csv(cfg.data)
    results = _benchmark_all(cfg, data)
    best = max_over_groups(results)
    _write_json(out / "benchmark.json", {"groups": [r.to_dict() for r in results], "max": best})
    lines = [f"{'group':<16}{'C_alpha':>10}{'C_Y':>10}{'C_D':>10}{'G_alpha':>10}{'G_Y':>10}{'G_D':>10}"]
    for r in results:
        lines.append(f"{r.group:<16}{r.c_alpha:>10.4f}{r.c_y:>10.4f}{r.c_d:>10.4f}"
                     f"{r.g_alpha:>10.4f}{r.g_y:>10.4f}{r.g_d:>10.4f}")
    lines.append(f"{'max':<16}{best['c_alpha']:>10.4f}{best['c_y']:>10.4f}{best['c_d']:>10.4f}")
    (out / "benchmark.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    _write_manifest(out, cfg, "benchmark", ["benchmark.json", "benchmark.txt"])
    return EXIT_OK


def _design(cfg: RunConfig):
    from . import simdgp

    if cfg.design == "random":
        return simdgp.random_spec(cfg.estimand, cfg.design_seed, n=cfg.n, strength=cfg.strength)
    if cfg.design == "jtpa":
        return simdgp.jtpa_like_spec(cfg.estimand, n=cfg.n, seed=cfg.design_seed)
    if cfg.design == "homogeneous":
        return simdgp.homogeneous_spec(n=cfg.n, seed=cfg.design_seed)
    raise ConfigError(f"unknown design {cfg.design!r}; expected random, jtpa or homogeneous")


def cmd_simulate(cfg: RunConfig, out: Path) -> int:
    from .simdgp import simulate_coverage

    spec = _design(cfg)
    learner = cfg.learner
    if learner == LearnerSpec():
        learner = LearnerSpec(kind="saturated_cells")
    stoye_tau = cfg.stoye_tau if cfg.stoye_tau is not None else 2 * cfg.tau
    summ = simulate_coverage(spec, cfg.reps, cfg.tau, stoye_tau, learner, cfg.K, cfg.seed,
                             workers=cfg.workers)
    _write_json(out / "coverage.json", {"design": spec.to_dict(), "coverage": summ.to_dict()})
    lines = [f"replications: {summ.reps}   tau = {summ.tau}   n = {spec.n}"]
    for label, rate, nominal in (
        ("lambda in bound CI", summ.lambda_bound_ci, 1 - 2 * summ.tau),
        ("[lambda-, lambda+] in bound CI", summ.lambda_interval, 1 - 2 * summ.tau),
        ("lambda in shrinkage CI", summ.lambda_stoye, 1 - summ.stoye_tau),
        ("gamma in bound CI", summ.gamma_bound_ci, 1 - 2 * summ.tau),
        ("lambda_s in conventional CI", summ.conventional_lambda_s, 1 - 2 * summ.tau),
    ):
        lines.append(f"  {label:<32} {rate:.3f}  (nominal {nominal:.3f}, mc se {summ.se(rate):.3f})")
    (out / "coverage.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    _write_manifest(out, cfg, "simulate", ["coverage.json", "coverage.txt"])
    return EXIT_OK


def cmd_check_theorem1(args) -> int:
    bs = theta_bounds(args.lambda_lo, args.lambda_hi, args.gamma_lo, args.gamma_hi)
    lines = _bounds_lines(bs)
    print("\n".join(lines))
    if args.json:
        print(json.dumps(_clean(bs.to_dict()), sort_keys=True))
    return EXIT_FIRST_STAGE if bs.first_stage_failure else EXIT_OK


COMMANDS = {
    "estimate": cmd_estimate,
    "bounds": cmd_bounds,
    "ci": cmd_ci,
    "contour": cmd_contour,
    "benchmark": cmd_benchmark,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ivovb",
        description="Omitted-variable-bias bounds and confidence intervals for IV estimands.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--data", help="CSV with columns y, d, z and covariates")
    common.add_argument("--config", help="INI config (sections run, learner, sensitivity, grids, simulate)")
    common.add_argument("--estimand", choices=["late", "latt", "plivm"])
    common.add_argument("--tau", type=float, help="one-sided error of the bound intervals")
    common.add_argument("--stoye-tau", dest="stoye_tau", type=float,
                        help="error of the shrinkage intervals (default 2*tau)")
    common.add_argument("--k-folds", dest="k_folds", type=int)
    common.add_argument("--reps", type=int,
                        help="sample-split replications (simulate: Monte Carlo replications)")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--workers", type=int, help="parallel workers (default: all cores)")
    common.add_argument("--learner", choices=["random_forest", "ridge", "saturated_cells"])
    common.add_argument("--estimate", help="estimate.json from a previous run (bounds, ci, contour)")
    common.add_argument("--groups", help="benchmark group file, lines 'name: col1,col2'")
    for key, flag in (("c_alpha", "--c-alpha"), ("c_y", "--c-y"), ("c_d", "--c-d"),
                      ("rho_y_abs", "--rho-y"), ("rho_d_abs", "--rho-d")):
        common.add_argument(flag, dest=key, type=float)

    helps = {
        "estimate": "cross-fitted short-version estimates",
        "bounds": "bias bounds and the identification set of the ratio",
        "ci": "bound, inverted and shrinkage confidence intervals",
        "contour": "sensitivity contour grids and robustness thresholds",
        "benchmark": "calibrate sensitivity values against covariate groups",
        "simulate": "Monte Carlo coverage on a synthetic design",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, parents=[common], help=text)
        if name == "simulate":
            p.add_argument("--n", type=int, help="sample size per replication")
            p.add_argument("--design", choices=["random", "jtpa", "homogeneous"])

    p = sub.add_parser("check-theorem1", help="identification set from literal bound values")
    for arg in ("lambda_lo", "lambda_hi", "gamma_lo", "gamma_hi"):
        p.add_argument(arg, type=float)
    p.add_argument("--json", action="store_true", help="also print the set as JSON")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "check-theorem1":
            if not (args.lambda_lo <= args.lambda_hi and args.gamma_lo <= args.gamma_hi):
                raise ConfigError("bounds must satisfy lo <= hi")
            return cmd_check_theorem1(args)
        cfg = load_config(args.config)
        if args.workers is None and cfg.workers == 1 and not _workers_in_config(args.config):
            cfg = replace(cfg, workers=os.cpu_count() or 1)
        cfg = _apply_flags(cfg, args)
        cfg.validate(need_data=args.command != "simulate")
        if args.command in ("estimate", "benchmark", "simulate") and cfg.estimate is not None and cfg.data is None:
            if args.command != "simulate":
                raise ConfigError(f"{args.command} needs --data")
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out)
    except (ConfigError, ValidationError, KeyError, FileNotFoundError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INPUT
    except StoyeSolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def _workers_in_config(path) -> bool:
    if path is None:
        return False
    parser = configparser.ConfigParser()
    parser.read(path)
    return parser.has_option("run", "workers")


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
