"""Bias bounds for the reduced form and first stage, and benchmarking.

The bound on the reduced form is ``lambda_s +/- |rho_Y| C_Y C_alpha S_Y`` with
``S_Y = sqrt(sigma_Ys2 * v_s2)``; the first stage is analogous with ``C_D``.
Benchmarking turns the explanatory power of an observed covariate group
into implied values of ``C_alpha``, ``C_Y`` and ``C_D``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

from .learners import LearnerSpec
from .model import Dataset, SensitivityConfig, ShortEstimates

__all__ = [
    "bias_bound_lambda",
    "bias_bound_gamma",
    "c_alpha_from_r2",
    "BenchmarkResult",
    "benchmark_from_estimates",
    "benchmark_calibrate",
    "max_over_groups",
]


def bias_bound_lambda(est: ShortEstimates, cfg: SensitivityConfig) -> tuple:
    """``(lambda_lo, lambda_hi)`` for the long-version reduced form.

    Examples
    --------
    >>> import numpy as np
    >>> est = ShortEstimates(1.0, 0.5, 1.0, 4.0, 1.0, np.eye(5), 100)
    >>> bias_bound_lambda(est, SensitivityConfig(c_alpha=0.5, c_y=0.5))
    (0.5, 1.5)
    """
    half = cfg.zeta_y * est.S_Y
    return (est.lambda_s - half, est.lambda_s + half)


def bias_bound_gamma(est: ShortEstimates, cfg: SensitivityConfig) -> tuple:
    """``(gamma_lo, gamma_hi)`` for the long-version first stage."""
    half = cfg.zeta_d * est.S_D
    return (est.gamma_s - half, est.gamma_s + half)


def c_alpha_from_r2(r2: float) -> float:
    """``C_alpha`` implied by the share of the weight's variance explained
    by observables, ``sqrt((1 - r2) / r2)``."""
    if not 0.0 < r2 <= 1.0:
        raise ValueError(f"r2 must lie in (0, 1], got {r2}")
    return math.sqrt((1.0 - r2) / r2)


@dataclass(frozen=True)
class BenchmarkResult:
    """Sensitivity values implied by one observed covariate group."""

    group: str
    g_alpha: float
    g_y: float
    g_d: float
    c_alpha: float
    c_y: float
    c_d: float
    r2_alpha_drop: float
    r2_y_drop: float
    r2_d_drop: float
    k_alpha: float = 1.0
    k_y: float = 1.0
    k_d: float = 1.0

    def config(self, rho_y_abs: float = 1.0, rho_d_abs: float = 1.0) -> SensitivityConfig:
        return SensitivityConfig(self.c_alpha, self.c_y, self.c_d, rho_y_abs, rho_d_abs)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _g_from_ratio(r2: float, label: str, group: str) -> float:
    if not r2 > 0:
        raise ValueError(f"group {group!r}: nonpositive R^2 ratio for {label}: {r2}")
    g = (1.0 - r2) / r2
    if g < 0:
        warnings.warn(
            f"group {group!r}: estimated G for {label} is negative ({g:.3g}); "
            "sampling noise, floored at 0",
            RuntimeWarning,
            stacklevel=3,
        )
        g = 0.0
    return g


def benchmark_from_estimates(
    full: ShortEstimates,
    reduced: ShortEstimates,
    k_alpha: float = 1.0,
    k_y: float = 1.0,
    k_d: float = 1.0,
    group: str = "",
) -> BenchmarkResult:
    """Benchmark values from a full fit and a fit with the group removed.

    The weight ratio is ``v_s2(reduced) / v_s2(full)``; for PLIVM this is the
    ratio of instrument-residual MSEs, full over reduced. The regression
    ratios are residual MSEs, full over reduced.
    """
    for name, k in (("k_alpha", k_alpha), ("k_y", k_y), ("k_d", k_d)):
        if not (math.isfinite(k) and k >= 0):
            raise ValueError(f"{name} must be finite and >= 0, got {k}")
    r2_a = _ratio(reduced.v_s2, full.v_s2)
    r2_y = _ratio(full.sigma_Ys2, reduced.sigma_Ys2)
    r2_d = _ratio(full.sigma_Ds2, reduced.sigma_Ds2)
    g_a = _g_from_ratio(r2_a, "the weight", group)
    g_y = _g_from_ratio(r2_y, "the outcome", group)
    g_d = _g_from_ratio(r2_d, "the treatment", group)
    kg = k_alpha * g_a
    if kg >= 1.0:
        raise ValueError(
            f"group {group!r}: k_alpha * G_alpha = {kg:.6g} >= 1, C_alpha undefined"
        )
    return BenchmarkResult(
        group=group,
        g_alpha=g_a, g_y=g_y, g_d=g_d,
        c_alpha=math.sqrt(kg / (1.0 - kg)),
        c_y=math.sqrt(k_y * g_y),
        c_d=math.sqrt(k_d * g_d),
        r2_alpha_drop=r2_a, r2_y_drop=r2_y, r2_d_drop=r2_d,
        k_alpha=k_alpha, k_y=k_y, k_d=k_d,
    )


def _ratio(num: float, den: float) -> float:
    if den == 0:
        # a perfect fit in both models carries no information; treat as no gain
        return 1.0 if num == 0 else math.inf
    return num / den


def benchmark_calibrate(
    dataset: Dataset,
    estimand,
    group: Sequence[str],
    k_alpha: float = 1.0,
    k_y: float = 1.0,
    k_d: float = 1.0,
    spec: LearnerSpec = LearnerSpec(),
    K: int = 5,
    seed: int = 0,
    label: Optional[str] = None,
    full=None,
) -> BenchmarkResult:
    """Calibrate sensitivity values against an observed covariate group.

    Parameters
    ----------
    dataset : Dataset
    estimand : str or Estimand
    group : sequence of str
        Covariate columns treated as a stand-in for the omitted variable.
    k_alpha, k_y, k_d : float
        Assumed strength of the omitted variable relative to the group.
    spec, K, seed
        Cross-fitting settings; both fits share one fold split.
    label : str, optional
        Group name used in messages and in the result.
    full : CrossfitResult, optional
        Precomputed full fit (must have used the same ``K`` and ``seed``).

    Returns
    -------
    BenchmarkResult
    """
    from .crossfit import assign_folds, crossfit_estimate

    group = list(group)
    if not group:
        raise ValueError("benchmark group is empty")
    label = label or ",".join(group)
    reduced_data = dataset.drop(group)
    plan = full.plan if full is not None else assign_folds(dataset.n, K, seed)
    if full is None:
        full = crossfit_estimate(dataset, estimand, spec, K, seed, plan=plan)
    reduced = crossfit_estimate(reduced_data, estimand, spec, K, seed, plan=plan)
    return benchmark_from_estimates(
        full.estimates, reduced.estimates, k_alpha, k_y, k_d, group=label
    )


def max_over_groups(results: Sequence[BenchmarkResult]) -> dict:
    """Largest implied ``C`` values across benchmark groups.

    Returns a mapping with ``c_alpha``, ``c_y``, ``c_d`` and the name of the
    group attaining each maximum.
    """
    results = list(results)
    if not results:
        raise ValueError("no benchmark results")
    out = {}
    for key in ("c_alpha", "c_y", "c_d"):
        best = max(results, key=lambda r: getattr(r, key))
        out[key] = getattr(best, key)
        out[key + "_group"] = best.group
    return out
