"""Inference for the bias-adjusted bounds.

Standard errors of the bound estimators come from linear combinations of
the five estimated parameters' covariance; the ratio parameter is handled
by inverting the bound tests for ``lambda - gamma t``. On each side of
``t = 0`` the bound functions and their variances are polynomial in ``t``
(degree one and two), so test inversion reduces to quadratic roots.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import ndtri

from .identify import phi_arrays, theta_bounds
from .model import CIReport, Interval, SensitivityConfig, ShortEstimates, StoyeResult
from .sensitivity import bias_bound_gamma, bias_bound_lambda
from .stoye import StoyeSolverError, stoye_ci, stoye_constraint_prob

__all__ = [
    "normal_quantile",
    "BoundStats",
    "InversionResult",
    "RobustnessResult",
    "bound_coef_vectors",
    "bound_pair_stats",
    "one_sided_ci",
    "conventional_cis",
    "invert_theta_ci",
    "default_t_range",
    "robustness_threshold",
    "contour_grid",
    "phi_curve",
    "write_grid_csv",
    "stoye_ci",
    "stoye_constraint_prob",
    "stoye_theta_ci",
    "StoyeSolverError",
    "ci_report",
    "GRID_COLUMNS",
]

GRID_COLUMNS = ("lower", "upper", "se_lower", "se_upper")


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    return float(ndtri(p))


# --------------------------------------------------------------------------
# coefficient vectors and bound standard errors
# --------------------------------------------------------------------------

def _scale_loadings(est: ShortEstimates, zeta_y: float, zeta_d: float):
    """Loadings of ``zeta_y S_Y`` and ``zeta_d S_D`` on (v2, sY2, sD2)."""
    v = math.sqrt(est.v_s2)
    sy = math.sqrt(est.sigma_Ys2)
    sd = math.sqrt(est.sigma_Ds2)
    if zeta_y > 0 and (v == 0 or sy == 0):
        raise ValueError("zero variance estimate with a nonzero outcome sensitivity")
    if zeta_d > 0 and (v == 0 or sd == 0):
        raise ValueError("zero variance estimate with a nonzero treatment sensitivity")
    y = np.zeros(3)
    d = np.zeros(3)
    if zeta_y > 0:
        y = zeta_y * np.array([sy / (2 * v), v / (2 * sy), 0.0])
    if zeta_d > 0:
        d = zeta_d * np.array([sd / (2 * v), 0.0, v / (2 * sd)])
    return y, d


def bound_coef_vectors(est: ShortEstimates, cfg: SensitivityConfig, t: float):
    """Loadings of the upper and lower bounds on ``lambda - gamma t``.

    Returns ``(c_plus, c_minus)``: 5-vectors such that the influence function
    of each bound is the dot product with the stacked moment functions.
    """
    y, d = _scale_loadings(est, cfg.zeta_y, cfg.zeta_d)
    tail = y + abs(t) * d
    head = np.array([1.0, -float(t)])
    return np.concatenate([head, tail]), np.concatenate([head, -tail])


def _target_vectors(est, cfg, target: str, t: Optional[float]):
    if target == "lambda":
        y, _ = _scale_loadings(est, cfg.zeta_y, 0.0)
        head = np.array([1.0, 0.0])
        lo_pt, hi_pt = bias_bound_lambda(est, cfg)
        return np.concatenate([head, y]), np.concatenate([head, -y]), lo_pt, hi_pt
    if target == "gamma":
        _, d = _scale_loadings(est, 0.0, cfg.zeta_d)
        head = np.array([0.0, 1.0])
        lo_pt, hi_pt = bias_bound_gamma(est, cfg)
        return np.concatenate([head, d]), np.concatenate([head, -d]), lo_pt, hi_pt
    if target == "phi":
        if t is None:
            raise ValueError("target 'phi' needs t")
        c_plus, c_minus = bound_coef_vectors(est, cfg, t)
        lam = bias_bound_lambda(est, cfg)
        gam = bias_bound_gamma(est, cfg)
        lo_pt, hi_pt = phi_arrays(*lam, *gam, t)
        return c_plus, c_minus, float(lo_pt), float(hi_pt)
    raise ValueError(f"unknown target {target!r}; expected lambda, gamma or phi")


@dataclass(frozen=True)
class BoundStats:
    """Point estimates and standard errors of a pair of bounds."""

    point_lo: float
    point_hi: float
    se_lo: float
    se_hi: float
    rho_hat: float
    degenerate: bool = False


def bound_pair_stats(
    est: ShortEstimates, cfg: SensitivityConfig, target: str = "lambda", t: Optional[float] = None
) -> BoundStats:
    """Standard errors of the lower/upper bound and their correlation.

    ``target`` is ``"lambda"``, ``"gamma"`` or ``"phi"`` (with ``t``).
    A zero variance makes the correlation undefined; it is then reported as
    1 with ``degenerate=True``.
    """
    c_plus, c_minus, lo_pt, hi_pt = _target_vectors(est, cfg, target, t)
    om = est.omega
    var_hi = max(float(c_plus @ om @ c_plus), 0.0) / est.n
    var_lo = max(float(c_minus @ om @ c_minus), 0.0) / est.n
    cov = float(c_plus @ om @ c_minus) / est.n
    if var_hi == 0.0 or var_lo == 0.0:
        return BoundStats(lo_pt, hi_pt, math.sqrt(var_lo), math.sqrt(var_hi), 1.0, True)
    rho = min(1.0, max(-1.0, cov / math.sqrt(var_hi * var_lo)))
    return BoundStats(lo_pt, hi_pt, math.sqrt(var_lo), math.sqrt(var_hi), rho)


def one_sided_ci(point_lo, point_hi, se_lo, se_hi, tau: float) -> tuple:
    """``[lo - q se_lo, hi + q se_hi]`` with ``q = Phi^-1(1 - tau)``.

    Examples
    --------
    >>> lo, hi = one_sided_ci(0.0, 0.0, 1.0, 1.0, 0.025)
    >>> round(hi, 6)
    1.959964
    """
    _check_tau(tau)
    if se_lo < 0 or se_hi < 0:
        raise ValueError("standard errors must be nonnegative")
    q = normal_quantile(1.0 - tau)
    return (point_lo - q * se_lo, point_hi + q * se_hi)


def _check_tau(tau):
    if not 0.0 < tau <= 0.5:
        raise ValueError(f"tau must lie in (0, 0.5], got {tau}")


# --------------------------------------------------------------------------
# test inversion for the ratio
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class InversionResult:
    """Confidence set summary ``[lo, hi]`` for the ratio.

    Infinite endpoints mark sides on which the set never closes; ``empty``
    marks an empty set (``lo``/``hi`` are then NaN).
    """

    lo: float
    hi: float
    empty: bool = False

    @property
    def lower_unbounded(self) -> bool:
        return self.lo == -math.inf

    @property
    def upper_unbounded(self) -> bool:
        return self.hi == math.inf

    def as_tuple(self) -> Optional[tuple]:
        return None if self.empty else (self.lo, self.hi)

    def to_dict(self) -> dict:
        return {
            "lo": None if self.empty else _jsonable(self.lo),
            "hi": None if self.empty else _jsonable(self.hi),
            "empty": self.empty,
            "lower_unbounded": self.lower_unbounded,
            "upper_unbounded": self.upper_unbounded,
        }


def _jsonable(x: float):
    if math.isfinite(x):
        return x
    return "inf" if x > 0 else "-inf"


class _Segments:
    """Piecewise-polynomial form of the two test functions.

    On the side ``sign`` (+1 for ``t >= 0``, -1 for ``t < 0``) the upper bound
    is ``p0 + p1 t`` with variance ``(a + b t)' Omega (a + b t) / n``.
    """

    def __init__(self, est: ShortEstimates, cfg: SensitivityConfig, tau: float):
        self.q = normal_quantile(1.0 - tau)
        self.est = est
        y, d = _scale_loadings(est, cfg.zeta_y, cfg.zeta_d)
        self.y, self.d = y, d
        self.by = cfg.zeta_y * est.S_Y
        self.bd = cfg.zeta_d * est.S_D

    def pieces(self, sign: int, upper: bool):
        s = 1.0 if upper else -1.0
        p0 = self.est.lambda_s + s * self.by
        p1 = -self.est.gamma_s + s * sign * self.bd
        a = np.concatenate([[1.0, 0.0], s * self.y])
        b = np.concatenate([[0.0, -1.0], s * sign * self.d])
        om = self.est.omega / self.est.n
        return p0, p1, float(a @ om @ a), float(a @ om @ b), float(b @ om @ b)

    def values(self, t):
        """``(lower, upper)`` test statistics at ``t`` (vectorised)."""
        t = np.asarray(t, dtype=float)
        out = []
        for upper in (False, True):
            res = np.empty_like(t)
            for sign in (1, -1):
                mask = (t >= 0) if sign == 1 else (t < 0)
                p0, p1, A, B, C = self.pieces(sign, upper)
                tt = t[mask]
                var = np.clip(A + 2 * B * tt + C * tt * tt, 0.0, None)
                centre = p0 + p1 * tt
                res[mask] = centre + (self.q if upper else -self.q) * np.sqrt(var)
            out.append(res)
        return out[0], out[1]

    def member(self, t):
        lo, hi = self.values(t)
        return (lo <= 0) & (hi >= 0)

    def roots(self):
        pts = []
        q2 = self.q * self.q
        for upper in (False, True):
            for sign in (1, -1):
                p0, p1, A, B, C = self.pieces(sign, upper)
                for r in _quadratic_roots(p1 * p1 - q2 * C, 2 * (p0 * p1 - q2 * B), p0 * p0 - q2 * A):
                    if (r >= 0) == (sign == 1):
                        pts.append(r)
        return pts


def _quadratic_roots(a: float, b: float, c: float) -> list:
    """Real roots of ``a x^2 + b x + c`` (numerically stable form)."""
    scale = max(abs(a), abs(b), abs(c))
    if scale == 0.0:
        return []
    if abs(a) <= 1e-14 * scale:
        return [] if b == 0 else [-c / b]
    disc = b * b - 4 * a * c
    if disc < 0:
        if disc > -1e-14 * b * b:
            return [-b / (2 * a)]
        return []
    sq = math.sqrt(disc)
    qq = -0.5 * (b + math.copysign(sq, b))
    roots = [qq / a]
    if qq != 0:
        roots.append(c / qq)
    return roots


def _set_hull(member: Callable, breakpoints: Sequence[float], lo_lim=-math.inf, hi_lim=math.inf):
    """Hull of ``{t in [lo_lim, hi_lim]: member(t)}`` given that membership
    is constant between consecutive breakpoints."""
    pts = sorted({float(p) for p in breakpoints if lo_lim <= p <= hi_lim and math.isfinite(p)})
    edges = [lo_lim] + pts + [hi_lim]
    mids = []
    for a, b in zip(edges[:-1], edges[1:]):
        if a == b:
            continue
        if math.isinf(a) and math.isinf(b):
            mids.append((a, b, 0.0))
        elif math.isinf(a):
            mids.append((a, b, b - max(1.0, abs(b))))
        elif math.isinf(b):
            mids.append((a, b, a + max(1.0, abs(a))))
        else:
            mids.append((a, b, 0.5 * (a + b)))
    inside = [(a, b) for a, b, m in mids if member(np.array([m]))[0]]
    if inside:
        lo = min(a for a, _ in inside)
        hi = max(b for _, b in inside)
        # endpoints are only formally infinite when the side was never closed
        lo = -math.inf if lo == lo_lim and math.isinf(lo_lim) else lo
        hi = math.inf if hi == hi_lim and math.isinf(hi_lim) else hi
        return InversionResult(lo, hi)
    isolated = [p for p in pts if member(np.array([p]))[0]]
    if isolated:
        return InversionResult(min(isolated), max(isolated))
    return InversionResult(math.nan, math.nan, empty=True)


def default_t_range(est: ShortEstimates, cfg: SensitivityConfig, tau: float = 0.025) -> tuple:
    """``theta_s +/- 20 * width`` where width covers the point estimate,
    the identification set half-width and the delta-method half-width."""
    theta = est.theta_s
    centre = theta if math.isfinite(theta) else 0.0
    widths = [abs(centre), 1.0]
    lam = bias_bound_lambda(est, cfg)
    gam = bias_bound_gamma(est, cfg)
    bs = theta_bounds(*lam, *gam)
    if isinstance(bs.theta_set, Interval):
        widths.append(0.5 * (bs.theta_set.hi - bs.theta_set.lo))
    if math.isfinite(theta):
        lo, hi = est.theta_ci(1.0 - 2.0 * tau)
        if math.isfinite(lo) and math.isfinite(hi):
            widths.append(0.5 * (hi - lo))
    w = 20.0 * max(widths)
    return (centre - w, centre + w)


def invert_theta_ci(
    est: ShortEstimates,
    cfg: SensitivityConfig,
    tau: float = 0.025,
    t_range: Optional[tuple] = None,
    resolution: int = 2001,
    method: str = "exact",
) -> InversionResult:
    """Confidence set for the ratio by inverting the bound tests.

    ``t`` is kept when the upper bound's ``1 - tau`` upper confidence limit
    is nonnegative and the lower bound's lower limit is nonpositive.

    Parameters
    ----------
    est, cfg
        Estimates and sensitivity values.
    tau : float
        One-sided error; the set has asymptotic level ``1 - 2 tau`` at zero
        sensitivity.
    t_range : (float, float), optional
        Restrict the search. ``None`` searches the whole line with
        ``method="exact"`` and :func:`default_t_range` with ``"grid"``.
    resolution : int
        Grid points per side of zero for ``method="grid"``.
    method : {"exact", "grid"}
        ``"exact"`` solves the per-segment quadratics; ``"grid"`` scans and
        refines each endpoint by bisection.

    Returns
    -------
    InversionResult
        Infinite endpoints flag a side that never closes (within ``t_range``
        if given).
    """
    _check_tau(tau)
    seg = _Segments(est, cfg, tau)
    if method == "exact":
        lo_lim, hi_lim = t_range if t_range is not None else (-math.inf, math.inf)
        res = _set_hull(seg.member, seg.roots() + [0.0], lo_lim, hi_lim)
        if t_range is not None and not res.empty:
            res = InversionResult(
                -math.inf if res.lo <= lo_lim else res.lo,
                math.inf if res.hi >= hi_lim else res.hi,
            )
        return res
    if method != "grid":
        raise ValueError(f"unknown method {method!r}")
    if t_range is None:
        t_range = default_t_range(est, cfg, tau)
    return grid_hull(seg.member, t_range, resolution)


def grid_hull(member: Callable, t_range: tuple, resolution: int, rtol: float = 1e-12) -> InversionResult:
    """Hull of a membership set found by grid scan and bisection.

    The scan treats ``t < 0`` and ``t >= 0`` as separate segments so that
    the kink at zero is always a grid point.
    """
    t_lo, t_hi = map(float, t_range)
    if not (math.isfinite(t_lo) and math.isfinite(t_hi) and t_hi > t_lo):
        raise ValueError("t_range must be finite with positive width")
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    parts = []
    if t_lo < 0:
        parts.append(np.linspace(t_lo, min(0.0, t_hi), resolution))
    if t_hi >= 0:
        parts.append(np.linspace(max(0.0, t_lo), t_hi, resolution))
    grid = np.unique(np.concatenate(parts))
    inside = np.asarray(member(grid), dtype=bool)
    if not inside.any():
        return InversionResult(math.nan, math.nan, empty=True)
    first = int(np.argmax(inside))
    last = len(grid) - 1 - int(np.argmax(inside[::-1]))

    def refine(good, bad):
        while abs(good - bad) > rtol * max(1.0, abs(good), abs(bad)):
            mid = 0.5 * (good + bad)
            if mid in (good, bad):
                break
            if member(np.array([mid]))[0]:
                good = mid
            else:
                bad = mid
        return good

    lo = -math.inf if first == 0 else refine(grid[first], grid[first - 1])
    hi = math.inf if last == len(grid) - 1 else refine(grid[last], grid[last + 1])
    return InversionResult(float(lo), float(hi))


# --------------------------------------------------------------------------
# conventional intervals
# --------------------------------------------------------------------------

def conventional_cis(est: ShortEstimates, tau: float = 0.025) -> dict:
    """Zero-sensitivity two-sided ``1 - 2 tau`` intervals.

    ``theta`` is the inverted test of ``lambda_s - gamma_s t`` (may be
    unbounded); ``theta_delta`` is the delta-method interval.
    """
    _check_tau(tau)
    zero = SensitivityConfig()
    out = {}
    for target in ("lambda", "gamma"):
        st = bound_pair_stats(est, zero, target)
        out[target] = one_sided_ci(st.point_lo, st.point_hi, st.se_lo, st.se_hi, tau)
    inv = invert_theta_ci(est, zero, tau)
    out["theta"] = (math.nan, math.nan) if inv.empty else (inv.lo, inv.hi)
    out["theta_delta"] = est.theta_ci(1.0 - 2.0 * tau)
    return out


# --------------------------------------------------------------------------
# robustness thresholds and grids
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RobustnessResult:
    """Smallest sensitivity product that makes the bound CI reach zero.

    ``zeta_star`` is 0 with ``not_significant=True`` when the interval
    already covers zero without any omitted variable, and ``inf`` when no
    finite value does.
    """

    target: str
    zeta_star: float
    not_significant: bool
    endpoint_at_zero: float

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "zeta_star": _jsonable(self.zeta_star),
            "not_significant": self.not_significant,
            "endpoint_at_zero": self.endpoint_at_zero,
        }


def _cfg_for(target: str, zeta: float, rho_abs: float) -> SensitivityConfig:
    if target == "lambda":
        return SensitivityConfig(c_alpha=1.0, c_y=zeta, rho_y_abs=rho_abs)
    if target == "gamma":
        return SensitivityConfig(c_alpha=1.0, c_d=zeta, rho_d_abs=rho_abs)
    raise ValueError(f"target must be 'lambda' or 'gamma', got {target!r}")


def robustness_threshold(
    est: ShortEstimates, target: str = "lambda", rho_abs: float = 1.0, tau: float = 0.025
) -> RobustnessResult:
    """Smallest ``zeta = C C_alpha`` for which the one-sided CI reaches zero.

    For a positive estimate the lower endpoint of the lower bound's CI is
    tracked; for a negative one the upper endpoint of the upper bound's CI.
    """
    _check_tau(tau)
    point = est.lambda_s if target == "lambda" else est.gamma_s
    if target not in ("lambda", "gamma"):
        raise ValueError(f"target must be 'lambda' or 'gamma', got {target!r}")
    if point == 0:
        return RobustnessResult(target, 0.0, True, 0.0)
    sign = 1.0 if point > 0 else -1.0

    def endpoint(zeta):
        st = bound_pair_stats(est, _cfg_for(target, zeta, rho_abs), target)
        lo, hi = one_sided_ci(st.point_lo, st.point_hi, st.se_lo, st.se_hi, tau)
        return lo if sign > 0 else hi

    def f(zeta):
        return sign * endpoint(zeta)

    e0 = endpoint(0.0)
    if sign * e0 <= 0 or rho_abs == 0:
        return RobustnessResult(target, 0.0 if sign * e0 <= 0 else math.inf, sign * e0 <= 0, e0)
    a, b = 0.0, 1e-3
    while f(b) > 0:
        a, b = b, 2 * b
        if b > 1e12:
            return RobustnessResult(target, math.inf, False, e0)
    from scipy.optimize import brentq

    root = brentq(f, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
    return RobustnessResult(target, float(root), False, e0)


def contour_grid(
    est: ShortEstimates, rho_abs: float = 1.0, tau: float = 0.025, zeta_grid: Sequence[float] = (), target: str = "lambda"
) -> np.ndarray:
    """Bound CI endpoints across sensitivity products.

    Returns an array with columns ``(zeta, lower, upper, se_lower, se_upper)``
    where ``lower`` is the lower bound's lower confidence limit.
    """
    zeta_grid = np.asarray(zeta_grid, dtype=float)
    if np.any(zeta_grid < 0):
        raise ValueError("zeta values must be >= 0")
    rows = []
    for zeta in zeta_grid:
        st = bound_pair_stats(est, _cfg_for(target, float(zeta), rho_abs), target)
        lo, hi = one_sided_ci(st.point_lo, st.point_hi, st.se_lo, st.se_hi, tau)
        rows.append((zeta, lo, hi, st.se_lo, st.se_hi))
    return np.array(rows, dtype=float).reshape(-1, 5)


def phi_curve(est: ShortEstimates, cfg: SensitivityConfig, tau: float, t_grid: Sequence[float]) -> np.ndarray:
    """Columns ``(t, lower, upper, se_lower, se_upper)`` of the bound tests."""
    _check_tau(tau)
    rows = []
    for t in np.asarray(t_grid, dtype=float):
        st = bound_pair_stats(est, cfg, "phi", float(t))
        lo, hi = one_sided_ci(st.point_lo, st.point_hi, st.se_lo, st.se_hi, tau)
        rows.append((t, lo, hi, st.se_lo, st.se_hi))
    return np.array(rows, dtype=float).reshape(-1, 5)


def write_grid_csv(path, table: np.ndarray, first_column: str) -> None:
    """Write a 5-column grid table with a header row."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([first_column, *GRID_COLUMNS])
        for row in np.asarray(table):
            w.writerow([f"{v:.17g}" for v in row])


# --------------------------------------------------------------------------
# shrinkage intervals for the ratio
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class StoyeThetaResult:
    ci: InversionResult
    z_l_star: float
    z_u_star: float
    delta_star: float
    min_objective: float
    rho_hat: float
    points: int = 0

    def summary(self) -> StoyeResult:
        return StoyeResult(
            self.ci.as_tuple(), self.z_l_star, self.z_u_star,
            self.delta_star, self.min_objective, self.rho_hat,
        )

    def to_dict(self) -> dict:
        d = self.summary().to_dict()
        d["ci"] = self.ci.to_dict()
        d["points_averaged"] = self.points
        return d


def _stoye_at(est, cfg, t, tau):
    st = bound_pair_stats(est, cfg, "phi", float(t))
    return stoye_ci(st.point_lo, st.point_hi, st.se_lo, st.se_hi, st.rho_hat, est.n, tau)


def stoye_theta_ci(
    est: ShortEstimates,
    cfg: SensitivityConfig,
    tau: float = 0.05,
    t_range: Optional[tuple] = None,
    resolution: int = 201,
) -> StoyeThetaResult:
    """Set of ``t`` whose shrinkage interval for ``lambda - gamma t`` covers 0.

    Membership is scanned on ``resolution`` points per side of zero and the
    extreme endpoints are refined by bisection. Diagnostics are averages
    over the grid points inside the reported set.
    """
    _check_tau(tau)
    if t_range is None:
        t_range = default_t_range(est, cfg, tau / 2)
    cache = {}

    def solve(t):
        t = float(t)
        if t not in cache:
            cache[t] = _stoye_at(est, cfg, t, tau)
        return cache[t]

    q_bonf = normal_quantile(1.0 - tau / 2.0)

    def member(ts):
        out = []
        for t in np.asarray(ts, dtype=float):
            st = bound_pair_stats(est, cfg, "phi", float(t))
            # equal critical values of Phi^-1(1 - tau/2) are always feasible,
            # which caps each optimal critical value; skip solves that cannot reach 0
            w = st.se_lo + st.se_hi
            cap_l = w * q_bonf / st.se_lo if st.se_lo > 0 else 0.0
            cap_u = w * q_bonf / st.se_hi if st.se_hi > 0 else 0.0
            if st.point_lo - cap_l * st.se_lo > 0 or st.point_hi + cap_u * st.se_hi < 0:
                out.append(False)
                continue
            r = solve(t)
            out.append(r.ci is not None and r.ci[0] <= 0.0 <= r.ci[1])
        return np.array(out, dtype=bool)

    ci = grid_hull(member, t_range, resolution, rtol=1e-10)
    if ci.empty:
        return StoyeThetaResult(ci, math.nan, math.nan, math.nan, math.nan, math.nan, 0)
    lo = ci.lo if math.isfinite(ci.lo) else -math.inf
    hi = ci.hi if math.isfinite(ci.hi) else math.inf
    used = [r for t, r in cache.items() if lo <= t <= hi]
    avg = lambda f: float(np.mean([f(r) for r in used]))  # noqa: E731
    return StoyeThetaResult(
        ci,
        avg(lambda r: r.z_l_star),
        avg(lambda r: r.z_u_star),
        avg(lambda r: r.delta_star),
        avg(lambda r: r.min_objective),
        avg(lambda r: r.rho_hat),
        len(used),
    )


# --------------------------------------------------------------------------
# full report
# --------------------------------------------------------------------------

def ci_report(
    est: ShortEstimates,
    cfg: SensitivityConfig,
    tau: float = 0.025,
    stoye_tau: Optional[float] = None,
    t_range: Optional[tuple] = None,
    stoye_resolution: int = 201,
    include_stoye_theta: bool = True,
    phi_grid: Optional[Sequence[float]] = None,
) -> CIReport:
    """Every interval family for one estimate and one sensitivity config.

    Bound intervals use one-sided ``tau`` (level ``1 - 2 tau``). Shrinkage
    intervals use ``stoye_tau`` (level ``1 - stoye_tau``), by default
    ``2 tau`` so both families share a nominal level.
    """
    _check_tau(tau)
    stoye_tau = 2.0 * tau if stoye_tau is None else stoye_tau
    out_ci = {}
    for target in ("lambda", "gamma"):
        st = bound_pair_stats(est, cfg, target)
        out_ci[target] = one_sided_ci(st.point_lo, st.point_hi, st.se_lo, st.se_hi, tau)
    inv = invert_theta_ci(est, cfg, tau, t_range)
    conventional = conventional_cis(est, tau)
    stoye = {}
    for target in ("lambda", "gamma"):
        st = bound_pair_stats(est, cfg, target)
        stoye[target] = stoye_ci(st.point_lo, st.point_hi, st.se_lo, st.se_hi, st.rho_hat, est.n, stoye_tau)
    if include_stoye_theta:
        stoye["theta"] = stoye_theta_ci(est, cfg, stoye_tau, t_range, stoye_resolution)
    curve = None
    if phi_grid is not None:
        curve = phi_curve(est, cfg, tau, phi_grid)
    return CIReport(
        tau=tau,
        lambda_ci=out_ci["lambda"],
        gamma_ci=out_ci["gamma"],
        theta0_ci=inv.as_tuple(),
        conventional=conventional,
        stoye=stoye,
        phi_curve=curve,
    )
