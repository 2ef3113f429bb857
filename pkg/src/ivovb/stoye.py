"""Shrinkage-based confidence intervals for interval-identified parameters.

The critical values ``(z_l, z_u)`` minimise ``z_l sigma_l + z_u sigma_u``
subject to two coverage constraints, each a bivariate normal orthant-type
probability evaluated by deterministic quadrature.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np
from scipy.special import ndtr, ndtri

from .model import StoyeResult

__all__ = [
    "StoyeSolverError",
    "stoye_constraint_prob",
    "shrinkage_threshold",
    "stoye_ci",
]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)
_UPPER = 8.5  # mass of the standard normal beyond this is ~1e-17
_OFFSETS = np.array([-16.0, -8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0, 16.0])
_FIXED_CUTS = np.arange(-6.0, 6.5, 2.0)
_ZMAX = 12.0


class StoyeSolverError(RuntimeError):
    """The critical-value search did not converge."""

    def __init__(self, message: str, diagnostics: Optional[dict] = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


def _phi(x):
    return np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def stoye_constraint_prob(z_l, c, rho):
    """``P(Z1 >= -z_l, rho Z1 - sqrt(1 - rho^2) Z2 <= c)`` for iid N(0,1).

    Integrates ``phi(z) Phi((c - rho z) / s)`` over ``z >= -z_l`` with
    Gauss-Legendre panels placed around the step at ``z = c / rho``, whose
    width shrinks with ``s = sqrt(1 - rho^2)``. ``|rho| = 1`` and ``rho = 0``
    use closed forms. ``z_l`` and ``c`` broadcast; ``rho`` is a scalar.
    """
    rho = float(min(1.0, max(-1.0, rho)))
    z_l, c = np.broadcast_arrays(np.asarray(z_l, dtype=float), np.asarray(c, dtype=float))
    shape = z_l.shape
    z_l = z_l.ravel()
    c = c.ravel()
    if rho == 0.0:
        return (ndtr(z_l) * ndtr(c)).reshape(shape)
    s2 = (1.0 - rho) * (1.0 + rho)
    if s2 <= 1e-28:
        if rho > 0:
            out = np.clip(ndtr(c) - ndtr(-z_l), 0.0, None)
        else:
            out = ndtr(np.minimum(z_l, c))
        return out.reshape(shape)
    s = math.sqrt(s2)

    a = np.clip(-z_l, -_UPPER, _UPPER)
    b = _UPPER
    # for tiny |rho| the step sits far outside [a, b]; overflow is harmless
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        centre = c / rho
        width = s / abs(rho)
        moving = centre[:, None] + width * _OFFSETS[None, :]
    moving = np.where(np.isfinite(moving), moving, b)
    fixed = np.broadcast_to(_FIXED_CUTS, (a.size, _FIXED_CUTS.size))
    cuts = np.clip(np.concatenate([moving, fixed], axis=1), a[:, None], b)
    edges = np.concatenate([a[:, None], cuts, np.full((a.size, 1), b)], axis=1)
    edges.sort(axis=1)
    lo = edges[:, :-1]
    hi = edges[:, 1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = mid[..., None] + half[..., None] * _GL_X
    vals = _phi(nodes) * ndtr((c[:, None, None] - rho * nodes) / s)
    out = np.sum(half * np.tensordot(vals, _GL_W, axes=([2], [0])), axis=1)
    return np.clip(out, 0.0, 1.0).reshape(shape)


def shrinkage_threshold(se_lo: float, se_hi: float, n: int) -> float:
    """``sqrt(log log n / n) * max(sigma_l, sigma_u)`` with ``sigma = se * sqrt(n)``."""
    if n < 2:
        raise ValueError("n must be >= 2")
    ll = max(0.0, math.log(math.log(n))) if n > 2 else 0.0
    return math.sqrt(ll) * max(se_lo, se_hi)


def _shift(delta: float, se: float) -> float:
    if delta == 0.0:
        return 0.0
    return math.inf if se == 0.0 else delta / se


def _cond_density(x, other, rho):
    """d/dx of ``P(Z1 >= -x, W <= other)`` (and, by symmetry, of the same
    probability in its second argument with the roles swapped)."""
    s2 = (1.0 - rho) * (1.0 + rho)
    if s2 <= 1e-28:
        return _phi(x) * ((other + rho * x) >= 0)
    return _phi(x) * ndtr((other + rho * x) / math.sqrt(s2))


def _root_increasing(f, df, lo, hi, shape, iters=60, xtol=1e-13):
    """Vectorised safeguarded Newton for increasing ``f`` on ``[lo, hi]``.

    Returns the smallest ``x`` with ``f(x) >= 0`` up to ``xtol``; ``lo``
    where ``f(lo) >= 0`` and ``inf`` where ``f(hi) < 0``.
    """
    a = np.full(shape, lo)
    b = np.full(shape, hi)
    fa = f(a)
    fb = f(b)
    done = fa >= 0
    infeasible = fb < 0
    x = a.copy()
    fx = fa
    for _ in range(iters):
        d = df(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(d > 0, -fx / d, np.nan)
        cand = x + step
        inside = np.isfinite(cand) & (cand > a) & (cand < b)
        x_new = np.where(inside, cand, 0.5 * (a + b))
        f_new = f(x_new)
        pos = f_new >= 0
        b = np.where(pos, x_new, b)
        a = np.where(pos, a, x_new)
        x, fx = x_new, f_new
        if np.all((b - a <= xtol) | done | infeasible | (np.abs(step) <= xtol)):
            break
    # Newton on a concave f converges from the left, leaving x a hair short
    # of the root; step just past it before falling back on the bracket end
    short = fx < 0
    if np.any(short):
        nudged = np.minimum(b, x + 4.0 * xtol + 4.0 * np.abs(np.nan_to_num(step)))
        x = np.where(short & (f(nudged) >= 0), nudged, x)
        fx = np.where(x == nudged, 0.0, fx)
    # the right end of the bracket always satisfies the constraint
    out = np.where(fx >= 0, x, b)
    out = np.where(done, lo, out)
    return np.where(infeasible, np.inf, out)


def _min_zl(z_u, shift_u, shift_l, rho, target, lo, hi):
    """Smallest ``z_l`` in ``[lo, hi]`` meeting both constraints, per ``z_u``.

    Returns ``inf`` where even ``z_l = hi`` fails.
    """
    z_u = np.asarray(z_u, dtype=float)
    c_u = z_u + shift_u
    zl1 = _root_increasing(
        lambda zl: stoye_constraint_prob(zl, c_u, rho) - target,
        lambda zl: _cond_density(zl, c_u, rho),
        lo, hi, z_u.shape,
    )
    if math.isinf(shift_l):
        zl2 = np.where(ndtr(z_u) >= target, lo, np.inf)
    else:
        zl2 = _root_increasing(
            lambda zl: stoye_constraint_prob(z_u, zl + shift_l, rho) - target,
            lambda zl: _cond_density(zl + shift_l, z_u, rho),
            lo, hi, z_u.shape,
        )
    return np.maximum(zl1, zl2)


def _solve(se_lo, se_hi, shift_l, shift_u, rho, tau, tol=1e-9):
    target = 1.0 - tau
    q = float(ndtri(target))
    lo, hi = q - 1e-9, _ZMAX
    w_l = se_lo if se_lo > 0 else 0.0
    w_u = se_hi if se_hi > 0 else 0.0

    def objective(zu):
        zl = _min_zl(zu, shift_u, shift_l, rho, target, lo, hi)
        return w_l * zl + w_u * zu, zl

    a, b = lo, hi
    grid_n = 21
    best_u = best_l = math.nan
    best_f = math.inf
    for _ in range(80):
        grid = np.linspace(a, b, grid_n)
        f, zl = objective(grid)
        i = int(np.argmin(f))
        if not np.isfinite(f[i]):
            raise StoyeSolverError(
                "no feasible critical values found",
                {"tau": tau, "rho": rho, "shift_l": shift_l, "shift_u": shift_u},
            )
        if f[i] <= best_f:
            best_f, best_u, best_l = float(f[i]), float(grid[i]), float(zl[i])
        step = grid[1] - grid[0]
        if step < tol:
            break
        a = max(lo, grid[i] - step)
        b = min(hi, grid[i] + step)
    else:
        raise StoyeSolverError("critical-value search did not converge", {"step": step})
    if best_u >= hi - 1e-6 or best_l >= hi - 1e-6:
        raise StoyeSolverError(
            "critical value hit the search ceiling",
            {"z_l": best_l, "z_u": best_u, "ceiling": hi},
        )
    return best_l, best_u


def stoye_ci(
    point_lo: float,
    point_hi: float,
    se_lo: float,
    se_hi: float,
    rho_hat: float,
    n: int,
    tau: float = 0.05,
) -> StoyeResult:
    """Confidence interval of level ``1 - tau`` for a point in ``[lo, hi]``.

    Parameters
    ----------
    point_lo, point_hi : float
        Estimated lower and upper bounds.
    se_lo, se_hi : float
        Their standard errors.
    rho_hat : float
        Estimated correlation of the two bound estimators (clamped to [-1, 1]).
    n : int
        Sample size, used by the shrinkage threshold.
    tau : float
        Coverage error.

    Returns
    -------
    StoyeResult
        ``ci`` is ``None`` when the endpoints cross. ``min_objective`` is
        reported on the sqrt(n) scale.
    """
    if not 0.0 < tau <= 0.5:
        raise ValueError(f"tau must lie in (0, 0.5], got {tau}")
    if se_lo < 0 or se_hi < 0:
        raise ValueError("standard errors must be nonnegative")
    rho = float(min(1.0, max(-1.0, rho_hat)))
    delta = point_hi - point_lo
    theta_n = shrinkage_threshold(se_lo, se_hi, n)
    delta_star = delta if delta > theta_n else 0.0
    if se_lo == 0.0 and se_hi == 0.0:
        ci = (point_lo, point_hi) if delta >= 0 else None
        return StoyeResult(ci, 0.0, 0.0, delta_star, 0.0, rho)
    z_l, z_u = _solve(se_lo, se_hi, _shift(delta_star, se_lo), _shift(delta_star, se_hi), rho, tau)
    lo = point_lo - se_lo * z_l
    hi = point_hi + se_hi * z_u
    root_n = math.sqrt(n)
    obj = z_l * se_lo * root_n + z_u * se_hi * root_n
    return StoyeResult((lo, hi) if lo <= hi else None, z_l, z_u, delta_star, obj, rho)
