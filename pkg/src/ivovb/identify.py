"""Partial identification of the ratio parameter from bias-adjusted bounds.

Given bounds ``[lambda_lo, lambda_hi]`` on the reduced form and
``[gamma_lo, gamma_hi]`` on the first stage, the ratio is identified up to
the set of ``t`` with ``phi_hi(t) >= 0`` and ``phi_lo(t) <= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import BoundSet, Interval, UnionOfRays, WholeLine

__all__ = ["PhiBounds", "phi_bounds", "phi_arrays", "theta_bounds", "zero_threshold"]


@dataclass(frozen=True)
class PhiBounds:
    t: float
    phi_lo: float
    phi_hi: float


def phi_arrays(lambda_lo, lambda_hi, gamma_lo, gamma_hi, t):
    """Vectorised ``(phi_lo, phi_hi)`` over an array of ``t``."""
    t = np.asarray(t, dtype=float)
    pos = t >= 0
    phi_hi = lambda_hi - np.where(pos, gamma_lo, gamma_hi) * t
    phi_lo = lambda_lo - np.where(pos, gamma_hi, gamma_lo) * t
    return phi_lo, phi_hi


def phi_bounds(lambda_lo: float, lambda_hi: float, gamma_lo: float, gamma_hi: float, t: float) -> PhiBounds:
    """Range of ``lambda - gamma * t`` over the bound rectangle.

    Examples
    --------
    >>> phi_bounds(1, 2, 0.5, 1, 2.0)
    PhiBounds(t=2.0, phi_lo=-1.0, phi_hi=1.0)
    """
    _check_order(lambda_lo, lambda_hi, gamma_lo, gamma_hi)
    lo, hi = phi_arrays(lambda_lo, lambda_hi, gamma_lo, gamma_hi, t)
    return PhiBounds(float(t), float(lo), float(hi))


def _check_order(lambda_lo, lambda_hi, gamma_lo, gamma_hi):
    if not lambda_lo <= lambda_hi:
        raise ValueError("lambda_lo must not exceed lambda_hi")
    if not gamma_lo <= gamma_hi:
        raise ValueError("gamma_lo must not exceed gamma_hi")


def zero_threshold(lambda_lo: float, lambda_hi: float) -> float:
    return 1e-12 * max(1.0, abs(lambda_lo), abs(lambda_hi))


def _lambda_sign(lambda_lo, lambda_hi) -> str:
    if lambda_lo > 0:
        return "pos"
    if lambda_hi < 0:
        return "neg"
    return "mixed"


def theta_bounds(lambda_lo: float, lambda_hi: float, gamma_lo: float, gamma_hi: float) -> BoundSet:
    """Identification set for the ratio.

    Returns a :class:`BoundSet` whose ``theta_set`` is an ``Interval`` when
    the first-stage bounds share a strict sign, a ``UnionOfRays`` or
    ``WholeLine`` when they straddle zero, and ``None`` when an endpoint is
    numerically zero. ``first_stage_failure`` is set in the last two
    situations; ``case`` names the branch taken, e.g. ``"gamma+/lambda+"``.

    A lambda endpoint equal to zero counts as the mixed-sign subcase.
    """
    _check_order(lambda_lo, lambda_hi, gamma_lo, gamma_hi)
    ll, lh, gl, gh = map(float, (lambda_lo, lambda_hi, gamma_lo, gamma_hi))
    eps = zero_threshold(ll, lh)
    lam = _lambda_sign(ll, lh)
    lam_tag = {"pos": "lambda+", "neg": "lambda-", "mixed": "lambda+-"}[lam]

    if abs(gl) < eps or abs(gh) < eps:
        return BoundSet(ll, lh, gl, gh, None, True, "gamma0/" + lam_tag)

    if gl > 0:
        if lam == "pos":
            s = Interval(ll / gh, lh / gl)
        elif lam == "neg":
            s = Interval(ll / gl, lh / gh)
        else:
            s = Interval(ll / gl, lh / gl)
        return BoundSet(ll, lh, gl, gh, s, False, "gamma+/" + lam_tag)

    if gh < 0:
        if lam == "pos":
            s = Interval(lh / gh, ll / gl)
        elif lam == "neg":
            s = Interval(lh / gl, ll / gh)
        else:
            s = Interval(lh / gh, ll / gh)
        return BoundSet(ll, lh, gl, gh, s, False, "gamma-/" + lam_tag)

    # gl < 0 < gh
    if lam == "pos":
        s = UnionOfRays(ll / gl, ll / gh)
    elif lam == "neg":
        s = UnionOfRays(lh / gh, lh / gl)
    else:
        s = WholeLine()
    return BoundSet(ll, lh, gl, gh, s, True, "gamma+-/" + lam_tag)
