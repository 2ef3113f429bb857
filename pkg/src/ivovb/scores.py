"""Per-observation score arithmetic for the short-version parameters.

Every function here is vectorised: inputs may be scalars or equal-length
arrays, and a :class:`ScoreRow` of matching shape comes back. The LATT
centring term and the PLIVM residual-variance pass need the pooled
estimates, so those are finished in :mod:`ivovb.crossfit`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import Estimand

__all__ = [
    "NuisanceValues",
    "ScoreRow",
    "late_score_row",
    "latt_score_row",
    "plivm_score_row",
    "plivm_jacobian",
    "jacobian",
]


@dataclass(frozen=True)
class NuisanceValues:
    """Predicted nuisance functions at the evaluation points.

    LATE/LATT use ``pi_s``, ``ey1``, ``ey0``, ``ed1``, ``ed0`` (and ``p_z``
    for LATT); PLIVM uses ``m``, ``r``, ``l``.
    """

    pi_s: Optional[np.ndarray] = None
    ey1: Optional[np.ndarray] = None
    ey0: Optional[np.ndarray] = None
    ed1: Optional[np.ndarray] = None
    ed0: Optional[np.ndarray] = None
    m: Optional[np.ndarray] = None
    r: Optional[np.ndarray] = None
    l: Optional[np.ndarray] = None  # noqa: E741
    p_z: Optional[float] = None


@dataclass(frozen=True)
class ScoreRow:
    """Uncentred moment contributions.

    ``s_lambda``/``s_gamma`` feed the reduced form and first stage,
    ``s_alpha2`` the squared weight, ``s_ry2``/``s_rd2`` the squared
    outcome and treatment residuals. For PLIVM ``s_alpha2`` is the raw
    squared instrument residual and the two residual terms are left empty.
    """

    s_lambda: np.ndarray
    s_gamma: np.ndarray
    s_alpha2: np.ndarray
    s_ry2: Optional[np.ndarray]
    s_rd2: Optional[np.ndarray]


def _check_propensity(pi):
    pi = np.asarray(pi, dtype=float)
    if np.any((pi <= 0.0) | (pi >= 1.0)):
        raise ValueError("propensity must lie strictly inside (0, 1)")
    return pi


def late_score_row(y, d, z, nv: NuisanceValues) -> ScoreRow:
    """Doubly robust LATE scores (intention-to-treat and compliance share)."""
    y, d, z = (np.asarray(a, dtype=float) for a in (y, d, z))
    pi = _check_propensity(nv.pi_s)
    w1 = z / pi
    w0 = (1.0 - z) / (1.0 - pi)
    s_lambda = w1 * (y - nv.ey1) - w0 * (y - nv.ey0) + nv.ey1 - nv.ey0
    s_gamma = w1 * (d - nv.ed1) - w0 * (d - nv.ed0) + nv.ed1 - nv.ed0
    alpha = w1 - w0
    gy = z * nv.ey1 + (1.0 - z) * nv.ey0
    gd = z * nv.ed1 + (1.0 - z) * nv.ed0
    return ScoreRow(s_lambda, s_gamma, alpha**2, (y - gy) ** 2, (d - gd) ** 2)


def latt_score_row(y, d, z, nv: NuisanceValues) -> ScoreRow:
    """LATT scores before the ``z * lambda_s / P_Z`` centring term.

    The weight carries the ``1 / P_Z`` factor, so ``s_alpha2`` is the squared
    weight on the same scale as the reduced-form score.
    """
    y, d, z = (np.asarray(a, dtype=float) for a in (y, d, z))
    p_z = nv.p_z
    if p_z is None or not 0.0 < p_z < 1.0:
        raise ValueError("LATT requires P(Z=1) strictly inside (0, 1)")
    pi = np.asarray(nv.pi_s, dtype=float)
    if np.any(pi >= 1.0) or np.any(pi < 0.0):
        raise ValueError("LATT odds pi/(1-pi) undefined for propensity of 1")
    odds = pi / (1.0 - pi)
    w1 = z / p_z
    w0 = (1.0 - z) / p_z * odds
    s_lambda = w1 * (y - nv.ey1) - w0 * (y - nv.ey0) + w1 * (nv.ey1 - nv.ey0)
    s_gamma = w1 * (d - nv.ed1) - w0 * (d - nv.ed0) + w1 * (nv.ed1 - nv.ed0)
    alpha = (z - odds * (1.0 - z)) / p_z
    gy = z * nv.ey1 + (1.0 - z) * nv.ey0
    gd = z * nv.ed1 + (1.0 - z) * nv.ed0
    return ScoreRow(s_lambda, s_gamma, alpha**2, (y - gy) ** 2, (d - gd) ** 2)


def plivm_score_row(y, d, z, nv: NuisanceValues, lambda_s=None, gamma_s=None) -> ScoreRow:
    """Residual-on-residual scores for the partially linear IV model.

    With ``lambda_s``/``gamma_s`` given, the squared residuals of
    ``y - m - lambda_s (z - l)`` and ``d - r - gamma_s (z - l)`` are filled in.
    """
    y, d, z = (np.asarray(a, dtype=float) for a in (y, d, z))
    zr = z - nv.l
    yr = y - nv.m
    dr = d - nv.r
    s_ry2 = None if lambda_s is None else (yr - lambda_s * zr) ** 2
    s_rd2 = None if gamma_s is None else (dr - gamma_s * zr) ** 2
    return ScoreRow(yr * zr, dr * zr, zr**2, s_ry2, s_rd2)


def plivm_jacobian(mean_z_resid_sq: float) -> np.ndarray:
    """Jacobian of the stacked PLIVM moments (diagonal, 5 x 5)."""
    if not mean_z_resid_sq > 0:
        raise ValueError("mean squared instrument residual must be positive")
    return np.diag([-mean_z_resid_sq, -mean_z_resid_sq, -1.0, -1.0, -1.0])


def jacobian(estimand, mean_z_resid_sq: float = 1.0) -> np.ndarray:
    """Moment Jacobian: ``-I`` for LATE/LATT, diagonal for PLIVM."""
    if Estimand.parse(estimand) is Estimand.PLIVM:
        return plivm_jacobian(mean_z_resid_sq)
    return -np.eye(5)
