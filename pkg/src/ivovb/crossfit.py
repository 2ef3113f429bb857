"""K-fold cross-fitting (DML2) and median aggregation over sample splits."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import learners
from .learners import LearnerSpec
from .model import Dataset, Estimand, ShortEstimates, ValidationError, validate
from .scores import (
    NuisanceValues,
    jacobian,
    late_score_row,
    latt_score_row,
    plivm_score_row,
)

__all__ = [
    "FoldPlan",
    "CrossfitResult",
    "assign_folds",
    "crossfit_estimate",
    "median_aggregate",
    "repeated_crossfit",
    "operator_norm",
]


@dataclass(frozen=True)
class FoldPlan:
    K: int
    assignments: np.ndarray
    seed: int

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.K)


@dataclass(frozen=True)
class CrossfitResult:
    """Pooled DML2 estimates plus per-fold diagnostics.

    ``nuisance`` keeps the out-of-fold predictions (useful for diagnostics
    and benchmarking); ``theta_dml1`` is the average of per-fold ratios.
    """

    estimates: ShortEstimates
    fold_lambda: np.ndarray
    fold_gamma: np.ndarray
    plan: Optional[FoldPlan] = None
    nuisance: dict = field(default_factory=dict)
    n_replications: int = 1

    @property
    def theta_dml1(self) -> float:
        with np.errstate(divide="ignore", invalid="ignore"):
            return float(np.mean(self.fold_lambda / self.fold_gamma))

    @property
    def theta_undefined(self) -> bool:
        return abs(self.estimates.gamma_s) < 1e-12


def assign_folds(n: int, K: int, seed: int = 0) -> FoldPlan:
    """Random partition of ``n`` observations into ``K`` near-equal folds."""
    if not (isinstance(K, (int, np.integer)) and 2 <= K <= n // 2):
        raise ValueError(f"need 2 <= K <= n/2 (n={n}), got K={K}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    assignments = np.empty(n, dtype=int)
    for k, block in enumerate(np.array_split(perm, K)):
        assignments[block] = k
    return FoldPlan(int(K), assignments, int(seed))


def _nuisance_seed(spec: LearnerSpec, fold: int, slot: int) -> LearnerSpec:
    return spec.with_seed(spec.seed + 7919 * fold + 104729 * slot)


def _fit_predict(spec, x_tr, t_tr, x_te, kind):
    return learners.predict(learners.fit(spec, x_tr, t_tr, kind), x_te)


def _binary_nuisances(data: Dataset, plan: FoldPlan, spec: LearnerSpec) -> dict:
    n = data.n
    out = {name: np.empty(n) for name in ("pi_s", "ey1", "ey0", "ed1", "ed0")}
    for k in range(plan.K):
        test = plan.assignments == k
        train = ~test
        arm1 = train & (data.z == 1)
        arm0 = train & (data.z == 0)
        if not arm1.any() or not arm0.any():
            raise ValueError(
                f"fold {k}: training complement has no observations with z="
                f"{1 if not arm1.any() else 0}; both instrument arms are required"
            )
        xt = data.x[test]
        out["pi_s"][test] = _fit_predict(
            _nuisance_seed(spec, k, 0), data.x[train], data.z[train], xt, "probability"
        )
        out["ey1"][test] = _fit_predict(_nuisance_seed(spec, k, 1), data.x[arm1], data.y[arm1], xt, "mean")
        out["ey0"][test] = _fit_predict(_nuisance_seed(spec, k, 2), data.x[arm0], data.y[arm0], xt, "mean")
        out["ed1"][test] = _fit_predict(_nuisance_seed(spec, k, 3), data.x[arm1], data.d[arm1], xt, "mean")
        out["ed0"][test] = _fit_predict(_nuisance_seed(spec, k, 4), data.x[arm0], data.d[arm0], xt, "mean")
    return out


def _plivm_nuisances(data: Dataset, plan: FoldPlan, spec: LearnerSpec) -> dict:
    n = data.n
    out = {name: np.empty(n) for name in ("m", "r", "l")}
    for k in range(plan.K):
        test = plan.assignments == k
        train = ~test
        xt = data.x[test]
        out["m"][test] = _fit_predict(_nuisance_seed(spec, k, 0), data.x[train], data.y[train], xt, "mean")
        out["r"][test] = _fit_predict(_nuisance_seed(spec, k, 1), data.x[train], data.d[train], xt, "mean")
        out["l"][test] = _fit_predict(_nuisance_seed(spec, k, 2), data.x[train], data.z[train], xt, "mean")
    return out


def estimates_from_nuisances(data: Dataset, estimand, nuisance: dict, plan: Optional[FoldPlan] = None):
    """Pool scores computed from out-of-fold nuisance predictions.

    Returns ``(ShortEstimates, fold_lambda, fold_gamma)``.
    """
    estimand = Estimand.parse(estimand)
    y, d, z, n = data.y, data.d, data.z, data.n
    assignments = plan.assignments if plan is not None else np.zeros(n, dtype=int)
    K = plan.K if plan is not None else 1

    if estimand is Estimand.PLIVM:
        nv = NuisanceValues(m=nuisance["m"], r=nuisance["r"], l=nuisance["l"])
        row = plivm_score_row(y, d, z, nv)
        zz = float(np.mean(row.s_alpha2))
        if not zz > 0:
            raise ValueError("instrument residuals are identically zero")
        lam = float(np.mean(row.s_lambda)) / zz
        gam = float(np.mean(row.s_gamma)) / zz
        row = plivm_score_row(y, d, z, nv, lambda_s=lam, gamma_s=gam)
        v2 = 1.0 / zz
        sy2 = float(np.mean(row.s_ry2))
        sd2 = float(np.mean(row.s_rd2))
        alpha2 = row.s_alpha2 / zz**2
        psi = np.column_stack([
            row.s_lambda - lam * row.s_alpha2,
            row.s_gamma - gam * row.s_alpha2,
            alpha2 - v2,
            row.s_ry2 - sy2,
            row.s_rd2 - sd2,
        ])
        fold_num_l = np.bincount(assignments, weights=row.s_lambda, minlength=K)
        fold_num_g = np.bincount(assignments, weights=row.s_gamma, minlength=K)
        fold_den = np.bincount(assignments, weights=row.s_alpha2, minlength=K)
        with np.errstate(divide="ignore", invalid="ignore"):
            fold_l = fold_num_l / fold_den
            fold_g = fold_num_g / fold_den
        jac = jacobian(estimand, zz)
    else:
        if estimand is Estimand.LATE:
            nv = NuisanceValues(**{k: nuisance[k] for k in ("pi_s", "ey1", "ey0", "ed1", "ed0")})
            row = late_score_row(y, d, z, nv)
            centre_l = centre_g = np.ones(n)
        else:
            p_z = float(np.mean(z))
            nv = NuisanceValues(**{k: nuisance[k] for k in ("pi_s", "ey1", "ey0", "ed1", "ed0")}, p_z=p_z)
            row = latt_score_row(y, d, z, nv)
            centre_l = centre_g = z / p_z
        lam = float(np.mean(row.s_lambda) / np.mean(centre_l))
        gam = float(np.mean(row.s_gamma) / np.mean(centre_g))
        v2 = float(np.mean(row.s_alpha2))
        sy2 = float(np.mean(row.s_ry2))
        sd2 = float(np.mean(row.s_rd2))
        psi = np.column_stack([
            row.s_lambda - lam * centre_l,
            row.s_gamma - gam * centre_g,
            row.s_alpha2 - v2,
            row.s_ry2 - sy2,
            row.s_rd2 - sd2,
        ])
        counts = np.bincount(assignments, minlength=K)
        fold_l = np.bincount(assignments, weights=row.s_lambda, minlength=K) / counts
        fold_g = np.bincount(assignments, weights=row.s_gamma, minlength=K) / counts
        jac = jacobian(estimand)

    jinv = np.linalg.inv(jac)
    omega = jinv @ (psi.T @ psi / n) @ jinv
    omega = 0.5 * (omega + omega.T)
    est = ShortEstimates(lam, gam, v2, sy2, sd2, omega=omega, n=n, scores=psi, estimand=estimand)
    return est, fold_l, fold_g


def crossfit_estimate(
    dataset: Dataset,
    estimand,
    spec: LearnerSpec = LearnerSpec(),
    K: int = 5,
    seed: int = 0,
    plan: Optional[FoldPlan] = None,
) -> CrossfitResult:
    """Cross-fitted estimates of the five short-version parameters.

    Nuisances are fit on each fold's complement and predicted on the fold;
    the n score rows are then pooled (DML2). For LATE/LATT the outcome and
    treatment regressions are fit separately within each instrument arm.

    Parameters
    ----------
    dataset : Dataset
    estimand : {"late", "latt", "plivm"} or Estimand
    spec : LearnerSpec
        Learner used for every nuisance function.
    K : int
        Number of folds.
    seed : int
        Seed of the fold split (ignored when ``plan`` is given).
    plan : FoldPlan, optional
        Reuse an existing split.
    """
    estimand = Estimand.parse(estimand)
    errors = validate(dataset, estimand)
    if errors:
        raise ValidationError(errors)
    if plan is None:
        plan = assign_folds(dataset.n, K, seed)
    elif plan.assignments.shape[0] != dataset.n:
        raise ValueError("fold plan does not match the dataset size")
    if estimand is Estimand.PLIVM:
        nuisance = _plivm_nuisances(dataset, plan, spec)
    else:
        nuisance = _binary_nuisances(dataset, plan, spec)
    est, fold_l, fold_g = estimates_from_nuisances(dataset, estimand, nuisance, plan)
    return CrossfitResult(est, fold_l, fold_g, plan, nuisance)


def operator_norm(mat: np.ndarray) -> float:
    """Largest singular value of a symmetric matrix."""
    return float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (mat + mat.T)))))


def median_aggregate(results: Sequence[CrossfitResult]) -> CrossfitResult:
    """Median over repeated sample splits.

    Parameters are the coordinatewise (lower) median across replications.
    The covariance is the replication's ``omega + n * dev dev'`` whose
    operator norm is the (lower) median of all such norms, where ``dev`` is
    that replication's deviation from the median parameters.
    """
    results = list(results)
    if not results:
        raise ValueError("median_aggregate needs at least one result")
    L = len(results)
    n = results[0].estimates.n
    xi = np.array([r.estimates.vector for r in results])
    mid = (L - 1) // 2
    med = np.sort(xi, axis=0)[mid]
    adjusted = []
    for r, x in zip(results, xi):
        dev = x - med
        adjusted.append(r.estimates.omega + n * np.outer(dev, dev))
    norms = np.array([operator_norm(m) for m in adjusted])
    pick = int(np.argsort(norms, kind="stable")[mid])
    chosen = results[pick]
    est = chosen.estimates.with_vector(med, adjusted[pick], chosen.estimates.scores)
    return CrossfitResult(
        est, chosen.fold_lambda, chosen.fold_gamma, chosen.plan, chosen.nuisance, L
    )


def repeated_crossfit(
    dataset: Dataset,
    estimand,
    spec: LearnerSpec = LearnerSpec(),
    K: int = 5,
    L: int = 5,
    seed: int = 0,
    workers: int = 1,
) -> CrossfitResult:
    """Run ``L`` independent cross-fits and combine them by the median rule.

    Replication ``l`` uses fold seed ``seed + l`` and learner seed
    ``spec.seed + l``; results are reduced in index order, so the output does
    not depend on ``workers``.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    jobs = [(dataset, estimand, spec.with_seed(spec.seed + l), K, seed + l) for l in range(L)]
    if workers and workers > 1 and L > 1:
        from joblib import Parallel, delayed

        results = Parallel(n_jobs=workers)(delayed(crossfit_estimate)(*job) for job in jobs)
    else:
        results = [crossfit_estimate(*job) for job in jobs]
    return median_aggregate(results)
