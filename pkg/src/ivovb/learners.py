"""Nuisance-function learners used inside cross-fitting.

Three learners are provided: a bootstrap random forest, ridge regression with
an unpenalised intercept, and a saturated cell-mean estimator for fully
discrete covariates. Probability targets are clipped to ``[clip, 1 - clip]``
at prediction time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from sklearn.tree import DecisionTreeRegressor

__all__ = ["LearnerSpec", "FittedLearner", "fit", "predict", "PROBABILITY_CLIP"]

PROBABILITY_CLIP = 0.01
_KINDS = ("random_forest", "ridge", "saturated_cells")
_TARGETS = ("mean", "probability")


@dataclass(frozen=True)
class LearnerSpec:
    """Learner configuration.

    ``mtry`` of ``None`` picks the forest default for the target kind:
    ``ceil(sqrt(q))`` for probabilities, ``max(1, floor(q / 3))`` for means.
    """

    kind: str = "random_forest"
    trees: int = 200
    min_leaf: int = 5
    max_depth: Optional[int] = None
    mtry: Optional[int] = None
    ridge_penalty: float = 1.0
    seed: int = 0
    bootstrap: bool = True
    clip: float = PROBABILITY_CLIP

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown learner kind {self.kind!r}; expected one of {_KINDS}")
        if self.trees < 1 or self.min_leaf < 1:
            raise ValueError("trees and min_leaf must be positive")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be positive")
        if self.mtry is not None and self.mtry < 1:
            raise ValueError("mtry must be positive")
        if self.ridge_penalty < 0:
            raise ValueError("ridge_penalty must be >= 0")
        if not 0.0 <= self.clip < 0.5:
            raise ValueError("clip must lie in [0, 0.5)")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def with_seed(self, seed: int) -> "LearnerSpec":
        return replace(self, seed=int(seed) % 2**64)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "trees": self.trees, "min_leaf": self.min_leaf,
            "max_depth": self.max_depth, "mtry": self.mtry,
            "ridge_penalty": self.ridge_penalty, "seed": self.seed,
            "bootstrap": self.bootstrap, "clip": self.clip,
        }

    @classmethod
    def from_mapping(cls, data) -> "LearnerSpec":
        """Build from a string mapping such as a config-file section."""
        conv = {
            "kind": str, "trees": int, "min_leaf": int, "max_depth": _opt_int,
            "mtry": _opt_int, "ridge_penalty": float, "seed": int,
            "bootstrap": _to_bool, "clip": float,
        }
        unknown = set(data) - set(conv)
        if unknown:
            raise ValueError(f"unknown learner key(s): {', '.join(sorted(unknown))}")
        return cls(**{k: conv[k](v) for k, v in data.items()})


def _opt_int(v):
    if v is None or str(v).strip().lower() in ("", "none"):
        return None
    return int(v)


def _to_bool(v):
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


@dataclass(frozen=True)
class FittedLearner:
    spec: LearnerSpec
    target_kind: str
    width: int
    state: object


def fit(spec: LearnerSpec, features, targets, target_kind: str = "mean") -> FittedLearner:
    """Fit a nuisance learner.

    Parameters
    ----------
    spec : LearnerSpec
    features : array of shape (n, q)
    targets : array of shape (n,)
    target_kind : {"mean", "probability"}
        Probability targets must be 0/1.
    """
    if target_kind not in _TARGETS:
        raise ValueError(f"target_kind must be one of {_TARGETS}")
    x = _as_matrix(features)
    y = np.asarray(targets, dtype=float).ravel()
    n, q = x.shape
    if n != y.shape[0]:
        raise ValueError(f"features have {n} rows but targets have {y.shape[0]}")
    if n < 2 or q < 1:
        raise ValueError(f"need n >= 2 and q >= 1, got n={n}, q={q}")
    if target_kind == "probability" and np.any((y != 0.0) & (y != 1.0)):
        raise ValueError("probability targets must be 0/1")

    if spec.kind == "saturated_cells":
        state = _fit_cells(x, y)
    elif spec.kind == "ridge":
        state = _fit_ridge(x, y, spec.ridge_penalty)
    else:
        state = _fit_forest(spec, x, y, target_kind)
    return FittedLearner(spec, target_kind, q, state)


def predict(fitted: FittedLearner, features) -> np.ndarray:
    """Predict conditional means (or clipped probabilities)."""
    x = _as_matrix(features)
    if x.shape[1] != fitted.width:
        raise ValueError(f"learner was fit on {fitted.width} features, got {x.shape[1]}")
    kind = fitted.spec.kind
    if kind == "saturated_cells":
        out = _predict_cells(fitted.state, x)
    elif kind == "ridge":
        beta0, beta = fitted.state
        out = beta0 + x @ beta
    else:
        out = np.mean([tree.predict(x) for tree in fitted.state], axis=0)
    if fitted.target_kind == "probability":
        c = fitted.spec.clip
        out = np.clip(out, c, 1.0 - c)
    return np.asarray(out, dtype=float)


def _as_matrix(features) -> np.ndarray:
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    return x


# -- saturated cells ----------------------------------------------------------

def _fit_cells(x, y):
    if not np.all(np.isfinite(x)) or np.any(x != np.round(x)):
        raise ValueError("saturated_cells requires discrete (integer-valued) features")
    cells, inverse = np.unique(x, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    sums = np.bincount(inverse, weights=y, minlength=len(cells))
    counts = np.bincount(inverse, minlength=len(cells))
    return {tuple(c): s / k for c, s, k in zip(cells.tolist(), sums, counts)}


def _predict_cells(table, x):
    out = np.empty(x.shape[0])
    for i, row in enumerate(x.tolist()):
        key = tuple(row)
        try:
            out[i] = table[key]
        except KeyError:
            raise ValueError(f"empty cell {key}: no training observations") from None
    return out


# -- ridge ----------------------------------------------------------------------

def _fit_ridge(x, y, penalty):
    xm = x.mean(axis=0)
    ym = y.mean()
    xc = x - xm
    gram = xc.T @ xc + penalty * np.eye(x.shape[1])
    if np.linalg.matrix_rank(gram) < gram.shape[0]:
        raise np.linalg.LinAlgError(
            "singular ridge system: collinear or constant features with zero penalty"
        )
    beta = np.linalg.solve(gram, xc.T @ (y - ym))
    return (ym - xm @ beta, beta)


# -- random forest --------------------------------------------------------------

def _default_mtry(q: int, target_kind: str) -> int:
    if target_kind == "probability":
        return int(math.ceil(math.sqrt(q)))
    return max(1, q // 3)


def _fit_forest(spec: LearnerSpec, x, y, target_kind):
    n, q = x.shape
    mtry = spec.mtry if spec.mtry is not None else _default_mtry(q, target_kind)
    if mtry > q:
        raise ValueError(f"mtry={mtry} exceeds the number of features q={q}")
    trees = []
    for b in range(spec.trees):
        # one counter-based stream per tree keeps trees independent of build order
        rng = np.random.Generator(np.random.Philox(key=(spec.seed + b) % 2**64))
        rows = rng.integers(0, n, size=n) if spec.bootstrap else np.arange(n)
        tree = DecisionTreeRegressor(
            min_samples_leaf=spec.min_leaf,
            max_depth=spec.max_depth,
            max_features=mtry,
            random_state=int(rng.integers(0, 2**31 - 1)),
        )
        tree.fit(x[rows], y[rows])
        trees.append(tree)
    return trees
