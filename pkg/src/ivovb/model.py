"""Core data containers shared across the package.

All containers are frozen dataclasses holding numpy arrays; nothing here
mutates after construction, so instances are safe to share across workers.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

__all__ = [
    "Estimand",
    "Dataset",
    "ShortEstimates",
    "SensitivityConfig",
    "Interval",
    "UnionOfRays",
    "WholeLine",
    "BoundSet",
    "StoyeResult",
    "CIReport",
    "ValidationError",
    "validate",
    "read_csv",
    "write_csv",
    "read_groups",
    "PARAM_NAMES",
]

#: order of the five short-version parameters everywhere (vectors, omega, scores)
PARAM_NAMES = ("lambda_s", "gamma_s", "v_s2", "sigma_Ys2", "sigma_Ds2")


class Estimand(str, enum.Enum):
    LATE = "late"
    LATT = "latt"
    PLIVM = "plivm"

    @classmethod
    def parse(cls, value: Union[str, "Estimand"]) -> "Estimand":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(
                f"unknown estimand {value!r}; expected one of late, latt, plivm"
            ) from None

    @property
    def binary_instrument(self) -> bool:
        return self is not Estimand.PLIVM


class ValidationError(ValueError):
    """Raised when a dataset violates its invariants.

    The ``errors`` attribute carries the full list of violations.
    """

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class Dataset:
    """Estimation input: outcome, treatment, instrument and covariates.

    Parameters
    ----------
    y, d, z : array of shape (n,)
        Outcome, treatment and instrument.
    x : array of shape (n, p)
        Covariate matrix.
    names : tuple of str
        Column labels of ``x``.
    """

    y: np.ndarray
    d: np.ndarray
    z: np.ndarray
    x: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        for attr in ("y", "d", "z"):
            object.__setattr__(self, attr, np.asarray(getattr(self, attr), dtype=float).ravel())
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        object.__setattr__(self, "x", x)
        names = tuple(self.names) if self.names else tuple(f"x{j + 1}" for j in range(x.shape[1]))
        object.__setattr__(self, "names", names)
        for arr in (self.y, self.d, self.z, self.x):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def columns(self, group: Sequence[str]) -> np.ndarray:
        """Integer indices of the named covariate columns."""
        missing = [g for g in group if g not in self.names]
        if missing:
            raise KeyError(f"unknown covariate column(s): {', '.join(missing)}")
        return np.array([self.names.index(g) for g in group], dtype=int)

    def drop(self, group: Sequence[str]) -> "Dataset":
        """Copy of the dataset with the named covariates removed."""
        idx = set(self.columns(group).tolist())
        keep = [j for j in range(self.p) if j not in idx]
        if not keep:
            raise ValueError("removing the group leaves zero covariates")
        return Dataset(
            self.y, self.d, self.z, self.x[:, keep], tuple(self.names[j] for j in keep)
        )

    def subset(self, rows) -> "Dataset":
        return Dataset(self.y[rows], self.d[rows], self.z[rows], self.x[rows], self.names)


def validate(dataset: Dataset, estimand: Union[str, Estimand]) -> list:
    """Return every invariant violation of ``dataset`` for ``estimand``.

    An empty list means the dataset is usable.
    """
    estimand = Estimand.parse(estimand)
    errors = []
    n = len(dataset.y)
    lengths = {"y": len(dataset.y), "d": len(dataset.d), "z": len(dataset.z), "x": dataset.x.shape[0]}
    if len(set(lengths.values())) > 1:
        errors.append(
            "length mismatch: " + ", ".join(f"{k}={v}" for k, v in lengths.items())
        )
    if n < 4:
        errors.append(f"need at least 4 observations, got {n}")
    if dataset.x.shape[1] != len(dataset.names):
        errors.append(
            f"{dataset.x.shape[1]} covariate columns but {len(dataset.names)} names"
        )
    for label, arr in (("y", dataset.y), ("d", dataset.d), ("z", dataset.z)):
        bad = np.flatnonzero(~np.isfinite(arr))
        if bad.size:
            errors.append(f"non-finite value in {label} at row(s) {_fmt_rows(bad)}")
    bad_rows = np.flatnonzero(~np.all(np.isfinite(dataset.x), axis=1))
    if bad_rows.size:
        errors.append(f"non-finite covariate value at row(s) {_fmt_rows(bad_rows)}")
    if estimand.binary_instrument:
        z_ok = np.isfinite(dataset.z)
        if np.any(~np.isin(dataset.z[z_ok], (0.0, 1.0))):
            errors.append("instrument must be binary (0/1) for LATE/LATT")
        d_ok = np.isfinite(dataset.d)
        if np.any(~np.isin(dataset.d[d_ok], (0.0, 1.0))):
            errors.append("treatment must be binary (0/1) for LATE/LATT")
        if estimand is Estimand.LATT and not errors:
            p_z = float(np.mean(dataset.z))
            if not 0.0 < p_z < 1.0:
                errors.append(f"LATT requires P(Z=1) in (0,1), got {p_z}")
    return errors


def _fmt_rows(rows: np.ndarray, limit: int = 10) -> str:
    shown = ", ".join(str(int(r)) for r in rows[:limit])
    return shown + (f" (+{rows.size - limit} more)" if rows.size > limit else "")


# --------------------------------------------------------------------------
# CSV and group-file IO
# --------------------------------------------------------------------------

def read_csv(path: Union[str, Path]) -> Dataset:
    """Load a dataset from CSV with a header row.

    Columns ``y``, ``d`` and ``z`` are bound by name; every other column is a
    covariate. Empty cells are read as NaN and rejected later by ``validate``.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        rows = [row for row in reader if row]
    missing = [c for c in ("y", "d", "z") if c not in header]
    if missing:
        raise KeyError(f"{path}: missing required column(s): {', '.join(missing)}")
    bad = [i + 2 for i, row in enumerate(rows) if len(row) != len(header)]
    if bad:
        raise ValueError(f"{path}: wrong number of fields on line(s) {bad[:10]}")
    data = np.array(
        [[float(v) if v.strip() != "" else math.nan for v in row] for row in rows],
        dtype=float,
    ).reshape(len(rows), len(header))
    col = {h: j for j, h in enumerate(header)}
    cov = [h for h in header if h not in ("y", "d", "z")]
    x = data[:, [col[h] for h in cov]] if cov else np.empty((len(rows), 0))
    return Dataset(data[:, col["y"]], data[:, col["d"]], data[:, col["z"]], x, tuple(cov))


def write_csv(dataset: Dataset, path: Union[str, Path]) -> None:
    """Write ``dataset`` as CSV; floats use 17 significant digits."""
    header = ["y", "d", "z", *dataset.names]
    block = np.column_stack([dataset.y, dataset.d, dataset.z, dataset.x])
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in block:
            writer.writerow([_fmt17(v) for v in row])


def _fmt17(v: float) -> str:
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return f"{v:.17g}"


def read_groups(path: Union[str, Path]) -> dict:
    """Parse a benchmark group file with lines ``name: col1,col2,...``."""
    groups = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'name: col1,col2,...'")
        name, cols = line.split(":", 1)
        members = [c.strip() for c in cols.split(",") if c.strip()]
        if not name.strip() or not members:
            raise ValueError(f"{path}:{lineno}: empty group name or column list")
        groups[name.strip()] = members
    return groups


# --------------------------------------------------------------------------
# Estimation results
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ShortEstimates:
    """Short-version parameters, their covariance and per-observation scores.

    ``omega`` is the approximate covariance of sqrt(n) times the estimator
    vector ``(lambda_s, gamma_s, v_s2, sigma_Ys2, sigma_Ds2)``; ``scores``
    holds the centred moment functions (n x 5) in the same order.
    """

    lambda_s: float
    gamma_s: float
    v_s2: float
    sigma_Ys2: float
    sigma_Ds2: float
    omega: np.ndarray
    n: int
    scores: Optional[np.ndarray] = None
    estimand: Estimand = Estimand.LATE

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        if omega.shape != (5, 5):
            raise ValueError(f"omega must be 5x5, got {omega.shape}")
        object.__setattr__(self, "omega", omega)
        for name in ("v_s2", "sigma_Ys2", "sigma_Ds2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def theta_s(self) -> float:
        if abs(self.gamma_s) < 1e-12:
            return math.nan
        return self.lambda_s / self.gamma_s

    @property
    def vector(self) -> np.ndarray:
        return np.array(
            [self.lambda_s, self.gamma_s, self.v_s2, self.sigma_Ys2, self.sigma_Ds2]
        )

    @property
    def se(self) -> np.ndarray:
        """Standard errors of the five estimates."""
        return np.sqrt(np.clip(np.diag(self.omega), 0.0, None) / self.n)

    @property
    def S_Y(self) -> float:
        return math.sqrt(self.sigma_Ys2 * self.v_s2)

    @property
    def S_D(self) -> float:
        return math.sqrt(self.sigma_Ds2 * self.v_s2)

    def theta_ci(self, level: float = 0.95) -> tuple:
        """Delta-method confidence interval for ``theta_s``."""
        from scipy.stats import norm

        if not math.isfinite(self.theta_s):
            return (math.nan, math.nan)
        grad = np.array([1.0, -self.theta_s]) / self.gamma_s
        var = grad @ self.omega[:2, :2] @ grad / self.n
        half = norm.ppf(0.5 + level / 2) * math.sqrt(max(var, 0.0))
        return (self.theta_s - half, self.theta_s + half)

    def with_vector(self, vector, omega, scores=None) -> "ShortEstimates":
        v = np.asarray(vector, dtype=float)
        return ShortEstimates(*[float(a) for a in v], omega=omega, n=self.n,
                              scores=scores, estimand=self.estimand)

    def to_dict(self) -> dict:
        out = {name: float(val) for name, val in zip(PARAM_NAMES, self.vector)}
        out["theta_s"] = self.theta_s if math.isfinite(self.theta_s) else None
        out["n"] = int(self.n)
        out["estimand"] = self.estimand.value
        out["omega"] = self.omega.tolist()
        out["se"] = dict(zip(PARAM_NAMES, self.se.tolist()))
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ShortEstimates":
        return cls(
            *[float(data[k]) for k in PARAM_NAMES],
            omega=np.array(data["omega"], dtype=float),
            n=int(data["n"]),
            estimand=Estimand.parse(data.get("estimand", "late")),
        )


@dataclass(frozen=True)
class SensitivityConfig:
    """Researcher-chosen strength of the omitted variable.

    ``c_alpha``, ``c_y`` and ``c_d`` are the unit-free gains in explanatory
    power for the weight, outcome and treatment; ``rho_y_abs`` and
    ``rho_d_abs`` bound the correlation between weight and regression errors.
    """

    c_alpha: float = 0.0
    c_y: float = 0.0
    c_d: float = 0.0
    rho_y_abs: float = 1.0
    rho_d_abs: float = 1.0

    def __post_init__(self):
        for name in ("c_alpha", "c_y", "c_d"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {val}")
        for name in ("rho_y_abs", "rho_d_abs"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {val}")

    @property
    def zeta_y(self) -> float:
        return self.rho_y_abs * self.c_y * self.c_alpha

    @property
    def zeta_d(self) -> float:
        return self.rho_d_abs * self.c_d * self.c_alpha

    @classmethod
    def from_zeta(cls, zeta_y: float, zeta_d: float) -> "SensitivityConfig":
        """Config whose products equal the given values (c_alpha fixed at 1)."""
        return cls(c_alpha=1.0, c_y=zeta_y, c_d=zeta_d, rho_y_abs=1.0, rho_d_abs=1.0)


# --------------------------------------------------------------------------
# Identification sets
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    kind = "interval"

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"interval requires lo <= hi, got ({self.lo}, {self.hi})")

    def contains(self, t: float) -> bool:
        return self.lo <= t <= self.hi

    def to_dict(self) -> dict:
        return {"kind": self.kind, "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class UnionOfRays:
    """The set ``(-inf, left_hi] U [right_lo, inf)``."""

    left_hi: float
    right_lo: float
    kind = "union_of_rays"

    def __post_init__(self):
        if not self.left_hi < self.right_lo:
            raise ValueError("union of rays requires left_hi < right_lo")

    def contains(self, t: float) -> bool:
        return t <= self.left_hi or t >= self.right_lo

    def to_dict(self) -> dict:
        return {"kind": self.kind, "left_hi": self.left_hi, "right_lo": self.right_lo}


@dataclass(frozen=True)
class WholeLine:
    kind = "whole_line"

    def contains(self, t: float) -> bool:
        return True

    def to_dict(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True)
class BoundSet:
    """Bounds on the reduced form, the first stage and the ratio.

    ``theta_set`` is the raw identification set (``None`` when a first-stage
    endpoint is zero and the set is undefined). ``first_stage_failure`` is set
    whenever the first-stage bounds do not share a strict sign.
    """

    lambda_lo: float
    lambda_hi: float
    gamma_lo: float
    gamma_hi: float
    theta_set: Union[Interval, UnionOfRays, WholeLine, None]
    first_stage_failure: bool = False
    case: str = ""

    def __post_init__(self):
        if not self.lambda_lo <= self.lambda_hi:
            raise ValueError("lambda_lo must not exceed lambda_hi")
        if not self.gamma_lo <= self.gamma_hi:
            raise ValueError("gamma_lo must not exceed gamma_hi")

    @property
    def delta_lambda(self) -> float:
        return self.lambda_hi - self.lambda_lo

    def to_dict(self) -> dict:
        return {
            "lambda": [self.lambda_lo, self.lambda_hi],
            "gamma": [self.gamma_lo, self.gamma_hi],
            "theta_set": None if self.theta_set is None else self.theta_set.to_dict(),
            "first_stage_failure": self.first_stage_failure,
            "case": self.case,
        }


@dataclass(frozen=True)
class StoyeResult:
    """Shrinkage-based confidence interval and its solver diagnostics."""

    ci: Optional[tuple]
    z_l_star: float
    z_u_star: float
    delta_star: float
    min_objective: float
    rho_hat: float = 1.0

    @property
    def empty(self) -> bool:
        return self.ci is None

    def to_dict(self) -> dict:
        return {
            "ci": None if self.ci is None else list(self.ci),
            "z_l_star": self.z_l_star,
            "z_u_star": self.z_u_star,
            "delta_star": self.delta_star,
            "min_objective": self.min_objective,
            "rho_hat": self.rho_hat,
        }


@dataclass(frozen=True)
class CIReport:
    """All confidence-interval families for one estimate and one config."""

    tau: float
    lambda_ci: tuple
    gamma_ci: tuple
    theta0_ci: Optional[tuple]
    conventional: dict = field(default_factory=dict)
    stoye: dict = field(default_factory=dict)
    phi_curve: Optional[np.ndarray] = None

    def __post_init__(self):
        if not 0.0 < self.tau <= 0.5:
            raise ValueError(f"tau must lie in (0, 0.5], got {self.tau}")
        for label in ("lambda_ci", "gamma_ci", "theta0_ci"):
            ci = getattr(self, label)
            if ci is not None and ci[0] > ci[1]:
                raise ValueError(f"{label} has lo > hi")

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "lambda_ci": list(self.lambda_ci),
            "gamma_ci": list(self.gamma_ci),
            "theta0_ci": None if self.theta0_ci is None else list(self.theta0_ci),
            "conventional": {k: list(v) for k, v in self.conventional.items()},
            "stoye": {k: v.to_dict() for k, v in self.stoye.items()},
        }
