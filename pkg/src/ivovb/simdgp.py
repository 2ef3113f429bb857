"""Synthetic data with an observed "omitted" variable and exact population values.

Covariates ``X`` (one or more discrete columns) and the confounder ``A`` live
on a finite grid, so every population quantity is an exact finite sum. The
generator hands estimators only ``(y, d, z, X)``; ``A`` is returned alongside
for oracle checks.

Binary-instrument designs (LATE/LATT) draw a compliance type
(always-taker, never-taker, complier) per unit; PLIVM designs draw Gaussian
errors in a partially linear model.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

import numpy as np

from .model import Dataset, Estimand

__all__ = [
    "DgpSpec",
    "GeneratedData",
    "OracleTruth",
    "OracleBenchmark",
    "CoverageSummary",
    "generate",
    "replicate_rng",
    "oracle_truth",
    "oracle_benchmark",
    "oracle_config",
    "random_spec",
    "homogeneous_spec",
    "independent_a_spec",
    "jtpa_like_spec",
    "simulate_coverage",
]

AT, NT, CO = 0, 1, 2  # type order in tables


@dataclass(frozen=True)
class DgpSpec:
    """Population tables for a finite-support design.

    Parameters
    ----------
    estimand : {"late", "latt", "plivm"}
    x_levels : tuple of int
        Number of levels of each covariate column; cells are indexed in
        row-major order.
    a_levels : int
        Number of levels of the confounder.
    p_xa : array (nx, na)
        Joint cell probabilities.
    pi : array (nx, na)
        ``P(Z = 1 | X, A)``.
    type_probs : array (3, nx, na), LATE/LATT only
        Always-taker, never-taker, complier probabilities.
    mu : array (3, 2, nx, na), LATE/LATT only
        Mean potential outcome by type and treatment.
    noise_sd : float
        Outcome noise around ``mu`` (LATE/LATT).
    theta, gamma, f, h, sd_y, sd_d, corr : PLIVM only
        ``D = gamma Z + h(X, A) + u_D``, ``Y = theta D + f(X, A) + u_Y``
        with ``(u_Y, u_D)`` jointly normal.
    n, seed
        Sample size and seed of :func:`generate`.
    """

    estimand: str
    x_levels: tuple
    a_levels: int
    p_xa: np.ndarray
    pi: np.ndarray
    type_probs: Optional[np.ndarray] = None
    mu: Optional[np.ndarray] = None
    noise_sd: float = 1.0
    theta: float = 0.0
    gamma: float = 0.0
    f: Optional[np.ndarray] = None
    h: Optional[np.ndarray] = None
    sd_y: float = 1.0
    sd_d: float = 1.0
    corr: float = 0.0
    n: int = 1000
    seed: int = 0

    def __post_init__(self):
        est = Estimand.parse(self.estimand)
        object.__setattr__(self, "estimand", est.value)
        object.__setattr__(self, "x_levels", tuple(int(v) for v in np.atleast_1d(self.x_levels)))
        nx, na = self.nx, int(self.a_levels)
        for name in ("p_xa", "pi", "type_probs", "mu", "f", "h"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, np.asarray(val, dtype=float))
        errors = []
        if any(v < 1 for v in self.x_levels) or na < 1:
            errors.append("support sizes must be positive")
        if self.p_xa.shape != (nx, na) or self.pi.shape != (nx, na):
            errors.append(f"p_xa and pi must have shape ({nx}, {na})")
        else:
            if np.any(self.p_xa <= 0) or abs(self.p_xa.sum() - 1.0) > 1e-12:
                errors.append("p_xa must be positive and sum to 1")
            if np.any((self.pi <= 0) | (self.pi >= 1)):
                errors.append("pi must lie strictly inside (0, 1)")
        if est.binary_instrument:
            if self.type_probs is None or self.type_probs.shape != (3, nx, na):
                errors.append(f"type_probs must have shape (3, {nx}, {na})")
            elif np.any(self.type_probs < 0) or np.any(np.abs(self.type_probs.sum(axis=0) - 1) > 1e-12):
                errors.append("type probabilities must be >= 0 and sum to 1 per cell")
            if self.mu is None or self.mu.shape != (3, 2, nx, na):
                errors.append(f"mu must have shape (3, 2, {nx}, {na})")
            if not self.noise_sd >= 0:
                errors.append("noise_sd must be >= 0")
        else:
            for name in ("f", "h"):
                val = getattr(self, name)
                if val is None or val.shape != (nx, na):
                    errors.append(f"{name} must have shape ({nx}, {na})")
            if not (self.sd_y > 0 and self.sd_d > 0):
                errors.append("PLIVM noise scales must be > 0")
            if not -1 < self.corr < 1:
                errors.append("corr must lie in (-1, 1)")
        if errors:
            raise ValueError("invalid DgpSpec: " + "; ".join(errors))

    @property
    def nx(self) -> int:
        return int(np.prod(self.x_levels))

    @property
    def kind(self) -> Estimand:
        return Estimand.parse(self.estimand)

    def with_(self, **changes) -> "DgpSpec":
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d.update(changes)
        return DgpSpec(**d)

    def to_dict(self) -> dict:
        out = {}
        for k in self.__dataclass_fields__:
            v = getattr(self, k)
            out[k] = v.tolist() if isinstance(v, np.ndarray) else (list(v) if isinstance(v, tuple) else v)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "DgpSpec":
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class GeneratedData:
    """A draw: the estimation dataset plus the withheld confounder."""

    dataset: Dataset
    a: np.ndarray
    x_cell: np.ndarray


def replicate_rng(seed: int, rep: int = 0) -> np.random.Generator:
    """Counter-based stream for replication ``rep`` of a seeded experiment."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(rep)])))


def generate(spec: DgpSpec, n: Optional[int] = None, rng: Optional[np.random.Generator] = None) -> GeneratedData:
    """Draw an i.i.d. sample of size ``n`` (default ``spec.n``)."""
    n = spec.n if n is None else int(n)
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    rng = replicate_rng(spec.seed) if rng is None else rng
    nx, na = spec.nx, spec.a_levels
    flat = rng.choice(nx * na, size=n, p=spec.p_xa.ravel())
    xc, a = np.divmod(flat, na)
    z = (rng.random(n) < spec.pi[xc, a]).astype(float)
    if spec.kind.binary_instrument:
        cum = np.cumsum(spec.type_probs[:, xc, a], axis=0)
        u = rng.random(n)
        typ = np.minimum((u[None, :] >= cum).sum(axis=0), 2)
        d = np.where(typ == AT, 1.0, np.where(typ == NT, 0.0, z))
        y = spec.mu[typ, d.astype(int), xc, a] + spec.noise_sd * rng.standard_normal(n)
    else:
        e = rng.standard_normal((n, 2))
        u_d = spec.sd_d * e[:, 0]
        u_y = spec.sd_y * (spec.corr * e[:, 0] + math.sqrt(1 - spec.corr**2) * e[:, 1])
        d = spec.gamma * z + spec.h[xc, a] + u_d
        y = spec.theta * d + spec.f[xc, a] + u_y
    x = np.column_stack(np.unravel_index(xc, spec.x_levels)).astype(float)
    names = tuple(f"x{j + 1}" for j in range(x.shape[1]))
    return GeneratedData(Dataset(y, d, z, x, names), a, xc)


# --------------------------------------------------------------------------
# exact enumeration
# --------------------------------------------------------------------------

class _Cells:
    """All (z, x, a) cells with probabilities and long-version moments."""

    def __init__(self, spec: DgpSpec):
        nx, na = spec.nx, spec.a_levels
        z, xc, a = np.meshgrid([0, 1], np.arange(nx), np.arange(na), indexing="ij")
        self.z, self.xc, self.a = z.ravel(), xc.ravel(), a.ravel()
        pi = spec.pi[self.xc, self.a]
        self.w = spec.p_xa[self.xc, self.a] * np.where(self.z == 1, pi, 1 - pi)
        self.spec = spec
        self.p_z = float(np.sum(self.w * self.z))
        if spec.kind.binary_instrument:
            tp = spec.type_probs[:, self.xc, self.a]
            d_of = np.stack([np.ones_like(self.z), np.zeros_like(self.z), self.z])  # by type
            mus = spec.mu[np.arange(3)[:, None], d_of, self.xc[None, :], self.a[None, :]]
            self.g_y = np.sum(tp * mus, axis=0)
            self.var_y = np.sum(tp * (mus - self.g_y) ** 2, axis=0) + spec.noise_sd**2
            self.g_d = tp[AT] + self.z * tp[CO]
            self.var_d = self.g_d * (1 - self.g_d)
        else:
            self.g_d = spec.gamma * self.z + spec.h[self.xc, self.a]
            self.g_y = spec.theta * self.g_d + spec.f[self.xc, self.a]
            th = spec.theta
            self.var_y = th**2 * spec.sd_d**2 + spec.sd_y**2 + 2 * th * spec.corr * spec.sd_d * spec.sd_y
            self.var_d = spec.sd_d**2 * np.ones_like(self.g_d)

    def mean(self, v) -> float:
        return float(np.sum(self.w * v))

    def cond_mean(self, v, key):
        """``E[v | key]`` evaluated at each cell."""
        _, inv = np.unique(key, return_inverse=True)
        inv = inv.ravel()
        num = np.bincount(inv, weights=self.w * v)
        den = np.bincount(inv, weights=self.w)
        return (num / den)[inv]

    def x_key(self, keep: Optional[Sequence[int]] = None, with_a: bool = False):
        digits = np.unravel_index(self.xc, self.spec.x_levels)
        cols = range(len(self.spec.x_levels)) if keep is None else keep
        key = np.zeros_like(self.xc)
        for j in cols:
            key = key * self.spec.x_levels[j] + digits[j]
        if with_a:
            key = key * self.spec.a_levels + self.a
        return key

    def version(self, xkey) -> dict:
        """Weight, regressions and residual variances given (Z, key)."""
        z = self.z.astype(float)
        pi = self.cond_mean(z, xkey)
        kind = self.spec.kind
        if kind is Estimand.LATE:
            alpha = z / pi - (1 - z) / (1 - pi)
        elif kind is Estimand.LATT:
            alpha = (z - pi / (1 - pi) * (1 - z)) / self.p_z
        else:
            alpha = (z - pi) / self.mean((z - pi) ** 2)
        zkey = xkey * 2 + self.z
        if kind.binary_instrument:
            g_y = self.cond_mean(self.g_y, zkey)
            g_d = self.cond_mean(self.g_d, zkey)
        else:
            # partially linear projection: slope on Z plus a function of the key
            zr = z - pi
            lam = self.mean(zr * self.g_y) / self.mean(zr**2)
            gam = self.mean(zr * self.g_d) / self.mean(zr**2)
            g_y = lam * z + self.cond_mean(self.g_y - lam * z, xkey)
            g_d = gam * z + self.cond_mean(self.g_d - gam * z, xkey)
        return {
            "alpha": alpha,
            "g_y": g_y,
            "g_d": g_d,
            "lambda": self.mean(alpha * g_y),
            "gamma": self.mean(alpha * g_d),
            "v2": self.mean(alpha**2),
            "sigma_y2": self.mean(self.var_y + (self.g_y - g_y) ** 2),
            "sigma_d2": self.mean(self.var_d + (self.g_d - g_d) ** 2),
        }


@dataclass(frozen=True)
class OracleTruth:
    """Exact long and short population quantities for a design."""

    theta: float
    lambda_: float
    gamma: float
    lambda_s: float
    gamma_s: float
    v_s2: float
    sigma_Ys2: float
    sigma_Ds2: float
    C_alpha: float
    C_Y: float
    C_D: float
    rho_Y: float
    rho_D: float
    bias_lambda: float
    bias_gamma: float
    theta_structural: float
    checks: dict = field(default_factory=dict)

    @property
    def theta_s(self) -> float:
        return self.lambda_s / self.gamma_s

    @property
    def S_Y(self) -> float:
        return math.sqrt(self.sigma_Ys2 * self.v_s2)

    @property
    def S_D(self) -> float:
        return math.sqrt(self.sigma_Ds2 * self.v_s2)

    @property
    def lambda_bounds(self) -> tuple:
        half = abs(self.rho_Y) * self.C_Y * self.C_alpha * self.S_Y
        return (self.lambda_s - half, self.lambda_s + half)

    @property
    def gamma_bounds(self) -> tuple:
        half = abs(self.rho_D) * self.C_D * self.C_alpha * self.S_D
        return (self.gamma_s - half, self.gamma_s + half)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lambda_")
        return d


def _gain(num: float, den: float) -> float:
    """``sqrt(num / den)``; a residual with no variance leaves no room to gain."""
    if den > 0:
        return math.sqrt(num / den)
    return 0.0 if num <= 0 else math.inf


def _corr(a, b, mean) -> float:
    den = math.sqrt(mean(a * a) * mean(b * b))
    return mean(a * b) / den if den > 0 else 0.0


def oracle_truth(spec: DgpSpec) -> OracleTruth:
    """Exact population values by enumeration of the finite support.

    ``checks`` records the weight-projection identities: the largest
    deviation of ``E[alpha | Z, X]`` from the short weight (LATE/LATT),
    ``E[alpha_s (alpha - alpha_s)]``, ``E[g_Ys (alpha - alpha_s)]`` and
    ``E[g_Ds (alpha - alpha_s)]``.
    """
    cells = _Cells(spec)
    m = cells.mean
    long = cells.version(cells.x_key(with_a=True))
    short = cells.version(cells.x_key())
    da = long["alpha"] - short["alpha"]
    dy = long["g_y"] - short["g_y"]
    dd = long["g_d"] - short["g_d"]
    v2 = short["v2"]
    checks = {
        "alpha_s_orthogonal": m(short["alpha"] * da),
        "g_ys_orthogonal": m(short["g_y"] * da),
        "g_ds_orthogonal": m(short["g_d"] * da),
    }
    if spec.kind.binary_instrument:
        proj = cells.cond_mean(long["alpha"], cells.x_key() * 2 + cells.z)
        checks["alpha_projection"] = float(np.max(np.abs(proj - short["alpha"])))
    structural = _structural_theta(spec)
    return OracleTruth(
        theta=long["lambda"] / long["gamma"],
        lambda_=long["lambda"],
        gamma=long["gamma"],
        lambda_s=short["lambda"],
        gamma_s=short["gamma"],
        v_s2=v2,
        sigma_Ys2=short["sigma_y2"],
        sigma_Ds2=short["sigma_d2"],
        C_alpha=_gain(m(da**2), v2),
        C_Y=_gain(m(dy**2), short["sigma_y2"]),
        C_D=_gain(m(dd**2), short["sigma_d2"]),
        rho_Y=_corr(da, dy, m),
        rho_D=_corr(da, dd, m),
        bias_lambda=m(da * dy),
        bias_gamma=m(da * dd),
        theta_structural=structural,
        checks=checks,
    )


def _structural_theta(spec: DgpSpec) -> float:
    """Effect computed from potential outcomes rather than from the ratio."""
    if not spec.kind.binary_instrument:
        return float(spec.theta)
    pc = spec.type_probs[CO]
    effect = spec.mu[CO, 1] - spec.mu[CO, 0]
    w = spec.p_xa * pc
    if spec.kind is Estimand.LATT:
        w = w * spec.pi
    return float(np.sum(w * effect) / np.sum(w))


def oracle_config(truth: OracleTruth):
    """Sensitivity config equal to the design's true values."""
    from .model import SensitivityConfig

    return SensitivityConfig(
        c_alpha=truth.C_alpha, c_y=truth.C_Y, c_d=truth.C_D,
        rho_y_abs=min(1.0, abs(truth.rho_Y)), rho_d_abs=min(1.0, abs(truth.rho_D)),
    )


@dataclass(frozen=True)
class OracleBenchmark:
    """Population benchmark ratios for dropping covariate columns."""

    r2_alpha_drop: float
    r2_y_drop: float
    r2_d_drop: float
    g_alpha: float
    g_y: float
    g_d: float
    k_alpha: float


def oracle_benchmark(spec: DgpSpec, drop: Sequence[int]) -> OracleBenchmark:
    """Exact ``R^2`` ratios and ``G`` values for removing columns ``drop``.

    ``k_alpha`` is the confounder's true strength relative to the dropped
    group for the weight.
    """
    cells = _Cells(spec)
    p = len(spec.x_levels)
    keep = [j for j in range(p) if j not in set(drop)]
    if not keep:
        raise ValueError("removing the group leaves zero covariates")
    full = cells.version(cells.x_key())
    red = cells.version(cells.x_key(keep))
    long = cells.version(cells.x_key(with_a=True))
    r2_a = red["v2"] / full["v2"]
    r2_y = full["sigma_y2"] / red["sigma_y2"]
    r2_d = full["sigma_d2"] / red["sigma_d2"]
    r2_long_red = red["v2"] / long["v2"]
    k_alpha = (r2_a - r2_long_red) / (1 - r2_a) if r2_a < 1 else math.nan
    return OracleBenchmark(
        r2_a, r2_y, r2_d,
        (1 - r2_a) / r2_a, (1 - r2_y) / r2_y, (1 - r2_d) / r2_d,
        k_alpha,
    )


# --------------------------------------------------------------------------
# design factories
# --------------------------------------------------------------------------

def _norm(p):
    return p / p.sum()


def random_spec(
    estimand="late",
    seed: int = 0,
    x_levels=(2, 3),
    a_levels: int = 2,
    n: int = 2000,
    strength: float = 1.0,
    noise_sd: float = 1.0,
) -> DgpSpec:
    """A random design whose dependence on ``A`` scales with ``strength``."""
    rng = np.random.default_rng(seed)
    x_levels = tuple(np.atleast_1d(x_levels))
    nx = int(np.prod(x_levels))
    na = a_levels
    p_xa = _norm(rng.uniform(0.5, 1.5, (nx, na)))
    base = rng.uniform(-0.8, 0.8, (nx, 1)) + strength * rng.uniform(-0.8, 0.8, (nx, na))
    pi = 1 / (1 + np.exp(-base))
    pi = np.clip(pi, 0.1, 0.9)
    kind = Estimand.parse(estimand)
    if kind.binary_instrument:
        logits = rng.normal(0, 0.5, (3, nx, 1)) + strength * rng.normal(0, 0.6, (3, nx, na))
        logits[CO] += 1.0
        tp = np.exp(logits)
        tp /= tp.sum(axis=0, keepdims=True)
        mu = rng.normal(0, 1, (3, 2, nx, 1)) + strength * rng.normal(0, 1, (3, 2, nx, na))
        mu[:, 1] += 1.0
        return DgpSpec(kind.value, x_levels, na, p_xa, pi, tp, mu, noise_sd, n=n, seed=seed)
    f = rng.normal(0, 1, (nx, 1)) + strength * rng.normal(0, 1, (nx, na))
    h = rng.normal(0, 0.5, (nx, 1)) + strength * rng.normal(0, 0.5, (nx, na))
    return DgpSpec(
        kind.value, x_levels, na, p_xa, pi, theta=float(rng.uniform(0.5, 2.0)),
        gamma=float(rng.uniform(0.5, 1.5)), f=f, h=h, sd_y=noise_sd, sd_d=noise_sd,
        corr=float(rng.uniform(-0.5, 0.5)), n=n, seed=seed,
    )


def homogeneous_spec(effect: float = 2.0, x_levels=(2,), a_levels: int = 2, n: int = 2000, seed: int = 0, noise_sd: float = 1.0) -> DgpSpec:
    """``pi = 0.5``, everyone complies and ``Y1 - Y0`` equals ``effect``."""
    nx = int(np.prod(x_levels))
    shape = (nx, a_levels)
    tp = np.zeros((3,) + shape)
    tp[CO] = 1.0
    rng = np.random.default_rng(seed)
    mu0 = rng.normal(0, 1, shape)
    mu = np.zeros((3, 2) + shape)
    mu[:, 0] = mu0
    mu[:, 1] = mu0 + effect
    return DgpSpec("late", x_levels, a_levels, np.full(shape, 1 / (nx * a_levels)),
                   np.full(shape, 0.5), tp, mu, noise_sd, n=n, seed=seed)


def independent_a_spec(estimand="late", seed: int = 0, x_levels=(3,), a_levels: int = 3, n: int = 2000) -> DgpSpec:
    """Design in which ``A`` is independent of ``(Y, D, Z)`` given ``X``."""
    base = random_spec(estimand, seed, x_levels, 1, n, strength=0.0)
    rng = np.random.default_rng(seed + 1)
    pa = _norm(rng.uniform(0.5, 1.5, a_levels))
    rep = lambda t: np.repeat(t, a_levels, axis=-1)  # noqa: E731
    changes = {"a_levels": a_levels, "p_xa": base.p_xa[:, :1] * pa[None, :], "pi": rep(base.pi)}
    if base.kind.binary_instrument:
        changes.update(type_probs=rep(base.type_probs), mu=rep(base.mu))
    else:
        changes.update(f=rep(base.f), h=rep(base.h))
    return base.with_(**changes)


def jtpa_like_spec(estimand="late", n: int = 5102, seed: int = 0) -> DgpSpec:
    """Earnings-scale design loosely shaped like a job-training experiment.

    Covariates: age group (5), race (3), married (2), high-school diploma (2),
    prior work (2); the confounder is a 3-level "motivation" index. About
    two thirds are offered training, compliance is around 0.6 and the
    intention-to-treat effect on earnings is around 1000.
    """
    rng = np.random.default_rng(seed)
    x_levels = (5, 3, 2, 2, 2)
    nx = int(np.prod(x_levels))
    na = 3
    px = _norm(rng.uniform(0.5, 1.5, nx))
    pa_x = rng.dirichlet(np.full(na, 4.0), size=nx)
    p_xa = px[:, None] * pa_x
    pi = np.clip(0.67 + rng.normal(0, 0.03, (nx, na)), 0.55, 0.8)
    digits = np.column_stack(np.unravel_index(np.arange(nx), x_levels))
    motiv = np.arange(na)[None, :] - 1.0
    lin_c = 0.5 + 0.15 * digits[:, [3]] + 0.1 * digits[:, [4]] - 0.05 * digits[:, [0]] + 0.35 * motiv
    lin_at = -3.0 + 0.2 * motiv + 0 * digits[:, [0]]
    logits = np.stack([lin_at, np.zeros((nx, na)), lin_c])
    tp = np.exp(logits)
    tp /= tp.sum(axis=0, keepdims=True)
    base = (9000 + 1500 * digits[:, [3]] + 2500 * digits[:, [4]] + 600 * digits[:, [0]]
            - 800 * digits[:, [2]] + 2500 * motiv)
    effect = 1100 + 300 * digits[:, [3]] + 900 * motiv
    mu = np.empty((3, 2, nx, na))
    for t, shift in ((AT, 1500.0), (NT, -1000.0), (CO, 0.0)):
        mu[t, 0] = base + shift
        mu[t, 1] = base + shift + effect
    return DgpSpec(Estimand.parse(estimand).value, x_levels, na, p_xa, pi, tp, mu,
                   noise_sd=12000.0, n=n, seed=seed)


# --------------------------------------------------------------------------
# coverage experiments
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CoverageSummary:
    """Empirical coverage frequencies across replications."""

    reps: int
    tau: float
    stoye_tau: float
    lambda_bound_ci: float
    lambda_interval: float
    lambda_stoye: float
    gamma_bound_ci: float
    conventional_lambda_s: float
    failures: int = 0
    truth: dict = field(default_factory=dict)

    def se(self, rate: float) -> float:
        return math.sqrt(max(rate * (1 - rate), 0.0) / max(self.reps, 1))

    def to_dict(self) -> dict:
        return asdict(self)


def _one_rep(spec, truth, cfg, learner, K, tau, stoye_tau, seed, rep):
    from .crossfit import crossfit_estimate
    from .inference import bound_pair_stats, one_sided_ci, stoye_ci

    data = generate(spec, rng=replicate_rng(seed, rep)).dataset
    est = crossfit_estimate(data, spec.estimand, learner, K, seed=int(seed) * 100003 + rep).estimates
    lam = bound_pair_stats(est, cfg, "lambda")
    lam_ci = one_sided_ci(lam.point_lo, lam.point_hi, lam.se_lo, lam.se_hi, tau)
    gam = bound_pair_stats(est, cfg, "gamma")
    gam_ci = one_sided_ci(gam.point_lo, gam.point_hi, gam.se_lo, gam.se_hi, tau)
    st = stoye_ci(lam.point_lo, lam.point_hi, lam.se_lo, lam.se_hi, lam.rho_hat, est.n, stoye_tau)
    lo_t, hi_t = truth.lambda_bounds
    zero = bound_pair_stats(est, type(cfg)(), "lambda")
    conv = one_sided_ci(zero.point_lo, zero.point_hi, zero.se_lo, zero.se_hi, tau)
    return (
        lam_ci[0] <= truth.lambda_ <= lam_ci[1],
        lam_ci[0] <= lo_t and hi_t <= lam_ci[1],
        st.ci is not None and st.ci[0] <= truth.lambda_ <= st.ci[1],
        gam_ci[0] <= truth.gamma <= gam_ci[1],
        conv[0] <= truth.lambda_s <= conv[1],
    )


def simulate_coverage(
    spec: DgpSpec,
    reps: int = 500,
    tau: float = 0.025,
    stoye_tau: float = 0.05,
    learner=None,
    K: int = 5,
    seed: int = 0,
    cfg=None,
    workers: int = 1,
) -> CoverageSummary:
    """Coverage of the bound intervals over ``reps`` fresh samples.

    The sensitivity config defaults to the design's true values. Replication
    ``r`` draws from :func:`replicate_rng` ``(seed, r)``, so results do not
    depend on ``workers``.
    """
    from .learners import LearnerSpec

    truth = oracle_truth(spec)
    cfg = oracle_config(truth) if cfg is None else cfg
    learner = LearnerSpec(kind="saturated_cells") if learner is None else learner
    args = (spec, truth, cfg, learner, K, tau, stoye_tau, seed)
    if workers and workers > 1:
        from joblib import Parallel, delayed

        rows = Parallel(n_jobs=workers)(delayed(_one_rep)(*args, r) for r in range(reps))
    else:
        rows = [_one_rep(*args, r) for r in range(reps)]
    hits = np.array(rows, dtype=float)
    rates = hits.mean(axis=0) if len(rows) else np.full(5, math.nan)
    return CoverageSummary(
        reps, tau, stoye_tau, *map(float, rates),
        truth={"lambda": truth.lambda_, "lambda_s": truth.lambda_s,
               "lambda_bounds": list(truth.lambda_bounds), "gamma": truth.gamma},
    )
