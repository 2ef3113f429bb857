import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ivovb import LearnerSpec, SensitivityConfig, ShortEstimates
from ivovb.model import Dataset
from ivovb.sensitivity import (
    BenchmarkResult,
    benchmark_calibrate,
    benchmark_from_estimates,
    bias_bound_gamma,
    bias_bound_lambda,
    c_alpha_from_r2,
    max_over_groups,
)
from ivovb.simdgp import generate, oracle_benchmark, oracle_config, oracle_truth, random_spec


def _est(lam=1.0, gam=0.5, v2=1.0, sy2=4.0, sd2=1.0):
    return ShortEstimates(lam, gam, v2, sy2, sd2, np.eye(5), 100)


def test_zero_c_y_collapses():
    assert bias_bound_lambda(_est(), SensitivityConfig(c_alpha=0.3, c_y=0.0)) == (1.0, 1.0)


def test_lambda_arithmetic():
    assert bias_bound_lambda(_est(), SensitivityConfig(c_alpha=0.5, c_y=0.5)) == (0.5, 1.5)


def test_gamma_collapse_and_table_shape():
    assert bias_bound_gamma(_est(), SensitivityConfig(c_alpha=0.3, c_d=0.0)) == (0.5, 0.5)
    lo, hi = bias_bound_gamma(_est(gam=0.61, sd2=0.2, v2=4.5), SensitivityConfig(0.05, 0.0, 0.01))
    assert 0 < lo < 0.61 < hi


@pytest.mark.parametrize("r2,expected", [(1.0, 0.0), (0.5, 1.0), (0.8, 0.5)])
def test_c_alpha_from_r2(r2, expected):
    assert c_alpha_from_r2(r2) == pytest.approx(expected)


def test_c_alpha_from_r2_domain():
    with pytest.raises(ValueError):
        c_alpha_from_r2(0.0)


@pytest.mark.parametrize("kind", ["late", "latt", "plivm"])
def test_true_values_inside_oracle_bounds(kind):
    for seed in range(5):
        truth = oracle_truth(random_spec(kind, seed=seed))
        est = ShortEstimates(truth.lambda_s, truth.gamma_s, truth.v_s2, truth.sigma_Ys2,
                             truth.sigma_Ds2, np.eye(5), 100)
        cfg = oracle_config(truth)
        lo, hi = bias_bound_lambda(est, cfg)
        assert lo - 1e-12 <= truth.lambda_ <= hi + 1e-12
        lo, hi = bias_bound_gamma(est, cfg)
        assert lo - 1e-12 <= truth.gamma <= hi + 1e-12


@given(st.floats(0, 2), st.floats(0, 2), st.floats(0, 2), st.floats(0, 1), st.floats(0, 0.5))
def test_bounds_widen_and_centre(ca, cy, cd, r, bump):
    est = _est()
    base = SensitivityConfig(ca, cy, cd, r, r)
    lo, hi = bias_bound_lambda(est, base)
    assert 0.5 * (lo + hi) == pytest.approx(est.lambda_s)
    for cfg in (SensitivityConfig(ca + bump, cy, cd, r, r), SensitivityConfig(ca, cy + bump, cd, r, r),
                SensitivityConfig(ca, cy, cd, min(1, r + bump), r)):
        lo2, hi2 = bias_bound_lambda(est, cfg)
        assert lo2 <= lo + 1e-15 and hi2 >= hi - 1e-15
    glo, ghi = bias_bound_gamma(est, base)
    glo2, ghi2 = bias_bound_gamma(est, SensitivityConfig(ca, cy, cd + bump, r, r))
    assert glo2 <= glo + 1e-15 and ghi2 >= ghi - 1e-15


def test_benchmark_null_group():
    est = _est()
    res = benchmark_from_estimates(est, est, group="null")
    assert res.c_alpha == res.c_y == res.c_d == 0.0


def test_benchmark_kg_error_names_value():
    full = _est(v2=1.0)
    red = _est(v2=0.4)  # r2 = 0.4 -> G = 1.5
    with pytest.raises(ValueError, match="1.5"):
        benchmark_from_estimates(full, red, k_alpha=1.0)


def test_benchmark_negative_g_floored():
    full = _est(sy2=4.0)
    red = _est(sy2=3.9)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        res = benchmark_from_estimates(full, red)
    assert res.g_y == 0.0 and any(issubclass(x.category, RuntimeWarning) for x in w)


def test_benchmark_values():
    full = _est(v2=2.0, sy2=1.0, sd2=0.2)
    red = _est(v2=1.6, sy2=1.25, sd2=0.25)
    res = benchmark_from_estimates(full, red, k_alpha=2.0, k_y=1.0, k_d=0.5)
    g_a = (1 - 0.8) / 0.8
    assert res.g_alpha == pytest.approx(g_a)
    assert res.c_alpha == pytest.approx(math.sqrt(2 * g_a / (1 - 2 * g_a)))
    assert res.c_y == pytest.approx(math.sqrt(0.25))
    assert res.c_d == pytest.approx(math.sqrt(0.5 * 0.25))


def test_benchmark_matches_population_g():
    spec = random_spec("late", seed=6, x_levels=(3, 2), a_levels=2, n=60000, strength=1.0)
    data = generate(spec).dataset
    res = benchmark_calibrate(data, "late", ["x1"], spec=LearnerSpec(kind="saturated_cells"), K=5, seed=0)
    ob = oracle_benchmark(spec, [0])
    assert res.g_y == pytest.approx(ob.g_y, abs=0.01)
    assert res.g_alpha == pytest.approx(ob.g_alpha, abs=0.02)


def test_benchmark_unit_free():
    spec = random_spec("late", seed=6, x_levels=(3, 2), n=3000)
    data = generate(spec).dataset
    scaled = Dataset(1000.0 * data.y - 5.0, data.d, data.z, data.x, data.names)
    sat = LearnerSpec(kind="saturated_cells")
    a = benchmark_calibrate(data, "late", ["x1"], spec=sat, K=3, seed=1)
    b = benchmark_calibrate(scaled, "late", ["x1"], spec=sat, K=3, seed=1)
    assert b.c_y == pytest.approx(a.c_y, rel=1e-9) and b.c_alpha == pytest.approx(a.c_alpha, rel=1e-12)


def test_benchmark_group_checks():
    data = generate(random_spec("late", seed=1, x_levels=(3,), n=500)).dataset
    with pytest.raises(ValueError):
        benchmark_calibrate(data, "late", [], spec=LearnerSpec(kind="saturated_cells"))
    with pytest.raises(ValueError):
        benchmark_calibrate(data, "late", ["x1"], spec=LearnerSpec(kind="saturated_cells"))


def test_max_over_groups():
    mk = lambda g, a, y, d: BenchmarkResult(g, 0, 0, 0, a, y, d, 1, 1, 1)  # noqa: E731
    best = max_over_groups([mk("age", 0.1, 0.3, 0.0), mk("race", 0.2, 0.1, 0.05)])
    assert best["c_alpha"] == 0.2 and best["c_alpha_group"] == "race"
    assert best["c_y"] == 0.3 and best["c_y_group"] == "age"
