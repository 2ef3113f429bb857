import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import brentq, minimize_scalar

from conftest import frozen
from oracles import stoye_grid_oracle, stoye_prob_owen
from ivovb.stoye import StoyeSolverError, shrinkage_threshold, stoye_ci, stoye_constraint_prob


def test_prob_matches_owen_t_dense():
    r = np.random.default_rng(21)
    zl = r.uniform(-4, 5, 4000)
    c = r.uniform(-4, 5, 4000)
    for rho in (-0.999999, -0.9, -0.3, 0.2, 0.7, 0.99, 0.999999):
        assert np.max(np.abs(stoye_constraint_prob(zl, c, rho) - stoye_prob_owen(zl, c, rho))) < 1e-12


@pytest.mark.parametrize("rho", [-1.0, 0.0, 1.0])
def test_prob_closed_forms(rho):
    zl, c = np.array([-1.0, 0.3, 2.0]), np.array([0.5, 1.5, -0.2])
    assert np.allclose(stoye_constraint_prob(zl, c, rho), stoye_prob_owen(zl, c, rho), atol=1e-15)


def test_prob_mc_within_noise():
    # every frozen sampling estimate lies within 4 binomial s.e. of the quadrature
    rows = frozen("stoye_mc.json")
    for r in rows:
        p = float(stoye_constraint_prob(r["z_l"], r["c"], r["rho"]))
        se = math.sqrt(max(p * (1 - p), 1e-12) / r["draws"])
        assert abs(p - r["p_mc"]) <= 4 * se + 1e-12


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-0.99, 0.99), st.floats(0.01, 1))
def test_prob_monotone(zl, c, rho, bump):
    p = stoye_constraint_prob(zl, c, rho)
    assert stoye_constraint_prob(zl + bump, c, rho) >= p - 1e-15
    assert stoye_constraint_prob(zl, c + bump, rho) >= p - 1e-15


def test_shrinkage_threshold():
    assert shrinkage_threshold(1.0, 2.0, 1000) == pytest.approx(2 * math.sqrt(math.log(math.log(1000))))
    with pytest.raises(ValueError):
        shrinkage_threshold(1.0, 1.0, 1)


def test_point_identified_limit():
    r = stoye_ci(1.0, 1.0, 1.0, 1.0, 1.0, 1000, 0.05)
    assert r.delta_star == 0 and r.z_l_star == pytest.approx(1.96, abs=0.01)
    assert r.z_u_star == pytest.approx(1.96, abs=0.01)


def test_wide_interval_limit():
    r = stoye_ci(0.0, 50.0, 1.0, 1.0, 0.999, 1000, 0.05)
    assert r.z_l_star == pytest.approx(1.645, abs=0.01) and r.z_u_star == pytest.approx(1.645, abs=0.01)
    assert r.ci[0] == pytest.approx(-r.z_l_star) and r.ci[1] == pytest.approx(50 + r.z_u_star)


def test_crossing_endpoints_empty():
    r = stoye_ci(5.0, 0.0, 0.1, 0.1, 0.5, 1000, 0.05)
    assert r.ci is None and r.empty


def test_zero_se():
    r = stoye_ci(1.0, 2.0, 0.0, 0.0, 1.0, 100, 0.05)
    assert r.ci == (1.0, 2.0)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        stoye_ci(0, 1, 1, 1, 0.5, 100, 0.0)
    with pytest.raises(ValueError):
        stoye_ci(0, 1, -1, 1, 0.5, 100, 0.05)


def test_solver_error_is_runtime_error():
    assert issubclass(StoyeSolverError, RuntimeError)
    assert StoyeSolverError("x", {"a": 1}).diagnostics == {"a": 1}


def _solve(row):
    return stoye_ci(row["point_lo"], row["point_hi"], row["se_lo"], row["se_hi"], row["rho"], row["n"], row["tau"])


def test_never_worse_than_lattice():
    # the lattice minimum is a feasible point, so the exact optimum cannot be above it
    for row in frozen("stoye_grid.json"):
        r = _solve(row)
        assert r.delta_star == pytest.approx(row["delta_star"])
        obj = r.z_l_star * row["se_lo"] + r.z_u_star * row["se_hi"]
        assert obj <= row["objective"] + 1e-9


def test_feasible_at_solution():
    for row in frozen("stoye_grid.json"):
        r = _solve(row)
        dl = row["delta_star"] / row["se_lo"]
        du = row["delta_star"] / row["se_hi"]
        p1 = stoye_prob_owen(r.z_l_star, r.z_u_star + du, row["rho"])
        p2 = stoye_prob_owen(r.z_u_star, r.z_l_star + dl, row["rho"])
        assert min(p1, p2) >= 0.95 - 1e-9


def _continuous_oracle(se_lo, se_hi, dl, du, rho, tau):
    target = 1 - tau

    def zl_of(zu):
        f1 = lambda zl: stoye_prob_owen(zl, zu + du, rho) - target  # noqa: E731
        f2 = lambda zl: stoye_prob_owen(zu, zl + dl, rho) - target  # noqa: E731
        out = []
        for f in (f1, f2):
            if f(0.0) >= 0:
                out.append(0.0)
            elif f(12.0) < 0:
                return math.inf
            else:
                out.append(brentq(f, 0.0, 12.0, xtol=1e-14))
        return max(out)

    obj = lambda zu: se_lo * zl_of(zu) + se_hi * zu  # noqa: E731
    res = minimize_scalar(obj, bounds=(1.0, 6.0), method="bounded", options={"xatol": 1e-10})
    return zl_of(res.x), res.x


def test_continuous_oracle_agreement():
    for row in frozen("stoye_grid.json")[::3]:
        ds = row["delta_star"]
        zl, zu = _continuous_oracle(row["se_lo"], row["se_hi"], ds / row["se_lo"], ds / row["se_hi"],
                                    row["rho"], row["tau"])
        r = _solve(row)
        obj_o = row["se_lo"] * zl + row["se_hi"] * zu
        obj_s = row["se_lo"] * r.z_l_star + row["se_hi"] * r.z_u_star
        assert obj_s <= obj_o + 1e-8
        if ds > 0:
            assert r.z_l_star == pytest.approx(zl, abs=1e-5) and r.z_u_star == pytest.approx(zu, abs=1e-5)


def test_bisection_lattice_matches_exhaustive():
    # the frozen oracle bisects over z_l per z_u; compare with a full sweep on a window
    se_lo, se_hi, rho, ds = 1.2, 0.8, 0.4, 2.0
    zl_b, zu_b, obj_b = stoye_grid_oracle(se_lo, se_hi, ds, rho, 0.05, step=1e-2, lo=1.0, hi=3.0)
    g = np.round(np.arange(1.0, 3.0 + 5e-3, 1e-2), 10)
    ZL, ZU = np.meshgrid(g, g, indexing="ij")
    ok = (stoye_prob_owen(ZL, ZU + ds / se_hi, rho) >= 0.95) & (stoye_prob_owen(ZU, ZL + ds / se_lo, rho) >= 0.95)
    obj = np.where(ok, se_lo * ZL + se_hi * ZU, np.inf)
    i, j = np.unravel_index(np.argmin(obj), obj.shape)
    assert obj_b == pytest.approx(obj[i, j], abs=1e-12)


@given(st.floats(0.3, 3), st.floats(0.3, 3), st.floats(-0.95, 0.999), st.floats(0, 10))
def test_critical_values_bracketed(se_lo, se_hi, rho, delta):
    r = stoye_ci(0.0, delta, se_lo, se_hi, rho, 1000, 0.05)
    q1, q2 = 1.6448536269514722, 1.959963984540054
    assert q1 - 1e-6 <= r.z_l_star <= 3.5 and q1 - 1e-6 <= r.z_u_star <= 3.5
    # never worse than the feasible pair (q2, q2)
    assert r.z_l_star * se_lo + r.z_u_star * se_hi <= q2 * (se_lo + se_hi) + 1e-8
