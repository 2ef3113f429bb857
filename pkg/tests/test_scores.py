import numpy as np
import pytest
from hypothesis import given, strategies as st

from ivovb.scores import (
    NuisanceValues,
    jacobian,
    late_score_row,
    latt_score_row,
    plivm_jacobian,
    plivm_score_row,
)
from oracles import plugin_itt


def _nv(**kw):
    base = dict(pi_s=np.array([0.5]), ey1=np.array([1.0]), ey0=np.array([0.0]),
                ed1=np.array([0.0]), ed0=np.array([0.0]))
    base.update({k: np.atleast_1d(np.asarray(v, float)) if k != "p_z" else v for k, v in kw.items()})
    return NuisanceValues(**base)


def test_late_arithmetic_treated():
    row = late_score_row([2.0], [1.0], [1.0], _nv())
    assert row.s_lambda[0] == pytest.approx(3.0)


def test_late_zero_residual():
    row = late_score_row([0.0], [0.0], [0.0], _nv(ey1=0.0, ey0=0.0))
    assert row.s_lambda[0] == 0.0 and row.s_alpha2[0] == pytest.approx(4.0)


def test_late_rejects_degenerate_propensity():
    with pytest.raises(ValueError):
        late_score_row([1.0], [1.0], [1.0], _nv(pi_s=1.0))


def test_latt_arithmetic():
    row = latt_score_row([2.0], [1.0], [1.0], _nv(p_z=0.5))
    assert row.s_lambda[0] == pytest.approx(4.0)


def test_latt_untreated_zero_residual():
    row = latt_score_row([0.3], [0.0], [0.0], _nv(ey0=0.3, ey1=5.0, p_z=0.5))
    assert row.s_lambda[0] == pytest.approx(0.0)


def test_latt_needs_p_z():
    with pytest.raises(ValueError):
        latt_score_row([1.0], [1.0], [1.0], _nv())
    with pytest.raises(ValueError):
        latt_score_row([1.0], [1.0], [1.0], _nv(pi_s=1.0, p_z=0.5))


def test_plivm_arithmetic():
    nv = NuisanceValues(m=np.array([1.0]), r=np.array([0.0]), l=np.array([0.5]))
    assert plivm_score_row([3.0], [0.0], [1.0], nv).s_lambda[0] == pytest.approx(1.0)


def test_plivm_degenerate_instrument():
    nv = NuisanceValues(m=np.array([1.0]), r=np.array([2.0]), l=np.array([0.7]))
    row = plivm_score_row([3.0], [1.0], [0.7], nv)
    assert row.s_lambda[0] == row.s_gamma[0] == row.s_alpha2[0] == 0.0


def test_plivm_linear_gaussian_recovers_reduced_form(rng):
    # Z independent of X, so l is constant; reduced form slope is theta*gamma
    n = 200_000
    x = rng.normal(size=n)
    z = rng.normal(size=n)
    d = 0.8 * z + x + rng.normal(size=n)
    y = 1.5 * d + 0.5 * x + rng.normal(size=n)
    nv = NuisanceValues(m=1.5 * x + 0.5 * x, r=x, l=np.full(n, z.mean()))
    row = plivm_score_row(y, d, z, nv)
    lam = row.s_lambda.mean() / row.s_alpha2.mean()
    ols = np.polyfit(z, y - nv.m, 1)[0]
    assert lam == pytest.approx(ols, rel=1e-9)
    assert lam == pytest.approx(1.2, abs=0.02)


def test_jacobians():
    assert np.array_equal(plivm_jacobian(1.0), -np.eye(5))
    jac = plivm_jacobian(0.25)
    assert jac[0, 0] == jac[1, 1] == -0.25 and jac[2, 2] == -1.0
    assert np.array_equal(jacobian("late", 0.3), -np.eye(5))
    with pytest.raises(ValueError):
        plivm_jacobian(0.0)


def test_late_constant_propensity_is_difference_in_means(rng):
    n = 400
    z = (rng.random(n) < 0.4).astype(float)
    y = rng.normal(size=n) + z
    pi = z.mean()
    ey1, ey0 = y[z == 1].mean(), y[z == 0].mean()
    row = late_score_row(y, z, z, NuisanceValues(np.full(n, pi), np.full(n, ey1), np.full(n, ey0),
                                                  np.ones(n), np.zeros(n)))
    assert row.s_lambda.mean() == pytest.approx(ey1 - ey0, abs=1e-12)


def test_saturated_in_sample_equals_cell_plugin(rng):
    # in-sample cell means: the doubly robust mean collapses to the plug-in ITT
    n = 600
    x = rng.integers(0, 4, (n, 1)).astype(float)
    z = (rng.random(n) < 0.3 + 0.1 * x[:, 0]).astype(float)
    y = rng.normal(size=n) + x[:, 0] * z
    d = z
    cells = x[:, 0]
    pi = np.array([z[cells == c].mean() for c in cells])
    ey1 = np.array([y[(cells == c) & (z == 1)].mean() for c in cells])
    ey0 = np.array([y[(cells == c) & (z == 0)].mean() for c in cells])
    nv = NuisanceValues(pi, ey1, ey0, np.ones(n), np.zeros(n), p_z=z.mean())
    assert late_score_row(y, d, z, nv).s_lambda.mean() == pytest.approx(plugin_itt(y, z, x, "late"), abs=1e-12)
    assert latt_score_row(y, d, z, nv).s_lambda.mean() == pytest.approx(plugin_itt(y, z, x, "latt"), abs=1e-12)


@given(st.floats(0.05, 0.95), st.integers(0, 1))
def test_alpha2_nonnegative_and_floor(pi, z):
    row = late_score_row([0.0], [0.0], [float(z)], _nv(pi_s=pi))
    assert row.s_alpha2[0] >= 1.0


def test_late_alpha2_mean_at_half(rng):
    z = (rng.random(1000) < 0.5).astype(float)
    nv = NuisanceValues(np.full(1000, 0.5), np.zeros(1000), np.zeros(1000), np.zeros(1000), np.zeros(1000))
    assert late_score_row(np.zeros(1000), z, z, nv).s_alpha2.mean() >= 4.0


def test_plivm_location_invariance(rng):
    n = 500
    z = rng.normal(size=n)
    y = z + rng.normal(size=n)
    l = np.zeros(n)
    a = plivm_score_row(y, y, z, NuisanceValues(m=np.full(n, y.mean()), r=np.zeros(n), l=l))
    b = plivm_score_row(y + 7.0, y, z, NuisanceValues(m=np.full(n, y.mean() + 7.0), r=np.zeros(n), l=l))
    assert a.s_lambda.mean() / a.s_alpha2.mean() == pytest.approx(b.s_lambda.mean() / b.s_alpha2.mean(), rel=1e-12)
