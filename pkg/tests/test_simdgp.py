import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import frozen
from oracles import enumerate_design
from ivovb import LearnerSpec
from ivovb.simdgp import (
    DgpSpec,
    generate,
    homogeneous_spec,
    independent_a_spec,
    jtpa_like_spec,
    oracle_config,
    oracle_truth,
    random_spec,
    replicate_rng,
    simulate_coverage,
)

DESIGNS = frozen("designs.json")


def test_frozen_oracle_reproducible():
    for item in DESIGNS[:6]:
        live = enumerate_design(DgpSpec.from_dict(item["spec"]))
        for k, v in item["oracle"].items():
            assert live[k] == pytest.approx(v, abs=1e-13)


@pytest.mark.parametrize("i", range(20))
def test_truth_matches_enumeration(i):
    item = DESIGNS[i]
    o = item["oracle"]
    t = oracle_truth(DgpSpec.from_dict(item["spec"]))
    for mine, ref in ((t.lambda_, "lambda"), (t.gamma, "gamma"), (t.lambda_s, "lambda_s"),
                      (t.gamma_s, "gamma_s"), (t.v_s2, "v2"), (t.sigma_Ys2, "sigma_y2"),
                      (t.sigma_Ds2, "sigma_d2")):
        assert mine == pytest.approx(o[ref], abs=1e-12)
    assert t.C_alpha ** 2 * t.v_s2 == pytest.approx(o["e_da2"], abs=1e-12)
    assert t.C_Y ** 2 * t.sigma_Ys2 == pytest.approx(o["e_dy2"], abs=1e-12)
    assert t.bias_lambda == pytest.approx(o["lambda"] - o["lambda_s"], abs=1e-12)
    assert t.bias_gamma == pytest.approx(o["gamma"] - o["gamma_s"], abs=1e-12)


@pytest.mark.parametrize("i", range(20))
def test_true_values_inside_bounds(i):
    t = oracle_truth(DgpSpec.from_dict(DESIGNS[i]["spec"]))
    lo, hi = t.lambda_bounds
    assert lo - 1e-12 <= t.lambda_ <= hi + 1e-12
    lo, hi = t.gamma_bounds
    assert lo - 1e-12 <= t.gamma <= hi + 1e-12


@pytest.mark.parametrize("kind", ["late", "latt"])
def test_ratio_equals_structural_effect(kind):
    for seed in range(5):
        t = oracle_truth(random_spec(kind, seed=seed))
        assert t.theta == pytest.approx(t.theta_structural, abs=1e-12)


def test_plivm_ratio_equals_theta():
    for seed in range(5):
        s = random_spec("plivm", seed=seed)
        assert oracle_truth(s).theta == pytest.approx(s.theta, abs=1e-12)


def test_homogeneous_effect():
    t = oracle_truth(homogeneous_spec(effect=2.5))
    assert t.theta == pytest.approx(2.5) and t.theta_s == pytest.approx(2.5)


@pytest.mark.parametrize("kind", ["late", "latt", "plivm"])
def test_independent_confounder_has_no_bias(kind):
    t = oracle_truth(independent_a_spec(kind, seed=3))
    assert abs(t.bias_lambda) < 1e-12 and abs(t.bias_gamma) < 1e-12
    assert t.C_alpha < 1e-6


def test_generate_shapes_and_determinism():
    s = random_spec("late", seed=1, x_levels=(2, 3), n=700)
    a = generate(s)
    b = generate(s)
    assert a.dataset.n == 700 and a.dataset.x.shape == (700, 2)
    assert np.array_equal(a.dataset.y, b.dataset.y)
    c = generate(s, rng=replicate_rng(s.seed, 1))
    assert not np.array_equal(a.dataset.y, c.dataset.y)


def test_generate_rejects_bad_n():
    with pytest.raises(ValueError):
        generate(random_spec(), n=0)


@pytest.mark.parametrize("kind", ["late", "plivm"])
def test_sample_moments_match_population(kind):
    s = random_spec(kind, seed=4, n=200_000)
    g = generate(s)
    pz = float(np.sum(s.p_xa * s.pi))
    assert g.dataset.z.mean() == pytest.approx(pz, abs=4 * math.sqrt(pz * (1 - pz) / s.n))
    pa = s.p_xa.sum(axis=0)
    freq = np.bincount(g.a, minlength=s.a_levels) / s.n
    assert np.max(np.abs(freq - pa)) < 4 * math.sqrt(0.25 / s.n)


def test_first_stage_sign():
    g = generate(random_spec("late", seed=2, n=50_000)).dataset
    assert g.d[g.z == 1].mean() > g.d[g.z == 0].mean()


def test_spec_validation():
    s = random_spec()
    with pytest.raises(ValueError, match="pi"):
        s.with_(pi=np.full_like(s.pi, 1.0))
    with pytest.raises(ValueError, match="p_xa"):
        s.with_(p_xa=s.p_xa * 2)


@given(st.sampled_from(["late", "latt", "plivm"]), st.integers(0, 10_000))
def test_spec_roundtrip(kind, seed):
    s = random_spec(kind, seed=seed)
    r = DgpSpec.from_dict(s.to_dict())
    assert r.to_json() == s.to_json()


@given(st.sampled_from(["late", "latt", "plivm"]), st.integers(0, 10_000), st.floats(0, 2))
def test_truth_inside_oracle_config_bounds(kind, seed, strength):
    t = oracle_truth(random_spec(kind, seed=seed, strength=strength))
    cfg = oracle_config(t)
    assert cfg.zeta_y * t.S_Y >= abs(t.bias_lambda) - 1e-12


def test_jtpa_like_scale():
    t = oracle_truth(jtpa_like_spec())
    assert 0.4 < t.gamma < 0.8 and 500 < t.lambda_ < 2000


def test_coverage_workers_independent():
    s = random_spec("late", seed=5, x_levels=(3,), n=600)
    a = simulate_coverage(s, reps=12, seed=3, workers=1)
    b = simulate_coverage(s, reps=12, seed=3, workers=2)
    assert a.to_dict() == b.to_dict()
    assert 0 <= a.lambda_bound_ci <= 1 and a.se(0.5) == pytest.approx(math.sqrt(0.25 / 12))


def test_coverage_learner_default_is_saturated():
    s = random_spec("late", seed=5, x_levels=(3,), n=600)
    a = simulate_coverage(s, reps=4, seed=1)
    b = simulate_coverage(s, reps=4, seed=1, learner=LearnerSpec(kind="saturated_cells"))
    assert a == b
