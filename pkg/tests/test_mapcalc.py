import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from lambda_lab.checks import random_laurent_perturbation, random_mobius, random_similarity, random_taylor
from lambda_lab.mapcalc import (
    MapError,
    B_at_boundary,
    boundary_length_via_map,
    build_map,
    c3_integral_via_map,
    classify_rigidity,
    lambda_via_map,
    profile,
    pullback_v,
    recompose_outer,
)
from lambda_lab.models import constants, v_annulus
from lambda_lab.series import LaurentSeries, derivative, mobius_series, poly_series

seeds = st.integers(min_value=0, max_value=2**32 - 1)
BOUND = constants(0.5).lambda_bound


def _mobius(beta=0.5):
    return build_map(mobius_series(0.0, -1.0, 2.0, beta, 1.0), beta, require_outer=True)


def _identity(beta=0.5):
    return build_map(poly_series([0, 1], 0, beta, 1.0), beta)


def test_identity_map_is_outer_normalized():
    m = _identity()
    assert m.g.as_dict() == pytest.approx({0: 1.0})
    assert m.winding_fprime == 0 and m.outer_normalized


def test_mobius_map_builds_expected_g():
    m = _mobius()
    assert m.g.coeff(0) == pytest.approx(2.0) and m.g.coeff(1) == pytest.approx(1.0)
    assert m.winding_fprime == 0 and m.outer_normalized


def test_inversion_is_not_outer_normalized():
    f = LaurentSeries.from_dict({-1: 1.0}, 0.5, 1.0)
    m = build_map(f, 0.5)
    assert m.winding_fprime == -2 and not m.outer_normalized
    assert np.allclose(np.abs(f(np.exp(1j * np.linspace(0, 6, 9)))), 1.0)
    assert np.allclose(np.abs(f(0.5 * np.exp(1j * np.linspace(0, 6, 9)))), 2.0)
    with pytest.raises(MapError):
        build_map(f, 0.5, require_outer=True)
    with pytest.raises(MapError):
        lambda_via_map(m)


def test_recomposition_makes_inversion_outer():
    f = LaurentSeries.from_dict({-1: 1.0}, 0.5, 1.0)
    m = build_map(recompose_outer(f, 0.5), 0.5, require_outer=True)
    # 1/(beta/z) = 2z: a similarity, so the bound is attained
    rep = lambda_via_map(m)
    assert rep.lam == pytest.approx(BOUND, rel=1e-12) and rep.equality


def test_build_map_rejects_bad_input():
    with pytest.raises(MapError):
        build_map(poly_series([0, 1], 0, 0.6, 1.0), 0.5)
    with pytest.raises(MapError):
        build_map(poly_series([0, 1]), 1.0)
    with pytest.raises(MapError):
        # z + z^2 / 0.9 folds the unit circle
        build_map(poly_series([0, 1, 1 / 0.9], 0, 0.0, 1.0), 0.0)


def test_profile_identity():
    p = profile(_identity(), np.linspace(-0.6, -0.01, 20))
    assert np.allclose(p.A, 1.0) and np.allclose(p.B, 0.0)


def test_profile_mobius_value():
    # A does not depend on beta; beta = 0.4 puts t = -ln 2 inside (ln beta, 0)
    p = profile(_mobius(0.4), [-math.log(2)])
    assert p.A[0] == pytest.approx(4.25, rel=1e-14)
    assert abs(p.B[0]) < 1e-12


def test_profile_single_quadratic_term():
    f = LaurentSeries.from_dict({-1: -1.0}, 0.5, 1.0)  # g = z
    m = build_map(f, 0.5)
    g2 = LaurentSeries.from_dict({2: 1.0}, 0.5, 1.0)
    m = type(m)(m.f, m.beta, g2, m.winding_fprime, m.outer_normalized)
    ts = np.array([-0.5, -0.1, -1e-9])
    assert profile(m, ts, check=False).B == pytest.approx(8 * np.exp(4 * ts), rel=1e-12)
    assert B_at_boundary(m) == 8.0


def test_profile_rejects_t_out_of_range():
    with pytest.raises(MapError):
        profile(_identity(), [0.1])
    with pytest.raises(MapError):
        profile(_identity(), [math.log(0.4)])


def test_profile_matches_circle_mean_of_inverse_derivative():
    m = build_map(random_laurent_perturbation(np.random.default_rng(5), 0.5), 0.5)
    t = -0.3
    z = math.exp(t) * np.exp(2j * np.pi * np.arange(512) / 512)
    mean = np.mean(1 / np.abs(derivative(m.f)(z)))
    assert profile(m, [t]).A[0] == pytest.approx(mean, rel=1e-10)


@given(seed=seeds)
def test_B_nonnegative_on_random_series(seed):
    rng = np.random.default_rng(seed)
    m = build_map(random_laurent_perturbation(rng, 0.5), 0.5)
    ts = rng.uniform(math.log(0.5), 0, 50)
    assert np.min(profile(m, ts).B) >= -1e-12


@given(seed=seeds)
def test_B_vanishes_only_for_mobius(seed):
    rng = np.random.default_rng(seed)
    ts = np.linspace(-0.6, -0.05, 10)
    mob = build_map(random_mobius(rng, 0.5), 0.5)
    assert np.max(np.abs(profile(mob, ts).B)) < 1e-9 * np.max(profile(mob, ts).A)
    pert = build_map(random_laurent_perturbation(rng, 0.5), 0.5)
    assert np.max(profile(pert, ts).B) > 0


def test_c3_integral_examples():
    assert c3_integral_via_map(_identity()) == pytest.approx(-6 * constants(0.5).c3 * 2 * math.pi, rel=1e-13)
    assert c3_integral_via_map(_identity()) == pytest.approx(21.54229 * 2 * math.pi, abs=1e-4)
    assert c3_integral_via_map(_mobius()) == pytest.approx(676.771, abs=1e-3)
    disk = build_map(poly_series([0, 1]), 0.0)
    assert c3_integral_via_map(disk) == 0.0


def test_boundary_length_examples():
    assert boundary_length_via_map(_identity()) == pytest.approx(2 * math.pi, rel=1e-14)
    assert boundary_length_via_map(build_map(poly_series([7, 3], 0, 0.5, 1.0), 0.5)) == pytest.approx(6 * math.pi)
    assert boundary_length_via_map(_mobius()) == pytest.approx(2 * math.pi / 3, rel=1e-12)
    assert boundary_length_via_map(_mobius()) == pytest.approx(oracles.mobius_length(-1.0, 2.0), rel=1e-12)


def test_lambda_identity_attains_bound():
    rep = lambda_via_map(_identity())
    assert rep.lam == pytest.approx(oracles.lambda_bound(0.5), rel=1e-12)
    assert abs(rep.defect) < 1e-10 and rep.equality
    assert rep.lam == pytest.approx(-rep.boundary_length * rep.c3_integral, rel=1e-12)


def test_lambda_mobius_matches_boundary_expansion_oracle():
    rep = lambda_via_map(_mobius())
    assert rep.lam == pytest.approx(oracles.mobius_lambda(0.0, -1.0, 2.0, 0.5), rel=1e-10)
    assert rep.lam == pytest.approx(236.24, abs=5e-3)
    assert rep.defect > 0 and not rep.equality
    assert rep.b_tail_norm < 1e-20 and rep.holder_defect > 0


def test_lambda_off_centre_mobius_oracle():
    f = mobius_series(0.3 + 0.1j, 1.5j, 1.4 - 0.6j, 0.3, 1.0)
    rep = lambda_via_map(build_map(f, 0.3, require_outer=True))
    assert rep.lam == pytest.approx(oracles.mobius_lambda(0.3 + 0.1j, 1.5j, 1.4 - 0.6j, 0.3), rel=1e-9)


def test_similarity_keeps_bound():
    rep = lambda_via_map(build_map(poly_series([3 + 4j, 5], 0, 0.5, 1.0), 0.5))
    assert rep.lam == pytest.approx(BOUND, rel=1e-12) and rep.equality


@given(seed=seeds)
def test_defect_nonnegative(seed):
    rng = np.random.default_rng(seed)
    for f in (random_mobius(rng, 0.5), random_laurent_perturbation(rng, 0.5)):
        m = build_map(f, 0.5)
        if m.outer_normalized:
            rep = lambda_via_map(m)
            assert rep.defect >= -1e-8 and rep.holder_defect >= -1e-8 and rep.b_tail_norm >= 0


@given(seed=seeds)
def test_similarity_invariance(seed):
    rng = np.random.default_rng(seed)
    f = random_laurent_perturbation(rng, 0.5)
    a = complex(*rng.uniform(0.3, 3, 2))
    b = complex(*rng.uniform(-2, 2, 2))
    g = LaurentSeries.from_dict({**{k: a * c for k, c in f.as_dict().items()}, 0: a * f.coeff(0) + b}, 0.5, 1.0)
    r1, r2 = lambda_via_map(build_map(f, 0.5)), lambda_via_map(build_map(g, 0.5))
    assert r2.lam == pytest.approx(r1.lam, rel=1e-10)
    assert r2.defect == pytest.approx(r1.defect, rel=1e-9, abs=1e-9)
    assert r2.holder_defect == pytest.approx(r1.holder_defect, rel=1e-9, abs=1e-12)


@given(seed=seeds)
def test_equality_iff_similarity(seed):
    rng = np.random.default_rng(seed)
    for f in (random_similarity(rng, 0.5), random_mobius(rng, 0.5), random_laurent_perturbation(rng, 0.5)):
        m = build_map(f, 0.5)
        rep = lambda_via_map(m)
        assert rep.equality == classify_rigidity(m)["is_similarity"]


def test_classify_examples():
    c = classify_rigidity(_identity())
    assert c["is_mobius"] and c["is_similarity"]
    assert c["params"]["C2"] == pytest.approx(1.0)
    c = classify_rigidity(_mobius())
    assert c["is_mobius"] and not c["is_similarity"]
    assert c["params"]["C3"] == pytest.approx(2.0)
    assert c["params"]["C2"] == pytest.approx(-1.0)
    assert c["params"]["C1"] == pytest.approx(0.0, abs=1e-12)
    m = _identity()
    m = type(m)(m.f, m.beta, LaurentSeries.from_dict({0: 1.0, 2: 0.1}, 0.5, 1.0), 0, True)
    assert not classify_rigidity(m)["is_mobius"]


def test_disk_mode_taylor_maps():
    rng = np.random.default_rng(11)
    for _ in range(20):
        rep = lambda_via_map(build_map(random_taylor(rng), 0.0))
        assert rep.lam >= -1e-8 and rep.lower_bound == 0.0
    rep = lambda_via_map(build_map(poly_series([1 - 2j, 0.5 + 0.5j]), 0.0))
    assert abs(rep.lam) < 1e-10 and rep.equality


def test_pullback_identity_and_scaling():
    z = np.array([0.6, 0.75j, -0.9])
    pts = pullback_v(_identity(), z)
    assert np.allclose([v for _, v in pts], v_annulus(0.5, np.abs(z)))
    pts = pullback_v(build_map(poly_series([0, 2], 0, 0.5, 1.0), 0.5), z)
    assert np.allclose([w for w, _ in pts], 2 * z)
    assert np.allclose([v for _, v in pts], 2 * v_annulus(0.5, np.abs(z)))


def test_pullback_mobius_value():
    (w, v), = pullback_v(_mobius(), [0.75])
    assert w == pytest.approx(-1 / 2.75)
    assert v == pytest.approx(float(oracles.v_annulus(0.5, 0.75)) / 2.75**2, rel=1e-13)
    assert v == pytest.approx(0.0211, abs=5e-5)
    with pytest.raises(MapError):
        pullback_v(_mobius(), [0.4])


def test_report_json_uses_lambda_key():
    doc = lambda_via_map(_identity()).to_json()
    assert "lambda" in doc and "lam" not in doc
