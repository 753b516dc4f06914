import json

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from lambda_lab.series import (
    CircleSamples,
    LaurentSeries,
    SeriesError,
    coeffs_from_circle,
    derivative,
    eval_circle,
    mobius_series,
    poly_series,
    random_series,
    series_from_samples,
    sqrt_reciprocal_derivative,
    winding_number,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def _close_series(a: LaurentSeries, b: LaurentSeries, tol: float):
    lo, hi = min(a.kmin, b.kmin), max(a.kmax, b.kmax)
    diff = max(abs(a.coeff(k) - b.coeff(k)) for k in range(lo, hi + 1))
    scale = max(np.max(np.abs(a.coeffs)), np.max(np.abs(b.coeffs)))
    assert diff <= tol * scale, f"coefficient mismatch {diff:.3e}"


def test_identity_series_gives_roots_of_unity():
    s = LaurentSeries.from_dict({1: 1.0})
    c = eval_circle(s, 1.0, 8)
    assert np.allclose(c.values, np.exp(2j * np.pi * np.arange(8) / 8), atol=1e-15)


@pytest.mark.parametrize("r", [0.3, 1.0])
def test_constant_series_is_constant(r):
    c = eval_circle(LaurentSeries.from_dict({0: 2.0}), r, 16)
    assert np.allclose(c.values, 2.0)


def test_reciprocal_monomial_on_half_circle():
    c = eval_circle(LaurentSeries.from_dict({-1: 1.0}, 0.25, 1.0), 0.5, 8)
    assert np.allclose(np.abs(c.values), 2.0)
    z = 0.5 * np.exp(2j * np.pi * np.arange(8) / 8)
    assert np.allclose(c.values, 1 / z)


def test_eval_circle_rejects_radius_and_sample_count():
    s = LaurentSeries.from_dict({-1: 1.0, 1: 1.0}, 0.5, 1.0)
    with pytest.raises(SeriesError):
        eval_circle(s, 0.4, 16)
    with pytest.raises(SeriesError):
        eval_circle(s, 0.7, 12)
    with pytest.raises(SeriesError):
        eval_circle(s, 0.7, 4)


def test_recover_z_plus_inverse():
    c = CircleSamples.of(lambda z: z + 1 / z, 1.0, 16)
    s = coeffs_from_circle(c, -3, 3)
    assert s.coeff(-1) == pytest.approx(1.0)
    assert s.coeff(1) == pytest.approx(1.0)
    assert max(abs(s.coeff(k)) for k in (-3, -2, 0, 2, 3)) < 1e-15


def test_aliasing_is_refused():
    c = CircleSamples.of(lambda z: z**5, 1.0, 8)
    with pytest.raises(SeriesError, match="aliasing"):
        coeffs_from_circle(c, -4, 4)


@given(seed=seeds, kmin=st.integers(-6, 0), width=st.integers(0, 12))
def test_round_trip_at_r07(seed, kmin, width):
    s = random_series(np.random.default_rng(seed), kmin, kmin + width, 0.5, 1.0)
    n = 1 << int(np.ceil(np.log2(2 * width + 2)))
    back = coeffs_from_circle(eval_circle(s, 0.7, n), s.kmin, s.kmax)
    _close_series(s, back, 1e-12)


def test_eval_circle_matches_direct_summation():
    s = random_series(np.random.default_rng(3), -5, 9, 0.5, 1.0)
    c = eval_circle(s, 0.8, 64)
    z = 0.8 * np.exp(2j * np.pi * np.arange(64) / 64)
    direct = sum(b * z**k for k, b in zip(s.ks, s.coeffs))
    bound = np.sum(np.abs(s.coeffs) * 0.8 ** s.ks.astype(float))
    assert np.max(np.abs(c.values - direct)) <= 1e-12 * bound
    assert np.allclose(s(z), direct, rtol=1e-13)


@given(seed=seeds)
def test_recovery_agrees_on_two_radii(seed):
    s = random_series(np.random.default_rng(seed), -4, 6, 0.5, 1.0)
    a = coeffs_from_circle(eval_circle(s, 0.6, 32), -4, 6)
    b = coeffs_from_circle(eval_circle(s, 0.9, 32), -4, 6)
    _close_series(a, b, 1e-10)


@pytest.mark.parametrize(
    "func, expected",
    [(lambda z: z, 1), (lambda z: (z - 2) ** 2, 0), (lambda z: z**-2, -2), (lambda z: z**3 * (z - 0.5), 4)],
)
def test_winding_numbers(func, expected):
    assert winding_number(CircleSamples.of(func, 1.0, 64)) == expected


def test_winding_resamples_coarse_input():
    # 8 samples of z^7 step by 7 * 45 degrees; resampling from the source recovers 7
    assert winding_number(CircleSamples.of(lambda z: z**7, 1.0, 8)) == 7


def test_winding_rejects_zero():
    with pytest.raises(SeriesError):
        winding_number(CircleSamples.of(lambda z: z - 1, 1.0, 64))


@given(seed=seeds)
def test_winding_consistent_across_radii(seed):
    rng = np.random.default_rng(seed)
    roots = 0.3 * rng.uniform(size=3) * np.exp(2j * np.pi * rng.uniform(size=3))
    p = lambda z: np.prod([z - a for a in roots], axis=0)
    assert winding_number(CircleSamples.of(p, 0.5, 64)) == winding_number(CircleSamples.of(p, 0.9, 64)) == 3


def test_sqrt_of_identity_map():
    g = sqrt_reciprocal_derivative(poly_series([0, 1], 0, 0.5, 1.0))
    assert g.as_dict() == pytest.approx({0: 1.0})


def test_sqrt_of_mobius_map():
    f = mobius_series(0.3, -1.0, 2.0, 0.5, 1.0)
    g = sqrt_reciprocal_derivative(f)
    assert g.coeff(0) == pytest.approx(2.0, abs=1e-12)
    assert g.coeff(1) == pytest.approx(1.0, abs=1e-12)
    assert sum(abs(g.coeff(k)) for k in range(2, g.kmax + 1)) < 1e-12


def test_sqrt_symbolic_oracle_for_mobius():
    # g^2 f' = 1 checked in multiprecision: f' = (z+2)^-2 symbolically
    f = mobius_series(0.0, -1.0, 2.0, 0.5, 1.0)
    g = sqrt_reciprocal_derivative(f)
    for t in np.linspace(0, 2 * np.pi, 7):
        z = 0.8 * mp.expj(t)
        gz = sum(mp.mpc(complex(b)) * z**int(k) for k, b in zip(g.ks, g.coeffs))
        assert abs(gz**2 / (z + 2) ** 2 - 1) < 1e-12


def test_sqrt_of_inversion_has_monomial_factor():
    # f = -1/z: f' = z^-2 and g = z
    f = LaurentSeries.from_dict({-1: -1.0}, 0.5, 1.0)
    g = sqrt_reciprocal_derivative(f)
    assert g.as_dict() == pytest.approx({1: 1.0})


def test_sqrt_rejects_odd_winding():
    f = LaurentSeries.from_dict({0: 1.0}, 0.5, 1.0)  # f' = 0
    with pytest.raises(SeriesError):
        sqrt_reciprocal_derivative(f)
    f = LaurentSeries.from_dict({0: 0.0, 2: 0.5}, 0.5, 1.0)  # f' = z, winding 1
    with pytest.raises(SeriesError):
        sqrt_reciprocal_derivative(f)


@given(seed=seeds)
def test_sqrt_squares_back_at_fresh_points(seed):
    rng = np.random.default_rng(seed)
    tail = 0.15 * (rng.normal(size=4) + 1j * rng.normal(size=4)) / np.arange(2, 6) ** 2
    f = LaurentSeries(0, np.concatenate([[0.0, 1.0], tail]), 0.5, 1.0)
    g = sqrt_reciprocal_derivative(f)
    fp = derivative(f)
    n = 4 * 64
    for r in (0.5, 0.77, 1.0):
        z = r * np.exp(2j * np.pi * (np.arange(n) + 0.37) / n)
        assert np.max(np.abs(g(z) ** 2 * fp(z) - 1)) < 1e-10


def test_sqrt_branch_sign_is_deterministic():
    f = mobius_series(0.0, -1.0, 2.0, 0.5, 1.0)
    g = sqrt_reciprocal_derivative(f)
    big = g.coeffs[np.argmax(np.abs(g.coeffs))]
    assert -np.pi / 2 < np.angle(big) <= np.pi / 2


def test_derivative_monomials():
    assert derivative(LaurentSeries.from_dict({1: 1.0})).as_dict() == {0: 1.0}
    assert derivative(LaurentSeries.from_dict({-1: 1.0}, 0.5, 1.0)).as_dict() == {-2: -1.0}
    assert derivative(LaurentSeries.from_dict({0: 3.0})).as_dict() == {}


@given(seed=seeds)
def test_derivative_matches_finite_difference(seed):
    s = random_series(np.random.default_rng(seed), -3, 5, 0.5, 1.0)
    ds = derivative(s)
    z = 0.75 * np.exp(2j * np.pi * np.arange(16) / 16)
    h = 1e-5
    fd = (s(z + h) - s(z - h)) / (2 * h)
    assert np.max(np.abs(fd - ds(z))) < 1e-8 * max(1.0, np.max(np.abs(ds(z))))


def test_disk_series_rejects_principal_part():
    with pytest.raises(SeriesError):
        LaurentSeries(-1, [1.0, 0.0], 0.0, 1.0)
    with pytest.raises(SeriesError):
        LaurentSeries(0, [1.0], 0.6, 0.5)


def test_json_round_trip():
    s = random_series(np.random.default_rng(1), -2, 3, 0.5, 1.0)
    doc = json.loads(json.dumps(s.to_json()))
    assert doc["kmin"] == -2 and doc["rin"] == 0.5 and doc["rout"] == 1.0
    back = LaurentSeries.from_json(doc)
    assert back == s


def test_series_from_samples_recovers_laurent_function():
    s = series_from_samples(lambda z: 3 + 2 * z - 0.1 / z**2, 0.5, 1.0, n=64)
    assert s.coeff(0) == pytest.approx(3)
    assert s.coeff(1) == pytest.approx(2)
    assert s.coeff(-2) == pytest.approx(-0.1)


def test_mobius_series_matches_closed_form():
    f = mobius_series(1 + 1j, -1.0, 2.0)
    z = 0.9 * np.exp(1j * np.linspace(0, 6, 11))
    assert np.allclose(f(z), 1 + 1j - 1 / (z + 2), atol=1e-15)
    with pytest.raises(SeriesError):
        mobius_series(0, 1, 0.5)
