import json
import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar
from hypothesis import given, strategies as st

from lambda_lab.domain import (
    Annulus,
    BoundaryCurve,
    CurveBounded,
    CurveError,
    MappedAnnulus,
    Punctured,
    UnitDisk,
    frames,
    geometry,
    signed_distance,
    spec_from_json,
    spec_to_json,
    validate,
)
from lambda_lab.series import LaurentSeries, mobius_series

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def _wobbly(eps=0.08):
    # a smooth star-shaped perturbation of the unit circle
    return BoundaryCurve(0j, (1.0, 0.0, eps), (1j, 0.0, 1j * eps))


def test_unit_circle_frames():
    fr = frames(BoundaryCurve.circle(), 16)
    assert all(abs(f.curvature - 1) < 1e-12 for f in fr)
    assert sum(f.arc_weight for f in fr) == pytest.approx(2 * math.pi, rel=1e-14)
    assert all(abs(abs(f.inward_normal) - 1) < 1e-12 for f in fr)
    assert all(abs(f.point + f.inward_normal) < 1e-12 for f in fr)


def test_shifted_circle_curvature():
    fr = frames(BoundaryCurve.circle(1.0, 2.0), 32)
    assert np.allclose([f.curvature for f in fr], 0.5, atol=1e-12)


def test_ellipse_curvature_at_vertex():
    fr = frames(BoundaryCurve.ellipse(2.0, 1.0), 64)
    assert fr[0].curvature == pytest.approx(2.0, rel=1e-12)
    t = np.array([f.t for f in fr])
    exact = 2.0 / (4 * np.sin(t) ** 2 + np.cos(t) ** 2) ** 1.5
    assert np.allclose([f.curvature for f in fr], exact, rtol=1e-12)


def test_ellipse_arc_weights_sum_to_length():
    fr = frames(BoundaryCurve.ellipse(2.0, 1.0), 128)
    # Ramanujan's second approximation is accurate to ~1e-9 here
    h = (1 / 3) ** 2
    ram = math.pi * 3 * (1 + 3 * h / (10 + math.sqrt(4 - 3 * h)))
    assert sum(f.arc_weight for f in fr) == pytest.approx(ram, rel=1e-8)


def test_frames_reject_degenerate_input():
    with pytest.raises(ValueError):
        frames(BoundaryCurve.circle(), 4)
    with pytest.raises(CurveError):
        frames(BoundaryCurve(0j, (1.0, 0.0, -1 / 3), (1j, 0.0, 1j / 3)), 64)


@given(c=st.complex_numbers(max_magnitude=5), R=st.floats(min_value=0.01, max_value=100))
def test_circle_curvature_is_inverse_radius(c, R):
    for orient in ("positive", "negative"):
        fr = frames(BoundaryCurve.circle(c, R, orient), 24)
        assert np.allclose([f.curvature for f in fr], 1 / R, rtol=1e-10)


def test_reversal_flips_orientation_and_area():
    c = _wobbly()
    r = c.reversed()
    assert c.orientation == "positive" and r.orientation == "negative"
    assert r.signed_area() == pytest.approx(-c.signed_area(), rel=1e-14)
    k1 = np.sort([f.curvature for f in frames(c, 32)])
    k2 = np.sort([f.curvature for f in frames(r, 32)])
    assert np.allclose(k1, k2, atol=1e-12)


def test_reversed_curve_keeps_inward_normal():
    c = _wobbly()
    t = np.linspace(0, 2 * np.pi, 9)
    a, b = c.inward_normal(t), c.reversed().inward_normal(-t)
    assert np.allclose(a, b, atol=1e-13)


def test_stored_orientation_checked():
    c = BoundaryCurve(0j, (1.0,), (1j,), "negative")
    checks = {name: ok for name, ok, _, _ in c.check()}
    assert not checks["orientation"]


def test_signed_distance_examples():
    assert signed_distance(UnitDisk(), 0) == 1.0
    assert signed_distance(Annulus(0.5), 0.75) == pytest.approx(0.25)
    curve = BoundaryCurve.ellipse(1.0, 0.6)
    assert abs(signed_distance(CurveBounded(curve), complex(curve(0.7)))) < 1e-10
    assert signed_distance(CurveBounded(curve), 2.0) == pytest.approx(-1.0, abs=1e-10)


def test_signed_distance_of_ellipse_against_brute_force():
    curve = BoundaryCurve.ellipse(1.0, 0.6)
    n = 4096
    dense = curve.samples(n)
    rng = np.random.default_rng(0)
    for z in rng.uniform(-0.8, 0.8, 10) + 1j * rng.uniform(-0.5, 0.5, 10):
        t0 = 2 * np.pi * np.argmin(np.abs(dense - z)) / n
        res = minimize_scalar(lambda t: abs(complex(curve(t)) - z), bounds=(t0 - 0.01, t0 + 0.01),
                              method="bounded", options={"xatol": 1e-13})
        inside = z.real**2 + (z.imag / 0.6) ** 2 < 1
        brute = res.fun if inside else -res.fun
        assert signed_distance(CurveBounded(curve), z) == pytest.approx(brute, abs=1e-11)


def test_signed_distance_with_hole_and_puncture():
    spec = CurveBounded(BoundaryCurve.circle(0, 1), BoundaryCurve.circle(0.2, 0.3))
    assert signed_distance(spec, 0.6) == pytest.approx(0.1)
    assert signed_distance(spec, 0.2) == pytest.approx(-0.3)
    spec = Punctured(BoundaryCurve.circle(0, 1), (0.1j,))
    assert signed_distance(spec, 0.4j) == pytest.approx(0.3)


@given(seed=seeds)
def test_signed_distance_is_one_lipschitz(seed):
    rng = np.random.default_rng(seed)
    spec = CurveBounded(_wobbly(), BoundaryCurve.circle(0.1, 0.25))
    geo = geometry(spec)
    a = complex(*rng.uniform(-1, 1, 2))
    b = complex(*rng.uniform(-1, 1, 2))
    z = a + (b - a) * np.linspace(0, 1, 40)
    d = geo.signed_distance(z)
    assert np.all(np.abs(np.diff(d)) <= np.abs(np.diff(z)) * (1 + 1e-9) + 1e-12)


def test_validate_examples():
    assert validate(Annulus(0.5)).ok
    diag = validate(Annulus(1.2))
    assert not diag.ok and "beta out of range" in diag.failures()
    diag = validate(Punctured(BoundaryCurve.circle(0, 1), (1.5,)))
    assert not diag.ok and "puncture outside" in diag.failures()
    assert validate(Punctured(BoundaryCurve.circle(0, 1), (0.0, 0.3))).ok


def test_validate_never_raises():
    diag = validate(CurveBounded(BoundaryCurve.circle(0, 1), BoundaryCurve.circle(0.8, 0.5)))
    assert not diag.ok
    assert not validate("not a domain").ok
    assert not validate(MappedAnnulus(LaurentSeries.from_dict({-1: 1.0}, 0.5, 1.0), 0.5)).ok


def test_mapped_annulus_geometry():
    geo = geometry(MappedAnnulus(mobius_series(0.0, -1.0, 2.0, 0.5, 1.0), 0.5))
    assert geo.doubly_connected
    assert geo.scale == pytest.approx(1 / 3, rel=1e-5)
    assert geo.separation() == pytest.approx(1 / 3 - 4 / 15, rel=1e-6)
    assert geo.signed_distance(np.array([-1 / 3 - 1 / 30]))[0] == pytest.approx(1 / 30, rel=1e-8)


def test_reach_of_ellipse():
    geo = geometry(CurveBounded(BoundaryCurve.ellipse(1.0, 0.5)))
    assert geo.reach() == pytest.approx(0.25, rel=1e-6)


@pytest.mark.parametrize(
    "spec",
    [
        UnitDisk(),
        Annulus(0.5),
        Annulus(0.0),
        MappedAnnulus(mobius_series(0.0, -1.0, 2.0, 0.5, 1.0), 0.5),
        Punctured(BoundaryCurve.circle(0, 1), (0.1 + 0.2j,)),
        CurveBounded(BoundaryCurve.ellipse(1.0, 0.7), BoundaryCurve.circle(0.1, 0.3)),
        CurveBounded(BoundaryCurve.ellipse(1.0, 0.7)),
    ],
)
def test_spec_json_round_trip(spec):
    doc = json.loads(json.dumps(spec_to_json(spec)))
    back = spec_from_json(doc)
    assert json.dumps(spec_to_json(back), sort_keys=True) == json.dumps(doc, sort_keys=True)


def test_spec_json_field_names():
    assert spec_to_json(Annulus(0.5)) == {"variant": "annulus", "beta": 0.5}
    doc = BoundaryCurve.ellipse(2.0, 1.0).to_json()
    assert set(doc) >= {"cos", "sin", "const"}
    with pytest.raises(ValueError):
        spec_from_json({"variant": "torus"})
