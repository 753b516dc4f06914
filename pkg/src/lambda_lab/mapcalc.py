"""Exact lambda for domains given as conformal images of B_1 - B_beta (or B_1).

With g**2 = 1/f' and g = sum b_k z^k, the circle mean of 1/|f'| on |z| = r is
sum |b_k|^2 r^(2k).  The boundary integral of -6 c3 over f(|z| = 1) reduces to

    (-6 c_beta3) * 2 pi * sum |b_k|^2  +  2 pi * sum 2k(2k-2) |b_k|^2,

and lambda = L * that / 6 with L the length of f(|z| = 1).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .models import constants, v_annulus, v_disk
from .series import LaurentSeries, SeriesError, derivative, sqrt_reciprocal_derivative, winding_number, CircleSamples


class MapError(ValueError):
    """Map violates a precondition of the analytic pipeline."""


@dataclass(frozen=True)
class AnnulusMapSpec:
    f: LaurentSeries
    beta: float
    g: LaurentSeries
    winding_fprime: int
    outer_normalized: bool

    @property
    def disk_mode(self) -> bool:
        return self.beta == 0

    @property
    def b2(self) -> np.ndarray:
        return np.abs(self.g.coeffs) ** 2

    @property
    def ks(self) -> np.ndarray:
        return self.g.ks


@dataclass(frozen=True)
class BTProfile:
    ts: np.ndarray
    A: np.ndarray
    B: np.ndarray


@dataclass
class LambdaReport:
    lam: float
    boundary_length: float
    c3_integral: float
    lower_bound: float
    defect: float
    b_tail_norm: Optional[float]
    holder_defect: Optional[float]
    equality: Optional[bool]
    beta: Optional[float] = None
    mode: str = "annulus"
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d


def _polygon_simple(a: np.ndarray, b: Optional[np.ndarray] = None) -> bool:
    """No proper crossing between edges of closed polygon a (or between a and b).

    Only edge pairs whose midpoints lie within one maximal edge length can
    cross; those candidates come from a k-d tree.
    """
    pa, qa = a, np.roll(a, -1)
    pb, qb = (pa, qa) if b is None else (b, np.roll(b, -1))
    ma, mb = 0.5 * (pa + qa), 0.5 * (pb + qb)
    r = float(max(np.max(np.abs(qa - pa)), np.max(np.abs(qb - pb))))
    ta = cKDTree(np.column_stack([ma.real, ma.imag]))
    if b is None:
        pairs = ta.query_pairs(r * (1 + 1e-9), output_type="ndarray")
        i, j = (pairs[:, 0], pairs[:, 1]) if pairs.size else (np.zeros(0, int), np.zeros(0, int))
    else:
        tb = cKDTree(np.column_stack([mb.real, mb.imag]))
        hits = ta.query_ball_tree(tb, r * (1 + 1e-9))
        i = np.repeat(np.arange(len(hits)), [len(h) for h in hits])
        j = np.array([k for h in hits for k in h], dtype=int)
    if i.size == 0:
        return True

    def cross(u, v):
        return u.real * v.imag - u.imag * v.real

    P, Q, R, S = pa[i], qa[i], pb[j], qb[j]
    d1 = cross(Q - P, R - P)
    d2 = cross(Q - P, S - P)
    d3 = cross(S - R, P - R)
    d4 = cross(S - R, Q - R)
    hit = (d1 * d2 < 0) & (d3 * d4 < 0)
    if b is None:
        n = a.size
        gap = np.abs(i - j)
        hit &= (gap > 1) & (gap != n - 1)
    return not bool(hit.any())


def points_inside(poly: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Winding-number point-in-polygon test (nonzero winding -> inside)."""
    pts = np.atleast_1d(pts)
    d = poly[None, :] - pts[:, None]
    steps = np.angle(np.roll(d, -1, axis=1) / d)
    return np.abs(steps.sum(axis=1)) > np.pi


def signed_area(poly: np.ndarray) -> float:
    return 0.5 * float(np.sum((poly.conj() * np.roll(poly, -1)).imag))


def recompose_outer(f: LaurentSeries, beta: float) -> LaurentSeries:
    """f(beta / z): swaps which circle lands on which boundary component."""
    if beta <= 0:
        raise MapError("inversion recomposition needs an annulus (beta > 0)")
    ks = f.ks
    new = (f.coeffs * np.power(beta, ks.astype(float)))[::-1]
    return LaurentSeries(-f.kmax, new, beta, 1.0)


def build_map(f: LaurentSeries, beta: float, require_outer: bool = False, n_check: int = 512) -> AnnulusMapSpec:
    if not (0 <= beta < 1):
        raise MapError(f"beta must lie in [0, 1), got {beta}")
    if f.r_inner > beta or f.r_outer < 1:
        raise MapError(f"f declared on [{f.r_inner}, {f.r_outer}], which does not cover [{beta}, 1]")
    if beta == 0 and f.kmin < 0:
        raise MapError("disk mode needs a Taylor series")
    f = f.with_annulus(beta, 1.0)
    fp = derivative(f)
    r_mid = 0.5 if beta == 0 else math.sqrt(beta)
    try:
        w = winding_number(CircleSamples.of(fp, r_mid, 256))
        g = sqrt_reciprocal_derivative(f)
    except SeriesError as exc:
        raise MapError(f"no square root of 1/f': {exc}") from exc

    t = 2 * np.pi * np.arange(n_check) / n_check
    outer = f(np.exp(1j * t))
    inner = f((beta if beta > 0 else 0.5) * np.exp(1j * t))
    if not (_polygon_simple(outer) and _polygon_simple(inner) and _polygon_simple(outer, inner)):
        raise MapError("f is not injective on the sampled boundary circles")
    outer_ok = (
        w == 0
        and signed_area(outer) > 0
        and bool(np.all(points_inside(outer, inner)))
    )
    if require_outer and not outer_ok:
        raise MapError("f does not send |z| = 1 onto the outermost boundary with positive orientation")
    return AnnulusMapSpec(f=f, beta=float(beta), g=g, winding_fprime=int(w), outer_normalized=bool(outer_ok))


def _check_t(m: AnnulusMapSpec, ts: np.ndarray):
    lo = math.log(m.beta) if m.beta > 0 else -np.inf
    if np.any(ts <= lo) or np.any(ts >= 0):
        raise MapError("t outside (ln beta, 0)")


def A_of_t(m: AnnulusMapSpec, ts) -> np.ndarray:
    ts = np.asarray(ts, dtype=float)
    return np.exp(2 * np.outer(ts, m.ks)) @ m.b2


def B_of_t(m: AnnulusMapSpec, ts) -> np.ndarray:
    ts = np.asarray(ts, dtype=float)
    k = m.ks
    return np.exp(2 * np.outer(ts, k)) @ (m.b2 * 2 * k * (2 * k - 2))


def profile(m: AnnulusMapSpec, ts: Sequence[float], check: bool = True) -> BTProfile:
    """A(t) = circle mean of 1/|f'| on |z| = e^t and B = A'' - 2A'."""
    ts = np.asarray(ts, dtype=float)
    _check_t(m, ts)
    A = A_of_t(m, ts)
    B = B_of_t(m, ts)
    if check and ts.size:
        lo = math.log(m.beta) if m.beta > 0 else -4.0
        h = 1e-3 * min(1.0, -lo)
        for frac in (0.25, 0.5, 0.75):
            t0 = lo + frac * (0 - lo)
            a = A_of_t(m, [t0 - 2 * h, t0 - h, t0, t0 + h, t0 + 2 * h])
            d1 = (a[0] - 8 * a[1] + 8 * a[3] - a[4]) / (12 * h)
            d2 = (-a[0] + 16 * a[1] - 30 * a[2] + 16 * a[3] - a[4]) / (12 * h * h)
            b = B_of_t(m, [t0])[0]
            if abs((d2 - 2 * d1) - b) > 1e-6 * max(1.0, a[2], abs(b)):
                raise MapError(f"B(t) series form disagrees with second differences of A at t={t0}")
    return BTProfile(ts, A, B)


def B_at_boundary(m: AnnulusMapSpec) -> float:
    """lim_{t -> 0^-} B(t) = sum |b_k|^2 2k(2k-2)."""
    k = m.ks
    return float(np.sum(m.b2 * 2 * k * (2 * k - 2)))


def c3_integral_via_map(m: AnnulusMapSpec) -> float:
    """Integral of -6 c3 over the outer image curve."""
    if not m.outer_normalized:
        raise MapError("map is not outer-normalized")
    s = float(np.sum(m.b2))
    kappa6 = 0.0 if m.disk_mode else -6 * constants(m.beta).c3
    return kappa6 * 2 * math.pi * s + 2 * math.pi * B_at_boundary(m)


def boundary_length_via_map(m: AnnulusMapSpec, rtol: float = 1e-10, n_max: int = 1 << 16) -> float:
    """Length of f(|z| = 1) = integral of 1/|g|^2, trapezoid with doubling."""
    n = 64
    prev = None
    while n <= n_max:
        z = np.exp(2j * np.pi * np.arange(n) / n)
        val = 2 * math.pi * float(np.mean(1.0 / np.abs(m.g(z)) ** 2))
        if prev is not None and abs(val - prev) <= rtol * abs(val):
            return val
        prev = val
        n *= 2
    raise MapError("boundary-length quadrature did not converge")


def lambda_via_map(m: AnnulusMapSpec, tol: float = 1e-8) -> LambdaReport:
    L = boundary_length_via_map(m)
    I6 = c3_integral_via_map(m)
    lam = L * I6 / 6.0
    b2 = m.b2
    s = float(b2.sum())
    tail = float(b2[(m.ks != 0) & (m.ks != 1)].sum())
    holder = 2 * math.pi * s * L - 4 * math.pi**2
    if m.disk_mode:
        lb = 0.0
        # every Moebius image of the disk is a round disk, so only the tail matters
        eq = tail < tol * s
    else:
        lb = constants(m.beta).lambda_bound
        eq = tail < tol * s and holder < tol
    return LambdaReport(
        lam=lam,
        boundary_length=L,
        c3_integral=-I6 / 6.0,
        lower_bound=lb,
        defect=lam - lb,
        b_tail_norm=tail,
        holder_defect=holder,
        equality=bool(eq),
        beta=m.beta,
        mode="disk" if m.disk_mode else "annulus",
    )


def classify_rigidity(m: AnnulusMapSpec, tol: float = 1e-8) -> dict:
    b2 = m.b2
    s = float(b2.sum())
    tail = float(b2[(m.ks != 0) & (m.ks != 1)].sum())
    b0, b1 = m.g.coeff(0), m.g.coeff(1)
    is_mobius = tail < tol * s
    small0 = abs(b0) ** 2 < tol * s
    small1 = abs(b1) ** 2 < tol * s
    is_sim = is_mobius and (small0 or small1)
    params = None
    if is_mobius:
        z0 = 0.5 * (1 + m.beta) + 0j
        fz0 = complex(m.f(z0))
        if small1:
            c2 = b0 ** -2
            params = {"form": "C1 + C2 z", "C1": fz0 - c2 * z0, "C2": c2}
        else:
            c2 = -(b1 ** -2)
            c3 = b0 / b1
            params = {"form": "C1 + C2/(z + C3)", "C1": fz0 - c2 / (z0 + c3), "C2": c2, "C3": c3}
    return {"is_mobius": bool(is_mobius), "is_similarity": bool(is_sim), "params": params}


def pullback_v(m: AnnulusMapSpec, points) -> list:
    """(f(z), v_model(|z|) |f'(z)|): the exact v on the image domain."""
    z = np.atleast_1d(np.asarray(points, dtype=complex))
    r = np.abs(z)
    if np.any(r <= m.beta) or np.any(r >= 1):
        raise MapError("points must lie in the open annulus")
    vm = v_disk(r) if m.disk_mode else v_annulus(m.beta, r)
    fp = np.abs(derivative(m.f)(z))
    w = m.f(z)
    return list(zip(w.tolist(), (np.asarray(vm) * fp).tolist()))
