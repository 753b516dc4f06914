"""Domain descriptions, boundary curves and distance geometry.

Boundary curves are trigonometric polynomials

    z(t) = const + sum_k cos_k cos(k t) + sin_k sin(k t),   t in [0, 2 pi),

with complex coefficients, so derivatives, curvature and quadrature are exact.
Plane points are complex numbers throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy.spatial import cKDTree

from .series import LaurentSeries


class CurveError(ValueError):
    """Degenerate or otherwise unusable boundary curve."""


class ProjectionError(RuntimeError):
    def __init__(self, msg, best=None):
        super().__init__(msg)
        self.best = best


def _pairs(arr) -> np.ndarray:
    return np.array([complex(a, b) for a, b in arr], dtype=complex) if len(arr) else np.zeros(0, complex)


@dataclass(frozen=True)
class BoundaryCurve:
    const: complex
    cos: Tuple[complex, ...]
    sin: Tuple[complex, ...]
    orientation: Optional[str] = None  # "positive" | "negative"; inferred when None

    def __post_init__(self):
        K = max(len(self.cos), len(self.sin))
        c = np.zeros(K, complex)
        s = np.zeros(K, complex)
        c[: len(self.cos)] = self.cos
        s[: len(self.sin)] = self.sin
        object.__setattr__(self, "cos", tuple(complex(x) for x in c))
        object.__setattr__(self, "sin", tuple(complex(x) for x in s))
        object.__setattr__(self, "const", complex(self.const))
        # exponential form: z(t) = sum_{k=-K..K} e_k exp(i k t)
        e = np.zeros(2 * K + 1, complex)
        e[K] = self.const
        e[K + 1 :] = (c - 1j * s) / 2
        e[:K][::-1] = (c + 1j * s) / 2
        object.__setattr__(self, "_e", e)
        object.__setattr__(self, "_k", np.arange(-K, K + 1))
        if self.orientation is None:
            object.__setattr__(self, "orientation", "positive" if self.signed_area() >= 0 else "negative")
        elif self.orientation not in ("positive", "negative"):
            raise CurveError(f"orientation must be positive/negative, got {self.orientation!r}")

    # -- constructors ------------------------------------------------------
    @classmethod
    def circle(cls, center: complex = 0j, radius: float = 1.0, orientation: str = "positive"):
        if orientation == "positive":
            return cls(center, (radius,), (1j * radius,))
        return cls(center, (radius,), (-1j * radius,))

    @classmethod
    def ellipse(cls, a: float, b: float, center: complex = 0j):
        return cls(center, (a,), (1j * b,))

    @classmethod
    def from_exponential(cls, e: np.ndarray, orientation=None):
        """From coefficients e_k of exp(i k t), k = -K..K."""
        e = np.asarray(e, complex)
        K = (e.size - 1) // 2
        pos = e[K + 1 :]
        neg = e[:K][::-1]
        return cls(e[K], tuple(pos + neg), tuple(1j * (pos - neg)), orientation)

    @classmethod
    def image_of_circle(cls, f: LaurentSeries, r: float, orientation=None):
        """The curve t -> f(r e^{it}) for a finite Laurent series f."""
        K = max(abs(f.kmin), abs(f.kmax))
        e = np.zeros(2 * K + 1, complex)
        for k, b in zip(f.ks, f.coeffs):
            e[K + k] += b * r**k
        return cls.from_exponential(e, orientation)

    # -- evaluation --------------------------------------------------------
    @property
    def degree(self) -> int:
        return len(self.cos)

    def _eval(self, t, order: int = 0):
        # Horner in w = e^{it}: z^(order)(t) = w^-K sum_j a_j w^j
        t = np.asarray(t, dtype=float)
        k = self._k
        a = self._e * (1j * k) ** order
        w = np.exp(1j * t)
        acc = np.full(t.shape, a[-1], dtype=complex)
        for c in a[-2::-1]:
            acc *= w
            acc += c
        return acc * w ** (-int(k[-1])) if k.size > 1 else acc

    def __call__(self, t):
        return self._eval(t, 0)

    def d1(self, t):
        return self._eval(t, 1)

    def d2(self, t):
        return self._eval(t, 2)

    def d3(self, t):
        return self._eval(t, 3)

    @property
    def sign(self) -> int:
        return 1 if self.orientation == "positive" else -1

    def signed_area(self) -> float:
        # (1/2) Im integral conj(z) z' dt, exact in exponential coefficients
        return float(math.pi * np.sum(self._k * np.abs(self._e) ** 2))

    def length(self, n: Optional[int] = None) -> float:
        n = n or max(256, 16 * self.degree)
        t = 2 * np.pi * np.arange(n) / n
        return float(np.abs(self.d1(t)).mean() * 2 * np.pi)

    def samples(self, n: int) -> np.ndarray:
        return self(2 * np.pi * np.arange(n) / n)

    def reversed(self) -> "BoundaryCurve":
        flip = "negative" if self.orientation == "positive" else "positive"
        return BoundaryCurve(self.const, self.cos, tuple(-s for s in self.sin), flip)

    def transformed(self, a: complex, b: complex) -> "BoundaryCurve":
        """Image under z -> a z + b (a != 0), orientation kept."""
        return BoundaryCurve(a * self.const + b, tuple(a * c for c in self.cos), tuple(a * s for s in self.sin),
                             self.orientation)

    def signed_curvature(self, t) -> np.ndarray:
        z1, z2 = self.d1(t), self.d2(t)
        return (np.conj(z1) * z2).imag / np.abs(z1) ** 3

    def curvature(self, t) -> np.ndarray:
        """Curvature seen from the enclosed region (1/R for a circle of either orientation)."""
        return self.sign * self.signed_curvature(t)

    def inward_normal(self, t) -> np.ndarray:
        z1 = self.d1(t)
        return self.sign * 1j * z1 / np.abs(z1)

    def min_speed(self, n: Optional[int] = None) -> Tuple[float, float]:
        n = n or max(1024, 64 * self.degree)
        t = 2 * np.pi * np.arange(n) / n
        sp = np.abs(self.d1(t))
        i = int(np.argmin(sp))
        return float(sp[i]), float(t[i])

    def max_curvature(self, n: Optional[int] = None) -> float:
        n = n or max(1024, 64 * self.degree)
        t = 2 * np.pi * np.arange(n) / n
        return float(np.max(self.curvature(t)))

    def is_simple(self, n: Optional[int] = None) -> bool:
        from .mapcalc import _polygon_simple

        n = n or max(64, 16 * self.degree)
        return _polygon_simple(self.samples(n))

    def check(self) -> List[Tuple[str, bool, float, str]]:
        out = []
        sp, t = self.min_speed()
        out.append(("curve speed", sp > 0, sp, f"min speed {sp:.3e} at t={t:.4f}"))
        simple = self.is_simple()
        out.append(("curve simple", simple, 0.0, "" if simple else "self-intersection detected"))
        area = self.signed_area()
        ok = (area > 0) == (self.orientation == "positive") and area != 0
        out.append(("orientation", ok, area, f"signed area {area:.6g}, stored {self.orientation}"))
        return out

    # -- projection --------------------------------------------------------
    def _dense(self):
        cached = self.__dict__.get("_dense_cache")
        if cached is None:
            n = max(2048, 64 * self.degree)
            ts = 2 * np.pi * np.arange(n) / n
            pts = self(ts)
            cached = (ts, pts, cKDTree(np.c_[pts.real, pts.imag]))
            object.__setattr__(self, "_dense_cache", cached)
        return cached

    def _newton(self, x: np.ndarray, t: np.ndarray, dt_max: float, iters: int = 40):
        """Minimize |z(t) - x| over t, one independent damped Newton per point."""
        t = np.array(t, dtype=float, copy=True)
        act = np.arange(t.size)
        z = self(t)
        for _ in range(iters):
            if act.size == 0:
                break
            ta, xa, za = t[act], x[act], z[act]
            z1, z2 = self.d1(ta), self.d2(ta)
            diff = za - xa
            phi = (np.conj(diff) * z1).real
            dphi = np.abs(z1) ** 2 + (np.conj(diff) * z2).real
            pos = dphi > 0
            step = np.where(pos, -phi / np.where(pos, dphi, 1.0), -np.sign(phi) * dt_max)
            step = np.clip(step, -dt_max, dt_max)
            d0 = np.abs(diff)
            znew = self(ta + step)
            for _ in range(30):
                bad = np.abs(znew - xa) > d0 * (1 + 4e-16) + 1e-300
                if not bad.any():
                    break
                step = np.where(bad, step / 2, step)
                znew[bad] = self(ta[bad] + step[bad])
            t[act] = ta + step
            z[act] = znew
            act = act[np.abs(step) > 1e-14]
        return np.mod(t, 2 * np.pi)

    def project(self, points, n_starts: int = 1, t0=None, exact_within: Optional[float] = None,
                chunk: int = 65536):
        """Nearest-point projection.

        Returns (t, foot, signed) with `signed` positive inside the enclosed region.
        Starts are the n_starts nearest dense samples, or the warm start t0.
        Points farther than exact_within from the curve keep the nearest dense
        sample (distance error below the sampling sagitta).
        """
        pts = np.atleast_1d(np.asarray(points, dtype=complex)).ravel()
        ts_d, pts_d, tree = self._dense()
        dt = 2 * np.pi / ts_d.size
        out_t = np.empty(pts.size)
        if t0 is not None:
            out_t[:] = self._newton(pts, np.broadcast_to(np.asarray(t0, float).ravel(), pts.shape), 4 * dt)
        else:
            for lo in range(0, pts.size, chunk):
                x = pts[lo : lo + chunk]
                k = min(n_starts, ts_d.size)
                dist, idx = tree.query(np.c_[x.real, x.imag], k=k)
                idx = idx.reshape(x.size, k)
                dist = dist.reshape(x.size, k)
                best_t = ts_d[idx[:, 0]].copy()
                near = np.ones(x.size, bool) if exact_within is None else dist[:, 0] <= exact_within
                if near.any():
                    xn = x[near]
                    bt = np.zeros(xn.size)
                    bd = np.full(xn.size, np.inf)
                    for j in range(k):
                        tj = self._newton(xn, ts_d[idx[near, j]], 2 * dt)
                        dj = np.abs(self(tj) - xn)
                        take = dj < bd
                        bt[take], bd[take] = tj[take], dj[take]
                    best_t[near] = bt
                out_t[lo : lo + chunk] = best_t
        foot = self(out_t)
        n_in = self.inward_normal(out_t)
        side = np.sign(((pts - foot) * np.conj(n_in)).real)
        side[side == 0] = 1.0
        return out_t, foot, side * np.abs(pts - foot)

    def project_multistart(self, x: complex, n_seeds: int = 32):
        """Scalar projection by Newton from n_seeds equispaced parameters."""
        x = complex(x)
        seeds = 2 * np.pi * np.arange(n_seeds) / n_seeds
        ts = self._newton(np.full(n_seeds, x), seeds, 2 * np.pi / n_seeds)
        z, z1 = self(ts), self.d1(ts)
        phi = np.abs((np.conj(z - x) * z1).real) / np.maximum(np.abs(z1), 1e-300)
        d = np.abs(z - x)
        conv = phi < 1e-9 * max(1.0, float(np.max(np.abs(self._e))))
        i = int(np.argmin(np.where(conv, d, np.inf)))
        if not conv[i]:
            j = int(np.argmin(d))
            raise ProjectionError("Newton projection did not converge from any start", best=(ts[j], d[j]))
        t = ts[i]
        foot = complex(self(t))
        n_in = complex(self.inward_normal(t))
        side = 1.0 if ((x - foot) * n_in.conjugate()).real >= 0 else -1.0
        return float(t), foot, side * abs(x - foot)

    # -- JSON --------------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "const": [self.const.real, self.const.imag],
            "cos": [[c.real, c.imag] for c in self.cos],
            "sin": [[s.real, s.imag] for s in self.sin],
            "orientation": self.orientation,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "BoundaryCurve":
        const = complex(*doc.get("const", [0.0, 0.0]))
        return cls(const, tuple(_pairs(doc.get("cos", []))), tuple(_pairs(doc.get("sin", []))), doc.get("orientation"))


@dataclass(frozen=True)
class BoundaryFrame:
    point: complex
    inward_normal: complex
    curvature: float
    arc_weight: float
    t: float = 0.0


def frames(curve: BoundaryCurve, n: int) -> List[BoundaryFrame]:
    if n < 8:
        raise ValueError("need at least 8 frames")
    t = 2 * np.pi * np.arange(n) / n
    z1 = curve.d1(t)
    sp = np.abs(z1)
    if np.min(sp) <= 1e-14 * max(1.0, float(np.max(sp))):
        i = int(np.argmin(sp))
        raise CurveError(f"curve speed vanishes near t = {t[i]:.6f}")
    pts = curve(t)
    nor = curve.inward_normal(t)
    kap = curve.curvature(t)
    w = sp * (2 * np.pi / n)
    return [BoundaryFrame(complex(p), complex(q), float(k), float(a), float(s)) for p, q, k, a, s in zip(pts, nor, kap, w, t)]


# ---------------------------------------------------------------------------
# Domain specifications


@dataclass(frozen=True)
class UnitDisk:
    variant = "unit_disk"


@dataclass(frozen=True)
class Annulus:
    beta: float
    variant = "annulus"


@dataclass(frozen=True)
class MappedAnnulus:
    f: LaurentSeries
    beta: float
    variant = "mapped_annulus"


@dataclass(frozen=True)
class Punctured:
    outer: BoundaryCurve
    punctures: Tuple[complex, ...]
    variant = "punctured"

    def __post_init__(self):
        object.__setattr__(self, "punctures", tuple(complex(p) for p in self.punctures))


@dataclass(frozen=True)
class CurveBounded:
    outer: BoundaryCurve
    inner: Optional[BoundaryCurve] = None
    variant = "curve_bounded"


DomainSpec = Union[UnitDisk, Annulus, MappedAnnulus, Punctured, CurveBounded]


def spec_to_json(spec: DomainSpec) -> dict:
    if isinstance(spec, UnitDisk):
        return {"variant": "unit_disk"}
    if isinstance(spec, Annulus):
        return {"variant": "annulus", "beta": spec.beta}
    if isinstance(spec, MappedAnnulus):
        return {"variant": "mapped_annulus", "beta": spec.beta, "map": spec.f.to_json()}
    if isinstance(spec, Punctured):
        return {"variant": "punctured", "outer": spec.outer.to_json(),
                "punctures": [[p.real, p.imag] for p in spec.punctures]}
    if isinstance(spec, CurveBounded):
        return {"variant": "curve_bounded", "outer": spec.outer.to_json(),
                "inner": spec.inner.to_json() if spec.inner is not None else None}
    raise TypeError(f"not a domain spec: {spec!r}")


def spec_from_json(doc: dict) -> DomainSpec:
    v = doc.get("variant")
    if v == "unit_disk":
        return UnitDisk()
    if v == "annulus":
        return Annulus(float(doc["beta"]))
    if v == "mapped_annulus":
        return MappedAnnulus(LaurentSeries.from_json(doc["map"]), float(doc["beta"]))
    if v == "punctured":
        return Punctured(BoundaryCurve.from_json(doc["outer"]), tuple(_pairs(doc.get("punctures", []))))
    if v == "curve_bounded":
        inner = doc.get("inner")
        return CurveBounded(BoundaryCurve.from_json(doc["outer"]),
                            BoundaryCurve.from_json(inner) if inner else None)
    raise ValueError(f"unknown domain variant {v!r}")


# ---------------------------------------------------------------------------
# Geometry: distance to each boundary component, seen from the domain side


@dataclass
class Component:
    """One boundary component.  kind: "outer", "hole" or "point"."""

    kind: str
    curve: Optional[BoundaryCurve] = None
    center: complex = 0j
    radius: float = 0.0
    exact_circle: bool = False

    def measure(self, x, t0=None, exact_within: Optional[float] = None) -> "Measure":
        """Distance data seen from the domain side.

        D > 0 in the domain, kappa is the curvature at the foot point seen from
        the domain (negative for holes), grad the unit gradient of D.
        """
        x = np.asarray(x, dtype=complex)
        if self.kind == "point":
            rel = x - self.center
            D = np.abs(rel)
            grad = np.where(D > 0, rel / np.where(D > 0, D, 1.0), 1.0)
            return Measure(D, np.zeros_like(D), grad, None)
        if self.exact_circle:
            rel = x - self.center
            rho = np.abs(rel)
            unit = np.where(rho > 0, rel / np.where(rho > 0, rho, 1.0), 1.0)
            if self.kind == "outer":
                return Measure(self.radius - rho, np.full(rho.shape, 1.0 / self.radius), -unit, None)
            return Measure(rho - self.radius, np.full(rho.shape, -1.0 / self.radius), unit, None)
        t, _, sd = self.curve.project(x.ravel(), t0=None if t0 is None else np.ravel(t0),
                                      exact_within=exact_within)
        kap = self.curve.curvature(t)
        nrm = self.curve.inward_normal(t)
        sh = x.shape
        if self.kind == "outer":
            return Measure(sd.reshape(sh), kap.reshape(sh), nrm.reshape(sh), t.reshape(sh))
        return Measure(-sd.reshape(sh), -kap.reshape(sh), -nrm.reshape(sh), t.reshape(sh))

    def distance(self, x):
        m = self.measure(x)
        return m.D, m.kappa, np.asarray(x) - m.D * m.grad


@dataclass
class Measure:
    D: np.ndarray
    kappa: np.ndarray
    grad: np.ndarray
    t: Optional[np.ndarray]


@dataclass
class Geometry:
    components: List[Component]
    scale: float
    spec: object = field(default=None, repr=False)

    @property
    def outer(self) -> Component:
        return self.components[0]

    def distances(self, x):
        """Stack of (D, kappa, foot) per component."""
        return [c.distance(x) for c in self.components]

    def signed_distance(self, x) -> np.ndarray:
        return np.min(np.stack([c.distance(x)[0] for c in self.components]), axis=0)

    def bbox(self, pad: float = 0.0):
        pts = self.outer.curve.samples(max(512, 32 * self.outer.curve.degree))
        return (pts.real.min() - pad, pts.real.max() + pad, pts.imag.min() - pad, pts.imag.max() + pad)

    @property
    def doubly_connected(self) -> bool:
        return len(self.components) == 2 and self.components[1].kind == "hole"

    def reach(self) -> float:
        """Largest offset for which the distance to each curve stays smooth near it."""
        r = np.inf
        for c in self.components:
            if c.kind == "point":
                continue
            n = max(1024, 64 * c.curve.degree)
            kap = c.curve.curvature(2 * np.pi * np.arange(n) / n)
            kmax = float(np.max(kap if c.kind == "outer" else -kap))
            if kmax > 0:
                r = min(r, 1.0 / kmax)
        return float(r)

    def separation(self) -> float:
        """Smallest distance between two different boundary components."""
        sep = np.inf
        for i, a in enumerate(self.components):
            for b in self.components[i + 1 :]:
                if b.kind == "point":
                    pts = np.array([b.center])
                else:
                    pts = b.curve.samples(max(512, 32 * b.curve.degree))
                if a.kind == "point":
                    d = np.abs(pts - a.center)
                else:
                    d = np.abs(a.distance(pts)[0])
                sep = min(sep, float(np.min(d)))
        return float(sep)


def centroid(curve: BoundaryCurve) -> complex:
    """Area centroid of the enclosed region (polygon formula on dense samples)."""
    p = curve.samples(max(2048, 64 * curve.degree))
    q = np.roll(p, -1)
    cr = (p.conj() * q).imag
    return complex(np.sum((p + q) * cr) / (3 * np.sum(cr)))


def _outer_scale(curve: BoundaryCurve) -> float:
    pts = curve.samples(max(2048, 64 * curve.degree))
    return float(np.max(np.abs(pts - centroid(curve))))


def geometry(spec: DomainSpec) -> Geometry:
    if isinstance(spec, UnitDisk):
        comps = [Component("outer", BoundaryCurve.circle(0, 1.0), 0j, 1.0, True)]
        return Geometry(comps, 1.0, spec)
    if isinstance(spec, Annulus):
        comps = [Component("outer", BoundaryCurve.circle(0, 1.0), 0j, 1.0, True)]
        if spec.beta > 0:
            comps.append(Component("hole", BoundaryCurve.circle(0, spec.beta), 0j, spec.beta, True))
        else:
            comps.append(Component("point", None, 0j))
        return Geometry(comps, 1.0, spec)
    if isinstance(spec, MappedAnnulus):
        outer = BoundaryCurve.image_of_circle(spec.f, 1.0)
        inner = BoundaryCurve.image_of_circle(spec.f, spec.beta)
        comps = [Component("outer", outer), Component("hole", inner)]
        return Geometry(comps, _outer_scale(outer), spec)
    if isinstance(spec, Punctured):
        comps = [Component("outer", spec.outer)] + [Component("point", None, p) for p in spec.punctures]
        return Geometry(comps, _outer_scale(spec.outer), spec)
    if isinstance(spec, CurveBounded):
        comps = [Component("outer", spec.outer)]
        if spec.inner is not None:
            comps.append(Component("hole", spec.inner))
        return Geometry(comps, _outer_scale(spec.outer), spec)
    raise TypeError(f"not a domain spec: {spec!r}")


def signed_distance(spec: DomainSpec, z) -> float:
    """Distance to the nearest boundary component, positive inside the domain."""
    z = complex(z)
    if isinstance(spec, UnitDisk):
        return 1.0 - abs(z)
    if isinstance(spec, Annulus):
        return min(1.0 - abs(z), abs(z) - spec.beta)
    g = geometry(spec)
    best = np.inf
    for c in g.components:
        if c.kind == "point":
            d = abs(z - c.center)
        else:
            _, _, sd = c.curve.project_multistart(z)
            d = sd if c.kind == "outer" else -sd
        best = min(best, d)
    return float(best)


# ---------------------------------------------------------------------------
# Validation


@dataclass
class Diagnostics:
    checks: List[dict] = field(default_factory=list)

    def add(self, name: str, passed: bool, margin: float = 0.0, message: str = ""):
        self.checks.append({"name": name, "passed": bool(passed), "margin": float(margin), "message": message})

    @property
    def ok(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def failures(self) -> List[str]:
        return [c["message"] or c["name"] for c in self.checks if not c["passed"]]


def _inside(curve: BoundaryCurve, pts) -> np.ndarray:
    from .mapcalc import points_inside

    return points_inside(curve.samples(max(512, 32 * curve.degree)), np.atleast_1d(pts))


def validate(spec) -> Diagnostics:
    diag = Diagnostics()
    try:
        _validate(spec, diag)
    except Exception as exc:  # failures are data
        diag.add("exception", False, 0.0, f"{type(exc).__name__}: {exc}")
    return diag


def _curve_checks(diag: Diagnostics, curve: BoundaryCurve, label: str):
    for name, ok, margin, msg in curve.check():
        diag.add(f"{label} {name}", ok, margin, f"{label}: {msg}" if not ok else msg)


def _validate(spec, diag: Diagnostics):
    if isinstance(spec, UnitDisk):
        diag.add("unit disk", True)
    elif isinstance(spec, Annulus):
        ok = 0 <= spec.beta < 1
        diag.add("beta range", ok, min(spec.beta, 1 - spec.beta), "" if ok else "beta out of range")
    elif isinstance(spec, MappedAnnulus):
        from .mapcalc import build_map

        ok = 0 < spec.beta < 1
        diag.add("beta range", ok, min(spec.beta, 1 - spec.beta), "" if ok else "beta out of range")
        if ok:
            m = build_map(spec.f, spec.beta)
            diag.add("outer normalized", m.outer_normalized, 0.0,
                     "" if m.outer_normalized else "unit circle is not sent to the outermost boundary")
    elif isinstance(spec, Punctured):
        _curve_checks(diag, spec.outer, "outer")
        pts = np.array(spec.punctures, dtype=complex)
        if pts.size:
            inside = _inside(spec.outer, pts)
            d = np.array([spec.outer.project(p)[2][0] for p in pts])
            ok = bool(np.all(inside) and np.all(d > 0))
            diag.add("punctures inside", ok, float(d.min()), "" if ok else "puncture outside")
            if pts.size > 1:
                sep = np.abs(pts[:, None] - pts[None, :])[~np.eye(pts.size, dtype=bool)].min()
                diag.add("punctures distinct", sep > 0, float(sep), "" if sep > 0 else "punctures coincide")
    elif isinstance(spec, CurveBounded):
        _curve_checks(diag, spec.outer, "outer")
        if spec.inner is not None:
            _curve_checks(diag, spec.inner, "inner")
            pts = spec.inner.samples(max(256, 16 * spec.inner.degree))
            d = spec.outer.project(pts)[2]
            ok = bool(np.all(d > 0))
            diag.add("inner inside outer", ok, float(d.min()), "" if ok else "inner curve not strictly inside outer")
    else:
        diag.add("spec type", False, 0.0, f"unknown spec {type(spec).__name__}")
