"""Boundary blow-up solver for Lap u = exp(2u) and a Laplace solver for the modulus.

Discretization: nodes on the lattice {origin + (i, j) h}, five-point Laplacian
with Shortley-Weller legs cut at the boundary.  The unknown is the regular part

    W = u - F,   F = sum_j chi_j(delta_j) g_j(delta_j),

where delta_j is the distance to boundary component j, chi_j a smooth cutoff and
g_j the exact one-dimensional singular profile (-log delta for curves, the cusp
profile -log(rho log(R/rho)) for punctures).  Lap F is evaluated in closed form
through Lap delta = -kappa / (1 - kappa D), so W = 0 on every blow-up boundary
and the linear algebra never sees an infinite value.

Exhaustion: stage m solves the blow-up problem on the offset domain
{D > eps_m} minus puncture disks of radius r_m; a final stage solves on the
domain itself.  Stage solutions decrease pointwise as the domains grow.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from .domain import Component, Geometry, Measure, centroid, geometry, validate
from .models import v_annulus

log = logging.getLogger(__name__)

# leg directions: E, W, N, S as (di, dj) with i along x, j along y
LEGS = ((1, 0), (-1, 0), (0, 1), (0, -1))
EXTERIOR, BOUNDARY_ADJ, INTERIOR = 0, 1, 2


class GridError(ValueError):
    pass


class SolverError(RuntimeError):
    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


class NewtonStagnation(SolverError):
    pass


class MonotonicityError(SolverError):
    pass


class BracketError(SolverError):
    pass


class InterpolationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# lattice and stage grids


@dataclass
class Lattice:
    """Node lattice and per-component distance data shared by all stages."""

    geo: Geometry
    h: float
    origin: complex
    nx: int
    ny: int
    meas: List[Measure] = field(repr=False)
    sep: np.ndarray = field(repr=False)
    reach: np.ndarray = field(repr=False)
    notes: List[str] = field(default_factory=list)

    @property
    def Z(self) -> np.ndarray:
        x = self.origin.real + self.h * np.arange(self.nx)
        y = self.origin.imag + self.h * np.arange(self.ny)
        return x[None, :] + 1j * y[:, None]

    def node(self, p: complex):
        q = (complex(p) - self.origin) / self.h
        return int(round(q.imag)), int(round(q.real))


def _separations(geo: Geometry) -> np.ndarray:
    n = len(geo.components)
    sep = np.full((n, n), np.inf)
    for i, a in enumerate(geo.components):
        for j, b in enumerate(geo.components):
            if j <= i:
                continue
            if b.kind == "point":
                pts = np.array([b.center])
            else:
                pts = b.curve.samples(max(2048, 64 * b.curve.degree))
            if a.kind == "point":
                d = float(np.min(np.abs(pts - a.center)))
            else:
                d = float(np.min(np.abs(a.measure(pts).D)))
            sep[i, j] = sep[j, i] = d
    return sep


def _reach(c: Component) -> float:
    if c.kind == "point":
        return np.inf
    n = max(2048, 64 * c.curve.degree)
    kap = c.curve.curvature(2 * np.pi * np.arange(n) / n)
    kmax = float(np.max(kap if c.kind == "outer" else -kap))
    return 1.0 / kmax if kmax > 0 else np.inf


def build_lattice(spec_or_geo, h: float, exact_within: Optional[float] = None) -> Lattice:
    geo = spec_or_geo if isinstance(spec_or_geo, Geometry) else geometry(spec_or_geo)
    if not h > 0:
        raise GridError("h must be positive")
    pts = [c.center for c in geo.components if c.kind == "point"]
    shift = pts[0] if pts else 0j
    x0, x1, y0, y1 = geo.bbox()
    pad = 3 * h
    i0 = math.floor((x0 - pad - shift.real) / h)
    i1 = math.ceil((x1 + pad - shift.real) / h)
    j0 = math.floor((y0 - pad - shift.imag) / h)
    j1 = math.ceil((y1 + pad - shift.imag) / h)
    origin = shift + complex(i0 * h, j0 * h)
    nx, ny = i1 - i0 + 1, j1 - j0 + 1
    if nx * ny > 6_000_000:
        raise GridError(f"grid of {nx}x{ny} nodes is too large")
    lat = Lattice(geo, h, origin, nx, ny, [], _separations(geo), np.array([_reach(c) for c in geo.components]))
    Z = lat.Z
    ew = exact_within if exact_within is not None else 0.5 * geo.scale
    lat.meas = [c.measure(Z, exact_within=ew) for c in geo.components]
    for p in pts[1:]:
        j, i = lat.node(p)
        if abs(Z[j, i] - p) > 1e-12 * h:
            lat.notes.append(f"puncture {p} is off-lattice; snapped to node {Z[j, i]}")
    return lat


@dataclass
class Grid:
    origin: complex
    h: float
    nx: int
    ny: int
    mask: np.ndarray
    cut: np.ndarray  # (4, ny, nx) leg fractions in (0, 1]; 1 where the leg is uncut
    cut_comp: np.ndarray  # (4, ny, nx) component index of the cut, -1 where uncut
    epsilon: float = 0.0
    puncture_radius: Optional[float] = None
    lattice: Optional[Lattice] = field(default=None, repr=False)
    phi: Optional[np.ndarray] = field(default=None, repr=False)  # (ncomp, ny, nx) stage distances

    @property
    def inside(self) -> np.ndarray:
        return self.mask > EXTERIOR

    @property
    def n_inside(self) -> int:
        return int(self.inside.sum())

    @property
    def Z(self) -> np.ndarray:
        x = self.origin.real + self.h * np.arange(self.nx)
        y = self.origin.imag + self.h * np.arange(self.ny)
        return x[None, :] + 1j * y[:, None]

    def index(self) -> np.ndarray:
        idx = np.full((self.ny, self.nx), -1, dtype=np.int64)
        idx[self.inside] = np.arange(self.n_inside)
        return idx


def _offsets(lat: Lattice, epsilon: float, prad: Optional[float]) -> List[float]:
    return [(prad or 0.0) if c.kind == "point" else epsilon for c in lat.geo.components]


def _stage_phi(lat: Lattice, epsilon: float, prad: Optional[float]) -> np.ndarray:
    phi = np.stack([m.D - off for m, off in zip(lat.meas, _offsets(lat, epsilon, prad))])
    if not prad:
        # off-lattice punctures are carried by their nearest node
        for k, c in enumerate(lat.geo.components):
            if c.kind == "point":
                j, i = lat.node(c.center)
                phi[k, j, i] = 0.0
    return phi


def _leg_root(lat: Lattice, comp: int, off: float, x: np.ndarray, e: complex, f0: np.ndarray, f1: np.ndarray,
              t0, tol: float) -> np.ndarray:
    """s in (0, h] with D_comp(x + s e) = off, given f0 = phi(x) > 0 >= f1 = phi(x + h e)."""
    c = lat.geo.components[comp]
    h = lat.h
    lo = np.zeros_like(f0)
    hi = np.full_like(f0, h)
    s = np.clip(h * f0 / (f0 - f1), 0.0, h)
    if c.kind == "point" and off == 0:
        return hi
    for _ in range(60):
        m = c.measure(x + s * e, t0=t0)
        f = m.D - off
        done = np.abs(f) <= tol
        if done.all():
            break
        lo = np.where(f > 0, s, lo)
        hi = np.where(f > 0, hi, s)
        fp = (m.grad * np.conj(e)).real
        with np.errstate(divide="ignore", invalid="ignore"):
            sn = s - f / fp
        bad = ~np.isfinite(sn) | (sn <= lo) | (sn >= hi)
        sn = np.where(bad, 0.5 * (lo + hi), sn)
        s = np.where(done, s, sn)
    return np.clip(s, 1e-300, h)


def _rasterize(lat: Lattice, epsilon: float, prad: Optional[float]) -> Grid:
    h = lat.h
    phi = _stage_phi(lat, epsilon, prad)
    tiny = 1e-9 * h
    inside = np.all(phi > tiny, axis=0)
    inside[0, :] = inside[-1, :] = inside[:, 0] = inside[:, -1] = False
    cut = np.ones((4, lat.ny, lat.nx))
    cut_comp = np.full((4, lat.ny, lat.nx), -1, dtype=np.int8)
    mask = np.where(inside, INTERIOR, EXTERIOR).astype(np.int8)
    offs = _offsets(lat, epsilon, prad)
    Z = lat.Z
    tol = 1e-12 * max(1.0, lat.geo.scale)
    for d, (di, dj) in enumerate(LEGS):
        nb_inside = np.roll(np.roll(inside, -di, axis=1), -dj, axis=0)
        legs = inside & ~nb_inside
        if not legs.any():
            continue
        mask[legs] = BOUNDARY_ADJ
        jj, ii = np.nonzero(legs)
        nb_phi = phi[:, jj + dj, ii + di]
        comp = np.argmin(nb_phi, axis=0)
        e = complex(di, dj)
        s = np.empty(jj.size)
        for k in np.unique(comp):
            sel = comp == k
            j_, i_ = jj[sel], ii[sel]
            t0 = None if lat.meas[k].t is None else lat.meas[k].t[j_, i_]
            s[sel] = _leg_root(lat, int(k), offs[k], Z[j_, i_], e, phi[k, j_, i_], nb_phi[k, sel], t0, tol)
        cut[d, jj, ii] = s / h
        cut_comp[d, jj, ii] = comp
    return Grid(lat.origin, h, lat.nx, lat.ny, mask, cut, cut_comp, epsilon, prad, lat, phi)


def _check_stage(lat: Lattice, epsilon: float, prad: Optional[float]):
    for k, c in enumerate(lat.geo.components):
        if c.kind != "point" and epsilon >= 0.5 * lat.reach[k]:
            raise GridError(f"epsilon {epsilon:g} beyond the reach {lat.reach[k]:g} of boundary component {k}")


def rasterize(spec, h: float, epsilon: float, puncture_radius: Optional[float] = None) -> Grid:
    """Mask and cut legs of the epsilon-offset domain minus puncture disks."""
    if epsilon < 0:
        raise GridError("epsilon must be nonnegative")
    lat = build_lattice(spec, h)
    _check_stage(lat, epsilon, puncture_radius)
    g = _rasterize(lat, epsilon, puncture_radius)
    if g.n_inside < 64:
        raise GridError("grid too coarse: fewer than 64 interior nodes")
    return g


# ---------------------------------------------------------------------------
# fields


@dataclass
class ScalarField:
    grid: Grid
    values: np.ndarray  # (ny, nx), NaN outside the mask

    def at_nodes(self) -> np.ndarray:
        return self.values[self.grid.inside]

    def interp(self, points) -> np.ndarray:
        """Bicubic (4x4 Lagrange) interpolation; every stencil node must be on the mask."""
        g = self.grid
        pts = np.atleast_1d(np.asarray(points, dtype=complex))
        q = (pts - g.origin) / g.h
        i0 = np.floor(q.real).astype(int) - 1
        j0 = np.floor(q.imag).astype(int) - 1
        if np.any(i0 < 0) or np.any(j0 < 0) or np.any(i0 + 3 >= g.nx) or np.any(j0 + 3 >= g.ny):
            raise InterpolationError("interpolation stencil leaves the grid")
        fx = q.real - (i0 + 1)
        fy = q.imag - (j0 + 1)
        wx, wy = _lagrange4(fx), _lagrange4(fy)
        out = np.zeros(pts.shape)
        for a in range(4):
            for b in range(4):
                out += wy[b] * wx[a] * self.values[j0 + b, i0 + a]
        if not np.all(np.isfinite(out)):
            raise InterpolationError("interpolation stencil touches exterior cells")
        return out


def _lagrange4(f):
    # nodes at -1, 0, 1, 2
    return (
        -f * (f - 1) * (f - 2) / 6,
        (f + 1) * (f - 1) * (f - 2) / 2,
        -(f + 1) * f * (f - 2) / 2,
        (f + 1) * f * (f - 1) / 6,
    )


def to_v(u: ScalarField) -> ScalarField:
    with np.errstate(over="ignore", under="ignore"):
        return ScalarField(u.grid, np.exp(-u.values))


def residual_v(v: ScalarField) -> float:
    """max |v Lap_h v - |grad_h v|^2 + 1| over nodes farther than 4h from the mask edge."""
    g = v.grid
    a = v.values
    h = g.h
    k = 4
    ok = np.ones_like(g.inside)
    ins = g.inside
    for di in range(-k, k + 1):
        for dj in range(-k, k + 1):
            if di * di + dj * dj <= k * k:
                ok &= np.roll(np.roll(ins, di, axis=1), dj, axis=0)
    ok[:k, :] = ok[-k:, :] = ok[:, :k] = ok[:, -k:] = False
    if not ok.any():
        return float("nan")
    c = a[1:-1, 1:-1]
    lap = (a[1:-1, 2:] + a[1:-1, :-2] + a[2:, 1:-1] + a[:-2, 1:-1] - 4 * c) / h**2
    gx = (a[1:-1, 2:] - a[1:-1, :-2]) / (2 * h)
    gy = (a[2:, 1:-1] - a[:-2, 1:-1]) / (2 * h)
    r = np.abs(c * lap - gx**2 - gy**2 + 1.0)
    return float(np.max(r[ok[1:-1, 1:-1]]))


# ---------------------------------------------------------------------------
# Shortley-Weller operator


def sw_laplacian(grid: Grid, bvals=None):
    """(L, b): Lap_h w = L @ w[inside] + b.

    bvals gives w on the stage boundary: a constant per component, or a
    callable (component indices, cut points) -> values.
    """
    idx = grid.index()
    n = grid.n_inside
    jj, ii = np.nonzero(grid.inside)
    h2 = grid.h**2
    rows, cols, vals = [], [], []
    diag = np.zeros(n)
    rhs = np.zeros(n)
    th = grid.cut[:, jj, ii]
    Z = grid.Z[jj, ii]
    for axis in (0, 1):
        dp, dm = (0, 1) if axis == 0 else (2, 3)
        tp, tm = th[dp], th[dm]
        ap = 2.0 / (h2 * tp * (tp + tm))
        am = 2.0 / (h2 * tm * (tp + tm))
        diag -= ap + am
        for d, a in ((dp, ap), (dm, am)):
            di, dj = LEGS[d]
            cc = grid.cut_comp[d, jj, ii]
            nb = idx[jj + dj, ii + di]
            link = cc < 0
            rows.append(np.nonzero(link)[0])
            cols.append(nb[link])
            vals.append(a[link])
            if bvals is not None and (~link).any():
                if callable(bvals):
                    pts = Z[~link] + th[d][~link] * grid.h * complex(di, dj)
                    bv = bvals(cc[~link].astype(int), pts)
                else:
                    bv = np.asarray(bvals, float)[cc[~link]]
                rhs[~link] += a[~link] * bv
    rows.append(np.arange(n))
    cols.append(np.arange(n))
    vals.append(diag)
    L = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    return L, rhs


def linsolve(M, b: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Solve M x = b for an M-matrix M: AMG-preconditioned BiCGStab, direct fallback."""
    nb = np.linalg.norm(b)
    if nb == 0:
        return np.zeros_like(b)
    try:
        import pyamg

        ml = pyamg.ruge_stuben_solver(M.tocsr())
        x = ml.solve(b, tol=rtol, accel="bicgstab", maxiter=200)
        if np.all(np.isfinite(x)) and np.linalg.norm(M @ x - b) <= 100 * rtol * nb:
            return x
    except Exception as exc:  # pragma: no cover - fallback path
        log.debug("AMG solve failed (%s); using direct solve", exc)
    return sla.spsolve(M.tocsc(), b)


# ---------------------------------------------------------------------------
# singular part


def _smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    P = s**5 * (126 - 420 * s + 540 * s**2 - 315 * s**3 + 70 * s**4)
    P1 = 630 * s**4 * (1 - s) ** 4
    P2 = 2520 * s**3 * (1 - s) ** 3 * (1 - 2 * s)
    return P, P1, P2


CHI_FLAT = 0.25  # chi = 1 on [0, CHI_FLAT * band]


def cutoff(delta, b):
    """chi(delta) = 1 on [0, b/4], 0 beyond b, C^4; returns (chi, chi', chi'')."""
    w = (1.0 - CHI_FLAT) * b
    s = (np.asarray(delta) - CHI_FLAT * b) / w
    P, P1, P2 = _smoothstep(s)
    return 1.0 - P, -P1 / w, -P2 / w**2


BAND_MAX = 0.3  # bands never exceed this fraction of the domain scale


@dataclass
class StageComponent:
    kind: str  # "curve", "shell" (puncture disk) or "cusp" (bare puncture)
    index: int
    offset: float
    band: float
    R: float = 0.0  # outer radius of the radial model for shell and cusp

    def profile(self, d):
        """(g, g', g'') of the one-dimensional singular profile at distance d.

        Puncture profiles are the exact radial solutions blowing up at the
        hole (or point) and at radius R, so no curvature remainder is left in W.
        """
        if self.kind == "curve":
            return -np.log(d), -1.0 / d, 1.0 / d**2
        if self.kind == "cusp":
            ell = np.log(self.R / d)
            return -np.log(d * ell), -1.0 / d + 1.0 / (d * ell), 1.0 / d**2 - (ell - 1.0) / (d * ell) ** 2
        r = self.offset
        rho = r + d
        k = math.pi / math.log(self.R / r)
        phi = k * np.log1p(d / r)
        sn, cs = np.sin(phi), np.cos(phi)
        v = rho * sn / k
        v1 = sn / k + cs
        v2 = (cs - k * sn) / rho
        q = v1 / v
        return -np.log(v), -q, q * q - v2 / v

    @property
    def level(self) -> float:
        """Value g(band) the profile is blended into."""
        return float(self.profile(np.array(self.band))[0])


@dataclass
class SingularPart:
    """u = F + W with F = sum_j chi_j (g_j - c_j); bands may overlap.

    Each node is owned by the nearest component k whose band contains it.
    The shift S = c_k - sum_{j != k} F_j makes A = exp(2(F + S)) equal to
    exp(2(F_k + c_k)), so the nonlinearity A expm1(2(W - S)) + C has
    C = A - Lap F evaluated without cancellation against exp(2 g_k).
    """

    F: np.ndarray
    A: np.ndarray
    C: np.ndarray
    S: np.ndarray
    dist: np.ndarray  # distance to the stage boundary
    comps: List[StageComponent]
    lattice: Optional[Lattice] = field(default=None, repr=False)

    def bvals(self, comp: np.ndarray, pts: np.ndarray) -> np.ndarray:
        """W on the cut of component j: c_j minus the other components' F there."""
        out = np.empty(pts.shape)
        for sc in self.comps:
            sel = comp == sc.index
            if not sel.any():
                continue
            val = np.full(int(sel.sum()), sc.level)
            for other in self.comps:
                if other.index != sc.index:
                    val -= _component_F(self.lattice, other, pts[sel])
            out[sel] = val
        return out


def _stage_components(lat: Lattice, epsilon: float, prad: Optional[float]) -> List[StageComponent]:
    geo = lat.geo
    offs = _offsets(lat, epsilon, prad)
    out = []
    for k, c in enumerate(geo.components):
        b = BAND_MAX * geo.scale
        if c.kind != "point" and np.isfinite(lat.reach[k]):
            b = min(b, 0.5 * (lat.reach[k] - offs[k]))
        if b < 8 * lat.h:
            raise GridError(f"grid too coarse: boundary band {b:.3g} of component {k} is under 8h")
        if c.kind == "point":
            R = float(np.max(np.abs(geo.outer.curve.samples(2048) - c.center))) * 1.001
            out.append(StageComponent("shell" if prad else "cusp", k, offs[k], b, R))
        else:
            out.append(StageComponent("curve", k, offs[k], b))
    return out


def _lap_delta(lat: Lattice, sc: StageComponent, D: np.ndarray, kappa: Optional[np.ndarray]) -> np.ndarray:
    if sc.kind == "curve" and lat.geo.components[sc.index].kind != "point":
        return -kappa / (1.0 - kappa * D)
    return 1.0 / D


def _component_F(lat: Lattice, sc: StageComponent, pts: np.ndarray) -> np.ndarray:
    c = lat.geo.components[sc.index]
    delta = c.measure(pts).D - sc.offset
    out = np.zeros(pts.shape)
    act = (delta < sc.band) & (delta > 0)
    d = delta[act]
    chi, _, _ = cutoff(d, sc.band)
    out[act] = chi * (sc.profile(d)[0] - sc.level)
    return out


def singular_part(grid: Grid) -> SingularPart:
    lat = grid.lattice
    comps = _stage_components(lat, grid.epsilon, grid.puncture_radius)
    ins = grid.inside
    n = grid.n_inside
    nc = len(comps)
    Fk = np.zeros((nc, n))
    lapF = np.zeros((nc, n))  # Lap F_k
    delta_all = np.full((nc, n), np.inf)
    terms = []
    for q, sc in enumerate(comps):
        m = lat.meas[sc.index]
        delta = grid.phi[sc.index][ins]
        delta_all[q] = delta
        act = delta < sc.band
        d = delta[act]
        ld = _lap_delta(lat, sc, m.D[ins][act], m.kappa[ins][act])
        chi, c1, c2 = cutoff(d, sc.band)
        g, g1, g2 = sc.profile(d)
        gc = g - sc.level
        Fk[q, act] = chi * gc
        lapF[q, act] = c2 * gc + 2 * c1 * g1 + chi * (g2 + g1 * ld) + c1 * gc * ld
        terms.append((act, d, ld, chi, c1, c2, g, g1, gc))
    F = Fk.sum(axis=0)
    lapF_tot = lapF.sum(axis=0)
    dist = delta_all.min(axis=0)
    inband = np.stack([t[0] for t in terms])
    owner = np.where(inband, delta_all, np.inf).argmin(axis=0)
    owned = inband[owner, np.arange(n)]
    S, A = np.zeros(n), np.ones(n)
    C = 1.0 - lapF_tot
    for q, sc in enumerate(comps):
        act, d, ld, chi, c1, c2, g, g1, gc = terms[q]
        sel = owned & (owner == q)
        loc = sel[act]  # owned nodes among this band's active ones
        if not loc.any():
            continue
        chi, c1, c2, g, g1, gc, ld, d = (x[loc] for x in (chi, c1, c2, g, g1, gc, ld, d))
        e2g = np.exp(2 * g)
        # Lap g - exp(2g), in closed form
        E = -ld / d if sc.kind == "curve" else np.zeros_like(d)  # radial models are exact
        # exp(2(F_k + c)) - chi exp(2g) written without cancellation
        head = e2g * (np.expm1(-2 * (1.0 - chi) * gc) + (1.0 - chi))
        own = c2 * gc + 2 * c1 * g1 + chi * E + c1 * gc * ld
        C[sel] = head - own - (lapF_tot[sel] - lapF[q, sel])
        S[sel] = sc.level - (F[sel] - Fk[q, sel])
        A[sel] = np.exp(2 * (Fk[q, sel] + sc.level))
    return SingularPart(F, A, C, S, dist, comps, lat)


# ---------------------------------------------------------------------------
# barriers


def _enclosing_disk(geo: Geometry):
    o = geo.outer
    if o.exact_circle:
        return o.center, o.radius
    c = centroid(o.curve)
    R = float(np.max(np.abs(o.curve.samples(max(4096, 64 * o.curve.degree)) - c)))
    return c, R * (1 + 1e-9)


def _annulus_u(rin: float, rout: float, rho):
    """Solution on the round annulus rin < rho < rout."""
    return -np.log(rout * v_annulus(rin / rout, np.clip(rho / rout, rin / rout, 1.0)))


def lower_barrier(grid: Grid, Z: np.ndarray) -> np.ndarray:
    geo = grid.lattice.geo
    c, R = _enclosing_disk(geo)
    r2 = np.abs(Z - c) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = -np.log((R * R - r2) / (2 * R))
        for comp in geo.components:
            if comp.kind != "point":
                continue
            rho = np.abs(Z - comp.center)
            Rp = float(np.max(np.abs(geo.outer.curve.samples(4096) - comp.center))) * (1 + 1e-9)
            if grid.puncture_radius:
                lo = np.maximum(lo, _annulus_u(grid.puncture_radius, Rp, np.maximum(rho, grid.puncture_radius)))
            else:
                lo = np.maximum(lo, -np.log(rho * np.log(Rp / rho)))
    return lo


def upper_barrier(grid: Grid, Z: np.ndarray, dist: np.ndarray) -> np.ndarray:
    """Inscribed-disk bound -log(d/2), tightened near punctures by the cusp/shell solutions."""
    lat = grid.lattice
    geo = lat.geo
    with np.errstate(divide="ignore", invalid="ignore"):
        up = -np.log(dist / 2)
        offs = _offsets(lat, grid.epsilon, grid.puncture_radius)
        n = len(geo.components)
        for k, comp in enumerate(geo.components):
            if comp.kind != "point":
                continue
            rin = min([lat.sep[k, j] - offs[j] for j in range(n) if j != k])
            rho = np.abs(Z - comp.center)
            near = rho < rin
            if grid.puncture_radius:
                val = _annulus_u(grid.puncture_radius, rin, np.clip(rho, grid.puncture_radius, rin))
            else:
                val = -np.log(rho * np.log(rin / rho))
            up = np.where(near, np.minimum(up, val), up)
    return up


# ---------------------------------------------------------------------------
# Newton solve of one stage


def compact_nodes(grid: Grid, dist: np.ndarray, min_depth: float) -> np.ndarray:
    """Inside-node flags for the nine-point compact stencil: all eight neighbours
    inside, no cut leg, and at least min_depth from the stage boundary."""
    ins = grid.inside
    ok = grid.mask == INTERIOR
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            ok &= np.roll(np.roll(ins, -di, axis=1), -dj, axis=0)
    return ok[ins] & (dist >= min_depth)


def compact_operators(grid: Grid, L5: sp.csr_matrix, use: np.ndarray):
    """(L, M): rows flagged in `use` become the fourth-order compact scheme
    L9 w = (2/3) f_i + (1/12) sum_edge f, the rest keep L5 w = f."""
    idx = grid.index()
    jj, ii = np.nonzero(grid.inside)
    r = np.nonzero(use)[0]
    j, i = jj[r], ii[r]
    h2 = grid.h**2
    rows, cols, vals = [r], [r], [np.full(r.size, -20.0 / (6 * h2))]
    mrows, mcols, mvals = [r], [r], [np.full(r.size, 2.0 / 3.0)]
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == dj == 0:
                continue
            nb = idx[j + dj, i + di]
            edge = di == 0 or dj == 0
            rows.append(r)
            cols.append(nb)
            vals.append(np.full(r.size, (4.0 if edge else 1.0) / (6 * h2)))
            if edge:
                mrows.append(r)
                mcols.append(nb)
                mvals.append(np.full(r.size, 1.0 / 12.0))
    n = grid.n_inside
    keep = sp.diags((~use).astype(float))
    L9 = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    M9 = sp.csr_matrix((np.concatenate(mvals), (np.concatenate(mrows), np.concatenate(mcols))), shape=(n, n))
    return (keep @ L5 + L9).tocsr(), (keep + M9).tocsr()


@dataclass
class StageProblem:
    """Discrete Lap W = N(W) with N(W) = exp(2(F + W)) - Lap F.

    Residual L W + b - M N(W); M is the identity on second-order rows and the
    compact averaging on fourth-order rows.
    """

    grid: Grid
    L: sp.csr_matrix
    sing: SingularPart
    b: np.ndarray = field(repr=False, default=None)
    M: Optional[sp.csr_matrix] = field(repr=False, default=None)

    @classmethod
    def build(cls, grid: Grid, order: int = 4) -> "StageProblem":
        sing = singular_part(grid)
        L, b = sw_laplacian(grid, sing.bvals)
        M = None
        if order == 4:
            use = compact_nodes(grid, sing.dist, 3 * grid.h)
            if use.any():
                L, M = compact_operators(grid, L, use)
        elif order != 2:
            raise ValueError("order must be 2 or 4")
        return cls(grid, L, sing, b, M)

    def nonlinearity(self, W: np.ndarray):
        sg = self.sing
        with np.errstate(over="ignore"):
            e = np.exp(2 * (W - sg.S))
            return sg.A * np.expm1(2 * (W - sg.S)) + sg.C, 2 * sg.A * e

    def residual(self, W: np.ndarray) -> np.ndarray:
        """Discrete Lap W + Lap F - exp(2(F + W))."""
        N, _ = self.nonlinearity(W)
        return self.L @ W + self.b - (N if self.M is None else self.M @ N)

    def jacobian(self, W: np.ndarray) -> sp.csr_matrix:
        _, dN = self.nonlinearity(W)
        D = sp.diags(dN)
        return (self.L - (D if self.M is None else self.M @ D)).tocsr()

    def initial(self, init: str) -> np.ndarray:
        Z = self.grid.Z[self.grid.inside]
        if init == "distance":
            u0 = -np.log(self.sing.dist)
        elif init == "barrier":
            u0 = lower_barrier(self.grid, Z)
        else:
            raise ValueError(f"unknown init {init!r}")
        return u0 - self.sing.F


@dataclass
class SolverConfig:
    h: float
    schedule: Optional[Sequence[float]] = None  # absolute offsets; default (0.08, 0.04, 0.02, 0.01) * scale
    puncture_radii: Optional[Sequence[float]] = None  # default 2^-m * 0.1 * scale
    init: str = "distance"
    newton_tol: float = 1e-10
    max_newton: int = 50
    max_halvings: int = 30
    linear_rtol: float = 1e-12
    monotone_tol: float = 1e-6
    bracket_tol: float = 1e-3
    order: int = 4
    limit_stage: bool = True
    check_bracket: bool = True


@dataclass
class ExhaustionState:
    m: int
    epsilon_m: float
    puncture_radii: List[float]
    field: ScalarField
    residual_norm: float
    monotone_ok: bool
    newton_iters: int = 0
    monotone_excess: float = 0.0
    bracket_excess: float = 0.0
    n_nodes: int = 0
    seconds: float = 0.0
    W: Optional[ScalarField] = field(default=None, repr=False)

    def log_record(self) -> dict:
        return {
            "m": self.m,
            "epsilon": self.epsilon_m,
            "puncture_radii": self.puncture_radii,
            "residual_norm": self.residual_norm,
            "newton_iters": self.newton_iters,
            "monotone_ok": self.monotone_ok,
            "monotone_excess": self.monotone_excess,
            "bracket_excess": self.bracket_excess,
            "nodes": self.n_nodes,
            "seconds": round(self.seconds, 3),
        }


def newton(prob: StageProblem, W: np.ndarray, cfg: SolverConfig):
    """Damped Newton; returns (W, scaled residual max-norm, iterations)."""
    R = prob.residual(W)
    for it in range(cfg.max_newton + 1):
        J = prob.jacobian(W)
        scale = np.abs(J.diagonal())
        scaled = R / scale
        norm = float(np.max(np.abs(scaled)))
        if norm < cfg.newton_tol:
            return W, norm, it
        if it == cfg.max_newton:
            break
        dW = linsolve(-J, R, cfg.linear_rtol)
        merit0 = float(np.linalg.norm(scaled))
        t = 1.0
        for _ in range(cfg.max_halvings + 1):
            Wn = W + t * dW
            Rn = prob.residual(Wn)
            merit = float(np.linalg.norm(Rn / scale))
            if np.isfinite(merit) and merit < merit0:
                break
            t *= 0.5
        else:
            raise NewtonStagnation("line search failed to reduce the residual", {"residual": norm, "iter": it})
        W, R = Wn, Rn
    raise NewtonStagnation(f"residual {norm:.3e} above tolerance after {cfg.max_newton} iterations",
                           {"residual": norm})


@dataclass
class LiouvilleSolution:
    u: ScalarField
    W: ScalarField
    states: List[ExhaustionState]
    config: SolverConfig
    lattice: Lattice = field(repr=False)
    seconds: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.u.grid

    def v(self) -> ScalarField:
        return to_v(self.u)

    def log(self) -> List[dict]:
        return [s.log_record() for s in self.states]


def default_schedule(scale: float) -> List[float]:
    return [f * scale for f in (0.08, 0.04, 0.02, 0.01)]


def solve_liouville(spec, h: float, schedule: Optional[Sequence[float]] = None, **options) -> LiouvilleSolution:
    """Exhaustion solve of Lap u = exp(2u) with u = +inf on the boundary.

    schedule: strictly decreasing offsets eps_m (absolute units).  A final stage
    on the domain itself follows unless limit_stage=False.
    """
    diag = validate(spec)
    if not diag.ok:
        raise GridError("invalid domain: " + "; ".join(diag.failures()))
    cfg = SolverConfig(h=h, schedule=schedule, **options)
    t_start = time.perf_counter()
    geo = geometry(spec)
    sched = list(cfg.schedule) if cfg.schedule is not None else default_schedule(geo.scale)
    if any(b >= a for a, b in zip(sched, sched[1:])) or any(e <= 0 for e in sched):
        raise ValueError("schedule must be strictly decreasing and positive")
    has_points = any(c.kind == "point" for c in geo.components)
    if cfg.puncture_radii is not None:
        prads = list(cfg.puncture_radii)
        if len(prads) != len(sched):
            raise ValueError("puncture_radii must match the schedule length")
    else:
        prads = [2.0 ** -(m + 1) * 0.1 * geo.scale for m in range(len(sched))]
    stages = [(e, r if has_points else None) for e, r in zip(sched, prads)]
    if cfg.limit_stage:
        stages.append((0.0, None))
    if not stages:
        raise ValueError("nothing to solve")
    top = max(sched) if sched else 0.0
    lat = build_lattice(geo, h, exact_within=top + 0.3 * geo.scale + 4 * h)
    for e, r in stages:
        _check_stage(lat, e, r)

    states: List[ExhaustionState] = []
    prev = None
    for m, (eps, prad) in enumerate(stages):
        t0 = time.perf_counter()
        grid = _rasterize(lat, eps, prad)
        if grid.n_inside < 64:
            raise GridError("grid too coarse: fewer than 64 interior nodes")
        prob = StageProblem.build(grid, cfg.order)
        W, res, its = newton(prob, prob.initial(cfg.init), cfg)
        u = np.full((grid.ny, grid.nx), np.nan)
        u[grid.inside] = prob.sing.F + W
        Wf = np.full((grid.ny, grid.nx), np.nan)
        Wf[grid.inside] = W
        state = ExhaustionState(m, eps, [prad] if prad else [], ScalarField(grid, u), res, True,
                                newton_iters=its, n_nodes=grid.n_inside, W=ScalarField(grid, Wf))
        if prev is not None:
            common = grid.inside & prev.field.grid.inside
            excess = float(np.max(u[common] - prev.field.values[common], initial=-np.inf))
            state.monotone_excess = excess
            state.monotone_ok = excess <= cfg.monotone_tol
        if cfg.check_bracket:
            Z = grid.Z[grid.inside]
            uu = u[grid.inside]
            lo = lower_barrier(grid, Z)
            up = upper_barrier(grid, Z, prob.sing.dist)
            state.bracket_excess = float(max(np.max(lo - uu), np.max(uu - up)))
        state.seconds = time.perf_counter() - t0
        states.append(state)
        log.info("stage %d eps=%.4g nodes=%d newton=%d res=%.2e mono=%.2e", m, eps, grid.n_inside, its, res,
                 state.monotone_excess)
        if not state.monotone_ok:
            raise MonotonicityError(
                f"stage {m} exceeds stage {m - 1} by {state.monotone_excess:.3e}; discretization too coarse",
                {"log": [s.log_record() for s in states]})
        if cfg.check_bracket and state.bracket_excess > cfg.bracket_tol:
            raise BracketError(f"stage {m} leaves the barrier bracket by {state.bracket_excess:.3e}",
                               {"log": [s.log_record() for s in states]})
        prev = state
    last = states[-1]
    return LiouvilleSolution(last.field, last.W, states, cfg, lat, time.perf_counter() - t_start)


def singular_at(sol: LiouvilleSolution, points) -> np.ndarray:
    """F at arbitrary points of the final stage (for u = F + W interpolation)."""
    grid = sol.grid
    lat = sol.lattice
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    comps = _stage_components(lat, grid.epsilon, grid.puncture_radius)
    return sum(_component_F(lat, sc, pts) for sc in comps)


def u_at(sol: LiouvilleSolution, points) -> np.ndarray:
    """u at arbitrary interior points: closed-form singular part plus interpolated W."""
    return singular_at(sol, points) + sol.W.interp(points)


# ---------------------------------------------------------------------------
# conformal modulus


@dataclass
class ModulusResult:
    beta: float
    flux: float
    grid_levels: List[dict]

    def to_json(self) -> dict:
        return {"beta": self.beta, "flux": self.flux, "grid_levels": self.grid_levels}


def _harmonic_flux(geo: Geometry, h: float) -> float:
    lat = build_lattice(geo, h, exact_within=0.5 * geo.scale)
    grid = _rasterize(lat, 0.0, None)
    L, b = sw_laplacian(grid, bvals=[0.0, 1.0])
    H = linsolve(-L, b, 1e-13)
    full = np.full((grid.ny, grid.nx), np.nan)
    full[grid.inside] = H
    # psi: smooth step of the outer distance, 1 near the outer curve, 0 past the band
    sep = lat.sep[0, 1]
    reach = lat.reach[0]
    b1 = 0.2 * min(sep, reach)
    b2 = 0.6 * min(sep, reach)
    if b2 - b1 < 6 * h:
        raise GridError("grid too coarse for the flux band")
    D = lat.meas[0].D
    s = (D - b1) / (b2 - b1)
    psi = 1.0 - _smoothstep(s)[0]
    total = 0.0
    for di, dj in ((1, 0), (0, 1)):
        a_in = grid.inside[: grid.ny - dj, : grid.nx - di] & grid.inside[dj:, di:]
        dpsi = psi[dj:, di:] - psi[: grid.ny - dj, : grid.nx - di]
        dH = full[dj:, di:] - full[: grid.ny - dj, : grid.nx - di]
        use = a_in & (dpsi != 0)
        total += float(np.sum(dpsi[use] * dH[use]))
    # Phi = -integral grad psi . grad H, edge (midpoint) quadrature
    return -total


def modulus(spec, h: Optional[float] = None, tol: float = 1e-3) -> ModulusResult:
    """beta with B_1 - B_beta conformal to the doubly-connected domain."""
    geo = geometry(spec)
    if not geo.doubly_connected:
        raise GridError("modulus needs a doubly-connected domain with a hole")
    diag = validate(spec)
    if not diag.ok:
        raise GridError("invalid domain: " + "; ".join(diag.failures()))
    h = h or geo.scale / 128
    levels = []
    fluxes = []
    for hh in (h, h / 2):
        t0 = time.perf_counter()
        phi = _harmonic_flux(geo, hh)
        fluxes.append(phi)
        levels.append({"h": hh, "flux": phi, "beta": math.exp(-2 * math.pi / phi),
                       "seconds": round(time.perf_counter() - t0, 3)})
    f_rich = (4 * fluxes[1] - fluxes[0]) / 3
    beta = math.exp(-2 * math.pi / f_rich)
    if not (0 < beta < 1) or abs(levels[0]["beta"] - levels[1]["beta"]) > tol:
        raise SolverError("flux not grid-converged", {"grid_levels": levels})
    return ModulusResult(beta, f_rich, levels)
