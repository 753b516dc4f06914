"""Laurent series on annuli: sampling, coefficient recovery, winding numbers
and the square root g with g**2 = 1/f'.

A series is a finite band of coefficients b_k, k_min <= k <= k_max, together
with the closed annulus r_inner <= |z| <= r_outer on which it is meant to be
used.  Everything here is a pure function of immutable values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np


class SeriesError(ValueError):
    """Raised for invalid series operations (aliasing, bad radius, ...)."""


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _next_pow2(n: int) -> int:
    return 1 << max(0, int(np.ceil(np.log2(max(n, 1)))))


@dataclass(frozen=True, eq=False)
class LaurentSeries:
    kmin: int
    coeffs: np.ndarray
    r_inner: float = 0.0
    r_outer: float = 1.0

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex)).copy()
        if c.ndim != 1 or c.size == 0:
            raise SeriesError("coefficient band must be a non-empty 1-d array")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "kmin", int(self.kmin))
        if not (self.r_outer > self.r_inner >= 0):
            raise SeriesError(
                f"need 0 <= r_inner < r_outer, got {self.r_inner}, {self.r_outer}"
            )
        if self.r_inner == 0 and self.kmin < 0 and np.any(self.coeffs[: -self.kmin] != 0):
            raise SeriesError("series on a disk cannot carry a principal part")

    @classmethod
    def from_dict(cls, coeffs: dict, r_inner: float = 0.0, r_outer: float = 1.0):
        """Build from a {k: b_k} mapping."""
        if not coeffs:
            return cls(0, [0.0], r_inner, r_outer)
        lo, hi = min(coeffs), max(coeffs)
        band = np.zeros(hi - lo + 1, dtype=complex)
        for k, b in coeffs.items():
            band[k - lo] = b
        return cls(lo, band, r_inner, r_outer)

    @property
    def kmax(self) -> int:
        return self.kmin + self.coeffs.size - 1

    @property
    def ks(self) -> np.ndarray:
        return np.arange(self.kmin, self.kmax + 1)

    def __eq__(self, other):
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return (self.kmin == other.kmin and self.r_inner == other.r_inner and self.r_outer == other.r_outer
                and np.array_equal(self.coeffs, other.coeffs))

    __hash__ = None

    def coeff(self, k: int) -> complex:
        if self.kmin <= k <= self.kmax:
            return complex(self.coeffs[k - self.kmin])
        return 0j

    def as_dict(self) -> dict:
        return {int(k): complex(b) for k, b in zip(self.ks, self.coeffs) if b != 0}

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        # Horner on the analytic part, then on the principal part in 1/z.
        out = np.zeros_like(z)
        ks = self.ks
        pos = self.coeffs[ks >= 0]
        for b in pos[::-1]:
            out = out * z + b
        if self.kmin > 0:
            out = out * z**self.kmin
        neg = self.coeffs[ks < 0]
        if neg.size:
            w = 1.0 / z
            acc = np.zeros_like(z)
            for b in neg:  # b_{kmin}, ..., b_{min(kmax, -1)}
                acc = acc * w + b
            top = min(self.kmax, -1)
            out = out + acc * w ** (-top)
        return out

    def trimmed(self, tol: float = 0.0) -> "LaurentSeries":
        """Drop leading/trailing coefficients with |b_k| max(r_in^k, r_out^k) <= tol."""
        ks = self.ks
        rin = self.r_inner if self.r_inner > 0 else self.r_outer
        with np.errstate(over="ignore", invalid="ignore"):
            weight = np.abs(self.coeffs) * np.maximum(
                np.power(float(rin), ks.astype(float)), np.power(float(self.r_outer), ks.astype(float))
            )
        weight = np.nan_to_num(weight, nan=0.0)  # 0 * inf: coefficient already underflowed
        keep = np.nonzero(weight > tol)[0]
        if keep.size == 0:
            return LaurentSeries(0, [0.0], self.r_inner, self.r_outer)
        lo, hi = keep[0], keep[-1]
        return LaurentSeries(self.kmin + lo, self.coeffs[lo : hi + 1], self.r_inner, self.r_outer)

    def with_annulus(self, r_inner: float, r_outer: float) -> "LaurentSeries":
        return LaurentSeries(self.kmin, self.coeffs, r_inner, r_outer)

    # JSON form: {"kmin": -2, "coeffs": [[re, im], ...], "rin": .5, "rout": 1.}
    def to_json(self) -> dict:
        return {
            "kmin": self.kmin,
            "coeffs": [[float(b.real), float(b.imag)] for b in self.coeffs],
            "rin": float(self.r_inner),
            "rout": float(self.r_outer),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "LaurentSeries":
        coeffs = [complex(re, im) for re, im in doc["coeffs"]]
        return cls(int(doc["kmin"]), coeffs, float(doc.get("rin", 0.0)), float(doc.get("rout", 1.0)))


@dataclass(frozen=True, eq=False)
class CircleSamples:
    radius: float
    values: np.ndarray
    source: Optional[Callable] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex).copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size

    @classmethod
    def of(cls, func: Callable, radius: float, n: int) -> "CircleSamples":
        """Sample an arbitrary callable on |z| = radius; keeps it for resampling."""
        z = radius * np.exp(2j * np.pi * np.arange(n) / n)
        return cls(radius, func(z), source=func)


def _check_radius(s: LaurentSeries, r: float):
    # The validity annulus is closed: maps are evaluated on the unit circle itself.
    if not (s.r_inner <= r <= s.r_outer) or r <= 0:
        raise SeriesError(f"radius {r} outside validity annulus [{s.r_inner}, {s.r_outer}]")


def eval_circle(s: LaurentSeries, r: float, n: int) -> CircleSamples:
    """Values of sum b_k z^k at z = r exp(2 pi i j / n), via one inverse FFT."""
    if not _is_pow2(n):
        raise SeriesError(f"n must be a power of two, got {n}")
    if n < 2 * (s.kmax - s.kmin) + 2:
        raise SeriesError(f"n = {n} too small for band [{s.kmin}, {s.kmax}]")
    _check_radius(s, r)
    ks = s.ks
    scaled = s.coeffs * np.power(float(r), ks.astype(float))
    bins = np.zeros(n, dtype=complex)
    np.add.at(bins, ks % n, scaled)
    return CircleSamples(r, np.fft.ifft(bins) * n, source=s)


def coeffs_from_circle(c: CircleSamples, k_min: int, k_max: int, r_inner=None, r_outer=None) -> LaurentSeries:
    """Recover b_k, k in [k_min, k_max], from samples on one circle."""
    if k_min > k_max:
        raise SeriesError("empty band")
    if c.n < 2 * (k_max - k_min) + 2:
        raise SeriesError(
            f"aliasing: {c.n} samples cannot resolve band [{k_min}, {k_max}] "
            f"(need >= {2 * (k_max - k_min) + 2})"
        )
    spec = np.fft.fft(c.values) / c.n
    ks = np.arange(k_min, k_max + 1)
    b = spec[ks % c.n] / np.power(float(c.radius), ks.astype(float))
    rin = c.radius if r_inner is None else r_inner
    rout = c.radius * (1 + 1e-12) if r_outer is None else r_outer
    if rin == 0 and k_min < 0:
        rin = c.radius
    return LaurentSeries(k_min, b, rin, rout)


def derivative(s: LaurentSeries) -> LaurentSeries:
    ks = s.ks
    d = s.coeffs * ks
    # the k = 0 term drops; band shifts down by one
    return LaurentSeries(s.kmin - 1, d, s.r_inner, s.r_outer).trimmed() if np.any(d) else LaurentSeries(
        0, [0.0], s.r_inner, s.r_outer
    )


def _arg_steps(values: np.ndarray) -> np.ndarray:
    return np.angle(np.roll(values, -1) / values)


def winding_number(c: CircleSamples, max_n: int = 1 << 18) -> int:
    """Index of 0 w.r.t. the sampled closed curve.

    Principal argument increments are summed; while some step exceeds pi/2 and
    the samples know their source, n is doubled (up to max_n).  With a source the
    count must also survive one more doubling, which catches uniform aliasing
    (e.g. z^7 on 8 points reads as winding -1).
    """
    n, r = c.n, c.radius

    def count(values):
        if np.min(np.abs(values)) <= 1e-12:
            raise SeriesError("curve passes within 1e-12 of the origin")
        steps = _arg_steps(values)
        return int(round(steps.sum() / (2 * np.pi))), float(np.max(np.abs(steps)))

    def sample(m):
        return c.source(r * np.exp(2j * np.pi * np.arange(m) / m))

    w, worst = count(c.values)
    if c.source is None:
        if worst >= np.pi:
            raise SeriesError(f"argument jump {worst:.3f} >= pi; sampling too coarse")
        return w
    prev = None
    while True:
        if worst <= np.pi / 2 and w == prev:
            return w
        if 2 * n > max_n:
            if worst < np.pi and prev in (None, w):
                return w
            raise SeriesError(f"winding not resolved at n = {n} (argument jump {worst:.3f})")
        prev = w if worst <= np.pi / 2 else None
        n *= 2
        w, worst = count(sample(n))


def _continuous_log(values: np.ndarray) -> np.ndarray:
    """log of samples on a closed curve with winding 0, branch tracked along the samples."""
    ang = np.unwrap(np.angle(values))
    return np.log(np.abs(values)) + 1j * ang


def sqrt_reciprocal_derivative(f: LaurentSeries, tol: float = 1e-15, max_n: int = 1 << 16) -> LaurentSeries:
    """Holomorphic g on the annulus of f with g**2 * f' = 1.

    With w the (even) winding of f' on the mid circle, g = z^(-w/2) exp(-L/2)
    where L is a single-valued log of z^(-w) f'.  Coefficients k >= 0 are read
    off the outer circle and k < 0 off the inner circle; the branch on the inner
    circle is linked to the outer one along the positive real axis.
    """
    fp = derivative(f)
    rin, rout = f.r_inner, f.r_outer
    disk = rin == 0
    r_mid = rout / 2 if disk else np.sqrt(rin * rout)
    n0 = max(64, _next_pow2(4 * (f.kmax - f.kmin) + 4))
    w = winding_number(CircleSamples.of(fp, r_mid, n0))
    if w % 2:
        raise SeriesError(f"f' has odd winding {w}; no single-valued square root")
    if disk and w != 0:
        raise SeriesError("f' vanishes inside the disk (nonzero winding)")
    half = w // 2

    def h(z):
        return fp(z) * z ** (-w)

    def g_on_circle(r, n, anchor_log=None):
        z = r * np.exp(2j * np.pi * np.arange(n) / n)
        vals = h(z)
        if np.min(np.abs(vals)) == 0:
            raise SeriesError(f"f' vanishes on |z| = {r}")
        steps = _arg_steps(vals)
        if np.max(np.abs(steps)) > np.pi / 4:
            return None
        L = _continuous_log(vals)
        if anchor_log is not None:
            # shift by 2 pi i m so that L(r) at angle 0 continues anchor_log
            m = np.round((anchor_log.imag - L[0].imag) / (2 * np.pi))
            L = L + 2j * np.pi * m
        return z ** (-half) * np.exp(-0.5 * L), L[0]

    n = n0
    while True:
        out = g_on_circle(rout, n)
        if out is not None:
            g_out, L0_out = out
            spec_out = np.fft.fft(g_out) / n
            if disk:
                inner_ok = True
            else:
                # carry the branch of log h from r_outer to r_inner along the real axis
                rs = np.linspace(rout, rin, 8 * n // 8 + 64)
                Lr = _continuous_log(h(rs.astype(complex)))
                Lr = Lr + 1j * (L0_out.imag - Lr[0].imag)
                out_in = g_on_circle(rin, n, anchor_log=Lr[-1])
                inner_ok = out_in is not None
                if inner_ok:
                    g_in, _ = out_in
                    spec_in = np.fft.fft(g_in) / n
            if inner_ok:
                # decay check on the tails of both spectra
                mag = np.abs(spec_out)
                tail = mag[n // 2 - n // 8 : n // 2 + n // 8].max()
                ok = tail <= tol * mag.max()
                if not disk:
                    magi = np.abs(spec_in)
                    ok = ok and magi[n // 2 - n // 8 : n // 2 + n // 8].max() <= tol * magi.max()
                if ok or 2 * n > max_n:
                    break
        elif 2 * n > max_n:
            raise SeriesError("could not track the branch of log f' (sampling cap hit)")
        n *= 2

    kk = np.arange(-(n // 2) + 1, n // 2)
    b = np.empty(kk.size, dtype=complex)
    pos = kk >= 0
    b[pos] = spec_out[kk[pos] % n] / np.power(float(rout), kk[pos].astype(float))
    if disk:
        b[~pos] = 0
    else:
        with np.errstate(over="ignore"):
            b[~pos] = spec_in[kk[~pos] % n] / np.power(float(rin), kk[~pos].astype(float))
    g = LaurentSeries(int(kk[0]), b, rin, rout)
    scale = float(np.max(np.abs(g_out)))
    g = g.trimmed(tol * scale)
    if disk and g.kmin < 0:
        g = LaurentSeries(0, g.coeffs[-g.kmin :], rin, rout)
    big = g.coeffs[np.argmax(np.abs(g.coeffs))]
    ang = np.angle(big)
    if not (-np.pi / 2 < ang <= np.pi / 2):
        g = LaurentSeries(g.kmin, -g.coeffs, rin, rout)
    return g


def random_series(rng: np.random.Generator, kmin: int, kmax: int, r_inner=0.5, r_outer=1.0) -> LaurentSeries:
    """Random band-limited series with coefficients scaled to O(1) on the annulus."""
    ks = np.arange(kmin, kmax + 1)
    raw = rng.normal(size=ks.size) + 1j * rng.normal(size=ks.size)
    rin = r_inner if r_inner > 0 else r_outer
    scale = np.maximum(np.power(float(rin), ks.astype(float)), np.power(float(r_outer), ks.astype(float)))
    return LaurentSeries(kmin, raw / scale, r_inner, r_outer)


def series_from_samples(func: Callable, r_inner: float, r_outer: float, n: int = 256,
                        disk: Optional[bool] = None) -> LaurentSeries:
    """Laurent coefficients of a holomorphic callable, k >= 0 read on the outer circle, k < 0 on the inner."""
    disk = (r_inner == 0) if disk is None else disk
    z_out = r_outer * np.exp(2j * np.pi * np.arange(n) / n)
    spec_out = np.fft.fft(func(z_out)) / n
    kk = np.arange(-(n // 2) + 1, n // 2)
    b = np.empty(kk.size, dtype=complex)
    pos = kk >= 0
    b[pos] = spec_out[kk[pos] % n] / np.power(float(r_outer), kk[pos].astype(float))
    if disk:
        b[~pos] = 0
    else:
        z_in = r_inner * np.exp(2j * np.pi * np.arange(n) / n)
        spec_in = np.fft.fft(func(z_in)) / n
        with np.errstate(over="ignore"):
            b[~pos] = spec_in[kk[~pos] % n] / np.power(float(r_inner), kk[~pos].astype(float))
    s = LaurentSeries(int(kk[0]), b, r_inner, r_outer)
    s = s.trimmed(1e-17 * float(np.max(np.abs(func(z_out)))))
    if disk and s.kmin < 0:
        s = LaurentSeries(0, s.coeffs[-s.kmin:], r_inner, r_outer)
    return s


def mobius_series(c1: complex, c2: complex, c3: complex, r_inner: float = 0.0, r_outer: float = 1.0,
                  tol: float = 1e-17) -> LaurentSeries:
    """Taylor series of C1 + C2/(z + C3) about 0, truncated once terms drop below tol; needs |C3| > r_outer."""
    c3 = complex(c3)
    if abs(c3) <= r_outer:
        raise SeriesError("pole of the Moebius map lies inside the validity annulus")
    q = r_outer / abs(c3)
    nterms = int(np.ceil(np.log(tol) / np.log(q))) + 2
    k = np.arange(nterms)
    b = c2 / c3 * (-1.0 / c3) ** k
    b[0] += c1
    return LaurentSeries(0, b, r_inner, r_outer)


def poly_series(coeffs: Sequence[complex], kmin: int = 0, r_inner: float = 0.0, r_outer: float = 1.0) -> LaurentSeries:
    return LaurentSeries(kmin, coeffs, r_inner, r_outer)
