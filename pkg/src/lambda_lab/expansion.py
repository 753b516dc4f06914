"""Boundary expansion coefficients of a numeric v and the assembled lambda.

Near a boundary point y with inward normal N and curvature kappa,
v(y + d N) = d - kappa d^2 / 2 + c3 d^3 + O(d^4).  Two estimators of c3:

* normal_fit: least squares on w = v - d + kappa d^2 / 2 against d^3 plus
  higher nuisance powers, kappa pinned from geometry;
* flux: Lap v = -2 kappa + 6 c3 d + O(d^2) along the normal, fitted by a
  cubic from the discrete Laplacian of v.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .domain import BoundaryFrame, frames as curve_frames
from .liouville import ScalarField, LiouvilleSolution, InterpolationError
from .mapcalc import LambdaReport
from .models import constants


class ExpansionError(ValueError):
    pass


@dataclass
class ExpansionProfile:
    frames: List[BoundaryFrame]
    c3: np.ndarray
    kappa_fit: np.ndarray
    residual: np.ndarray
    method: str  # "normal_fit" | "flux"
    component: str = "outer"
    window: Tuple[float, float] = (0.0, 0.0)
    retained: Optional[np.ndarray] = None
    intercept: Optional[np.ndarray] = None  # flux: extrapolated Lap v at d = 0
    extra: dict = field(default_factory=dict)

    @property
    def kappa(self) -> np.ndarray:
        return np.array([f.curvature for f in self.frames])

    @property
    def arc_weights(self) -> np.ndarray:
        return np.array([f.arc_weight for f in self.frames])

    def rows(self) -> List[dict]:
        s = np.concatenate([[0.0], np.cumsum(self.arc_weights)[:-1]])
        return [
            {"s": float(si), "kappa": float(f.curvature), "c3": float(c), "residual": float(r)}
            for si, f, c, r in zip(s, self.frames, self.c3, self.residual)
        ]


def default_window(h: float, scale: float) -> Tuple[float, float]:
    return 6 * h, 0.08 * scale


def _check_window(v: ScalarField, window, reach: float, sep: float):
    lo, hi = window
    h = v.grid.h
    if not (4 * h < lo < hi):
        raise ExpansionError(f"window [{lo:.4g}, {hi:.4g}] must start above 4h = {4 * h:.4g}")
    if hi >= 0.5 * reach or hi >= 0.5 * sep:
        raise ExpansionError(f"window top {hi:.4g} outside the valid band (reach/2 = {0.5 * reach:.4g}, "
                             f"separation/2 = {0.5 * sep:.4g})")


def _limits(v: ScalarField) -> Tuple[float, float, float]:
    lat = v.grid.lattice
    if lat is None:
        return np.inf, np.inf, 1.0
    sep = float(np.min(lat.sep[0, 1:])) if lat.sep.shape[0] > 1 else np.inf
    return float(lat.reach[0]), sep, lat.geo.scale


def outer_frames(sol_or_field, n: int = 64) -> List[BoundaryFrame]:
    grid = sol_or_field.grid if isinstance(sol_or_field, (ScalarField, LiouvilleSolution)) else sol_or_field
    return curve_frames(grid.lattice.geo.outer.curve, n)


def _profile_points(frames: Sequence[BoundaryFrame], depths: np.ndarray) -> np.ndarray:
    y = np.array([f.point for f in frames])
    N = np.array([f.inward_normal for f in frames])
    return y[:, None] + depths[None, :] * N[:, None]


def extract_c3_fit(
    v: ScalarField,
    frames: Sequence[BoundaryFrame],
    window: Optional[Tuple[float, float]] = None,
    n_depths: int = 12,
    nuisance: int = 3,
    fit_tol: float = 1e-4,
) -> ExpansionProfile:
    """c3 per frame by least squares along the inward normal.

    nuisance: number of extra powers d^4, d^5, ... fitted alongside d^3.
    """
    reach, sep, scale = _limits(v)
    window = window or default_window(v.grid.h, scale)
    _check_window(v, window, reach, sep)
    d = np.linspace(window[0], window[1], n_depths)
    pts = _profile_points(frames, d)
    vals = v.interp(pts.ravel()).reshape(pts.shape)
    kap = np.array([f.curvature for f in frames])
    M = np.stack([d ** (3 + j) for j in range(nuisance + 1)], axis=1)
    w = vals - d[None, :] + 0.5 * kap[:, None] * d[None, :] ** 2
    coef, *_ = np.linalg.lstsq(M, w.T, rcond=None)
    fit = (M @ coef).T
    # misfit relative to the window depth: v has units of length
    resid = np.sqrt(np.mean((w - fit) ** 2, axis=1)) / np.max(d)
    # diagnostic: kappa fitted freely
    M2 = np.column_stack([-0.5 * d**2, M])
    coef2, *_ = np.linalg.lstsq(M2, (vals - d[None, :]).T, rcond=None)
    kfit = coef2[0]
    retained = resid < fit_tol
    return ExpansionProfile(
        list(frames), coef[0], kfit, resid, "normal_fit", window=tuple(window), retained=retained,
        extra={"higher": coef[1:].T.tolist(), "depths": d.tolist()},
    )


def laplacian_field(v: ScalarField) -> ScalarField:
    """Five-point Lap_h v at nodes whose four neighbours are on the mask, NaN elsewhere."""
    a = v.values
    h = v.grid.h
    out = np.full_like(a, np.nan)
    out[1:-1, 1:-1] = (a[1:-1, 2:] + a[1:-1, :-2] + a[2:, 1:-1] + a[:-2, 1:-1] - 4 * a[1:-1, 1:-1]) / h**2
    return ScalarField(v.grid, out)


def extract_c3_flux(
    v: ScalarField,
    frames: Sequence[BoundaryFrame],
    depth: Optional[float] = None,
    window: Optional[Tuple[float, float]] = None,
    n_depths: int = 12,
    degree: int = 3,
) -> ExpansionProfile:
    """c3 from the normal derivative of Lap v at the boundary.

    Lap_h v is sampled at n_depths depths of the window and fitted by a
    polynomial of the given degree in d; the slope at d = 0 is 6 c3 and the
    value at d = 0 is the boundary Laplacian (-2 kappa).  Degree 2 leaves a
    few percent of d^2 curvature in the slope; 3 is the default.  With `depth` given
    the window is [depth - 2h, depth + 2h] (three samples, centred difference
    plus linear extrapolation).
    """
    reach, sep, scale = _limits(v)
    h = v.grid.h
    if depth is not None:
        window = (depth - 2 * h, depth + 2 * h)
        n_depths, degree = 3, 1
    window = window or default_window(h, scale)
    if window[0] <= 4 * h:
        raise ExpansionError(f"flux samples must stay deeper than 4h = {4 * h:.4g}")
    _check_window(v, window, reach, sep)
    d = np.linspace(window[0], window[1], n_depths)
    pts = _profile_points(frames, d)
    try:
        lap = laplacian_field(v).interp(pts.ravel()).reshape(pts.shape)
    except InterpolationError as exc:
        raise ExpansionError(f"flux stencil leaves the mask: {exc}") from exc
    M = np.stack([d**j for j in range(degree + 1)], axis=1)
    coef, *_ = np.linalg.lstsq(M, lap.T, rcond=None)
    fit = (M @ coef).T
    resid = np.sqrt(np.mean((lap - fit) ** 2, axis=1))
    kap = np.array([f.curvature for f in frames])
    return ExpansionProfile(
        list(frames), coef[1] / 6.0, -coef[0] / 2.0, resid, "flux", window=tuple(window),
        retained=np.ones(len(frames), bool), intercept=coef[0],
        extra={"depths": d.tolist(), "kappa_geometric": kap.tolist()},
    )


def kappa_consistent(profile: ExpansionProfile, rtol: float = 0.05, scale: float = 1.0) -> np.ndarray:
    """Frame-wise agreement of the fitted and geometric curvature.

    Relative for |kappa| >= 1/scale; absolute 0.05/scale near inflections.
    """
    k = profile.kappa
    return np.abs(profile.kappa_fit - k) <= np.maximum(rtol * np.abs(k), rtol / scale)


def lambda_numeric(profile: ExpansionProfile, beta: Optional[float] = None) -> LambdaReport:
    """lambda = -(sum of arc weights) * (sum of c3 * arc weight) over the outermost boundary."""
    if profile.component != "outer":
        raise ExpansionError("lambda integrates over the outermost boundary only")
    if profile.retained is not None and not np.all(profile.retained):
        bad = int(np.sum(~profile.retained))
        raise ExpansionError(f"{bad} frames failed the fit tolerance; boundary coverage incomplete")
    w = profile.arc_weights
    L = float(np.sum(w))
    I = float(np.sum(profile.c3 * w))
    lam = -L * I
    lb = constants(beta).lambda_bound if beta is not None else 0.0
    return LambdaReport(
        lam=lam,
        boundary_length=L,
        c3_integral=I,
        lower_bound=lb,
        defect=lam - lb,
        b_tail_norm=None,
        holder_defect=None,
        equality=None,
        beta=beta,
        mode="pde",
        extra={"method": profile.method, "frames": len(profile.frames)},
    )
