"""Closed-form solutions and sharp constants used as oracles everywhere else.

Radial model solutions of v Lap v = |grad v|^2 - 1 (equivalently
Lap u = exp(2u) with u = -log v) on the round annulus, the disk, the punctured
disk and shells, plus the constant c3 of the annulus and the sharp bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np


@dataclass(frozen=True)
class ModelConstants:
    beta: float
    c3: float
    lambda_bound: float
    kappa: float = 1.0


def _gap_factor(beta: float) -> float:
    """(pi / ln beta)^2 + 1, with the beta -> 0 limit 1."""
    if beta == 0:
        return 1.0
    return (math.pi / math.log(beta)) ** 2 + 1.0


def constants(beta: float) -> ModelConstants:
    if not (0 <= beta < 1):
        raise ValueError(f"beta must lie in [0, 1), got {beta}")
    k = _gap_factor(beta)
    return ModelConstants(beta=beta, c3=-k / 6.0, lambda_bound=2 * math.pi**2 / 3 * k)


def v_annulus(beta: float, r):
    """v on B_1 - B_beta: -r (ln beta / pi) sin(pi ln r / ln beta)."""
    if not (0 < beta < 1):
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    r = np.asarray(r, dtype=float)
    if np.any(r < beta) or np.any(r > 1):
        raise ValueError("radius outside [beta, 1]")
    lb = math.log(beta)
    out = -r * (lb / math.pi) * np.sin(math.pi * np.log(r) / lb)
    return out if out.ndim else float(out)


def v_annulus_derivs(beta: float, r):
    """(v, v_r, v_rr, v_rrr) of the annulus model, for residual and boundary checks."""
    a = math.pi / math.log(beta)
    r = np.asarray(r, dtype=float)
    th = a * np.log(r)
    s, c = np.sin(th), np.cos(th)
    v = -r * s / a
    v1 = -s / a - c
    v2 = (a * s - c) / r
    v3 = (a * a + 1) * c / (r * r)
    return v, v1, v2, v3


def v_disk(r):
    """(1 - r^2)/2, the solution on the unit disk (d - d^2/2 with d = 1 - r, so c3 = 0)."""
    r = np.asarray(r, dtype=float)
    out = (1.0 - r * r) / 2.0
    return out if out.ndim else float(out)


def as_complex(p) -> complex:
    """Plane point given as complex or (x, y) pair."""
    if isinstance(p, (tuple, list)) and len(p) == 2:
        return complex(p[0], p[1])
    return complex(p)


def _radius(p, x) -> np.ndarray:
    return np.abs(np.asarray(x, dtype=complex) - as_complex(p))


def u_punctured_disk(r: float, p, x):
    """-log(-(|x-p|/r) log(|x-p|/r)) - 2 ln r, as printed.

    Only for r = 1 is this an exact solution; for other r it is the
    growth-condition barrier (see ``u_cusp`` for the scale-consistent form).
    """
    rho = _radius(p, x)
    if np.any(rho <= 0) or np.any(rho >= r):
        raise ValueError("need 0 < |x - p| < r")
    s = rho / r
    out = -np.log(-s * np.log(s)) - 2.0 * math.log(r)
    return out if np.ndim(out) else float(out)


def u_cusp(r: float, rho):
    """Exact solution on B_r(p) - {p}: -log(rho log(r/rho))."""
    rho = np.asarray(rho, dtype=float)
    return -np.log(rho * np.log(r / rho))


def u_shell(r: float, p, x):
    """Solution on B_1(p) - closure(B_r(p)), blowing up on both circles."""
    rho = _radius(p, x)
    if not (0 < r < 1):
        raise ValueError("shell needs 0 < r < 1")
    if np.any(rho <= r) or np.any(rho >= 1):
        raise ValueError("need r < |x - p| < 1")
    L = math.log(1.0 / r)
    out = -np.log((rho / math.pi) * L * np.sin(math.pi * np.log(1.0 / rho) / L))
    return out if np.ndim(out) else float(out)


def growth_bound(r: float, p, x):
    """-log(-r |x-p| log(|x-p|/r)), the lower bound of the growth condition."""
    rho = _radius(p, x)
    return -np.log(-r * rho * np.log(rho / r))


def growth_barrier_check(u_values: Iterable[Tuple[complex, float]], p, r: float, slack: float = -1e-8) -> bool:
    pts, vals = [], []
    for x, u in u_values:
        pts.append(as_complex(x))
        vals.append(float(u))
    if not pts:
        return True
    pts = np.array(pts)
    rho = _radius(p, pts)
    if np.any(rho <= 0) or np.any(rho >= r):
        return False
    margin = np.array(vals) - growth_bound(r, p, pts)
    return bool(np.all(margin >= slack))


def liouville_residual_radial(v, v_r, v_rr, r):
    """|v Lap v - |grad v|^2 + 1| for a radial v."""
    lap = v_rr + v_r / r
    return np.abs(v * lap - v_r**2 + 1.0)
