"""Multi-precision reference values, computed without the package under test."""

from __future__ import annotations

import mpmath as mp
import numpy as np

mp.mp.dps = 30


def lambda_bound(beta) -> float:
    beta = mp.mpf(beta)
    if beta == 0:
        return float(2 * mp.pi**2 / 3)
    return float(2 * mp.pi**2 / 3 * ((mp.pi / mp.log(beta)) ** 2 + 1))


def c3_annulus(beta) -> float:
    beta = mp.mpf(beta)
    if beta == 0:
        return -1.0 / 6
    return float(-((mp.pi / mp.log(beta)) ** 2 + 1) / 6)


def v_annulus(beta, r):
    lb = mp.log(mp.mpf(beta))
    r = mp.mpf(r)
    return -r * lb / mp.pi * mp.sin(mp.pi * mp.log(r) / lb)


def annulus_taylor(beta, order: int = 3):
    """Coefficients of v(1 - d) in powers of d, by multi-precision differentiation."""
    return [float(mp.diff(lambda d: v_annulus(beta, 1 - d), 0, k) / mp.factorial(k)) for k in range(order + 1)]


def u_punctured_disk(r, rho) -> float:
    s = mp.mpf(rho) / r
    return float(-mp.log(-s * mp.log(s)) - 2 * mp.log(r))


def u_shell(r, rho) -> float:
    L = mp.log(1 / mp.mpf(r))
    rho = mp.mpf(rho)
    return float(-mp.log(rho / mp.pi * L * mp.sin(mp.pi * mp.log(1 / rho) / L)))


def mobius_lambda(c1, c2, c3, beta, n: int = 64) -> float:
    """lambda of f = c1 + c2/(z + c3) on B_1 - B_beta by direct boundary expansion.

    v on the image is v_beta(|z|) |f'(z)| at z = f^{-1}(w); c3(y) is read off as the
    third normal derivative / 6 at each outer boundary point, then integrated
    against arc length with the periodic trapezoid rule.
    """
    c1, c2, c3 = mp.mpc(c1), mp.mpc(c2), mp.mpc(c3)
    beta = mp.mpf(beta)

    def f(z):
        return c1 + c2 / (z + c3)

    def fp(z):
        return -c2 / (z + c3) ** 2

    def finv(w):
        return c2 / (w - c1) - c3

    def v(w):
        z = finv(w)
        return v_annulus(beta, abs(z)) * abs(fp(z))

    L = mp.mpf(0)
    I = mp.mpf(0)
    for j in range(n):
        z = mp.expj(2 * mp.pi * j / n)
        y = f(z)
        tangent = 1j * z * fp(z)
        speed = abs(tangent)
        N = 1j * tangent / speed
        c3y = mp.diff(lambda d: v(y + d * N), 0, 3) / 6
        w = speed * 2 * mp.pi / n
        L += w
        I += c3y * w
    return float(-L * I)


def mobius_length(c2, c3) -> float:
    """Length of the image of |z| = 1 under c1 + c2/(z + c3)."""
    c2, c3 = mp.mpc(c2), mp.mpc(c3)
    return float(mp.quad(lambda t: abs(c2) / abs(mp.expj(t) + c3) ** 2, [0, 2 * mp.pi]))


def modulus_harmonic_fit(outer, c: complex, r: float, N: int = 40, M: int = 600) -> float:
    """beta of the domain between a closed curve and the circle |z - c| = r.

    The harmonic measure H (0 on the outer curve, 1 on the circle) is fitted in
    the basis 1, log|z - c|, Re/Im (z - c)^{+-k}; on the model annulus
    H = log|z| / log beta, so beta = exp(1 / coefficient of log|z - c|).
    """
    t = 2 * np.pi * np.arange(M) / M
    zo = outer(t)
    zi = c + r * np.exp(1j * t)

    def basis(z):
        w = z - c
        cols = [np.ones_like(w.real), np.log(np.abs(w))]
        for k in range(1, N + 1):
            for p in (w**k, w**-k):
                cols += [p.real, p.imag]
        return np.column_stack(cols)

    A = np.vstack([basis(zo), basis(zi)])
    s = np.max(np.abs(A), axis=0)
    rhs = np.r_[np.zeros(M), np.ones(M)]
    x = np.linalg.lstsq(A / s, rhs, rcond=None)[0] / s
    if np.max(np.abs(A @ x - rhs)) > 1e-8:
        raise ArithmeticError("harmonic fit did not resolve the boundary data")
    return float(np.exp(1 / x[1]))
