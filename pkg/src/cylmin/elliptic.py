"""Elliptic-integral machinery behind the degree-zero minimizers.

The pendulum-type profile theta(t) solving the in-plane Euler-Lagrange
equation in the zero-winding class is theta(t) = am(-alpha t + b), where
alpha = alpha_kappa is fixed by requiring the right period,

    (1/2pi) int_{-pi}^{pi} dx / sqrt(alpha^2 + kappa^2 sin^2 x) = 1,

F is the associated incomplete integral with modulus kappa^2/alpha^2, and am
is its inverse. The minimal energy in that class is
-2 pi (1 + alpha^2) + 2 alpha E with E the complete second-kind-type
integral; comparing it with 2 pi locates the anisotropy threshold where the
zero- and one-winding minima exchange optimality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq
from scipy.special import ellipe, ellipkm1

from .errors import NumericalError
from .grid import AngleProfile, PeriodicGrid, VectorField, field_from_angles

TWOPI = 2.0 * math.pi

QUAD_TOL = 1e-13
QUAD_POINTS = 16
QUAD_MAX_DEPTH = 48

ALPHA_BRACKET = (1e-6, 10.0)
THRESHOLD_BRACKET = (2.0, 3.0)

_GL_X, _GL_W = leggauss(QUAD_POINTS)


def adaptive_quadrature(f, a: float, b: float, tol: float = QUAD_TOL) -> float:
    """Composite Gauss-Legendre integral of a vectorized smooth integrand.

    Panels split until the two-half refinement changes a panel by less than
    its width-proportional share of the absolute tolerance, floored at the
    panel's own roundoff so sharp peaks cannot demand sub-eps accuracy.
    """
    if b == a:
        return 0.0
    if b < a:
        return -adaptive_quadrature(f, b, a, tol)

    def panel(lo: float, hi: float) -> float:
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        return half * float(np.dot(_GL_W, f(mid + half * _GL_X)))

    width = b - a
    total = 0.0
    stack = [(a, b, panel(a, b), 0)]
    while stack:
        lo, hi, est, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        left = panel(lo, mid)
        right = panel(mid, hi)
        floor = 32.0 * np.finfo(float).eps * (abs(left) + abs(right))
        if abs(left + right - est) <= max(tol * (hi - lo) / width, floor):
            total += left + right
        elif depth >= QUAD_MAX_DEPTH:
            raise NumericalError(
                f"quadrature failed to converge on [{lo}, {hi}]"
            )
        else:
            stack.append((lo, mid, left, depth + 1))
            stack.append((mid, hi, right, depth + 1))
    return total


def _check_kappa2(kappa2: float) -> float:
    k2 = float(kappa2)
    if not np.isfinite(k2) or k2 < 0.0:
        raise ValueError(f"kappa2 must be finite and >= 0, got {kappa2!r}")
    return k2


def period_residual(alpha: float, kappa2: float) -> float:
    """(1/2pi) int dx / sqrt(alpha^2 + kappa^2 sin^2 x) - 1, decreasing in alpha.

    The integral reduces to the complete first-kind form
    4 K(m) / sqrt(alpha^2 + kappa^2) with m = kappa^2 / (alpha^2 + kappa^2);
    evaluating K through its complement keeps full accuracy as alpha -> 0.
    """
    k2 = _check_kappa2(kappa2)
    if alpha <= 0.0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    a2 = alpha * alpha
    complement = a2 / (a2 + k2)
    period = 4.0 * float(ellipkm1(complement)) / math.sqrt(a2 + k2)
    return period / TWOPI - 1.0


@lru_cache(maxsize=256)
def _solve_alpha_cached(k2: float) -> float:
    lo, hi = ALPHA_BRACKET
    r_lo = period_residual(lo, k2)
    r_hi = period_residual(hi, k2)
    if not (r_lo > 0.0 > r_hi):
        raise NumericalError(
            f"alpha bracket {ALPHA_BRACKET} does not straddle the root"
            f" (residuals {r_lo:.3e}, {r_hi:.3e})"
        )
    alpha = brentq(period_residual, lo, hi, args=(k2,), xtol=1e-15, rtol=8.9e-16)
    residual = period_residual(alpha, k2)
    if abs(residual) > 1e-12:
        raise NumericalError(f"alpha solve residual {residual:.3e} exceeds 1e-12")
    return float(alpha)


def solve_alpha(kappa2: float) -> float:
    """The unique alpha > 0 giving the profile a full period of 2pi."""
    k2 = _check_kappa2(kappa2)
    if k2 == 0.0:
        return 1.0
    return _solve_alpha_cached(k2)


@lru_cache(maxsize=128)
def _period(kappa2: float, alpha: float) -> float:
    return _incomplete(math.pi, kappa2, alpha)


def _incomplete(theta: float, kappa2: float, alpha: float) -> float:
    c = kappa2 / (alpha * alpha)

    def integrand(x):
        s = np.sin(x)
        return 1.0 / np.sqrt(1.0 + c * s * s)

    return adaptive_quadrature(integrand, -math.pi, theta)


def elliptic_F(theta: float, kappa2: float, alpha: float) -> float:
    """Incomplete integral int_{-pi}^{theta} dx / sqrt(1 + (kappa2/alpha^2) sin^2 x).

    Strictly increasing in theta; the integrand is pi-periodic, so values
    outside [-pi, pi] reduce by whole periods.
    """
    k2 = _check_kappa2(kappa2)
    if alpha <= 0.0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    wraps = math.floor((theta + math.pi) / TWOPI)
    reduced = theta - TWOPI * wraps
    value = _incomplete(reduced, k2, alpha)
    if wraps != 0:
        value += wraps * _period(k2, alpha)
    return value


def jacobi_am(y: float, kappa2: float, alpha: float) -> float:
    """Inverse of elliptic_F: the theta with F(theta) = y, accurate to 1e-11.

    Newton iteration from the linear guess theta0 = -pi + y/alpha, with a
    bisection fallback on the bracketing interval; quasi-periodicity
    am(y + period) = am(y) + 2pi reduces the argument first.
    """
    k2 = _check_kappa2(kappa2)
    if alpha <= 0.0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    period = _period(k2, alpha)
    wraps = math.floor(y / period)
    yr = y - wraps * period
    c = k2 / (alpha * alpha)

    lo, hi = -math.pi, math.pi
    theta = min(max(-math.pi + yr / alpha, lo), hi)
    for _ in range(100):
        f = _incomplete(theta, k2, alpha) - yr
        if abs(f) < 1e-13:
            break
        if f > 0.0:
            hi = theta
        else:
            lo = theta
        slope_inv = math.sqrt(1.0 + c * math.sin(theta) ** 2)
        candidate = theta - f * slope_inv
        if not lo < candidate < hi:
            candidate = 0.5 * (lo + hi)
        if candidate == theta:
            break
        theta = candidate
    else:
        raise NumericalError("amplitude inversion did not converge")
    return theta + TWOPI * wraps


def complete_E(kappa2: float, alpha: float) -> float:
    """int_{-pi}^{pi} sqrt(1 + (kappa2/alpha^2) sin^2 x) dx; >= 2pi.

    Reduces to the complete second-kind integral:
    (4/alpha) sqrt(alpha^2 + kappa^2) E(m) with m = kappa^2/(alpha^2+kappa^2).
    """
    k2 = _check_kappa2(kappa2)
    if alpha <= 0.0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    a2 = alpha * alpha
    m = k2 / (a2 + k2)
    return 4.0 * math.sqrt(a2 + k2) * float(ellipe(m)) / alpha


@dataclass(frozen=True)
class EllipticSolution:
    kappa2: float
    alpha: float
    E_complete: float
    F_period: float
    energy_deg0: float

    def __post_init__(self):
        if abs(self.F_period - TWOPI * self.alpha) > 1e-10:
            raise ValueError("F_period must equal 2 pi alpha")
        expected = -TWOPI * (1.0 + self.alpha**2) + 2.0 * self.alpha * self.E_complete
        if abs(self.energy_deg0 - expected) > 1e-12 * max(1.0, abs(expected)):
            raise ValueError("energy_deg0 inconsistent with alpha and E")


def solve_elliptic(kappa2: float) -> EllipticSolution:
    k2 = _check_kappa2(kappa2)
    alpha = solve_alpha(k2)
    e_val = complete_E(k2, alpha)
    f_period = elliptic_F(math.pi, k2, alpha)
    energy = -TWOPI * (1.0 + alpha * alpha) + 2.0 * alpha * e_val
    return EllipticSolution(
        kappa2=k2,
        alpha=float(alpha),
        E_complete=float(e_val),
        F_period=float(f_period),
        energy_deg0=float(energy),
    )


def default_offset(kappa2: float, alpha: float | None = None) -> float:
    """The family offset b placing theta(-pi) exactly at pi."""
    if alpha is None:
        alpha = solve_alpha(kappa2)
    return math.pi * alpha


def degree_zero_minimizer(
    kappa2: float, grid: PeriodicGrid, b: float | None = None
) -> tuple[AngleProfile, VectorField]:
    """Sample the zero-winding minimizer theta(t) = am(-alpha t + b).

    Returns the strictly decreasing lift (one full negative turn, so the
    planar winding of the field is zero) and the in-plane field it generates.
    The offset b shifts the profile along t without changing the energy.
    """
    k2 = _check_kappa2(kappa2)
    alpha = solve_alpha(k2)
    if b is None:
        b = default_offset(k2, alpha)
    theta = np.array(
        [jacobi_am(-alpha * t + b, k2, alpha) for t in grid.nodes]
    )
    # base value in (-pi, pi], whole turns preserved
    shift = TWOPI * math.ceil((theta[0] - math.pi) / TWOPI)
    theta -= shift
    profile = AngleProfile(grid, theta, -1)
    return profile, field_from_angles(profile)


def threshold_gap(kappa2: float) -> float:
    """Energy gap -2 pi alpha^2 + 2 alpha E - 4 pi, negative below threshold."""
    sol = solve_elliptic(kappa2)
    return -TWOPI * sol.alpha**2 + 2.0 * sol.alpha * sol.E_complete - 2.0 * TWOPI


def solve_threshold(tol: float = 1e-10) -> float:
    """Anisotropy where zero- and one-winding minima exchange optimality."""
    lo, hi = THRESHOLD_BRACKET
    g_lo = threshold_gap(lo)
    g_hi = threshold_gap(hi)
    if not (g_lo < 0.0 < g_hi):
        raise NumericalError(
            f"threshold bracket {THRESHOLD_BRACKET} does not straddle the root"
            f" (gaps {g_lo:.3e}, {g_hi:.3e})"
        )
    root = brentq(threshold_gap, lo, hi, xtol=min(tol, 1e-10), rtol=8.9e-16)
    residual = threshold_gap(root)
    if abs(residual) > 1e-9:
        raise NumericalError(f"threshold residual {residual:.3e} exceeds 1e-9")
    return float(root)


def write_elliptic_csv(solutions, path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["kappa2", "alpha", "E_complete", "energy_deg0", "energy_deg1"]
        )
        for s in solutions:
            writer.writerow(
                [
                    "{:.17g}".format(s.kappa2),
                    "{:.17g}".format(s.alpha),
                    "{:.17g}".format(s.E_complete),
                    "{:.17g}".format(s.energy_deg0),
                    "{:.17g}".format(TWOPI),
                ]
            )
