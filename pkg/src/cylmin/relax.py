"""Sharp Poincare constant of the relaxed quadratic problem and its extremals.

The relaxed problem minimizes the Rayleigh quotient

    G(u) = [ int |u'|^2 + kappa^2 int |u x n|^2 ] / int |u|^2

over nonzero periodic H^1 fields. A Fourier block reduction gives the sharp
constant in closed form; an independent finite-difference eigenvalue oracle
cross-checks it numerically. The minimizing fields form one family per
anisotropy regime, all normalized to mean-square one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import kernels
from .grid import (
    IN_PLANE,
    UNCONSTRAINED,
    PeriodicGrid,
    VectorField,
    compose_frame_field,
    make_frame,
    sample_normal_field,
)

SUPERCRITICAL = "supercritical"
CRITICAL = "critical"
SUBCRITICAL = "subcritical"

REGIME_TOL = 1e-12
BLOCK_CUTOFF = 8
RHO1_MAX = 1.0 / np.sqrt(5.0)


@dataclass(frozen=True)
class PoincareResult:
    kappa2: float
    omega2: float
    c2_closed: float
    phi_kappa: float
    regime: str
    c2_numeric: float | None = None


@dataclass(frozen=True)
class ExtremalParams:
    """Free parameters of the minimizer families.

    theta is the rotation phase, defined for every regime; rho1 is the extra
    amplitude of the critical family and is ignored elsewhere.
    """

    theta: float = 0.0
    rho1: float = 0.0

    def __post_init__(self):
        if not -np.pi <= self.theta <= np.pi:
            raise ValueError(f"theta must lie in [-pi, pi], got {self.theta}")
        if self.rho1 < 0.0:
            raise ValueError(f"rho1 must be >= 0, got {self.rho1}")


def _check_kappa2(kappa2: float) -> float:
    k2 = float(kappa2)
    if not np.isfinite(k2) or k2 <= 0.0:
        raise ValueError(f"kappa2 must be finite and > 0, got {kappa2!r}")
    return k2


def classify_regime(kappa2: float) -> str:
    k2 = _check_kappa2(kappa2)
    if abs(k2 - 3.0) <= REGIME_TOL:
        return CRITICAL
    return SUPERCRITICAL if k2 > 3.0 else SUBCRITICAL


def block_eigenvalue(n: int, kappa2: float) -> float:
    """Smallest Rayleigh value within the n-th Fourier block.

    The in-plane ansatz with a single frequency pair reduces G to a 2x2 form
    per block; its smaller eigenvalue is kappa^2/2 + n^2 + 1
    - sqrt(kappa^4 + 16 n^2)/2 for n >= 1. The n = 0 block degenerates: its
    only admissible mode costs exactly 1.
    """
    k2 = _check_kappa2(kappa2)
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if n == 0:
        return 1.0
    return k2 / 2.0 + n * n + 1.0 - 0.5 * np.sqrt(k2 * k2 + 16.0 * n * n)


def phi_kappa(kappa2: float) -> float:
    return 0.5 * np.arctan2(4.0, _check_kappa2(kappa2))


def closed_form_constant(kappa2: float) -> PoincareResult:
    """Sharp constant c^2 of the relaxed Poincare inequality."""
    k2 = _check_kappa2(kappa2)
    omega2 = np.sqrt(k2 * k2 + 16.0)
    regime = classify_regime(k2)
    if regime == SUPERCRITICAL:
        c2 = 1.0
    else:
        c2 = 0.5 * (k2 - omega2 + 4.0)
    block_min = min(block_eigenvalue(n, k2) for n in range(BLOCK_CUTOFF + 1))
    if abs(block_min - c2) > 1e-12:
        raise AssertionError(
            f"block minimum {block_min} disagrees with closed form {c2}"
        )
    return PoincareResult(
        kappa2=k2,
        omega2=float(omega2),
        c2_closed=float(c2),
        phi_kappa=float(phi_kappa(k2)),
        regime=regime,
    )


def _oracle_matrix(kappa2: float, grid: PeriodicGrid) -> np.ndarray:
    n = grid.n_points
    h = grid.spacing
    shift = np.roll(np.eye(n), 1, axis=1)
    lap = (2.0 * np.eye(n) - shift - shift.T) / (h * h)
    mat = np.kron(lap, np.eye(3))
    frame = make_frame(grid)
    for i in range(n):
        nv = frame.normal[i]
        block = kappa2 * (np.eye(3) - np.outer(nv, nv))
        mat[3 * i : 3 * i + 3, 3 * i : 3 * i + 3] += block
    return mat


def relaxed_spectrum(
    kappa2: float, grid: PeriodicGrid, count: int = 1
) -> tuple[np.ndarray, np.ndarray]:
    """Smallest eigenpairs of the discretized relaxed operator.

    Returns (values, modes) with modes of shape (count, N, 3). The operator is
    the periodic 3-point Laplacian acting componentwise plus the anisotropy
    projector; the quadrature mass cancels to a standard symmetric problem.
    """
    k2 = _check_kappa2(kappa2)
    if count < 1:
        raise ValueError("count must be >= 1")
    mat = _oracle_matrix(k2, grid)
    vals, vecs = scipy.linalg.eigh(mat, subset_by_index=[0, count - 1])
    modes = vecs.T.reshape(count, grid.n_points, 3)
    return vals, modes


def numerical_constant(kappa2: float, grid: PeriodicGrid) -> float:
    """Independent eigenvalue oracle for the sharp constant."""
    vals, _ = relaxed_spectrum(kappa2, grid, count=1)
    return float(vals[0])


def poincare_result(
    kappa2: float, grid: PeriodicGrid | None = None
) -> PoincareResult:
    res = closed_form_constant(kappa2)
    if grid is None:
        return res
    c2n = numerical_constant(kappa2, grid)
    return PoincareResult(
        kappa2=res.kappa2,
        omega2=res.omega2,
        c2_closed=res.c2_closed,
        phi_kappa=res.phi_kappa,
        regime=res.regime,
        c2_numeric=c2n,
    )


def extremal_field(
    kappa2: float, params: ExtremalParams, grid: PeriodicGrid
) -> VectorField:
    """A minimizer of the relaxed Rayleigh quotient, mean-square normalized.

    Supercritical anisotropy pins the minimizer to the normal field; at the
    critical value a one-parameter circle of families appears; below it a
    fixed elliptically-polarized profile with angle phi_kappa wins. None of
    the non-normal members has constant length.
    """
    k2 = _check_kappa2(kappa2)
    regime = classify_regime(k2)
    t = grid.nodes
    if regime == SUPERCRITICAL:
        return sample_normal_field(grid)
    if regime == CRITICAL:
        if params.rho1 > RHO1_MAX + 1e-15:
            raise ValueError(
                f"rho1 must lie in [0, {RHO1_MAX!r}] at the critical anisotropy"
            )
        rho = params.rho1
        m1 = np.sqrt(2.0) * rho * np.cos(params.theta + t)
        m2 = np.sqrt(1.0 - 5.0 * rho * rho) + 2.0 * np.sqrt(2.0) * rho * np.sin(
            params.theta + t
        )
        kind = IN_PLANE if rho == 0.0 else UNCONSTRAINED
        return compose_frame_field(grid, m1, m2, None, kind)
    phi = phi_kappa(k2)
    m1 = np.sqrt(2.0) * np.sin(phi) * np.cos(params.theta + t)
    m2 = np.sqrt(2.0) * np.cos(phi) * np.sin(params.theta + t)
    return compose_frame_field(grid, m1, m2, None, UNCONSTRAINED)


def rayleigh_quotient(field: VectorField, kappa2: float) -> float:
    """G(u) evaluated with the high-order frame discretization."""
    k2 = _check_kappa2(kappa2)
    frame = make_frame(field.grid)
    d, a = kernels.ring_parts(
        field.values, frame.tangent, frame.normal, k2, field.grid.spacing
    )
    mass = field.grid.spacing * float(np.sum(field.values**2))
    if mass <= 0.0:
        raise ValueError("field has zero mass")
    return (d + a) / mass


def relaxed_energy_bounds(kappa2: float) -> tuple[float, float]:
    k2 = _check_kappa2(kappa2)
    return 0.0, min(k2 / 2.0, 1.0)


def poincare_sweep(
    kappa2_values, grid: PeriodicGrid | None = None
) -> list[PoincareResult]:
    return [poincare_result(k2, grid) for k2 in kappa2_values]


def write_poincare_csv(results, path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kappa2", "c2_closed", "c2_numeric", "phi_kappa", "regime"])
        for r in results:
            numeric = "" if r.c2_numeric is None else "{:.17g}".format(r.c2_numeric)
            writer.writerow(
                [
                    "{:.17g}".format(r.kappa2),
                    "{:.17g}".format(r.c2_closed),
                    numeric,
                    "{:.17g}".format(r.phi_kappa),
                    r.regime,
                ]
            )
