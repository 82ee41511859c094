"""Discrete energies, gradients, stationarity residuals, and second variation.

The energy of a unit field m on the circle is

    F(m) = int |dm/dt|^2 dt + kappa^2 int |m x n|^2 dt

and on the cylinder the Dirichlet term gains |dm/dz|^2 with the integral
taken over [-1, 1] x [-pi, pi]. Since |m x n|^2 = |m|^2 - (m.n)^2 = m1^2 +
m3^2 for unit fields, the anisotropy penalizes everything but the normal
component. All heavy arithmetic is delegated to the kernels module.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import kernels
from .grid import (
    CylinderField,
    PeriodicGrid,
    VectorField,
    make_frame,
)

TANGENT_TOL = 1e-10


@dataclass(frozen=True)
class EnergyParams:
    """Anisotropy strength kappa^2 (dimensionless, >= 0)."""

    kappa2: float

    def __post_init__(self):
        k2 = float(self.kappa2)
        if not np.isfinite(k2) or k2 < 0.0:
            raise ValueError(f"kappa2 must be finite and >= 0, got {self.kappa2!r}")
        object.__setattr__(self, "kappa2", k2)
        if k2 == 0.0:
            warnings.warn(
                "kappa2 = 0 is degenerate: every constant unit field minimizes",
                stacklevel=2,
            )

    @property
    def degenerate(self) -> bool:
        return self.kappa2 == 0.0


@dataclass(frozen=True)
class EnergyReport:
    kappa2: float
    dirichlet: float
    anisotropy: float
    total: float

    def __post_init__(self):
        if self.dirichlet < -1e-12 or self.anisotropy < -1e-12:
            raise ValueError("energy parts must be nonnegative")
        gap = abs(self.total - (self.dirichlet + self.anisotropy))
        if gap > 1e-12 * max(1.0, abs(self.total)):
            raise ValueError("total must equal dirichlet + anisotropy")

    @classmethod
    def from_parts(cls, kappa2: float, dirichlet: float, anisotropy: float):
        return cls(kappa2, dirichlet, anisotropy, dirichlet + anisotropy)

    def to_json(self) -> str:
        return json.dumps(
            {
                "kappa2": self.kappa2,
                "dirichlet": self.dirichlet,
                "anisotropy": self.anisotropy,
                "total": self.total,
            }
        )


def z_weights(z_nodes: np.ndarray) -> np.ndarray:
    """Trapezoid quadrature weights for the inclusive uniform z-grid."""
    hz = float(z_nodes[1] - z_nodes[0])
    w = np.full(z_nodes.size, hz)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def circle_energy(field: VectorField, params: EnergyParams) -> EnergyReport:
    frame = make_frame(field.grid)
    d, a = kernels.ring_parts(
        field.values, frame.tangent, frame.normal, params.kappa2, field.grid.spacing
    )
    return EnergyReport.from_parts(params.kappa2, d, a)


def cylinder_energy(field: CylinderField, params: EnergyParams) -> EnergyReport:
    if field.z_count < 3:
        raise ValueError(
            f"cylinder energy needs at least 3 z-nodes, got {field.z_count}"
        )
    frame = make_frame(field.grid)
    d, a = kernels.cylinder_parts(
        field.values,
        frame.tangent,
        frame.normal,
        params.kappa2,
        field.grid.spacing,
        z_weights(field.z_nodes),
        field.z_spacing,
    )
    return EnergyReport.from_parts(params.kappa2, d, a)


def energy_gradient(field: VectorField, params: EnergyParams) -> np.ndarray:
    """Projected L2 gradient of circle_energy, one tangent 3-vector per node.

    The returned g satisfies h * sum(g . phi) = d/ds circle_energy(m + s*phi)
    at s = 0 for every node-wise tangent perturbation phi.
    """
    frame = make_frame(field.grid)
    return kernels.ring_gradient(
        field.values, frame.tangent, frame.normal, params.kappa2, field.grid.spacing
    )


def cylinder_gradient(field: CylinderField, params: EnergyParams) -> np.ndarray:
    frame = make_frame(field.grid)
    return kernels.cylinder_gradient(
        field.values,
        frame.tangent,
        frame.normal,
        params.kappa2,
        field.grid.spacing,
        z_weights(field.z_nodes),
        field.z_spacing,
    )


def el_residual(field: VectorField, params: EnergyParams) -> float:
    """L2 norm of the projected gradient; zero exactly at discrete critical points."""
    g = energy_gradient(field, params)
    return float(np.sqrt(field.grid.spacing * np.sum(g * g)))


def _centered_derivative(values: np.ndarray, h: float) -> np.ndarray:
    # 4th-order centered first derivative, periodic
    return (
        8.0 * (np.roll(values, -1) - np.roll(values, 1))
        - (np.roll(values, -2) - np.roll(values, 2))
    ) / (12.0 * h)


def _frame_components(field_values: np.ndarray, frame) -> tuple:
    m1 = np.einsum("ij,ij->i", field_values, frame.tangent)
    m2 = np.einsum("ij,ij->i", field_values, frame.normal)
    m3 = field_values[:, 2]
    return m1, m2, m3


def _dirichlet_density(m1, m2, m3, h) -> np.ndarray:
    d1 = _centered_derivative(m1, h) + m2
    d2 = _centered_derivative(m2, h) - m1
    d3 = _centered_derivative(m3, h)
    return d1 * d1 + d2 * d2 + d3 * d3


def second_variation_value(
    field: VectorField, params: EnergyParams, direction: np.ndarray
) -> float:
    """Second variation of the cylinder energy at a z-invariant field.

    Evaluates int int |grad phi|^2 - kappa^2 (phi.n)^2
    - (|grad m|^2 - kappa^2 (m.n)^2) |phi|^2 over the cylinder; for the
    z-invariant data handled here that is twice the circle integral. The
    direction must be tangent to the field node-wise.
    """
    phi = np.asarray(direction, dtype=float)
    if phi.shape != field.values.shape:
        raise ValueError(f"direction must have shape {field.values.shape}")
    worst = float(np.max(np.abs(np.einsum("ij,ij->i", phi, field.values))))
    if worst > TANGENT_TOL:
        raise ValueError(
            f"direction is not tangent to the field: max |phi . m| = {worst:.3e}"
        )
    frame = make_frame(field.grid)
    h = field.grid.spacing
    k2 = params.kappa2
    m1, m2, m3 = _frame_components(field.values, frame)
    p1, p2, p3 = _frame_components(phi, frame)
    weight = _dirichlet_density(m1, m2, m3, h) - k2 * m2 * m2
    density = (
        _dirichlet_density(p1, p2, p3, h)
        - k2 * p2 * p2
        - weight * (p1 * p1 + p2 * p2 + p3 * p3)
    )
    return 2.0 * h * float(np.sum(density))


def tangent_basis(field: VectorField) -> np.ndarray:
    """Orthonormal tangent pairs at each node, shape (N, 2, 3).

    Built by Gram-Schmidt from the frame candidates {tau, n, e3}, keeping the
    two least parallel to the field vector at that node.
    """
    frame = make_frame(field.grid)
    n_pts = field.grid.n_points
    cands = np.stack([frame.tangent, frame.normal, np.tile(frame.axis, (n_pts, 1))], 1)
    dots = np.abs(np.einsum("icj,ij->ic", cands, field.values))
    order = np.argsort(dots, axis=1, kind="stable")
    basis = np.empty((n_pts, 2, 3))
    for i in range(n_pts):
        u = field.values[i]
        c1 = cands[i, order[i, 0]]
        c2 = cands[i, order[i, 1]]
        b1 = c1 - (c1 @ u) * u
        b1 /= np.linalg.norm(b1)
        b2 = c2 - (c2 @ u) * u - (c2 @ b1) * b1
        b2 /= np.linalg.norm(b2)
        basis[i, 0] = b1
        basis[i, 1] = b2
    return basis


def _shift_matrix(n: int, k: int) -> np.ndarray:
    return np.roll(np.eye(n), k, axis=1)


def second_variation_min_eig(field: VectorField, params: EnergyParams) -> float:
    """Smallest eigenvalue of the second-variation form on tangent directions.

    The form is assembled as a dense symmetric matrix in the 2N-dimensional
    node-wise tangent parameterization and normalized by the L2 mass, so the
    result is a Rayleigh-quotient minimum; its sign decides stability.
    """
    frame = make_frame(field.grid)
    n = field.grid.n_points
    h = field.grid.spacing
    k2 = params.kappa2
    m1, m2, m3 = _frame_components(field.values, frame)
    weight = _dirichlet_density(m1, m2, m3, h) - k2 * m2 * m2

    deriv = (
        8.0 * (_shift_matrix(n, 1) - _shift_matrix(n, -1))
        - (_shift_matrix(n, 2) - _shift_matrix(n, -2))
    ) / (12.0 * h)
    eye = np.eye(n)
    zero = np.zeros((n, n))
    stencil = np.block(
        [[deriv, eye, zero], [-eye, deriv, zero], [zero, zero, deriv]]
    )
    form = stencil.T @ stencil
    form[n : 2 * n, n : 2 * n] -= k2 * eye
    for b in range(3):
        sl = slice(b * n, (b + 1) * n)
        form[sl, sl] -= np.diag(weight)

    basis = tangent_basis(field)
    # frame components of the tangent basis, laid out component-major
    restrict = np.zeros((3 * n, 2 * n))
    rows = np.arange(n)
    for kdir in range(2):
        cols = 2 * rows + kdir
        vecs = basis[:, kdir, :]
        restrict[rows, cols] = np.einsum("ij,ij->i", vecs, frame.tangent)
        restrict[n + rows, cols] = np.einsum("ij,ij->i", vecs, frame.normal)
        restrict[2 * n + rows, cols] = vecs[:, 2]
    reduced = restrict.T @ form @ restrict
    reduced = 0.5 * (reduced + reduced.T)
    vals = scipy.linalg.eigh(reduced, eigvals_only=True, subset_by_index=[0, 0])
    return float(vals[0])
