"""Periodic grids, the moving frame, and unit-vector fields on the circle and cylinder.

The circle is parameterized by t in [-pi, pi) on a uniform grid; the cylinder
adds a uniform axial coordinate z in [-1, 1] with both endpoints included.
Fields store one 3-vector per node. The moving frame along the circle is

    tangent tau(t) = (-sin t, cos t, 0)
    normal  n(t)   = (cos t, sin t, 0)
    axis    e3     = (0, 0, 1)

and every field decomposes node-wise as m = m1*tau + m2*n + m3*e3.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field as _field

import numpy as np

TWOPI = 2.0 * np.pi
E3 = np.array([0.0, 0.0, 1.0])

UNIT_SPHERE = "unit-sphere"
IN_PLANE = "in-plane-unit-circle"
UNCONSTRAINED = "unconstrained"
CONSTRAINT_KINDS = (UNIT_SPHERE, IN_PLANE, UNCONSTRAINED)

UNIT_TOL = 1e-12
PLANE_TOL = 1e-12
RESOLVE_MARGIN = 1e-6


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PeriodicGrid:
    """Uniform periodic grid t_i = -pi + i*spacing, i = 0..n_points-1."""

    n_points: int
    spacing: float
    nodes: np.ndarray


def make_grid(n_points: int) -> PeriodicGrid:
    """Build a uniform periodic grid on [-pi, pi).

    n_points must be an even integer >= 8; node 0 sits exactly at -pi.
    """
    if not isinstance(n_points, (int, np.integer)):
        raise ValueError(f"n_points must be an integer, got {n_points!r}")
    n = int(n_points)
    if n < 8:
        raise ValueError(f"n_points must be at least 8, got {n}")
    if n % 2 != 0:
        raise ValueError(f"n_points must be even, got {n}")
    h = TWOPI / n
    nodes = -np.pi + h * np.arange(n)
    return PeriodicGrid(n_points=n, spacing=h, nodes=_readonly(nodes))


@dataclass(frozen=True, eq=False)
class Frame:
    """Moving frame sampled at the grid nodes.

    tangent and normal are (N, 3); rotation holds the (N, 3, 3) matrices R(t)
    rotating (1,0,0) onto n(t) about the axis e3.
    """

    grid: PeriodicGrid
    tangent: np.ndarray
    normal: np.ndarray
    axis: np.ndarray
    rotation: np.ndarray


def make_frame(grid: PeriodicGrid) -> Frame:
    t = grid.nodes
    c, s = np.cos(t), np.sin(t)
    zero = np.zeros_like(t)
    tangent = np.stack([-s, c, zero], axis=1)
    normal = np.stack([c, s, zero], axis=1)
    rotation = np.empty((grid.n_points, 3, 3))
    rotation[:, 0, 0] = c
    rotation[:, 0, 1] = -s
    rotation[:, 0, 2] = 0.0
    rotation[:, 1, 0] = s
    rotation[:, 1, 1] = c
    rotation[:, 1, 2] = 0.0
    rotation[:, 2, 0] = 0.0
    rotation[:, 2, 1] = 0.0
    rotation[:, 2, 2] = 1.0
    return Frame(
        grid=grid,
        tangent=_readonly(tangent),
        normal=_readonly(normal),
        axis=_readonly(E3.copy()),
        rotation=_readonly(rotation),
    )


@dataclass(frozen=True, eq=False)
class VectorField:
    """A 3-vector per circle node, with a declared constraint kind."""

    grid: PeriodicGrid
    values: np.ndarray
    constraint: str = UNIT_SPHERE

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n_points, 3):
            raise ValueError(
                f"values must have shape ({self.grid.n_points}, 3), got {vals.shape}"
            )
        if self.constraint not in CONSTRAINT_KINDS:
            raise ValueError(f"unknown constraint kind {self.constraint!r}")
        if self.constraint in (UNIT_SPHERE, IN_PLANE):
            norms = np.linalg.norm(vals, axis=1)
            worst = float(np.max(np.abs(norms - 1.0)))
            if worst > UNIT_TOL:
                raise ValueError(
                    f"field is not unit length: max |1 - |m|| = {worst:.3e}"
                )
        if self.constraint == IN_PLANE:
            worst = float(np.max(np.abs(vals[:, 2])))
            if worst > PLANE_TOL:
                raise ValueError(
                    f"field is not in-plane: max |m . e3| = {worst:.3e}"
                )
        object.__setattr__(self, "values", _readonly(vals))


@dataclass(frozen=True, eq=False)
class CylinderField:
    """A 3-vector per (z, t) node on the cylinder; one ring per z-node."""

    grid: PeriodicGrid
    z_nodes: np.ndarray
    values: np.ndarray
    constraint: str = UNIT_SPHERE

    def __post_init__(self):
        z = np.asarray(self.z_nodes, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if z.ndim != 1 or z.size < 2:
            raise ValueError("z_nodes must be a 1-D array with at least 2 entries")
        if vals.shape != (z.size, self.grid.n_points, 3):
            raise ValueError(
                f"values must have shape ({z.size}, {self.grid.n_points}, 3),"
                f" got {vals.shape}"
            )
        hz = (z[-1] - z[0]) / (z.size - 1)
        if abs(z[0] + 1.0) > 1e-12 or abs(z[-1] - 1.0) > 1e-12:
            raise ValueError("z_nodes must span [-1, 1]")
        if np.max(np.abs(np.diff(z) - hz)) > 1e-12:
            raise ValueError("z_nodes must be uniformly spaced")
        if self.constraint not in CONSTRAINT_KINDS:
            raise ValueError(f"unknown constraint kind {self.constraint!r}")
        if self.constraint in (UNIT_SPHERE, IN_PLANE):
            norms = np.linalg.norm(vals, axis=2)
            worst = float(np.max(np.abs(norms - 1.0)))
            if worst > UNIT_TOL:
                raise ValueError(
                    f"field is not unit length: max |1 - |m|| = {worst:.3e}"
                )
        object.__setattr__(self, "z_nodes", _readonly(z))
        object.__setattr__(self, "values", _readonly(vals))

    @property
    def z_count(self) -> int:
        return int(self.z_nodes.size)

    @property
    def z_spacing(self) -> float:
        return float(self.z_nodes[1] - self.z_nodes[0])

    def ring(self, k: int) -> VectorField:
        return VectorField(self.grid, self.values[k], self.constraint)


def make_z_nodes(z_count: int) -> np.ndarray:
    if not isinstance(z_count, (int, np.integer)) or int(z_count) < 2:
        raise ValueError(f"z_count must be an integer >= 2, got {z_count!r}")
    return np.linspace(-1.0, 1.0, int(z_count))


def z_invariant_cylinder(ring: VectorField, z_count: int) -> CylinderField:
    """Extend a circle field to the cylinder with no z-dependence."""
    z = make_z_nodes(z_count)
    vals = np.broadcast_to(ring.values, (z.size,) + ring.values.shape).copy()
    return CylinderField(ring.grid, z, vals, ring.constraint)


@dataclass(frozen=True, eq=False)
class AngleProfile:
    """Continuous lift theta of an in-plane field: m = sin(theta) tau + cos(theta) n.

    turns is the integer j with theta(pi) = theta(-pi) + 2*pi*j; the winding
    degree of the field is j + 1.
    """

    grid: PeriodicGrid
    theta: np.ndarray
    turns: int

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float)
        if th.shape != (self.grid.n_points,):
            raise ValueError(
                f"theta must have shape ({self.grid.n_points},), got {th.shape}"
            )
        object.__setattr__(self, "theta", _readonly(th))
        object.__setattr__(self, "turns", int(self.turns))


def sample_normal_field(grid: PeriodicGrid, sign: float = 1.0) -> VectorField:
    """The field +/-n(t); sign selects the branch."""
    if sign not in (1.0, -1.0, 1, -1):
        raise ValueError("sign must be +1 or -1")
    frame = make_frame(grid)
    return VectorField(grid, float(sign) * frame.normal, IN_PLANE)


def sample_u_theta(grid: PeriodicGrid, theta: float) -> VectorField:
    """The axially symmetric field u_theta = sin(theta) n + cos(theta) e3."""
    frame = make_frame(grid)
    vals = np.sin(theta) * frame.normal + np.cos(theta) * E3
    return VectorField(grid, vals, UNIT_SPHERE)


def constant_field(grid: PeriodicGrid, vector) -> VectorField:
    """A spatially constant field; constraint kind inferred from the vector."""
    v = np.asarray(vector, dtype=float)
    if v.shape != (3,):
        raise ValueError("vector must have shape (3,)")
    vals = np.tile(v, (grid.n_points, 1))
    if abs(np.linalg.norm(v) - 1.0) <= UNIT_TOL:
        kind = IN_PLANE if abs(v[2]) <= PLANE_TOL else UNIT_SPHERE
    else:
        kind = UNCONSTRAINED
    return VectorField(grid, vals, kind)


def compose_frame_field(
    grid: PeriodicGrid,
    m1: np.ndarray,
    m2: np.ndarray,
    m3: np.ndarray | None = None,
    constraint: str = UNCONSTRAINED,
) -> VectorField:
    """Assemble a field from frame components m1*tau + m2*n + m3*e3."""
    frame = make_frame(grid)
    m1 = np.asarray(m1, dtype=float)
    m2 = np.asarray(m2, dtype=float)
    vals = m1[:, None] * frame.tangent + m2[:, None] * frame.normal
    if m3 is not None:
        vals = vals + np.asarray(m3, dtype=float)[:, None] * E3
    return VectorField(grid, vals, constraint)


def frame_decompose(field: VectorField) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Frame components (m . tau, m . n, m . e3) at every node."""
    frame = make_frame(field.grid)
    vals = field.values
    m1 = np.einsum("ij,ij->i", vals, frame.tangent)
    m2 = np.einsum("ij,ij->i", vals, frame.normal)
    m3 = vals[:, 2].copy()
    return m1, m2, m3


def field_from_angles(profile: AngleProfile) -> VectorField:
    """In-plane field sin(theta) tau + cos(theta) n from a lift profile."""
    return compose_frame_field(
        profile.grid,
        np.sin(profile.theta),
        np.cos(profile.theta),
        None,
        IN_PLANE,
    )


def _require_in_plane_unit(field: VectorField) -> np.ndarray:
    vals = field.values
    norms = np.linalg.norm(vals, axis=1)
    if np.max(np.abs(norms - 1.0)) > UNIT_TOL:
        raise ValueError("field must be unit length")
    if np.max(np.abs(vals[:, 2])) > PLANE_TOL:
        raise ValueError("field must be in-plane (zero e3 component)")
    return vals


def _wrapped_increments(angles: np.ndarray, what: str) -> np.ndarray:
    raw = np.roll(angles, -1) - angles
    wrapped = raw - TWOPI * np.round(raw / TWOPI)
    if np.max(np.abs(wrapped)) >= np.pi - RESOLVE_MARGIN:
        raise ValueError(
            f"{what} change by almost pi between neighboring nodes;"
            " the winding is unresolvable at this resolution, refine the grid"
        )
    return wrapped


def winding_degree(field: VectorField) -> int:
    """Winding number of the planar part around the origin.

    Sums wrapped increments of atan2(m_y, m_x) over one period; errors out
    when any single increment is within 1e-6 of pi (ambiguous jump).
    """
    vals = _require_in_plane_unit(field)
    angles = np.arctan2(vals[:, 1], vals[:, 0])
    total = float(np.sum(_wrapped_increments(angles, "planar angles")))
    deg = total / TWOPI
    rounded = int(np.round(deg))
    if abs(deg - rounded) > 1e-6:
        raise ValueError(f"winding sum {deg} is not an integer")
    return rounded


def lift_angle(field: VectorField) -> AngleProfile:
    """Continuous lift theta with sin(theta) = m . tau, cos(theta) = m . n.

    The base value theta(-pi) is taken in (-pi, pi]; successive values unwrap
    by wrapped increments, and turns records the 2*pi multiples accumulated
    over one full period.
    """
    _require_in_plane_unit(field)
    m1, m2, _ = frame_decompose(field)
    psi = np.arctan2(m1, m2)
    # both the frame angle and the planar angle (= frame angle + t) must be
    # resolvable, otherwise the unwrap can silently miscount a turn
    inc = _wrapped_increments(psi, "frame angles")
    h = field.grid.spacing
    planar_inc = inc + h
    if np.max(np.abs(planar_inc)) >= np.pi - RESOLVE_MARGIN:
        raise ValueError(
            "planar angles change by almost pi between neighboring nodes;"
            " the winding is unresolvable at this resolution, refine the grid"
        )
    theta = np.empty_like(psi)
    theta[0] = psi[0]
    theta[1:] = psi[0] + np.cumsum(inc[:-1])
    total = float(np.sum(inc))
    j = int(np.round(total / TWOPI))
    if abs(total / TWOPI - j) > 1e-6:
        raise ValueError(f"lift mismatch {total / TWOPI} is not an integer")
    return AngleProfile(field.grid, theta, j)


# ---------------------------------------------------------------------------
# CSV serialization: circle fields as t,x,y,z; cylinder fields add the z node.

_FMT = "{:.17g}"


def write_field_csv(field: VectorField, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "x", "y", "z"])
        for t, v in zip(field.grid.nodes, field.values):
            writer.writerow([_FMT.format(t)] + [_FMT.format(c) for c in v])


def read_field_csv(path, constraint: str = UNIT_SPHERE) -> VectorField:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["t", "x", "y", "z"]:
            raise ValueError(f"unexpected field CSV header: {header}")
        rows = [[float(c) for c in row] for row in reader if row]
    data = np.asarray(rows)
    grid = make_grid(data.shape[0])
    if np.max(np.abs(data[:, 0] - grid.nodes)) > 1e-12:
        raise ValueError("CSV t column does not match a uniform periodic grid")
    return VectorField(grid, data[:, 1:4], constraint)


def write_cylinder_csv(field: CylinderField, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["z", "t", "x", "y", "z_comp"])
        for z, ring in zip(field.z_nodes, field.values):
            for t, v in zip(field.grid.nodes, ring):
                writer.writerow(
                    [_FMT.format(z), _FMT.format(t)] + [_FMT.format(c) for c in v]
                )


def read_cylinder_csv(path, constraint: str = UNIT_SPHERE) -> CylinderField:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["z", "t", "x", "y", "z_comp"]:
            raise ValueError(f"unexpected cylinder CSV header: {header}")
        rows = [[float(c) for c in row] for row in reader if row]
    data = np.asarray(rows)
    z_vals = np.unique(data[:, 0])
    n_z = z_vals.size
    if data.shape[0] % n_z != 0:
        raise ValueError("cylinder CSV rows do not form complete rings")
    n_t = data.shape[0] // n_z
    grid = make_grid(n_t)
    values = data[:, 2:5].reshape(n_z, n_t, 3)
    t_cols = data[:, 1].reshape(n_z, n_t)
    if np.max(np.abs(t_cols - grid.nodes[None, :])) > 1e-12:
        raise ValueError("CSV t column does not match a uniform periodic grid")
    z_col = data[:, 0].reshape(n_z, n_t)
    if np.max(np.abs(z_col - z_col[:, :1])) > 0.0:
        raise ValueError("cylinder CSV rows are not grouped by z")
    return CylinderField(grid, z_col[:, 0], values, constraint)
