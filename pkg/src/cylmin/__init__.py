"""Variational toolkit for anisotropic unit-vector fields on S^1 and I x S^1.

Computes sharp constants of a relaxed quadratic problem, minimal energies per
winding class through elliptic integrals, second variations at the symmetric
stationary fields, and constrained gradient descents that find and label the
ground states. Hot kernels run under numba when available; set CYLMIN_NUMBA=0
to force the pure numpy path.
"""

from .elliptic import (
    EllipticSolution,
    default_offset,
    degree_zero_minimizer,
    elliptic_F,
    jacobi_am,
    solve_alpha,
    solve_elliptic,
    solve_threshold,
    threshold_gap,
    write_elliptic_csv,
)
from .energy import (
    EnergyParams,
    EnergyReport,
    circle_energy,
    cylinder_energy,
    cylinder_gradient,
    el_residual,
    energy_gradient,
    second_variation_min_eig,
    second_variation_value,
    tangent_basis,
)
from .errors import NumericalError
from .grid import (
    AngleProfile,
    CylinderField,
    Frame,
    PeriodicGrid,
    VectorField,
    compose_frame_field,
    constant_field,
    field_from_angles,
    frame_decompose,
    lift_angle,
    make_frame,
    make_grid,
    make_z_nodes,
    read_cylinder_csv,
    read_field_csv,
    sample_normal_field,
    sample_u_theta,
    winding_degree,
    write_cylinder_csv,
    write_field_csv,
    z_invariant_cylinder,
)
from .kernels import USING_NUMBA
from .minimize import (
    DescentOptions,
    DescentTrace,
    MatchResult,
    axial_deviation,
    best_trace,
    collapse_cylinder,
    descend_circle,
    descend_cylinder,
    descend_theta,
    match_to_family,
    multistart_circle,
    multistart_cylinder,
    random_cylinder_field,
    random_in_plane_field,
    random_unit_field,
    random_was_cylinder,
    z_variation,
)
from .relax import (
    ExtremalParams,
    PoincareResult,
    block_eigenvalue,
    classify_regime,
    closed_form_constant,
    extremal_field,
    numerical_constant,
    phi_kappa,
    poincare_result,
    poincare_sweep,
    rayleigh_quotient,
    relaxed_spectrum,
    write_poincare_csv,
)

__version__ = "0.1.0"

__all__ = [
    "AngleProfile",
    "CylinderField",
    "DescentOptions",
    "DescentTrace",
    "EllipticSolution",
    "EnergyParams",
    "EnergyReport",
    "ExtremalParams",
    "Frame",
    "MatchResult",
    "NumericalError",
    "PeriodicGrid",
    "PoincareResult",
    "USING_NUMBA",
    "VectorField",
    "axial_deviation",
    "best_trace",
    "block_eigenvalue",
    "circle_energy",
    "classify_regime",
    "closed_form_constant",
    "collapse_cylinder",
    "compose_frame_field",
    "constant_field",
    "cylinder_energy",
    "cylinder_gradient",
    "default_offset",
    "degree_zero_minimizer",
    "descend_circle",
    "descend_cylinder",
    "descend_theta",
    "el_residual",
    "elliptic_F",
    "energy_gradient",
    "extremal_field",
    "field_from_angles",
    "frame_decompose",
    "jacobi_am",
    "lift_angle",
    "make_frame",
    "make_grid",
    "make_z_nodes",
    "match_to_family",
    "multistart_circle",
    "multistart_cylinder",
    "numerical_constant",
    "phi_kappa",
    "poincare_result",
    "poincare_sweep",
    "random_cylinder_field",
    "random_in_plane_field",
    "random_unit_field",
    "random_was_cylinder",
    "rayleigh_quotient",
    "read_cylinder_csv",
    "read_field_csv",
    "relaxed_spectrum",
    "sample_normal_field",
    "sample_u_theta",
    "second_variation_min_eig",
    "second_variation_value",
    "solve_alpha",
    "solve_elliptic",
    "solve_threshold",
    "threshold_gap",
    "winding_degree",
    "write_cylinder_csv",
    "write_elliptic_csv",
    "write_field_csv",
    "write_poincare_csv",
    "z_invariant_cylinder",
    "z_variation",
]
