"""End-to-end checks of the package's numerical guarantees.

Each test pins one advertised tolerance. Run with -v for a line per
criterion. The slow entries (multistart and cylinder descents) carry
their own wall-clock budgets.
"""

import math
import time

import numpy as np
import pytest

import cylmin
from cylmin import kernels

TWOPI = 2.0 * math.pi


def _axis_field(grid):
    return cylmin.constant_field(grid, np.array([0.0, 0.0, 1.0]))


def test_criterion_01_poincare_constant_agreement():
    grid = cylmin.make_grid(512)
    start = time.perf_counter()
    for k2 in (0.25, 0.5, 1.0, 2.0, 3.0, 4.0, 10.0):
        numeric = cylmin.numerical_constant(k2, grid)
        closed = cylmin.closed_form_constant(k2).c2_closed
        assert abs(numeric - closed) < 5e-5, f"kappa2={k2}"
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"constant sweep took {elapsed:.1f} s"


def test_criterion_02_saturation_at_three():
    for k2 in np.linspace(0.1, 6.0, 50):
        c2 = cylmin.closed_form_constant(float(k2)).c2_closed
        if k2 >= 3.0:
            assert c2 == 1.0, f"kappa2={k2}"
        else:
            assert c2 < 1.0, f"kappa2={k2}"


def test_criterion_03_threshold_location():
    cylmin.elliptic._solve_alpha_cached.cache_clear()
    start = time.perf_counter()
    root = cylmin.solve_threshold()
    elapsed = time.perf_counter() - start
    assert 2.3173 <= root <= 2.3175
    assert abs(cylmin.threshold_gap(root)) < 1e-9
    assert elapsed < 1.0, f"threshold solve took {elapsed:.2f} s"


def test_criterion_04_closed_form_vs_sampled_energy():
    grid = cylmin.make_grid(1024)
    for k2 in (0.5, 1.0, 2.0):
        sol = cylmin.solve_elliptic(k2)
        _, field = cylmin.degree_zero_minimizer(k2, grid)
        sampled = cylmin.circle_energy(field, cylmin.EnergyParams(k2)).total
        assert abs(sampled - sol.energy_deg0) / TWOPI < 1e-5, f"kappa2={k2}"


def test_criterion_05_stationary_energy_values():
    grid = cylmin.make_grid(512)
    for k2 in (0.5, 2.0):
        params = cylmin.EnergyParams(k2)
        for sign in (1.0, -1.0):
            normal = cylmin.sample_normal_field(grid, sign)
            assert cylmin.circle_energy(normal, params).total == pytest.approx(
                TWOPI, rel=1e-8
            )
            axis = cylmin.constant_field(grid, np.array([0.0, 0.0, sign]))
            assert cylmin.circle_energy(axis, params).total == pytest.approx(
                TWOPI * k2, rel=1e-8
            )
        for theta in (0.3, 1.0, 2.2):
            tilted = cylmin.sample_u_theta(grid, theta)
            expected = TWOPI * (k2 + math.sin(theta) ** 2 * (1.0 - k2))
            assert cylmin.circle_energy(tilted, params).total == pytest.approx(
                expected, rel=1e-8
            )


def test_criterion_06_second_variation_values():
    grid = cylmin.make_grid(512)
    e3_dir = np.tile([0.0, 0.0, 1.0], (grid.n_points, 1))
    e1_dir = np.tile([1.0, 0.0, 0.0], (grid.n_points, 1))
    normal = cylmin.sample_normal_field(grid)
    axis = _axis_field(grid)
    for k2 in (0.5, 2.0):
        params = cylmin.EnergyParams(k2)
        along_axis = cylmin.second_variation_value(normal, params, e3_dir)
        assert along_axis == pytest.approx(4.0 * math.pi * (k2 - 1.0), rel=1e-6)
        at_axis = cylmin.second_variation_value(axis, params, e1_dir)
        assert at_axis == pytest.approx(-TWOPI * k2, rel=1e-6)


def test_criterion_07_stability_signs():
    grid = cylmin.make_grid(256)
    normal = cylmin.sample_normal_field(grid)
    axis = _axis_field(grid)
    assert cylmin.second_variation_min_eig(normal, cylmin.EnergyParams(4.0)) > 0.0
    assert cylmin.second_variation_min_eig(normal, cylmin.EnergyParams(0.5)) < 0.0
    for k2 in (0.5, 1.0, 4.0):
        assert cylmin.second_variation_min_eig(axis, cylmin.EnergyParams(k2)) < 0.0


def test_criterion_08_global_descent_supercritical():
    grid = cylmin.make_grid(256)
    params = cylmin.EnergyParams(4.0)
    opts = cylmin.DescentOptions(grad_tol=1e-5, seed=0)
    start = time.perf_counter()
    traces = cylmin.multistart_circle(params, grid, opts, seeds=8)
    best = cylmin.best_trace(traces)
    elapsed = time.perf_counter() - start
    assert abs(best.final_energy - TWOPI) < 1e-3
    match = cylmin.match_to_family(best.final_field, 4.0)
    assert match.label in ("normal+", "normal-")
    assert elapsed < 60.0, f"multistart took {elapsed:.1f} s"


def test_criterion_09_was_cylinder_descent():
    grid = cylmin.make_grid(96)
    opts = cylmin.DescentOptions(grad_tol=1e-4, seed=0, constraint="was")
    cases = [
        (0.5, TWOPI, ("e3+", "e3-")),
        (2.0, 2.0 * TWOPI, ("normal+", "normal-")),
    ]
    for k2, target, labels in cases:
        params = cylmin.EnergyParams(k2)
        traces = cylmin.multistart_cylinder(params, grid, 17, opts, seeds=3)
        best = cylmin.best_trace(traces)
        assert abs(best.final_energy - target) < 1e-2, f"kappa2={k2}"
        ring = cylmin.collapse_cylinder(best.final_field)
        match = cylmin.match_to_family(ring, k2)
        assert match.label in labels, f"kappa2={k2}: got {match.label}"


def test_criterion_10_descent_restores_z_invariance():
    grid = cylmin.make_grid(64)
    opts = cylmin.DescentOptions(grad_tol=1e-6, seed=0)
    for k2 in (0.5, 4.0):
        init = cylmin.random_cylinder_field(grid, 9, seed=1)
        trace = cylmin.descend_cylinder(init, cylmin.EnergyParams(k2), opts)
        assert cylmin.z_variation(trace.final_field) < 1e-2, f"kappa2={k2}"


def test_criterion_11_gradient_matches_finite_differences():
    grid = cylmin.make_grid(64)
    frame = cylmin.make_frame(grid)
    params = cylmin.EnergyParams(2.0)
    h = grid.spacing
    eps = 1e-6

    def energy_of(vals):
        d, a = kernels.ring_parts(vals, frame.tangent, frame.normal, 2.0, h)
        return d + a

    rng = np.random.default_rng(2026)
    for field_idx in range(20):
        field = cylmin.random_unit_field(grid, seed=field_idx)
        g = cylmin.energy_gradient(field, params)
        for _ in range(5):
            phi = rng.standard_normal(field.values.shape)
            phi -= np.einsum("ij,ij->i", phi, field.values)[:, None] * field.values
            analytic = h * float(np.sum(g * phi))
            fd = (
                energy_of(field.values + eps * phi)
                - energy_of(field.values - eps * phi)
            ) / (2.0 * eps)
            assert abs(fd - analytic) / max(abs(analytic), 1e-10) < 1e-5


def test_criterion_12_lift_and_degree_round_trips():
    grid = cylmin.make_grid(64)
    fine = cylmin.make_grid(128)
    for seed in range(50):
        turns = seed % 4 - 2
        field = cylmin.random_in_plane_field(grid, seed, turns)
        profile = cylmin.lift_angle(field)
        assert profile.turns == turns
        rebuilt = cylmin.field_from_angles(profile)
        assert float(np.max(np.abs(rebuilt.values - field.values))) < 1e-12
        assert cylmin.winding_degree(field) == turns + 1
        refined = cylmin.random_in_plane_field(fine, seed, turns)
        assert cylmin.winding_degree(refined) == turns + 1


def test_criterion_13_structure_preservation():
    grid = cylmin.make_grid(256)
    params = cylmin.EnergyParams(2.0)

    planar = cylmin.random_in_plane_field(grid, seed=3, turns=0)
    opts = cylmin.DescentOptions(
        max_iters=500, grad_tol=1e-14, energy_tol=1e-18, constraint="in-plane"
    )
    trace = cylmin.descend_circle(planar, params, opts)
    assert trace.iterations == 500
    assert float(np.max(np.abs(trace.final_field.values[:, 2]))) < 1e-12

    symmetric = cylmin.sample_u_theta(grid, 0.7)
    opts = cylmin.DescentOptions(max_iters=300, grad_tol=1e-14, energy_tol=1e-18)
    trace = cylmin.descend_circle(symmetric, params, opts)
    assert cylmin.axial_deviation(trace.final_field) <= 1e-9


def test_criterion_14_extremal_length_spread():
    grid = cylmin.make_grid(256)
    for k2 in (0.5, 1.0, 2.0):
        field = cylmin.extremal_field(k2, cylmin.ExtremalParams(), grid)
        norms = np.linalg.norm(field.values, axis=1)
        spread = float(np.max(norms) - np.min(norms))
        assert spread > 0.05, f"kappa2={k2}: spread {spread:.4f}"
