import numpy as np
import pytest

import cylmin


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger backend compilation once so timed tests measure steady state."""
    grid = cylmin.make_grid(16)
    params = cylmin.EnergyParams(1.0)
    opts = cylmin.DescentOptions(max_iters=3, grad_tol=1e-16)
    cylmin.descend_circle(cylmin.random_unit_field(grid, 0), params, opts)
    cylmin.descend_circle(
        cylmin.random_in_plane_field(grid, 0),
        params,
        cylmin.DescentOptions(max_iters=3, grad_tol=1e-16, constraint="in-plane"),
    )
    cylmin.descend_cylinder(
        cylmin.random_cylinder_field(grid, 5, 0), params, opts
    )
    cylmin.descend_cylinder(
        cylmin.random_was_cylinder(grid, 5, 0),
        params,
        cylmin.DescentOptions(max_iters=3, grad_tol=1e-16, constraint="was"),
    )
    profile = cylmin.lift_angle(cylmin.random_in_plane_field(grid, 1))
    cylmin.descend_theta(profile, params, opts)


@pytest.fixture
def grid64():
    return cylmin.make_grid(64)


@pytest.fixture
def grid128():
    return cylmin.make_grid(128)


@pytest.fixture
def params2():
    return cylmin.EnergyParams(2.0)


def e3_field(grid):
    return cylmin.constant_field(grid, np.array([0.0, 0.0, 1.0]))
