import csv

import numpy as np
import pytest

import cylmin
from cylmin.elliptic import (
    adaptive_quadrature,
    complete_E,
    period_residual,
)

TWOPI = 2.0 * np.pi

# frozen from an independent oracle: scipy.integrate.quad on the defining
# integrals plus brentq on the period condition, no elliptic-function
# identities involved
FROZEN = {
    0.25: (0.93853577025064, 6.70771479997841, 0.77313528775555),
    0.5: (0.8793629631705399, 7.200492923901277, 1.5218516408112812),
    1.0: (0.7689638513346139, 8.417783141643127, 2.9474751508037986),
    2.0: (0.5835433867227162, 11.955768863709373, 5.530666017339039),
    3.0: (0.4435911055960078, 17.2741330104085, 7.805756557657077),
    10.0: (0.08799502195268838, 144.05231628553287, 19.019936678334957),
}
THRESHOLD = 2.317422525922686


class TestQuadrature:
    def test_sin_squared_over_period(self):
        val = adaptive_quadrature(lambda x: np.sin(x) ** 2, 0.0, TWOPI)
        assert val == pytest.approx(np.pi, rel=1e-13)

    def test_reversed_bounds_flip_sign(self):
        fwd = adaptive_quadrature(np.exp, 0.0, 1.0)
        bwd = adaptive_quadrature(np.exp, 1.0, 0.0)
        assert fwd == pytest.approx(np.e - 1.0, rel=1e-13)
        assert bwd == -fwd

    def test_empty_interval(self):
        assert adaptive_quadrature(np.exp, 2.0, 2.0) == 0.0


class TestAlpha:
    def test_frozen_values(self):
        for k2, (alpha, _, _) in FROZEN.items():
            assert cylmin.solve_alpha(k2) == pytest.approx(alpha, rel=1e-11)

    def test_degenerate_limit(self):
        assert cylmin.solve_alpha(0.0) == 1.0

    def test_decreasing_in_kappa2(self):
        vals = [cylmin.solve_alpha(k2) for k2 in (0.25, 0.5, 1.0, 2.0, 3.0, 10.0)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_residual_vanishes_at_root(self):
        for k2 in (0.5, 2.0):
            alpha = cylmin.solve_alpha(k2)
            assert abs(period_residual(alpha, k2)) < 1e-12

    def test_residual_decreasing_in_alpha(self):
        k2 = 1.0
        alpha = cylmin.solve_alpha(k2)
        assert period_residual(0.5 * alpha, k2) > 0.0
        assert period_residual(2.0 * alpha, k2) < 0.0

    def test_rejects_nonpositive_alpha(self):
        with pytest.raises(ValueError):
            period_residual(0.0, 1.0)
        with pytest.raises(ValueError):
            period_residual(-1.0, 1.0)

    def test_rejects_bad_kappa2(self):
        with pytest.raises(ValueError):
            cylmin.solve_alpha(-1.0)
        with pytest.raises(ValueError):
            cylmin.solve_alpha(np.nan)


class TestIncompleteIntegral:
    def test_zero_at_lower_limit(self):
        assert cylmin.elliptic_F(-np.pi, 1.0, 0.7) == 0.0

    def test_full_period_at_solved_alpha(self):
        for k2 in (0.5, 2.0):
            alpha = cylmin.solve_alpha(k2)
            assert cylmin.elliptic_F(np.pi, k2, alpha) == pytest.approx(
                TWOPI * alpha, rel=1e-12
            )

    def test_strictly_increasing(self):
        k2, alpha = 1.0, cylmin.solve_alpha(1.0)
        thetas = np.linspace(-np.pi, np.pi, 21)
        vals = [cylmin.elliptic_F(th, k2, alpha) for th in thetas]
        assert all(a < b for a, b in zip(vals, vals[1:]))

    def test_quasi_periodic(self):
        k2, alpha = 2.0, cylmin.solve_alpha(2.0)
        period = cylmin.elliptic_F(np.pi, k2, alpha)
        for th in (-1.2, 0.3, 2.0):
            lhs = cylmin.elliptic_F(th + TWOPI, k2, alpha)
            assert lhs == pytest.approx(
                cylmin.elliptic_F(th, k2, alpha) + period, rel=1e-12
            )

    def test_symmetric_half_period(self):
        k2, alpha = 1.5, cylmin.solve_alpha(1.5)
        half = cylmin.elliptic_F(0.0, k2, alpha)
        full = cylmin.elliptic_F(np.pi, k2, alpha)
        assert half == pytest.approx(full / 2.0, rel=1e-12)


class TestAmplitude:
    def test_round_trip(self):
        k2, alpha = 1.0, cylmin.solve_alpha(1.0)
        for th in np.linspace(-3.0, 3.0, 13):
            y = cylmin.elliptic_F(th, k2, alpha)
            assert cylmin.jacobi_am(y, k2, alpha) == pytest.approx(th, abs=1e-10)

    def test_anchors(self):
        k2, alpha = 2.0, cylmin.solve_alpha(2.0)
        assert cylmin.jacobi_am(0.0, k2, alpha) == pytest.approx(-np.pi, abs=1e-11)
        assert cylmin.jacobi_am(np.pi * alpha, k2, alpha) == pytest.approx(
            0.0, abs=1e-10
        )

    def test_quasi_periodic(self):
        k2, alpha = 0.5, cylmin.solve_alpha(0.5)
        period = TWOPI * alpha
        for y in (0.4, 1.0):
            assert cylmin.jacobi_am(y + period, k2, alpha) == pytest.approx(
                cylmin.jacobi_am(y, k2, alpha) + TWOPI, abs=1e-9
            )


class TestSolution:
    def test_frozen_values(self):
        for k2, (alpha, e_val, deg0) in FROZEN.items():
            sol = cylmin.solve_elliptic(k2)
            assert sol.alpha == pytest.approx(alpha, rel=1e-11)
            assert sol.E_complete == pytest.approx(e_val, rel=1e-11)
            assert sol.energy_deg0 == pytest.approx(deg0, rel=1e-10)

    def test_complete_E_exceeds_period_floor(self):
        for k2 in (0.5, 2.0, 5.0):
            alpha = cylmin.solve_alpha(k2)
            assert complete_E(k2, alpha) > TWOPI

    def test_degenerate_energy_is_zero(self):
        sol = cylmin.solve_elliptic(0.0)
        assert sol.energy_deg0 == pytest.approx(0.0, abs=1e-12)

    def test_validation_rejects_inconsistent_period(self):
        sol = cylmin.solve_elliptic(1.0)
        with pytest.raises(ValueError):
            cylmin.EllipticSolution(
                sol.kappa2, sol.alpha, sol.E_complete, sol.F_period + 1e-6,
                sol.energy_deg0,
            )

    def test_validation_rejects_inconsistent_energy(self):
        sol = cylmin.solve_elliptic(1.0)
        with pytest.raises(ValueError):
            cylmin.EllipticSolution(
                sol.kappa2, sol.alpha, sol.E_complete, sol.F_period,
                sol.energy_deg0 + 1e-6,
            )

    def test_anisotropy_partition_identity(self):
        # kappa2 * int sin^2(theta) dt = alpha E - 2 pi alpha^2 for the
        # sampled minimizer; the rectangle rule is spectrally accurate here
        k2 = 1.0
        sol = cylmin.solve_elliptic(k2)
        grid = cylmin.make_grid(512)
        profile, _ = cylmin.degree_zero_minimizer(k2, grid)
        lhs = k2 * grid.spacing * float(np.sum(np.sin(profile.theta) ** 2))
        rhs = sol.alpha * sol.E_complete - TWOPI * sol.alpha**2
        assert lhs == pytest.approx(rhs, rel=1e-8)

    def test_first_integral_pointwise(self):
        # (theta')^2 - kappa2 sin^2(theta) = alpha^2 along the profile
        k2 = 2.0
        sol = cylmin.solve_elliptic(k2)
        grid = cylmin.make_grid(512)
        profile, _ = cylmin.degree_zero_minimizer(k2, grid)
        th = profile.theta
        h = grid.spacing
        interior = slice(2, -2)
        dth = (8.0 * (th[3:-1] - th[1:-3]) - (th[4:] - th[:-4])) / (12.0 * h)
        resid = dth**2 - k2 * np.sin(th[interior]) ** 2 - sol.alpha**2
        assert np.max(np.abs(resid)) < 1e-6


class TestMinimizerProfile:
    @pytest.mark.parametrize("k2", [0.5, 1.0, 2.0])
    def test_structure(self, k2):
        grid = cylmin.make_grid(256)
        profile, field = cylmin.degree_zero_minimizer(k2, grid)
        assert profile.turns == -1
        assert -np.pi < profile.theta[0] <= np.pi
        assert np.all(np.diff(profile.theta) < 0.0)
        assert cylmin.winding_degree(field) == 0
        assert np.max(np.abs(field.values[:, 2])) == 0.0

    def test_energy_matches_closed_form(self):
        from cylmin import kernels

        k2 = 1.0
        sol = cylmin.solve_elliptic(k2)
        grid = cylmin.make_grid(1024)
        profile, _ = cylmin.degree_zero_minimizer(k2, grid)
        e = kernels.theta_energy(profile.theta, profile.turns, k2, grid.spacing)
        assert e == pytest.approx(sol.energy_deg0, rel=1e-4)

    def test_offset_shifts_profile_without_changing_energy(self):
        from cylmin import kernels

        k2 = 1.0
        grid = cylmin.make_grid(512)
        base, _ = cylmin.degree_zero_minimizer(k2, grid)
        shifted, _ = cylmin.degree_zero_minimizer(k2, grid, b=1.3)
        assert np.max(np.abs(base.theta - shifted.theta)) > 0.1
        e0 = kernels.theta_energy(base.theta, -1, k2, grid.spacing)
        e1 = kernels.theta_energy(shifted.theta, -1, k2, grid.spacing)
        assert e0 == pytest.approx(e1, rel=1e-4)


class TestThreshold:
    def test_frozen_value(self):
        assert cylmin.solve_threshold() == pytest.approx(THRESHOLD, abs=2e-10)

    def test_within_published_window(self):
        root = cylmin.solve_threshold()
        assert 2.3173 < root < 2.3175

    def test_gap_signs(self):
        assert cylmin.threshold_gap(2.0) < 0.0
        assert cylmin.threshold_gap(3.0) > 0.0

    def test_gap_vanishes_at_root(self):
        root = cylmin.solve_threshold()
        assert abs(cylmin.threshold_gap(root)) < 1e-9

    def test_class_exchange_around_threshold(self):
        assert cylmin.solve_elliptic(2.31).energy_deg0 < TWOPI
        assert cylmin.solve_elliptic(2.33).energy_deg0 > TWOPI

    def test_tight_tolerance_honored(self):
        a = cylmin.solve_threshold(tol=1e-12)
        b = cylmin.solve_threshold(tol=1e-10)
        assert a == pytest.approx(b, abs=1e-9)


class TestCsv:
    def test_schema(self, tmp_path):
        sols = [cylmin.solve_elliptic(k2) for k2 in (0.5, 2.0)]
        path = tmp_path / "elliptic.csv"
        cylmin.write_elliptic_csv(sols, path)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["kappa2", "alpha", "E_complete", "energy_deg0", "energy_deg1"]
        assert len(rows) == 3
        for row, sol in zip(rows[1:], sols):
            assert float(row[0]) == sol.kappa2
            assert float(row[1]) == pytest.approx(sol.alpha, rel=1e-15)
            assert float(row[3]) == pytest.approx(sol.energy_deg0, rel=1e-15)
            assert float(row[4]) == pytest.approx(TWOPI, rel=1e-15)
