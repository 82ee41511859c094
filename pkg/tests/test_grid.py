import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import cylmin
from cylmin.grid import IN_PLANE, UNIT_SPHERE


class TestMakeGrid:
    def test_nodes_start_at_minus_pi(self):
        g = cylmin.make_grid(64)
        assert g.nodes[0] == -np.pi
        assert g.n_points == 64
        assert g.spacing == pytest.approx(2.0 * np.pi / 64, rel=1e-15)

    def test_uniform_spacing(self):
        g = cylmin.make_grid(48)
        assert np.allclose(np.diff(g.nodes), g.spacing, rtol=0, atol=1e-14)

    @pytest.mark.parametrize("n", [7, 0, -4, 13])
    def test_rejects_odd_or_small(self, n):
        with pytest.raises(ValueError):
            cylmin.make_grid(n)

    def test_nodes_read_only(self):
        g = cylmin.make_grid(16)
        with pytest.raises(ValueError):
            g.nodes[0] = 0.0


class TestFrame:
    def test_orthonormal(self, grid64):
        fr = cylmin.make_frame(grid64)
        for vec in (fr.tangent, fr.normal):
            assert np.allclose(np.linalg.norm(vec, axis=1), 1.0, atol=1e-15)
        dots = np.einsum("ij,ij->i", fr.tangent, fr.normal)
        assert np.max(np.abs(dots)) < 1e-15
        assert np.allclose(fr.tangent[:, 2], 0.0)
        assert np.allclose(fr.normal[:, 2], 0.0)

    def test_normal_is_position_direction(self, grid64):
        t = grid64.nodes
        fr = cylmin.make_frame(grid64)
        assert np.allclose(fr.normal[:, 0], np.cos(t), atol=1e-15)
        assert np.allclose(fr.normal[:, 1], np.sin(t), atol=1e-15)

    def test_rotation_carries_reference_frame(self, grid64):
        fr = cylmin.make_frame(grid64)
        # R(t) rotates about e3 by t: e1 -> normal, e2 -> tangent, e3 fixed
        assert np.allclose(fr.rotation[:, :, 0], fr.normal, atol=1e-15)
        assert np.allclose(fr.rotation[:, :, 1], fr.tangent, atol=1e-15)
        assert np.allclose(fr.rotation[:, :, 2], [0.0, 0.0, 1.0], atol=1e-15)

    def test_rotation_orthogonal(self, grid64):
        fr = cylmin.make_frame(grid64)
        prod = np.einsum("nij,nkj->nik", fr.rotation, fr.rotation)
        assert np.allclose(prod, np.eye(3), atol=1e-14)


class TestFields:
    def test_normal_field_units(self, grid64):
        f = cylmin.sample_normal_field(grid64)
        assert np.allclose(np.linalg.norm(f.values, axis=1), 1.0, atol=1e-15)
        m1, m2, m3 = cylmin.frame_decompose(f)
        assert np.allclose(m1, 0.0, atol=1e-15)
        assert np.allclose(m2, 1.0, atol=1e-15)
        assert np.allclose(m3, 0.0, atol=1e-15)

    def test_negative_normal(self, grid64):
        f = cylmin.sample_normal_field(grid64, sign=-1.0)
        _, m2, _ = cylmin.frame_decompose(f)
        assert np.allclose(m2, -1.0, atol=1e-15)

    def test_u_theta_interpolates_poles(self, grid64):
        up = cylmin.sample_u_theta(grid64, np.pi / 2)
        assert np.allclose(up.values, cylmin.sample_normal_field(grid64).values, atol=1e-15)
        top = cylmin.sample_u_theta(grid64, 0.0)
        assert np.allclose(top.values, [0.0, 0.0, 1.0], atol=1e-15)

    def test_unit_validation(self, grid64):
        bad = np.ones((64, 3))
        with pytest.raises(ValueError):
            cylmin.VectorField(grid64, bad, UNIT_SPHERE)

    def test_in_plane_validation(self, grid64):
        vals = cylmin.sample_u_theta(grid64, 0.7).values
        with pytest.raises(ValueError):
            cylmin.VectorField(grid64, vals, IN_PLANE)

    def test_compose_decompose_round_trip(self, grid64):
        rng = np.random.default_rng(5)
        comps = rng.standard_normal((3, 64))
        comps /= np.linalg.norm(comps, axis=0)
        f = cylmin.compose_frame_field(grid64, comps[0], comps[1], comps[2], UNIT_SPHERE)
        back = cylmin.frame_decompose(f)
        for got, want in zip(back, comps):
            assert np.allclose(got, want, atol=1e-14)


class TestWinding:
    @pytest.mark.parametrize("turns", [-2, -1, 0, 1, 2])
    def test_degree_is_turns_plus_one(self, grid64, turns):
        f = cylmin.random_in_plane_field(grid64, seed=3, turns=turns)
        assert cylmin.winding_degree(f) == turns + 1

    def test_normal_field_degree_one(self, grid64):
        assert cylmin.winding_degree(cylmin.sample_normal_field(grid64)) == 1

    def test_stable_under_refinement(self):
        for seed in range(6):
            d1 = cylmin.winding_degree(
                cylmin.random_in_plane_field(cylmin.make_grid(128), seed)
            )
            d2 = cylmin.winding_degree(
                cylmin.random_in_plane_field(cylmin.make_grid(256), seed)
            )
            assert d1 == d2

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000), turns=st.integers(-3, 3))
    def test_lift_round_trip(self, seed, turns):
        grid = cylmin.make_grid(96)
        f = cylmin.random_in_plane_field(grid, seed, turns)
        profile = cylmin.lift_angle(f)
        assert profile.turns == turns
        assert -np.pi < profile.theta[0] <= np.pi
        back = cylmin.field_from_angles(profile)
        assert np.max(np.abs(back.values - f.values)) < 1e-12

    def test_lift_rejects_out_of_plane(self, grid64):
        with pytest.raises(ValueError):
            cylmin.lift_angle(cylmin.sample_u_theta(grid64, 0.5))


class TestCylinder:
    def test_z_nodes_span_interval(self):
        z = cylmin.make_z_nodes(9)
        assert z[0] == -1.0 and z[-1] == 1.0
        assert np.allclose(np.diff(z), 0.25, atol=1e-15)

    def test_z_invariant_doubles_nothing(self, grid64):
        ring = cylmin.sample_normal_field(grid64)
        cyl = cylmin.z_invariant_cylinder(ring, 9)
        assert cyl.z_count == 9
        for k in range(9):
            assert np.allclose(cyl.ring(k).values, ring.values, atol=0)

    def test_cylinder_validation(self, grid64):
        vals = np.ones((5, 64, 3))
        with pytest.raises(ValueError):
            cylmin.CylinderField(grid64, cylmin.make_z_nodes(5), vals, UNIT_SPHERE)


class TestCsv:
    def test_field_round_trip(self, grid64, tmp_path):
        f = cylmin.random_unit_field(grid64, 9)
        path = tmp_path / "field.csv"
        cylmin.write_field_csv(f, path)
        header = path.read_text().splitlines()[0]
        assert header == "t,x,y,z"
        back = cylmin.read_field_csv(path)
        assert np.array_equal(back.values, f.values)
        assert np.array_equal(back.grid.nodes, f.grid.nodes)

    def test_cylinder_round_trip(self, grid64, tmp_path):
        f = cylmin.random_cylinder_field(grid64, 5, 2)
        path = tmp_path / "cyl.csv"
        cylmin.write_cylinder_csv(f, path)
        header = path.read_text().splitlines()[0]
        assert header == "z,t,x,y,z_comp"
        back = cylmin.read_cylinder_csv(path)
        assert np.array_equal(back.values, f.values)
        assert np.array_equal(back.z_nodes, f.z_nodes)
