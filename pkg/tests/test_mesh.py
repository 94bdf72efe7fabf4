"""TriMesh invariants and the procedural primitives.

Volumes and areas are checked against closed-form formulas; watertightness
and Euler characteristic are the structural oracles.
"""

import math

import numpy as np
import pytest

from rtroom import transforms as tr
from rtroom.mesh import (Aabb, Obb, TriMesh, box, cylinder, ellipsoid, fit_obb,
                         ring_sector)
from rtroom.transforms import GeometryError

from conftest import random_rigid


def signed_volume(mesh):
    tv = mesh.tri_vertices()
    return float(np.einsum("ij,ij->i", tv[:, 0], np.cross(tv[:, 1], tv[:, 2])).sum() / 6.0)


class TestTriMesh:
    def test_rejects_bad_input(self):
        with pytest.raises(GeometryError):
            TriMesh([[0, 0, 0]], [[0, 0, 0]])          # degenerate
        with pytest.raises(GeometryError):
            TriMesh([[0, 0, 0], [1, 0, 0]], [[0, 1, 5]])  # index out of range
        with pytest.raises(GeometryError):
            TriMesh([[0, 0, float("nan")]], np.zeros((0, 3)))
        with pytest.raises(GeometryError):
            TriMesh(np.zeros((2, 2)), np.zeros((0, 3)))

    def test_clean_drops_degenerates(self):
        v = [[0, 0, 0], [1, 0, 0], [0, 1, 0]]
        t = [[0, 1, 2], [0, 1, 1]]
        m = TriMesh(v, t, clean=True)
        assert m.n_triangles == 1

    def test_immutable(self):
        m = box((1, 1, 1))
        with pytest.raises(ValueError):
            m.vertices[0, 0] = 99.0

    def test_unit_triangle_area(self):
        m = TriMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])
        assert m.area() == pytest.approx(0.5)
        assert not m.is_watertight()

    def test_transformed_preserves_topology(self, rng):
        m = ellipsoid((3, 2, 1), segments=6)
        t = random_rigid(rng)
        m2 = m.transformed(t)
        assert np.array_equal(m.triangles, m2.triangles)
        np.testing.assert_allclose(m2.vertices, tr.apply_points(t, m.vertices))

    def test_volume_rigid_invariant(self, rng):
        m = box((3, 4, 5))
        for _ in range(5):
            m2 = m.transformed(random_rigid(rng))
            assert m2.volume() == pytest.approx(60.0, rel=1e-9)

    def test_merged_and_components(self):
        a = box((1, 1, 1))
        b = box((1, 1, 1), center=(10, 0, 0))
        m = a.merged(b)
        comps = m.connected_components()
        assert len(comps) == 2
        assert sum(len(c) for c in comps) == m.n_triangles
        sub = m.submesh(comps[0])
        assert sub.is_watertight()
        assert sub.volume() == pytest.approx(1.0)

    def test_submesh_reindexes(self):
        m = box((2, 2, 2), segments=(2, 2, 2))
        sub = m.submesh(np.arange(4))
        assert sub.n_triangles == 4
        assert sub.triangles.max() < len(sub.vertices)


class TestPrimitives:
    def test_box_exact(self):
        m = box((2.0, 3.0, 4.0), segments=(2, 3, 1))
        assert m.is_watertight()
        assert m.euler_characteristic() == 2
        assert m.volume() == pytest.approx(24.0, rel=1e-12)
        assert m.area() == pytest.approx(2 * (2 * 3 + 3 * 4 + 2 * 4), rel=1e-12)
        assert signed_volume(m) > 0  # outward winding

    def test_box_offcenter_aabb(self):
        m = box((2, 2, 2), center=(5, -3, 1))
        bb = m.aabb()
        np.testing.assert_allclose(bb.min, [4, -4, 0])
        np.testing.assert_allclose(bb.max, [6, -2, 2])

    @pytest.mark.parametrize("axis", [0, 1, 2])
    def test_cylinder(self, axis):
        n = 256
        m = cylinder(2.0, -1.0, 3.0, segments=n, stacks=3, axis=axis)
        assert m.is_watertight()
        assert m.euler_characteristic() == 2
        assert signed_volume(m) > 0
        # inscribed prism volume: exact for the faceted surface
        prism = 0.5 * n * 2.0 ** 2 * math.sin(2 * math.pi / n) * 4.0
        assert m.volume() == pytest.approx(prism, rel=1e-9)
        lo, hi = m.aabb().min[axis], m.aabb().max[axis]
        assert (lo, hi) == (-1.0, 3.0)

    def test_ellipsoid(self):
        m = ellipsoid((3.0, 2.0, 1.0), segments=64)
        assert m.is_watertight()
        assert m.euler_characteristic() == 2
        assert signed_volume(m) > 0
        exact = 4.0 / 3.0 * math.pi * 3 * 2 * 1
        assert m.volume() == pytest.approx(exact, rel=5e-3)

    def test_ring_sector_full(self):
        n = 512
        m = ring_sector(2.0, 3.0, -1.0, 1.0, segments=n)
        assert m.is_watertight()
        assert m.euler_characteristic() == 0  # torus topology
        assert signed_volume(m) > 0
        # faceted annulus: inscribed polygon area difference times height
        poly = lambda r: 0.5 * n * r * r * math.sin(2 * math.pi / n)
        assert m.volume() == pytest.approx((poly(3.0) - poly(2.0)) * 2.0, rel=1e-9)

    def test_ring_sector_partial(self):
        m = ring_sector(2.0, 3.0, 0.0, 1.0, start_deg=-45.0, end_deg=45.0,
                        segments=128)
        assert m.is_watertight()
        assert m.euler_characteristic() == 2  # capped: sphere topology
        assert signed_volume(m) > 0
        exact = math.pi * (9 - 4) * (90.0 / 360.0)  # quarter annulus, height 1
        assert m.volume() == pytest.approx(exact, rel=1e-3)

    def test_ring_sector_angle_zero_points_up(self):
        m = ring_sector(2.0, 3.0, 0.0, 1.0, start_deg=-10.0, end_deg=10.0,
                        segments=16)
        bb = m.aabb()
        assert bb.max[2] >= 3.0 - 1e-9   # sector sits along +Z
        assert abs(bb.min[0]) < 1.0      # roughly symmetric about X


class TestBoxes:
    def test_aabb_validation(self):
        with pytest.raises(GeometryError):
            Aabb([1, 0, 0], [0, 1, 1])

    def test_obb_corners_and_mesh(self, rng):
        rot = random_rigid(rng)[:3, :3]
        o = Obb(center=[1, 2, 3], half_extents=[1, 2, 0.5], rotation=rot)
        cs = o.corners()
        assert cs.shape == (8, 3)
        m = o.to_mesh()
        assert m.is_watertight()
        assert m.volume() == pytest.approx(8 * 1 * 2 * 0.5, rel=1e-9)
        # corner set of the mesh equals the analytic corners
        got = sorted(map(tuple, np.round(m.vertices, 9)))
        want = sorted(map(tuple, np.round(cs, 9)))
        np.testing.assert_allclose(got, want, atol=1e-9)

    def test_obb_rejects_flat(self):
        with pytest.raises(GeometryError):
            Obb([0, 0, 0], [1, 0, 1])

    def test_fit_obb_exact_box(self):
        m = box((4, 6, 2), center=(1, 1, 1))
        o, dev = fit_obb(m)
        np.testing.assert_allclose(o.center, [1, 1, 1])
        np.testing.assert_allclose(o.half_extents, [2, 3, 1])
        assert dev == 0.0

    def test_fit_obb_deviation_positive_for_round_shape(self):
        m = ellipsoid((2, 2, 2), segments=24)
        o, dev = fit_obb(m)
        assert dev > 0.1  # sphere retreats from its box corners
        # every vertex inside the box
        local = np.abs(m.vertices - o.center)
        assert np.all(local <= o.half_extents + 1e-9)
