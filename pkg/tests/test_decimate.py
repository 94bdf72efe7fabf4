"""Quadric edge-collapse decimation."""

import math

import numpy as np
import pytest

from rtroom.ct import IsoMesh
from rtroom.decimate import decimate, decimate_mesh
from rtroom.mesh import box, ellipsoid
from rtroom.transforms import GeometryError


@pytest.fixture(scope="module")
def sphere():
    return ellipsoid((20.0, 20.0, 20.0), segments=32)  # ~2k triangles


def test_errors(sphere):
    with pytest.raises(GeometryError):
        decimate_mesh(sphere, 3)
    with pytest.raises(GeometryError):
        decimate_mesh(sphere, sphere.n_triangles + 1)


def test_noop_at_current_count(sphere):
    assert decimate_mesh(sphere, sphere.n_triangles) is sphere


def test_ten_fold_reduction(sphere):
    target = sphere.n_triangles // 10
    out = decimate_mesh(sphere, target)
    assert abs(out.n_triangles - target) <= max(1, round(0.05 * target))
    assert out.is_watertight()
    assert out.euler_characteristic() == 2
    drift = abs(out.volume() - sphere.volume()) / sphere.volume()
    assert drift < 0.02


def test_vertices_stay_in_bbox(sphere):
    out = decimate_mesh(sphere, sphere.n_triangles // 10)
    bb = sphere.aabb()
    assert np.all(out.vertices >= bb.min - 1e-9)
    assert np.all(out.vertices <= bb.max + 1e-9)


def test_flat_regions_collapse_before_corners():
    # densely tessellated box: flat-face vertices carry zero quadric error, so
    # they disappear first and the 8 corners survive with exact volume
    m = box((2.0, 2.0, 2.0), segments=(6, 6, 6))
    out = decimate_mesh(m, 50)
    assert out.n_triangles <= 51
    assert out.is_watertight()
    assert out.volume() == pytest.approx(8.0, rel=1e-9)
    corners = {tuple(np.round(c, 9)) for c in
               np.array(np.meshgrid([-1, 1], [-1, 1], [-1, 1])).T.reshape(-1, 3)}
    got = {tuple(np.round(v, 9)) for v in out.vertices}
    assert corners <= got


def test_progressive_targets_monotone(sphere):
    prev = sphere.n_triangles
    for target in (1000, 400, 100):
        out = decimate_mesh(sphere, target)
        assert out.n_triangles < prev
        assert out.is_watertight()
        prev = out.n_triangles


def test_decimate_isomesh_tracks_ratio(sphere):
    iso = IsoMesh(sphere, iso_value=0.0, source="test")
    out = decimate(iso, sphere.n_triangles // 4)
    assert out.iso_value == 0.0 and out.source == "test"
    assert out.decimation_ratio == pytest.approx(
        out.mesh.n_triangles / sphere.n_triangles)
