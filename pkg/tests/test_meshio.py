"""STL/OBJ read-write round trips."""

import numpy as np
import pytest

from rtroom.mesh import box, ellipsoid
from rtroom.meshio import (read_mesh, read_obj, read_stl, read_stl_bytes,
                           write_mesh, write_obj, write_stl, write_stl_bytes)
from rtroom.transforms import GeometryError


def assert_same_surface(a, b, atol=0.0):
    """Same triangle soup irrespective of vertex order/indexing."""
    ta = np.sort(np.round(a.tri_vertices().reshape(len(a.triangles), -1), 5), axis=0)
    tb = np.sort(np.round(b.tri_vertices().reshape(len(b.triangles), -1), 5), axis=0)
    assert a.n_triangles == b.n_triangles
    np.testing.assert_allclose(ta, tb, atol=atol)


def test_stl_bytes_roundtrip():
    m = ellipsoid((10, 20, 5), segments=8)
    data = write_stl_bytes(m)
    # 80-byte header + 4-byte count + 50 bytes per triangle
    assert len(data) == 84 + 50 * m.n_triangles
    back = read_stl_bytes(data)
    assert back.n_triangles == m.n_triangles
    assert back.is_watertight()           # welding restores shared vertices
    assert back.volume() == pytest.approx(m.volume(), rel=1e-6)


def test_stl_file_roundtrip(tmp_path):
    m = box((3, 4, 5), segments=(2, 2, 2))
    path = tmp_path / "box.stl"
    write_stl(m, path)
    back = read_stl(path)
    assert_same_surface(m, back, atol=1e-4)  # float32 on disk
    assert back.is_watertight()


def test_obj_roundtrip_lossless(tmp_path):
    m = ellipsoid((1.25, 2.5, 0.75), segments=6)
    path = tmp_path / "e.obj"
    write_obj(m, path)
    back = read_obj(path)
    # OBJ writes repr() floats: bitwise identical vertices
    np.testing.assert_array_equal(m.vertices, back.vertices)
    np.testing.assert_array_equal(m.triangles, back.triangles)


def test_write_mesh_dispatches_on_extension(tmp_path):
    m = box((1, 1, 1))
    for name in ("a.stl", "b.obj", "c.STL"):
        p = tmp_path / name
        write_mesh(m, p)
        back = read_mesh(p)
        assert back.n_triangles == m.n_triangles


def test_unknown_extension_raises(tmp_path):
    m = box((1, 1, 1))
    with pytest.raises(GeometryError):
        write_mesh(m, tmp_path / "mesh.ply")
    (tmp_path / "mesh.xyz").write_text("")
    with pytest.raises(GeometryError):
        read_mesh(tmp_path / "mesh.xyz")


def test_truncated_stl_raises():
    m = box((1, 1, 1))
    data = write_stl_bytes(m)
    with pytest.raises(GeometryError):
        read_stl_bytes(data[:100])
