"""Binary STL and ASCII OBJ readers/writers.

OBJ keeps shared vertices (indices are 1-based on disk, 0-based in memory) and
round-trips coordinates losslessly via repr-precision floats.  STL stores one
vertex triple per facet; loading welds exactly-equal vertices back together.
"""

from __future__ import annotations

import io
import struct
from pathlib import Path

import numpy as np

from .mesh import TriMesh
from .transforms import GeometryError

_STL_HEADER = 80


def write_stl_bytes(mesh: TriMesh) -> bytes:
    tv = mesh.tri_vertices().astype("<f4")
    n = len(tv)
    normals = np.cross(tv[:, 1] - tv[:, 0], tv[:, 2] - tv[:, 0])
    lens = np.linalg.norm(normals, axis=1, keepdims=True)
    normals = np.where(lens > 0, normals / np.maximum(lens, 1e-30), 0.0).astype("<f4")
    buf = io.BytesIO()
    buf.write(b"rtroom binary stl".ljust(_STL_HEADER, b" "))
    buf.write(struct.pack("<I", n))
    rec = np.zeros(n, dtype=[("n", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")])
    rec["n"] = normals
    rec["v"] = tv
    buf.write(rec.tobytes())
    return buf.getvalue()


def read_stl_bytes(data: bytes, name: str = "") -> TriMesh:
    if len(data) < _STL_HEADER + 4:
        raise GeometryError("truncated STL data")
    (n,) = struct.unpack_from("<I", data, _STL_HEADER)
    if len(data) < _STL_HEADER + 4 + 50 * n:
        raise GeometryError("truncated STL data")
    rec = np.frombuffer(data, dtype=[("n", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")],
                        count=n, offset=_STL_HEADER + 4)
    tv = rec["v"].astype(np.float64).reshape(-1, 3)
    verts, inverse = np.unique(tv, axis=0, return_inverse=True)
    tris = inverse.reshape(-1, 3).astype(np.int32)
    return TriMesh(verts, tris, name=name, clean=True)


def write_stl(mesh: TriMesh, path) -> None:
    Path(path).write_bytes(write_stl_bytes(mesh))


def read_stl(path) -> TriMesh:
    return read_stl_bytes(Path(path).read_bytes(), name=Path(path).stem)


def write_obj(mesh: TriMesh, path) -> None:
    with open(path, "w") as f:
        f.write(f"# rtroom mesh: {mesh.name}\n")
        for v in mesh.vertices:
            f.write(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}\n")
        for t in mesh.triangles:
            f.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")


def read_obj(path) -> TriMesh:
    verts, tris = [], []
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(p.split("/")[0]) for p in parts[1:]]
                if len(idx) != 3:
                    raise GeometryError(f"{path}:{lineno}: only triangular faces supported")
                tris.append([i - 1 for i in idx])
    return TriMesh(np.array(verts, dtype=float), np.array(tris, dtype=np.int32),
                   name=Path(path).stem)


def read_mesh(path) -> TriMesh:
    suffix = Path(path).suffix.lower()
    if suffix == ".stl":
        return read_stl(path)
    if suffix == ".obj":
        return read_obj(path)
    raise GeometryError(f"unsupported mesh format: {suffix}")


def write_mesh(mesh: TriMesh, path) -> None:
    suffix = Path(path).suffix.lower()
    if suffix == ".stl":
        write_stl(mesh, path)
    elif suffix == ".obj":
        write_obj(mesh, path)
    else:
        raise GeometryError(f"unsupported mesh format: {suffix}")
