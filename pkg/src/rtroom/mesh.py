"""Indexed triangle meshes and the procedural primitives the machines are built from.

Meshes are immutable after construction: ``vertices`` is an ``(n, 3)`` float64
array, ``triangles`` an ``(m, 3)`` int32 array.  All coordinates are
millimeters.  Degenerate triangles (area below 1e-12 mm^2) are rejected at
construction unless ``clean=True`` drops them silently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .transforms import GeometryError, apply_points

DEGENERATE_AREA_MM2 = 1e-12


def _triangle_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


class TriMesh:
    """Indexed triangle surface."""

    __slots__ = ("vertices", "triangles", "name")

    def __init__(self, vertices, triangles, name: str = "", clean: bool = False):
        v = np.ascontiguousarray(np.asarray(vertices, dtype=np.float64))
        t = np.ascontiguousarray(np.asarray(triangles, dtype=np.int32))
        if v.ndim != 2 or v.shape[1] != 3:
            raise GeometryError("vertices must be (n, 3)")
        if t.size == 0:
            t = np.zeros((0, 3), dtype=np.int32)
        if t.ndim != 2 or t.shape[1] != 3:
            raise GeometryError("triangles must be (m, 3)")
        if not np.all(np.isfinite(v)):
            raise GeometryError("mesh vertices must be finite")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise GeometryError("triangle index out of range")
        if t.size:
            areas = _triangle_areas(v, t)
            bad = areas < DEGENERATE_AREA_MM2
            if bad.any():
                if not clean:
                    raise GeometryError(f"{int(bad.sum())} degenerate triangles")
                t = t[~bad]
        self.vertices = v
        self.triangles = t
        self.name = name
        v.setflags(write=False)
        t.setflags(write=False)

    def __repr__(self):
        return f"TriMesh({self.name or 'unnamed'}: {len(self.vertices)}v/{len(self.triangles)}t)"

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def tri_vertices(self) -> np.ndarray:
        """Per-triangle vertex coordinates, shape (m, 3, 3)."""
        return self.vertices[self.triangles]

    def transformed(self, t: np.ndarray, name: str | None = None) -> "TriMesh":
        return TriMesh(apply_points(t, self.vertices), self.triangles,
                       name=self.name if name is None else name)

    def aabb(self, transform: np.ndarray | None = None):
        if len(self.vertices) == 0:
            raise GeometryError("empty mesh has no bounding box")
        pts = self.vertices if transform is None else apply_points(transform, self.vertices)
        return Aabb(pts.min(axis=0), pts.max(axis=0))

    def area(self) -> float:
        return float(_triangle_areas(self.vertices, self.triangles).sum())

    def volume(self) -> float:
        """Unsigned volume enclosed by the surface (divergence theorem)."""
        tv = self.tri_vertices()
        signed = np.einsum("ij,ij->i", tv[:, 0], np.cross(tv[:, 1], tv[:, 2])).sum() / 6.0
        return abs(float(signed))

    def edge_counts(self) -> dict[tuple[int, int], int]:
        counts: dict[tuple[int, int], int] = {}
        for a, b, c in self.triangles:
            for u, v in ((a, b), (b, c), (c, a)):
                key = (u, v) if u < v else (v, u)
                counts[key] = counts.get(key, 0) + 1
        return counts

    def is_watertight(self) -> bool:
        """Every edge shared by exactly two triangles."""
        if self.n_triangles == 0:
            return False
        return all(n == 2 for n in self.edge_counts().values())

    def euler_characteristic(self) -> int:
        used = np.unique(self.triangles)
        return int(len(used) - len(self.edge_counts()) + self.n_triangles)

    def connected_components(self) -> list[np.ndarray]:
        """Triangle index groups connected through shared vertices."""
        n = len(self.vertices)
        parent = np.arange(n)

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for a, b, c in self.triangles:
            ra, rb, rc = find(a), find(b), find(c)
            parent[rb] = ra
            parent[rc] = ra
        roots = np.array([find(t[0]) for t in self.triangles])
        return [np.flatnonzero(roots == r) for r in np.unique(roots)]

    def submesh(self, tri_idx: np.ndarray, name: str | None = None) -> "TriMesh":
        tris = self.triangles[tri_idx]
        used, inverse = np.unique(tris, return_inverse=True)
        return TriMesh(self.vertices[used], inverse.reshape(-1, 3).astype(np.int32),
                       name=self.name if name is None else name)

    def merged(self, other: "TriMesh", name: str = "") -> "TriMesh":
        v = np.vstack([self.vertices, other.vertices])
        t = np.vstack([self.triangles, other.triangles + len(self.vertices)])
        return TriMesh(v, t, name=name)


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned box, min <= max componentwise."""

    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "min", np.asarray(self.min, dtype=float))
        object.__setattr__(self, "max", np.asarray(self.max, dtype=float))
        if np.any(self.min > self.max):
            raise GeometryError("Aabb min must be <= max")


@dataclass(frozen=True)
class Obb:
    """Oriented box: center + positive half-extents + rotation (box -> frame)."""

    center: np.ndarray
    half_extents: np.ndarray
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "half_extents", np.asarray(self.half_extents, dtype=float))
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float))
        if np.any(self.half_extents <= 0):
            raise GeometryError("Obb half-extents must be positive")

    def corners(self) -> np.ndarray:
        signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)],
                         dtype=float)
        return (signs * self.half_extents) @ self.rotation.T + self.center

    def to_mesh(self, name: str = "obb") -> TriMesh:
        m = box(self.half_extents * 2.0, name=name)
        return TriMesh(m.vertices @ self.rotation.T + self.center, m.triangles, name=name)


def fit_obb(mesh: TriMesh) -> tuple[Obb, float]:
    """Tight axis-aligned-in-frame Obb of a mesh plus a fit-quality figure.

    The returned deviation is the largest distance from a mesh vertex to the
    box surface (how far the mesh retreats inside its box); 0 means every
    vertex touches the box.
    """
    box_ = mesh.aabb()
    center = (box_.min + box_.max) / 2.0
    half = np.maximum((box_.max - box_.min) / 2.0, 1e-9)
    local = np.abs(mesh.vertices - center)
    dev = float(np.min(half - local, axis=1).max())
    return Obb(center, half), dev


# ---------------------------------------------------------------------------
# Procedural primitives (machines are assembled from these)
# ---------------------------------------------------------------------------

def _grid_face(corner, du, dv, nu, nv, flip=False):
    """Subdivided quad patch; returns (verts, tris)."""
    us = np.linspace(0.0, 1.0, nu + 1)
    vs = np.linspace(0.0, 1.0, nv + 1)
    uu, vv = np.meshgrid(us, vs, indexing="ij")
    verts = (corner[None, :] + uu.reshape(-1, 1) * du[None, :]
             + vv.reshape(-1, 1) * dv[None, :])
    tris = []
    for i in range(nu):
        for j in range(nv):
            a = i * (nv + 1) + j
            b = (i + 1) * (nv + 1) + j
            if flip:
                tris.append((a, b + 1, b))
                tris.append((a, a + 1, b + 1))
            else:
                tris.append((a, b, b + 1))
                tris.append((a, b + 1, a + 1))
    return verts, np.array(tris, dtype=np.int32)


def _weld(verts: np.ndarray, tris: np.ndarray, tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    key = np.round(verts / tol).astype(np.int64)
    _, first, inverse = np.unique(key, axis=0, return_index=True, return_inverse=True)
    return verts[first], inverse[tris].astype(np.int32)


def box(size, center=(0.0, 0.0, 0.0), segments=(1, 1, 1), name: str = "box") -> TriMesh:
    """Watertight axis-aligned box with per-axis face subdivision."""
    size = np.asarray(size, dtype=float)
    center = np.asarray(center, dtype=float)
    sx, sy, sz = (max(1, int(s)) for s in segments)
    h = size / 2.0
    ex = np.array([size[0], 0, 0])
    ey = np.array([0, size[1], 0])
    ez = np.array([0, 0, size[2]])
    o = center - h
    faces = [
        (o, ex, ey, sx, sy, True),            # bottom (z = -h), normal -z
        (o + ez, ex, ey, sx, sy, False),      # top, normal +z
        (o, ex, ez, sx, sz, False),           # y = -h, normal -y
        (o + ey, ex, ez, sx, sz, True),       # y = +h
        (o, ey, ez, sy, sz, True),            # x = -h, normal -x
        (o + ex, ey, ez, sy, sz, False),      # x = +h
    ]
    all_v, all_t = [], []
    off = 0
    for corner, du, dv, nu, nv, flip in faces:
        v, t = _grid_face(np.asarray(corner, float), du, dv, nu, nv, flip)
        all_v.append(v)
        all_t.append(t + off)
        off += len(v)
    v, t = _weld(np.vstack(all_v), np.vstack(all_t))
    return TriMesh(v, t, name=name)


def cylinder(radius: float, z0: float, z1: float, segments: int = 48,
             stacks: int = 1, axis: int = 2, center=(0.0, 0.0, 0.0),
             name: str = "cylinder") -> TriMesh:
    """Closed cylinder along one axis, span [z0, z1] on that axis."""
    n = max(3, int(segments))
    stacks = max(1, int(stacks))
    ang = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    ring = np.stack([np.cos(ang) * radius, np.sin(ang) * radius], axis=1)
    levels = np.linspace(z0, z1, stacks + 1)
    verts = []
    for z in levels:
        verts.append(np.column_stack([ring, np.full(n, z)]))
    verts = np.vstack(verts)
    tris = []
    for s in range(stacks):
        base0, base1 = s * n, (s + 1) * n
        for i in range(n):
            j = (i + 1) % n
            tris.append((base0 + i, base0 + j, base1 + j))
            tris.append((base0 + i, base1 + j, base1 + i))
    # caps as fans around center points
    c0 = len(verts)
    verts = np.vstack([verts, [[0, 0, z0]], [[0, 0, z1]]])
    top_base = stacks * n
    for i in range(n):
        j = (i + 1) % n
        tris.append((c0, j, i))                          # bottom cap, normal -z
        tris.append((c0 + 1, top_base + i, top_base + j))  # top cap, normal +z
    verts = np.asarray(verts, dtype=float)
    if axis != 2:
        order = {0: (2, 1, 0), 1: (0, 2, 1)}[axis]
        verts = verts[:, order]
        tris = [(a, c, b) for a, b, c in tris] if axis == 0 else [(a, c, b) for a, b, c in tris]
    verts = verts + np.asarray(center, dtype=float)
    return TriMesh(verts, np.array(tris, dtype=np.int32), name=name)


def ellipsoid(semi_axes, segments: int = 32, center=(0.0, 0.0, 0.0),
              name: str = "ellipsoid") -> TriMesh:
    """Watertight UV-sphere scaled to the given semi-axes."""
    a = np.asarray(semi_axes, dtype=float)
    n_lat = max(3, int(segments))
    n_lon = max(3, 2 * int(segments))
    verts = [np.array([0.0, 0.0, 1.0])]
    for i in range(1, n_lat):
        phi = math.pi * i / n_lat
        sp, cp = math.sin(phi), math.cos(phi)
        for j in range(n_lon):
            th = 2.0 * math.pi * j / n_lon
            verts.append(np.array([sp * math.cos(th), sp * math.sin(th), cp]))
    verts.append(np.array([0.0, 0.0, -1.0]))
    south = len(verts) - 1
    tris = []
    for j in range(n_lon):
        tris.append((0, 1 + j, 1 + (j + 1) % n_lon))
    for i in range(n_lat - 2):
        r0 = 1 + i * n_lon
        r1 = r0 + n_lon
        for j in range(n_lon):
            j1 = (j + 1) % n_lon
            tris.append((r0 + j, r1 + j, r1 + j1))
            tris.append((r0 + j, r1 + j1, r0 + j1))
    r0 = 1 + (n_lat - 2) * n_lon
    for j in range(n_lon):
        tris.append((south, r0 + (j + 1) % n_lon, r0 + j))
    v = np.asarray(verts) * a + np.asarray(center, dtype=float)
    return TriMesh(v, np.array(tris, dtype=np.int32), name=name)


def ring_sector(inner_radius: float, outer_radius: float, y0: float, y1: float,
                start_deg: float = 0.0, end_deg: float = 360.0,
                segments: int = 96, name: str = "ring") -> TriMesh:
    """Arc sweep of a rectangular cross-section about the +Y axis.

    The sweep plane is XZ; angle 0 points along +Z (beam-down home direction),
    positive toward +X.  A full 360 sweep closes on itself; a partial sweep is
    capped at both ends.  Watertight either way.
    """
    full = abs((end_deg - start_deg) % 360.0) < 1e-9 and abs(end_deg - start_deg) >= 360.0 - 1e-9
    n = max(3, int(segments))
    if full:
        angles = np.radians(np.linspace(start_deg, end_deg, n, endpoint=False))
    else:
        angles = np.radians(np.linspace(start_deg, end_deg, n + 1))
    # cross-section corners (r, y): order chosen so side faces wind outward
    corners = [(inner_radius, y0), (outer_radius, y0), (outer_radius, y1), (inner_radius, y1)]
    rings = []
    for ang in angles:
        s, c = math.sin(ang), math.cos(ang)
        rings.append([(r * s, y, r * c) for r, y in corners])
    verts = np.array(rings, dtype=float).reshape(-1, 3)
    m = len(angles)
    tris = []
    for i in range(m if full else m - 1):
        i1 = (i + 1) % m
        for k in range(4):
            k1 = (k + 1) % 4
            a = i * 4 + k
            b = i * 4 + k1
            cix = i1 * 4 + k1
            d = i1 * 4 + k
            tris.append((a, b, cix))
            tris.append((a, cix, d))
    if not full:
        tris.append((0, 1, 2))
        tris.append((0, 2, 3))
        e = (m - 1) * 4
        tris.append((e, e + 2, e + 1))
        tris.append((e, e + 3, e + 2))
    tris = [(a, c, b) for a, b, c in tris]  # wind outward
    return TriMesh(verts, np.array(tris, dtype=np.int32), name=name)
