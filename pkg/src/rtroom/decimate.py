"""Quadric-error-metric edge-collapse decimation.

Collapses are ordered by quadric error, so flat regions (zero plane error)
disappear first and curvature-carrying geometry survives longest.  Manifold
safety: a collapse must satisfy the link condition (the two endpoints share
exactly the two opposite vertices of their two common faces), may not flip any
surviving face normal past 90 degrees, and may not create degenerate faces.
New vertex positions are clamped into the original bounding box.
"""

from __future__ import annotations

import heapq
from itertools import count

import numpy as np

from .ct import IsoMesh
from .mesh import TriMesh
from .transforms import GeometryError


def _face_quadric(a, b, c):
    n = np.cross(b - a, c - a)
    norm = np.linalg.norm(n)
    if norm < 1e-30:
        return np.zeros((4, 4))
    area = 0.5 * norm
    n = n / norm
    d = -np.dot(n, a)
    p = np.array([n[0], n[1], n[2], d])
    return area * np.outer(p, p)


def _vertex_error(q, p):
    v = np.array([p[0], p[1], p[2], 1.0])
    return float(v @ q @ v)


def _optimal_position(q, fallback_a, fallback_b, bb_min, bb_max):
    a = q[:3, :3]
    b = q[:3, 3]
    candidates = []
    det = np.linalg.det(a)
    if abs(det) > 1e-9 * max(abs(a).max(), 1.0) ** 3:
        candidates.append(np.linalg.solve(a, -b))
    mid = (fallback_a + fallback_b) / 2.0
    candidates.extend([mid, fallback_a, fallback_b])
    best, best_err = None, np.inf
    for p in candidates:
        p = np.clip(p, bb_min, bb_max)
        err = _vertex_error(q, p)
        if err < best_err:
            best, best_err = p, err
    return best, best_err


def decimate_mesh(mesh: TriMesh, target_triangles: int) -> TriMesh:
    current = mesh.n_triangles
    if target_triangles == current:
        return mesh
    if target_triangles < 4 or target_triangles > current:
        raise GeometryError(
            f"decimation target must be in [4, {current}], got {target_triangles}")

    verts = mesh.vertices.copy()
    faces = [tuple(int(i) for i in f) for f in mesh.triangles]
    alive = [True] * len(faces)
    n_alive = len(faces)
    bb_min = verts.min(axis=0)
    bb_max = verts.max(axis=0)

    quadrics = [np.zeros((4, 4)) for _ in range(len(verts))]
    vertex_faces: list[set[int]] = [set() for _ in range(len(verts))]
    for fi, (a, b, c) in enumerate(faces):
        q = _face_quadric(verts[a], verts[b], verts[c])
        for v in (a, b, c):
            quadrics[v] = quadrics[v] + q
            vertex_faces[v].add(fi)

    version = [0] * len(verts)
    heap: list = []
    tick = count()

    def push_edge(u, v):
        if u > v:
            u, v = v, u
        q = quadrics[u] + quadrics[v]
        pos, err = _optimal_position(q, verts[u], verts[v], bb_min, bb_max)
        heapq.heappush(heap, (err, next(tick), u, v, version[u], version[v], pos))

    seen = set()
    for a, b, c in faces:
        for u, v in ((a, b), (b, c), (c, a)):
            key = (u, v) if u < v else (v, u)
            if key not in seen:
                seen.add(key)
                push_edge(*key)
    del seen

    def neighbors(u):
        out = set()
        for fi in vertex_faces[u]:
            out.update(faces[fi])
        out.discard(u)
        return out

    def face_normal(fi, moved=None, pos=None):
        a, b, c = faces[fi]
        pa = pos if moved == a else verts[a]
        pb = pos if moved == b else verts[b]
        pc = pos if moved == c else verts[c]
        return np.cross(pb - pa, pc - pa)

    while n_alive > target_triangles and heap:
        err, _, u, v, ver_u, ver_v, pos = heapq.heappop(heap)
        if version[u] != ver_u or version[v] != ver_v:
            continue
        shared = vertex_faces[u] & vertex_faces[v]
        if len(shared) != 2:
            continue  # not a (manifold) edge anymore
        # link condition: exactly the two opposite vertices in common
        opposite = set()
        for fi in shared:
            opposite.update(faces[fi])
        opposite -= {u, v}
        if neighbors(u) & neighbors(v) != opposite or len(opposite) != 2:
            continue
        # normal-flip and degeneracy guard over all surviving faces
        ok = True
        for w in (u, v):
            for fi in vertex_faces[w]:
                if fi in shared:
                    continue
                old_n = face_normal(fi)
                new_n = face_normal(fi, moved=w, pos=pos)
                if np.dot(old_n, new_n) <= 0.0 or np.linalg.norm(new_n) < 1e-12:
                    ok = False
                    break
            if not ok:
                break
        if not ok:
            continue

        # collapse v into u at pos
        verts[u] = pos
        quadrics[u] = quadrics[u] + quadrics[v]
        for fi in shared:
            alive[fi] = False
            n_alive -= 1
            for w in faces[fi]:
                vertex_faces[w].discard(fi)
        for fi in list(vertex_faces[v]):
            a, b, c = faces[fi]
            faces[fi] = tuple(u if w == v else w for w in (a, b, c))
            vertex_faces[u].add(fi)
        vertex_faces[v] = set()
        version[u] += 1
        version[v] += 1
        for w in neighbors(u):
            push_edge(u, w)

    kept = [f for f, a in zip(faces, alive) if a]
    used = sorted({w for f in kept for w in f})
    remap = {w: i for i, w in enumerate(used)}
    new_faces = np.array([[remap[a], remap[b], remap[c]] for a, b, c in kept],
                         dtype=np.int32)
    return TriMesh(verts[used], new_faces, name=mesh.name, clean=True)


def decimate(iso: IsoMesh, target_triangles: int) -> IsoMesh:
    """Decimate an extracted isosurface toward a triangle budget."""
    before = iso.mesh.n_triangles
    out = decimate_mesh(iso.mesh, target_triangles)
    ratio = out.n_triangles / before if before else 1.0
    return IsoMesh(out, iso.iso_value, source=iso.source,
                   decimation_ratio=iso.decimation_ratio * ratio)
