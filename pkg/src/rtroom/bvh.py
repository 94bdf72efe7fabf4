"""Axis-aligned bounding volume hierarchy over mesh triangles.

Deterministic build: recursive median split on the longest centroid axis
(stable sort breaks ties).  Nodes live in flat arrays so the numba traversal
kernels can walk them directly.  Each node also carries an oriented bounding
box (PCA axes, exact projection extents): the traversal uses the separating-
axis gap between node OBBs as a second distance lower bound, which prunes far
better than axis-aligned boxes on curved shell geometry (gantry drum, arm,
treatment head).
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .mesh import TriMesh
from .transforms import GeometryError

LEAF_SIZE = 8


@njit(cache=True)
def _project_extents(pts, first3, count3, axes):
    """Min/max projections of each node's points onto its PCA axes."""
    n_nodes = first3.shape[0]
    ext = np.empty((n_nodes, 3))
    center = np.empty((n_nodes, 3))
    for i in range(n_nodes):
        lo = first3[i]
        hi = lo + count3[i]
        for k in range(3):
            ax = axes[i, k, 0]
            ay = axes[i, k, 1]
            az = axes[i, k, 2]
            pmin = 1e300
            pmax = -1e300
            for j in range(lo, hi):
                p = ax * pts[j, 0] + ay * pts[j, 1] + az * pts[j, 2]
                if p < pmin:
                    pmin = p
                if p > pmax:
                    pmax = p
            ext[i, k] = 0.5 * (pmax - pmin)
            center[i, k] = 0.5 * (pmax + pmin)   # in axis coordinates
    # map axis-frame centers back to mesh coordinates
    out = np.empty((n_nodes, 3))
    for i in range(n_nodes):
        for c in range(3):
            out[i, c] = (center[i, 0] * axes[i, 0, c]
                         + center[i, 1] * axes[i, 1, c]
                         + center[i, 2] * axes[i, 2, c])
    return out, ext


class Bvh:
    """Flat binary AABB tree over a mesh's triangles (mesh-local frame)."""

    __slots__ = ("mesh", "bmin", "bmax", "left", "right", "first", "count",
                 "order", "tri_verts", "obb_center", "obb_axes", "obb_ext")

    def __init__(self, mesh: TriMesh, leaf_size: int = LEAF_SIZE):
        if mesh.n_triangles == 0:
            raise GeometryError("cannot build a BVH over an empty mesh")
        if leaf_size < 1:
            raise GeometryError("leaf size must be at least 1")
        self.mesh = mesh
        tv = mesh.tri_vertices()
        centroids = tv.mean(axis=1)
        n = len(tv)
        order = np.arange(n)
        cap = 2 * n
        bmin = np.empty((cap, 3))
        bmax = np.empty((cap, 3))
        left = np.full(cap, -1, np.int32)
        right = np.full(cap, -1, np.int32)
        first = np.zeros(cap, np.int32)
        count = np.zeros(cap, np.int32)
        node_lo = np.zeros(cap, np.int64)
        node_hi = np.zeros(cap, np.int64)
        n_nodes = 0

        # iterative build; each stack entry is (node, lo, hi)
        stack = [(0, 0, n)]
        n_nodes = 1
        while stack:
            node, lo, hi = stack.pop()
            node_lo[node] = lo
            node_hi[node] = hi
            seg = order[lo:hi]
            pts = tv[seg].reshape(-1, 3)
            bmin[node] = pts.min(axis=0)
            bmax[node] = pts.max(axis=0)
            if hi - lo <= leaf_size:
                first[node] = lo
                count[node] = hi - lo
                continue
            cmin = centroids[seg].min(axis=0)
            cmax = centroids[seg].max(axis=0)
            axis = int(np.argmax(cmax - cmin))
            key = centroids[seg, axis]
            order[lo:hi] = seg[np.argsort(key, kind="stable")]
            mid = (lo + hi) // 2
            l, r = n_nodes, n_nodes + 1
            n_nodes += 2
            left[node] = l
            right[node] = r
            stack.append((l, lo, mid))
            stack.append((r, mid, hi))

        self.bmin = np.ascontiguousarray(bmin[:n_nodes])
        self.bmax = np.ascontiguousarray(bmax[:n_nodes])
        self.left = left[:n_nodes].copy()
        self.right = right[:n_nodes].copy()
        self.first = first[:n_nodes].copy()
        self.count = count[:n_nodes].copy()
        self.order = order
        self.tri_verts = np.ascontiguousarray(tv[order])

        # per-node OBBs: PCA axes from the node's vertex covariance, extents
        # from exact projections (so containment is guaranteed)
        pts = self.tri_verts.reshape(-1, 3)
        lo3 = node_lo[:n_nodes] * 3
        hi3 = node_hi[:n_nodes] * 3
        m = (hi3 - lo3).astype(float)
        s1 = np.vstack([np.zeros((1, 3)), np.cumsum(pts, axis=0)])
        outer = pts[:, :, None] * pts[:, None, :]
        s2 = np.concatenate([np.zeros((1, 3, 3)), np.cumsum(outer, axis=0)])
        mean = (s1[hi3] - s1[lo3]) / m[:, None]
        cov = (s2[hi3] - s2[lo3]) / m[:, None, None] \
            - mean[:, :, None] * mean[:, None, :]
        cov = 0.5 * (cov + cov.transpose(0, 2, 1))
        _, vecs = np.linalg.eigh(cov)
        axes = np.ascontiguousarray(vecs.transpose(0, 2, 1))  # rows = axes
        center, ext = _project_extents(pts, lo3.astype(np.int64),
                                       (hi3 - lo3).astype(np.int64), axes)
        self.obb_center = center
        self.obb_axes = axes
        self.obb_ext = ext

    @property
    def n_nodes(self) -> int:
        return len(self.left)

    def arrays(self):
        return (self.bmin, self.bmax, self.left, self.right, self.first,
                self.count, self.obb_center, self.obb_axes, self.obb_ext,
                self.tri_verts)

    def depth(self) -> int:
        depths = {0: 1}
        best = 1
        stack = [0]
        while stack:
            i = stack.pop()
            if self.count[i] > 0:
                best = max(best, depths[i])
                continue
            for c in (self.left[i], self.right[i]):
                depths[int(c)] = depths[i] + 1
                stack.append(int(c))
        return best

    def validate(self) -> None:
        """Check structural invariants (tests call this)."""
        seen = np.zeros(len(self.order), bool)
        stack = [0]
        while stack:
            i = stack.pop()
            if self.count[i] > 0:
                lo, hi = int(self.first[i]), int(self.first[i] + self.count[i])
                if seen[lo:hi].any():
                    raise GeometryError("triangle referenced by two leaves")
                seen[lo:hi] = True
                pts = self.tri_verts[lo:hi].reshape(-1, 3)
                if (pts.min(axis=0) < self.bmin[i] - 1e-9).any() or \
                        (pts.max(axis=0) > self.bmax[i] + 1e-9).any():
                    raise GeometryError("leaf box does not contain its triangles")
            else:
                for c in (int(self.left[i]), int(self.right[i])):
                    if (self.bmin[c] < self.bmin[i] - 1e-9).any() or \
                            (self.bmax[c] > self.bmax[i] + 1e-9).any():
                        raise GeometryError("child box escapes parent box")
                    stack.append(c)
        if not seen.all():
            raise GeometryError("some triangles missing from leaves")
