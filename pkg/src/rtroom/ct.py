"""CT slice-stack parsing and skin isosurface extraction.

Slice-stack directory format (bit-exact):
  meta.json           -- rows, cols, pixel_size_mm, slice_spacing_mm, slices,
                         slope, intercept, origin_mm
  slice_<index>.raw   -- 16-bit little-endian integers, row-major, one file
                         per slice, indices 0..slices-1

Scalars are mapped through ``slope * stored + intercept`` on load (a
Hounsfield-style affine rescale).  The isosurface extractor is a 256-case
Marching Cubes with vertices placed by linear interpolation along cell edges
and scaled into millimeters by pixel size and slice spacing.  Triangle normals
point toward lower scalar values (out of the patient, air being darker than
tissue).

The case table is generated at import time by tracing iso-contour loops over
the cube faces; ambiguous faces (two diagonal corners inside) are resolved by
a fixed rule that depends only on the face's corner signs, so adjacent cells
always agree and the output is crack-free.  Topological ambiguity resolution
(asymptotic decider) is a documented non-goal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .mesh import TriMesh

DEFAULT_SKIN_ISO = -300.0


class CtError(ValueError):
    """Malformed slice stack or invalid pipeline input."""


@dataclass(frozen=True)
class SliceStackMeta:
    rows: int
    cols: int
    pixel_size_mm: float
    slice_spacing_mm: float
    slices: int
    slope: float = 1.0
    intercept: float = 0.0
    origin_mm: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if min(self.rows, self.cols) < 1 or self.pixel_size_mm <= 0 \
                or self.slice_spacing_mm <= 0:
            raise CtError("metadata dimensions must be positive")
        if self.slices < 2:
            raise CtError("a slice stack needs at least 2 slices")


@dataclass(frozen=True)
class VolumeGrid:
    meta: SliceStackMeta
    scalars: np.ndarray  # (slices, rows, cols) float64

    def __post_init__(self):
        m = self.meta
        if self.scalars.shape != (m.slices, m.rows, m.cols):
            raise CtError("scalar array shape does not match metadata")
        if not np.all(np.isfinite(self.scalars)):
            raise CtError("scalar values must be finite")


@dataclass(frozen=True)
class IsoMesh:
    mesh: TriMesh
    iso_value: float
    source: str = ""
    decimation_ratio: float = 1.0
    empty_reason: str = ""


def load_slice_stack(path) -> VolumeGrid:
    path = Path(path)
    meta_path = path / "meta.json"
    if not meta_path.is_file():
        raise CtError(f"missing metadata file: {meta_path}")
    raw = json.loads(meta_path.read_text())
    try:
        meta = SliceStackMeta(
            rows=int(raw["rows"]), cols=int(raw["cols"]),
            pixel_size_mm=float(raw["pixel_size_mm"]),
            slice_spacing_mm=float(raw["slice_spacing_mm"]),
            slices=int(raw["slices"]),
            slope=float(raw.get("slope", 1.0)),
            intercept=float(raw.get("intercept", 0.0)),
            origin_mm=tuple(raw.get("origin_mm", (0.0, 0.0, 0.0))))
    except KeyError as exc:
        raise CtError(f"metadata missing field {exc}")
    expected = meta.rows * meta.cols * 2
    data = np.empty((meta.slices, meta.rows, meta.cols), dtype=np.float64)
    for k in range(meta.slices):
        slice_path = path / f"slice_{k}.raw"
        if not slice_path.is_file():
            raise CtError(f"missing or non-monotonic slice index {k}: {slice_path}")
        blob = slice_path.read_bytes()
        if len(blob) != expected:
            raise CtError(f"slice {k}: got {len(blob)} bytes, expected {expected}")
        data[k] = np.frombuffer(blob, dtype="<i2").reshape(meta.rows, meta.cols)
    data = data * meta.slope + meta.intercept
    return VolumeGrid(meta=meta, scalars=data)


def write_slice_stack(grid_values: np.ndarray, meta: SliceStackMeta, path) -> None:
    """Inverse of load_slice_stack; ``grid_values`` are stored integers."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    (path / "meta.json").write_text(json.dumps({
        "rows": meta.rows, "cols": meta.cols,
        "pixel_size_mm": meta.pixel_size_mm,
        "slice_spacing_mm": meta.slice_spacing_mm,
        "slices": meta.slices, "slope": meta.slope,
        "intercept": meta.intercept, "origin_mm": list(meta.origin_mm),
    }, indent=2))
    stored = np.asarray(grid_values, dtype="<i2")
    for k in range(meta.slices):
        (path / f"slice_{k}.raw").write_bytes(stored[k].tobytes())


# ---------------------------------------------------------------------------
# Marching Cubes table generation
# ---------------------------------------------------------------------------

_CORNERS = np.array([
    (0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0),
    (0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1),
], dtype=np.int64)

_EDGES = ((0, 1), (1, 2), (2, 3), (3, 0),
          (4, 5), (5, 6), (6, 7), (7, 4),
          (0, 4), (1, 5), (2, 6), (3, 7))

# faces as cyclic corner loops
_FACES = ((0, 1, 2, 3), (4, 5, 6, 7), (0, 1, 5, 4),
          (1, 2, 6, 5), (2, 3, 7, 6), (3, 0, 4, 7))

_EDGE_LOOKUP = {}
for _ei, (_a, _b) in enumerate(_EDGES):
    _EDGE_LOOKUP[(_a, _b)] = _ei
    _EDGE_LOOKUP[(_b, _a)] = _ei


def _face_pairs(face, inside):
    """Pair up the crossed edges of one face.

    With 4 crossed edges (diagonal ambiguity) each crossed edge is paired with
    the neighbor sharing an *inside* corner -- a rule both adjacent cells can
    evaluate identically from the face values alone.
    """
    edges = []
    for i in range(4):
        a, b = face[i], face[(i + 1) % 4]
        if inside[a] != inside[b]:
            edges.append((_EDGE_LOOKUP[(a, b)], a, b))
    if len(edges) == 2:
        return [(edges[0][0], edges[1][0])]
    if len(edges) == 4:
        pairs = []
        used = set()
        for ei, a, b in edges:
            if ei in used:
                continue
            shared = a if inside[a] else b
            for ej, c, d in edges:
                if ej != ei and ej not in used and shared in (c, d):
                    pairs.append((ei, ej))
                    used.add(ei)
                    used.add(ej)
                    break
        return pairs
    return []


def _trilinear(p, values):
    x, y, z = p
    acc = 0.0
    for ci, (cx, cy, cz) in enumerate(_CORNERS):
        w = ((x if cx else 1 - x) * (y if cy else 1 - y) * (z if cz else 1 - z))
        acc += w * values[ci]
    return acc


def _build_case_table():
    table = []
    for config in range(256):
        inside = [(config >> i) & 1 == 1 for i in range(8)]
        adjacency: dict[int, list[int]] = {}
        for face in _FACES:
            for e1, e2 in _face_pairs(face, inside):
                adjacency.setdefault(e1, []).append(e2)
                adjacency.setdefault(e2, []).append(e1)
        # trace closed loops
        loops = []
        remaining = set(adjacency)
        while remaining:
            start = min(remaining)
            loop = [start]
            remaining.discard(start)
            prev, cur = None, start
            while True:
                nxt = [e for e in adjacency[cur] if e != prev]
                nxt = nxt[0] if nxt else adjacency[cur][0]
                if nxt == start:
                    break
                loop.append(nxt)
                remaining.discard(nxt)
                prev, cur = cur, nxt
            loops.append(loop)
        # orient each loop so fan normals point toward the low-value side
        values = [1.0 if inside[i] else 0.0 for i in range(8)]
        midpoints = {e: (_CORNERS[a] + _CORNERS[b]) / 2.0 for e, (a, b) in enumerate(_EDGES)}
        tris = []
        for loop in loops:
            pts = [midpoints[e] for e in loop]
            centroid = np.mean(pts, axis=0)
            # Newell normal of the loop polygon
            n = np.zeros(3)
            for i in range(len(pts)):
                a = pts[i]
                b = pts[(i + 1) % len(pts)]
                n += np.cross(a, b)
            if np.linalg.norm(n) < 1e-12:
                n = np.cross(pts[1] - pts[0], pts[2] - pts[0])
            n = n / max(np.linalg.norm(n), 1e-12)
            ahead = _trilinear(np.clip(centroid + 0.05 * n, 0.0, 1.0), values)
            behind = _trilinear(np.clip(centroid - 0.05 * n, 0.0, 1.0), values)
            if ahead > behind:  # normal points into the high (inside) side: flip
                loop = loop[::-1]
            for i in range(1, len(loop) - 1):
                tris.append((loop[0], loop[i], loop[i + 1]))
        table.append(tuple(tris))
    return tuple(table)


MC_CASE_TABLE = _build_case_table()


def marching_cubes(grid: VolumeGrid, iso: float, source: str = "") -> IsoMesh:
    """Extract the isosurface at ``iso`` as a millimeter-scaled mesh.

    Output vertices lie on cell edges whose endpoint scalars straddle the iso
    value; shared edge vertices are welded so the surface is watertight
    whenever the iso-crossing stays off the grid boundary.
    """
    s = grid.scalars
    lo, hi = float(s.min()), float(s.max())
    if not (lo < iso < hi):
        reason = ("iso value below the scalar range" if iso <= lo
                  else "iso value above the scalar range")
        return IsoMesh(TriMesh(np.zeros((0, 3)), np.zeros((0, 3), np.int32)),
                       iso, source=source, empty_reason=reason)
    inside = s >= iso
    nz, ny, nx = s.shape
    config = np.zeros((nz - 1, ny - 1, nx - 1), dtype=np.uint8)
    for bit, (cx, cy, cz) in enumerate(_CORNERS):
        config |= (inside[cz:cz + nz - 1, cy:cy + ny - 1, cx:cx + nx - 1]
                   .astype(np.uint8) << bit)
    cells = np.argwhere((config != 0) & (config != 255))  # (k, j, i), C-order

    meta = grid.meta
    vert_ids: dict[tuple[int, int, int, int], int] = {}
    verts: list[tuple[float, float, float]] = []
    tris: list[tuple[int, int, int]] = []

    def edge_vertex(k, j, i, edge):
        ca, cb = _EDGES[edge]
        ax, ay, az = _CORNERS[ca]
        bx, by, bz = _CORNERS[cb]
        pa = (k + az, j + ay, i + ax)   # (z, y, x) like the scalar array
        pb = (k + bz, j + by, i + bx)
        if pb < pa:
            pa, pb = pb, pa
        axis = 0 if pa[0] != pb[0] else (1 if pa[1] != pb[1] else 2)
        key = (pa[0], pa[1], pa[2], axis)
        idx = vert_ids.get(key)
        if idx is not None:
            return idx
        va = float(s[pa[0], pa[1], pa[2]])
        vb = float(s[pb[0], pb[1], pb[2]])
        t = (iso - va) / (vb - va)
        zi = pa[0] + t * (pb[0] - pa[0])
        yi = pa[1] + t * (pb[1] - pa[1])
        xi = pa[2] + t * (pb[2] - pa[2])
        verts.append((xi * meta.pixel_size_mm + meta.origin_mm[0],
                      yi * meta.pixel_size_mm + meta.origin_mm[1],
                      zi * meta.slice_spacing_mm + meta.origin_mm[2]))
        idx = len(verts) - 1
        vert_ids[key] = idx
        return idx

    for k, j, i in cells:
        for ea, eb, ec in MC_CASE_TABLE[config[k, j, i]]:
            tris.append((edge_vertex(k, j, i, ea),
                         edge_vertex(k, j, i, eb),
                         edge_vertex(k, j, i, ec)))
    mesh = TriMesh(np.array(verts, dtype=float), np.array(tris, dtype=np.int32),
                   name="isosurface", clean=True)
    return IsoMesh(mesh, iso, source=source)


def largest_component(iso: IsoMesh) -> IsoMesh:
    """Keep only the largest connected surface component (drops couch
    artifacts and noise specks)."""
    comps = iso.mesh.connected_components()
    if len(comps) <= 1:
        return iso
    biggest = max(comps, key=len)
    return IsoMesh(iso.mesh.submesh(biggest, name=iso.mesh.name), iso.iso_value,
                   source=iso.source, decimation_ratio=iso.decimation_ratio)
