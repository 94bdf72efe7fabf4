"""Scene collision/clearance queries: broad phase (BVH), narrow phase, and the
couch-parallelepiped fast path.

All queries are single-pose and exact at triangle level.  Distances below
``CONTACT_TOL_MM`` count as collision (avoids flicker at grazing contact) and
are reported as 0.  Witness points always lie on their respective meshes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bvh import Bvh
from .kernels import (brute_distance, brute_intersect, bvh_pair_distance,
                      bvh_pair_intersect, tri_tri_distance)
from .mesh import Obb, TriMesh
from .transforms import GeometryError, apply_point, apply_points, compose, invert

CONTACT_TOL_MM = 1e-6


@dataclass(frozen=True)
class ColliderPair:
    source: str
    target: str
    mode: str = "mesh-mesh"  # or "obb-mesh"

    def __post_init__(self):
        if self.source == self.target:
            raise GeometryError("collider pair must reference two distinct components")


@dataclass(frozen=True)
class CollisionReport:
    source: str
    target: str
    colliding: bool
    distance_mm: float
    witness_source: np.ndarray
    witness_target: np.ndarray
    highlight: tuple[str, ...] = ()
    kind: str = "collision"  # "collision" | "beam"

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "target": self.target,
            "colliding": self.colliding,
            "distance_mm": self.distance_mm,
            "witness_source": [float(x) for x in self.witness_source],
            "witness_target": [float(x) for x in self.witness_target],
            "highlight": list(self.highlight),
            "kind": self.kind,
        }


# BVH cache keyed by mesh identity; meshes are immutable so this is safe.
_BVH_CACHE: dict[int, tuple[TriMesh, Bvh]] = {}


def bvh_for(mesh: TriMesh) -> Bvh:
    entry = _BVH_CACHE.get(id(mesh))
    if entry is None or entry[0] is not mesh:
        entry = (mesh, Bvh(mesh))
        _BVH_CACHE[id(mesh)] = entry
    return entry[1]


def clear_bvh_cache() -> None:
    _BVH_CACHE.clear()


def _relative(t_a: np.ndarray, t_b: np.ndarray):
    rel = compose(invert(t_a), t_b)
    return np.ascontiguousarray(rel[:3, :3]), np.ascontiguousarray(rel[:3, 3])


def mesh_intersects(mesh_a: TriMesh, t_a, mesh_b: TriMesh, t_b,
                    use_bvh: bool = True) -> bool:
    """Boolean-only query with early exit on first contact."""
    r, t = _relative(t_a, t_b)
    if use_bvh:
        i, j = bvh_pair_intersect(*bvh_for(mesh_a).arrays(),
                                  *bvh_for(mesh_b).arrays(), r, t)
        return i >= 0
    tv_b = apply_points(compose(invert(t_a), t_b),
                        mesh_b.tri_vertices().reshape(-1, 3)).reshape(-1, 3, 3)
    return bool(brute_intersect(mesh_a.tri_vertices(), np.ascontiguousarray(tv_b)))


def mesh_distance(mesh_a: TriMesh, t_a, mesh_b: TriMesh, t_b,
                  use_bvh: bool = True):
    """(distance_mm, witness_a_world, witness_b_world); distance 0 iff touching."""
    r, t = _relative(t_a, t_b)
    if use_bvh:
        arrays_a = bvh_for(mesh_a).arrays()
        arrays_b = bvh_for(mesh_b).arrays()
        # cheap boolean pass first: overlapping meshes short-circuit the
        # branch-and-bound and yield a contact witness from the found pair
        i, j = bvh_pair_intersect(*arrays_a, *arrays_b, r, t)
        if i >= 0:
            tv_a = arrays_a[-1]
            tv_b = apply_points(compose(invert(np.asarray(t_a, dtype=float)),
                                        np.asarray(t_b, dtype=float)),
                                arrays_b[-1][j].reshape(-1, 3)).reshape(3, 3)
            d, p, q = tri_tri_distance(tv_a[i, 0], tv_a[i, 1], tv_a[i, 2],
                                       tv_b[0], tv_b[1], tv_b[2])
        else:
            d, p, q = bvh_pair_distance(*arrays_a, *arrays_b, r, t)
    else:
        tv_b = apply_points(compose(invert(t_a), t_b),
                            mesh_b.tri_vertices().reshape(-1, 3)).reshape(-1, 3, 3)
        d, p, q = brute_distance(mesh_a.tri_vertices(), np.ascontiguousarray(tv_b))
    t_a = np.asarray(t_a, dtype=float)
    return float(d), apply_point(t_a, p), apply_point(t_a, q)


def _make_report(src_id: str, tgt_id: str, d: float, p, q,
                 kind: str = "collision") -> CollisionReport:
    colliding = d < CONTACT_TOL_MM
    return CollisionReport(
        source=src_id, target=tgt_id, colliding=colliding,
        distance_mm=0.0 if colliding else d,
        witness_source=p, witness_target=q,
        highlight=(src_id, tgt_id) if colliding else (),
        kind=kind)


def compute_collision(source: tuple[TriMesh, np.ndarray],
                      targets: list[tuple[str, TriMesh, np.ndarray]],
                      boolean_only: bool = False,
                      use_bvh: bool = True,
                      source_id: str = "source") -> list[CollisionReport]:
    """Test one source mesh against a composite list of targets.

    The source must be a single mesh; the target side may be any number of
    placed meshes.  ``boolean_only`` skips the distance computation and early
    exits on first contact.
    """
    mesh_a, t_a = source
    if mesh_a.n_triangles == 0:
        raise GeometryError("source mesh is empty")
    if not targets:
        raise GeometryError("target list is empty")
    reports = []
    for tgt_id, mesh_b, t_b in targets:
        if boolean_only:
            hit = mesh_intersects(mesh_a, t_a, mesh_b, t_b, use_bvh=use_bvh)
            zero = np.zeros(3)
            reports.append(CollisionReport(
                source=source_id, target=tgt_id, colliding=hit,
                distance_mm=0.0 if hit else float("nan"),
                witness_source=zero, witness_target=zero,
                highlight=(source_id, tgt_id) if hit else ()))
        else:
            d, p, q = mesh_distance(mesh_a, t_a, mesh_b, t_b, use_bvh=use_bvh)
            reports.append(_make_report(source_id, tgt_id, d, p, q))
    return reports


def couch_gantry_fast_check(couch_obb: Obb, couch_t: np.ndarray,
                            gantry_mesh: TriMesh, gantry_t: np.ndarray,
                            couch_id: str = "couch_top",
                            gantry_id: str = "gantry",
                            use_bvh: bool = True) -> CollisionReport:
    """Couch-as-parallelepiped vs gantry, evaluated in the gantry's frame.

    The box is mapped by compose(invert(gantry_t), couch_t) into the gantry's
    local frame so the (complex) gantry geometry never moves; the result is
    identical to the equivalent world-frame mesh-mesh test.
    """
    box_mesh = couch_obb.to_mesh(name="couch-obb")
    d, q, p = mesh_distance(gantry_mesh, gantry_t, box_mesh, couch_t,
                            use_bvh=use_bvh)
    # witness_source belongs to the couch side for reporting symmetry
    return _make_report(couch_id, gantry_id, d, p, q)


def default_pairs(placed) -> list[ColliderPair]:
    """The registered pair set: gantry/collimator vs couch, couch attachments,
    and patient (the clinically frequent colliders)."""
    ids = {c.component_id: c for c in placed}
    pairs = []
    for src in ("gantry", "collimator"):
        if src not in ids:
            continue
        if "couch_top" in ids:
            pairs.append(ColliderPair(src, "couch_top"))
        for c in placed:
            if c.kind == "attachment" and c.mount == "couch":
                pairs.append(ColliderPair(src, c.component_id))
        if "patient" in ids:
            pairs.append(ColliderPair(src, "patient"))
    # keep the spec'd default minimal: gantry x couch attachments are covered
    # by the collimator entries; prune gantry x attachment duplicates
    pruned = []
    for p in pairs:
        if p.source == "gantry" and ids.get(p.target) is not None \
                and ids[p.target].kind == "attachment":
            continue
        pruned.append(p)
    return pruned


def scene_collision(placed, pairs: list[ColliderPair] | None = None,
                    use_bvh: bool = True) -> list[CollisionReport]:
    """Evaluate every registered collider pair over a placed scene."""
    by_id = {c.component_id: c for c in placed}
    if pairs is None:
        pairs = default_pairs(placed)
    reports = []
    for pair in pairs:
        try:
            a = by_id[pair.source]
            b = by_id[pair.target]
        except KeyError as exc:
            raise GeometryError(f"collider pair references unknown component {exc}")
        d, p, q = mesh_distance(a.mesh, a.transform, b.mesh, b.transform,
                                use_bvh=use_bvh)
        reports.append(_make_report(pair.source, pair.target, d, p, q))
    return reports


def beam_couch_intersection(placed, use_bvh: bool = True) -> list[CollisionReport]:
    """Beam frustum vs couch and couch attachments.

    Reported separately from mechanical collisions: a beam-couch overlap is a
    treatment-quality warning, not a crash.
    """
    by_id = {c.component_id: c for c in placed}
    beam = by_id.get("beam")
    if beam is None:
        return []
    reports = []
    for c in placed:
        if c.component_id == "couch_top" or (c.kind == "attachment" and c.mount == "couch"):
            d, p, q = mesh_distance(beam.mesh, beam.transform, c.mesh, c.transform,
                                    use_bvh=use_bvh)
            reports.append(_make_report("beam", c.component_id, d, p, q, kind="beam"))
    return reports
