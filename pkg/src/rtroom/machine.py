"""Parametric linac machine model and forward kinematics.

World frame: right-handed, origin at isocenter, +Z up, +Y toward the gantry
stand, +X completing the basis.  Gantry angle 0 means beam pointing straight
down, positive rotation clockwise as seen from the couch foot (rotation about
+Y).  Collimator rotates about the beam axis, couch rotation is isocentric
about +Z.  Degrees and millimeters at every API.

Machines are described by a versioned JSON file (schema ``rtroom-machine/1``)
holding dimension tables from which component meshes are generated
procedurally; two representative machines and an elliptical phantom are built
in.  The ``detail`` knob scales tessellation density (1.0 gives a scene on the
order of 100k triangles; tests run much lower).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import transforms as tr
from .mesh import Obb, TriMesh, box, cylinder, ellipsoid, fit_obb, ring_sector
from .transforms import GeometryError

MACHINE_SCHEMA = "rtroom-machine/1"

AXIS_NAMES = ("gantry_deg", "collimator_deg", "couch_lateral_mm",
              "couch_longitudinal_mm", "couch_vertical_mm", "couch_rotation_deg")

COMPONENT_NAMES = ("gantry", "collimator", "couch_top", "couch_base")

MAX_FIELD_MM = 400.0


class MachineError(ValueError):
    """Bad machine description, state, or attachment operation."""


@dataclass(frozen=True)
class MachineState:
    gantry_deg: float = 0.0
    collimator_deg: float = 0.0
    couch_lateral_mm: float = 0.0
    couch_longitudinal_mm: float = 0.0
    couch_vertical_mm: float = 0.0
    couch_rotation_deg: float = 0.0
    field_x_mm: float = 100.0
    field_y_mm: float = 100.0

    def to_dict(self) -> dict:
        return {k: float(getattr(self, k)) for k in
                AXIS_NAMES + ("field_x_mm", "field_y_mm")}

    @classmethod
    def from_dict(cls, d: dict) -> "MachineState":
        known = AXIS_NAMES + ("field_x_mm", "field_y_mm")
        unknown = set(d) - set(known)
        if unknown:
            raise MachineError(f"unknown state fields: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in d.items()})

    def updated(self, **kwargs) -> "MachineState":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class Attachment:
    attachment_id: str
    display_name: str
    mesh: TriMesh
    mount: str                    # "collimator" | "couch"
    offset: np.ndarray = field(default_factory=tr.identity)

    def __post_init__(self):
        if self.mount not in ("collimator", "couch"):
            raise MachineError(f"unknown mount class: {self.mount}")
        if self.mesh.n_triangles == 0:
            raise MachineError("attachment mesh is empty")


@dataclass(frozen=True)
class MachineDescription:
    name: str
    sad_mm: float
    meshes: dict[str, TriMesh]            # keyed by COMPONENT_NAMES
    limits: dict[str, tuple[float, float]]
    mounts: dict[str, np.ndarray]         # "collimator", "couch"
    attachments: dict[str, Attachment]
    couch_obb: Obb
    obb_fit_deviation_mm: float

    def __post_init__(self):
        if self.sad_mm <= 0:
            raise MachineError("SAD must be positive")
        for axis in AXIS_NAMES:
            lo, hi = self.limits[axis]
            if not lo < hi:
                raise MachineError(f"limit {axis}: min must be < max")
        for comp in COMPONENT_NAMES:
            if comp not in self.meshes:
                raise MachineError(f"missing component mesh: {comp}")


@dataclass(frozen=True)
class PlacedComponent:
    component_id: str
    transform: np.ndarray
    mesh: TriMesh
    collidable: bool = True
    kind: str = "machine"       # machine | attachment | patient | beam
    mount: str = ""


def clamp_state(desc: MachineDescription, s: MachineState) -> MachineState:
    """Clamp every axis into its limit interval; idempotent."""
    values = {}
    for axis in AXIS_NAMES:
        lo, hi = desc.limits[axis]
        values[axis] = min(max(getattr(s, axis), lo), hi)
    values["field_x_mm"] = min(max(s.field_x_mm, 1.0), MAX_FIELD_MM)
    values["field_y_mm"] = min(max(s.field_y_mm, 1.0), MAX_FIELD_MM)
    return MachineState(**values)


def state_within_limits(desc: MachineDescription, s: MachineState) -> bool:
    return clamp_state(desc, s) == s


def gantry_transform(state: MachineState) -> np.ndarray:
    return tr.rot_y(state.gantry_deg)


def collimator_transform(state: MachineState) -> np.ndarray:
    return tr.compose(tr.rot_y(state.gantry_deg), tr.rot_z(state.collimator_deg))


def couch_transform(state: MachineState, include_vertical: bool = True) -> np.ndarray:
    z = state.couch_vertical_mm if include_vertical else 0.0
    return tr.compose(tr.rot_z(state.couch_rotation_deg),
                      tr.translate(state.couch_lateral_mm,
                                   state.couch_longitudinal_mm, z))


def source_point(desc: MachineDescription, state: MachineState) -> np.ndarray:
    """World position of the radiation source (SAD above isocenter, rotated)."""
    return tr.apply_point(collimator_transform(state), (0.0, 0.0, desc.sad_mm))


def _beam_frustum_local(desc: MachineDescription, state: MachineState,
                        past_iso_mm: float) -> TriMesh:
    fx, fy = state.field_x_mm, state.field_y_mm
    if fx <= 0 or fy <= 0:
        raise MachineError("field size must be positive")
    sad = desc.sad_mm
    scale = (sad + past_iso_mm) / sad
    hx, hy = fx / 2.0 * scale, fy / 2.0 * scale
    z = -past_iso_mm
    verts = np.array([
        [0.0, 0.0, sad],
        [-hx, -hy, z], [hx, -hy, z], [hx, hy, z], [-hx, hy, z],
    ])
    tris = np.array([
        [0, 2, 1], [0, 3, 2], [0, 4, 3], [0, 1, 4],   # sides
        [1, 2, 3], [1, 3, 4],                          # base
    ], dtype=np.int32)
    return TriMesh(verts, tris, name="beam")


def beam_frustum(desc: MachineDescription, state: MachineState,
                 past_iso_mm: float = 500.0) -> TriMesh:
    """World-frame beam pyramid: apex at the source, field-sized cross-section
    exactly at the isocenter plane, extended past the isocenter."""
    local = _beam_frustum_local(desc, state, past_iso_mm)
    return local.transformed(collimator_transform(state), name="beam")


def forward_kinematics(desc: MachineDescription, state: MachineState,
                       attachments: tuple[Attachment, ...] = (),
                       patient: TriMesh | None = None,
                       patient_offset: np.ndarray | None = None,
                       include_beam: bool = True,
                       beam_past_iso_mm: float = 500.0,
                       strict: bool = False) -> list[PlacedComponent]:
    """Place every component of the scene in the world frame."""
    if strict and not state_within_limits(desc, state):
        raise MachineError("machine state outside motion limits")
    ids = [a.attachment_id for a in attachments]
    if len(set(ids)) != len(ids):
        raise MachineError("duplicate attachment ids")
    g_t = gantry_transform(state)
    c_t = collimator_transform(state)
    couch_t = couch_transform(state)
    base_t = couch_transform(state, include_vertical=False)
    placed = [
        PlacedComponent("gantry", g_t, desc.meshes["gantry"]),
        PlacedComponent("collimator", c_t, desc.meshes["collimator"]),
        PlacedComponent("couch_top", couch_t, desc.meshes["couch_top"]),
        PlacedComponent("couch_base", base_t, desc.meshes["couch_base"]),
    ]
    for a in attachments:
        parent = c_t if a.mount == "collimator" else couch_t
        world = tr.compose(parent, tr.compose(desc.mounts[a.mount], a.offset))
        placed.append(PlacedComponent(a.attachment_id, world, a.mesh,
                                      kind="attachment", mount=a.mount))
    if patient is not None:
        off = patient_offset if patient_offset is not None else tr.identity()
        placed.append(PlacedComponent("patient", tr.compose(couch_t, off),
                                      patient, kind="patient"))
    if include_beam:
        placed.append(PlacedComponent(
            "beam", c_t, _beam_frustum_local(desc, state, beam_past_iso_mm),
            collidable=False, kind="beam"))
    return placed


@dataclass(frozen=True)
class Scene:
    """One session's worth of scene configuration (immutable; ops return copies)."""

    machine: MachineDescription
    state: MachineState = field(default_factory=MachineState)
    attachment_ids: tuple[str, ...] = ()
    patient: TriMesh | None = None
    patient_offset: np.ndarray | None = None

    def attach(self, attachment_id: str) -> "Scene":
        if attachment_id in self.attachment_ids:
            raise MachineError(f"attachment already installed: {attachment_id}")
        if attachment_id not in self.machine.attachments:
            raise MachineError(f"unknown attachment: {attachment_id}")
        return replace(self, attachment_ids=self.attachment_ids + (attachment_id,))

    def detach(self, attachment_id: str) -> "Scene":
        if attachment_id not in self.attachment_ids:
            raise MachineError(f"attachment not installed: {attachment_id}")
        return replace(self, attachment_ids=tuple(
            a for a in self.attachment_ids if a != attachment_id))

    def with_state(self, state: MachineState, clamp: bool = True) -> "Scene":
        if clamp:
            state = clamp_state(self.machine, state)
        return replace(self, state=state)

    def place(self, include_beam: bool = True) -> list[PlacedComponent]:
        atts = tuple(self.machine.attachments[a] for a in self.attachment_ids)
        return forward_kinematics(self.machine, self.state, atts,
                                  patient=self.patient,
                                  patient_offset=self.patient_offset,
                                  include_beam=include_beam)


# ---------------------------------------------------------------------------
# Procedural shape builders driven by the machine-file dimension tables
# ---------------------------------------------------------------------------

def _scaled(n: float, detail: float, floor: int) -> int:
    return max(floor, int(round(n * detail)))


def _build_shape(spec: dict, detail: float) -> TriMesh:
    kind = spec["kind"]
    if kind == "box":
        segs = spec.get("segments", [1, 1, 1])
        return box(spec["size"], spec.get("center", (0, 0, 0)),
                   segments=[_scaled(s, detail, 1) for s in segs])
    if kind == "cylinder":
        return cylinder(spec["radius"], spec["z0"], spec["z1"],
                        segments=_scaled(spec.get("segments", 48), detail, 8),
                        stacks=_scaled(spec.get("stacks", 1), detail, 1),
                        axis=spec.get("axis", 2),
                        center=spec.get("center", (0, 0, 0)))
    if kind == "ring":
        return ring_sector(spec["inner"], spec["outer"], spec["y0"], spec["y1"],
                           spec.get("start_deg", 0.0), spec.get("end_deg", 360.0),
                           segments=_scaled(spec.get("segments", 96), detail, 12))
    if kind == "ellipsoid":
        return ellipsoid(spec["semi_axes"], center=spec.get("center", (0, 0, 0)),
                         segments=_scaled(spec.get("segments", 32), detail, 6))
    raise MachineError(f"unknown shape kind: {kind}")


def _build_component(shapes: list[dict], detail: float, name: str) -> TriMesh:
    meshes = [_build_shape(s, detail) for s in shapes]
    out = meshes[0]
    for m in meshes[1:]:
        out = out.merged(m)
    return TriMesh(out.vertices, out.triangles, name=name)


def build_machine(spec: dict, detail: float = 1.0) -> MachineDescription:
    """Instantiate a MachineDescription from a machine-file dict."""
    if spec.get("schema") != MACHINE_SCHEMA:
        raise MachineError(f"unsupported machine schema: {spec.get('schema')!r}")
    meshes = {comp: _build_component(spec["components"][comp], detail, comp)
              for comp in COMPONENT_NAMES}
    mounts = {m: tr.translate(*spec["mounts"][m]["translate_mm"])
              for m in ("collimator", "couch")}
    attachments = {}
    for a in spec.get("attachments", []):
        attachments[a["id"]] = Attachment(
            attachment_id=a["id"], display_name=a.get("name", a["id"]),
            mesh=_build_component(a["shapes"], detail, a["id"]),
            mount=a["mount"], offset=tr.translate(*a.get("offset_mm", (0, 0, 0))))
    limits = {k: tuple(v) for k, v in spec["limits"].items()}
    obb, dev = fit_obb(meshes["couch_top"])
    return MachineDescription(
        name=spec["name"], sad_mm=float(spec["sad_mm"]), meshes=meshes,
        limits=limits, mounts=mounts, attachments=attachments,
        couch_obb=obb, obb_fit_deviation_mm=dev)


def load_machine_file(path, detail: float = 1.0) -> MachineDescription:
    with open(path) as f:
        return build_machine(json.load(f), detail=detail)


def save_machine_file(spec: dict, path) -> None:
    Path(path).write_text(json.dumps(spec, indent=2))


# ---------------------------------------------------------------------------
# Built-in machines and phantom
# ---------------------------------------------------------------------------

_SHARED_ATTACHMENTS = [
    {
        "id": "headframe", "name": "Stereotactic head frame", "mount": "couch",
        "offset_mm": [0.0, 0.0, 0.0],
        "shapes": [
            {"kind": "box", "size": [60, 200, 200], "center": [-120, 0, 100],
             "segments": [4, 8, 8]},
            {"kind": "box", "size": [60, 200, 200], "center": [120, 0, 100],
             "segments": [4, 8, 8]},
            {"kind": "box", "size": [300, 200, 60], "center": [0, 0, 230],
             "segments": [12, 8, 4]},
        ],
    },
    {
        "id": "breastboard", "name": "Breast board", "mount": "couch",
        "offset_mm": [0.0, -1050.0, 0.0],
        "shapes": [
            {"kind": "box", "size": [420, 500, 140], "center": [0, 0, 70],
             "segments": [12, 14, 6]},
        ],
    },
    {
        "id": "econe", "name": "Electron cone", "mount": "collimator",
        "offset_mm": [0.0, 0.0, 0.0],
        "shapes": [
            {"kind": "cylinder", "radius": 90, "z0": -250, "z1": 0,
             "segments": 64, "stacks": 6},
        ],
    },
    {
        "id": "stereocone", "name": "Stereotactic cone", "mount": "collimator",
        "offset_mm": [0.0, 0.0, 0.0],
        "shapes": [
            {"kind": "cylinder", "radius": 35, "z0": -300, "z1": 0,
             "segments": 48, "stacks": 6},
        ],
    },
]


def _machine_spec(name: str, *, sad: float, drum_inner: float, drum_outer: float,
                  drum_y: tuple[float, float], arm_inner: float, arm_outer: float,
                  arm_half_deg: float, arm_y: tuple[float, float],
                  head_radius: float, head_z: tuple[float, float],
                  couch_size: tuple[float, float, float], couch_center_y: float,
                  limits: dict, drum_segments: int, head_segments: int) -> dict:
    cw, cl, cth = couch_size
    return {
        "schema": MACHINE_SCHEMA,
        "name": name,
        "sad_mm": sad,
        "limits": limits,
        "mounts": {
            "collimator": {"translate_mm": [0.0, 0.0, head_z[0]]},
            "couch": {"translate_mm": [0.0, 450.0, 0.0]},
        },
        "components": {
            "gantry": [
                {"kind": "ring", "inner": drum_inner, "outer": drum_outer,
                 "y0": drum_y[0], "y1": drum_y[1], "segments": drum_segments},
                {"kind": "ring", "inner": arm_inner, "outer": arm_outer,
                 "y0": arm_y[0], "y1": arm_y[1],
                 "start_deg": -arm_half_deg, "end_deg": arm_half_deg,
                 "segments": max(12, drum_segments // 6)},
            ],
            "collimator": [
                {"kind": "cylinder", "radius": head_radius,
                 "z0": head_z[0], "z1": head_z[1],
                 "segments": head_segments, "stacks": 24},
                {"kind": "box",
                 "size": [2.2 * head_radius, 2.2 * head_radius, 180],
                 "center": [0, 0, head_z[1] + 90], "segments": [10, 10, 4]},
            ],
            "couch_top": [
                {"kind": "box", "size": [cw, cl, cth],
                 "center": [0.0, couch_center_y, -cth / 2.0],
                 "segments": [24, 100, 6]},
            ],
            "couch_base": [
                {"kind": "box", "size": [cw * 0.9, 900, 500],
                 "center": [0.0, couch_center_y - 250.0, -330.0],
                 "segments": [10, 16, 8]},
            ],
        },
        "attachments": _SHARED_ATTACHMENTS,
    }


def builtin_machine_specs() -> dict[str, dict]:
    """Dimension tables for the two built-in machines."""
    atlas = _machine_spec(
        "atlas-100", sad=1000.0,
        drum_inner=1050, drum_outer=1500, drum_y=(400, 950),
        arm_inner=480, arm_outer=1150, arm_half_deg=22, arm_y=(-250, 500),
        head_radius=250, head_z=(400, 700),
        couch_size=(500, 2400, 80), couch_center_y=-550.0,
        limits={
            "gantry_deg": [-185, 185], "collimator_deg": [-175, 175],
            "couch_lateral_mm": [-280, 280], "couch_longitudinal_mm": [-400, 400],
            "couch_vertical_mm": [-350, 500], "couch_rotation_deg": [-95, 95],
        },
        drum_segments=3400, head_segments=700)
    polaris = _machine_spec(
        "polaris-80", sad=1000.0,
        drum_inner=900, drum_outer=1300, drum_y=(350, 850),
        arm_inner=430, arm_outer=1000, arm_half_deg=20, arm_y=(-220, 430),
        head_radius=200, head_z=(350, 620),
        couch_size=(450, 2200, 70), couch_center_y=-500.0,
        limits={
            "gantry_deg": [-180, 180], "collimator_deg": [-165, 165],
            "couch_lateral_mm": [-230, 230], "couch_longitudinal_mm": [-350, 350],
            "couch_vertical_mm": [-300, 450], "couch_rotation_deg": [-90, 90],
        },
        drum_segments=3000, head_segments=640)
    return {"atlas-100": atlas, "polaris-80": polaris}


def builtin_machines(detail: float = 1.0) -> list[MachineDescription]:
    return [build_machine(spec, detail=detail)
            for spec in builtin_machine_specs().values()]


DEFAULT_PHANTOM_SEMI_AXES = (170.0, 750.0, 110.0)


def builtin_phantom(semi_axes=DEFAULT_PHANTOM_SEMI_AXES,
                    detail: float = 1.0) -> TriMesh:
    """Elliptical phantom (patient stand-in), centered at its own origin."""
    return ellipsoid(semi_axes, segments=_scaled(72, detail, 8),
                     name="ellipse-phantom")


def default_patient_offset(semi_axes=DEFAULT_PHANTOM_SEMI_AXES) -> np.ndarray:
    """Rests the phantom on the couch surface, centered over the couch axis."""
    return tr.translate(0.0, -350.0, float(semi_axes[2]))
