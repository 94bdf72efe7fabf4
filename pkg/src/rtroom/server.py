"""Session-scoped HTTP service exposing the room simulator.

JSON in/out, millimeters and degrees everywhere, the session revision echoed
in every response.  Sessions are isolated from each other; within a session
mutations are serialized by a per-session lock (last writer wins, the response
always carries the authoritative revision).  Collision math runs server-side
against immutable machine data, so every state-changing response can include
fresh collision feedback for the UI.
"""

from __future__ import annotations

import io
import tempfile
import threading
import uuid
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Request, Response, UploadFile
from fastapi.staticfiles import StaticFiles

from . import transforms as tr
from .collision import beam_couch_intersection, scene_collision
from .ct import CtError, DEFAULT_SKIN_ISO, load_slice_stack, marching_cubes, largest_component
from .decimate import decimate
from .machine import (COMPONENT_NAMES, MachineError, MachineState, Scene,
                      builtin_phantom, clamp_state, DEFAULT_PHANTOM_SEMI_AXES)
from .measure import MeasurementProbe, ProbeEnd, measure
from .meshio import read_stl_bytes, read_obj, write_stl_bytes
from .mesh import TriMesh
from .scenario import (MachineCatalog, Scenario, load_scenario, run_scenario,
                       save_scenario)
from .transforms import GeometryError

PHANTOM_ID = "ellipse-phantom"
DEFAULT_PATIENT_BUDGET = 20000


@dataclass
class SessionData:
    session_id: str
    machine: str
    scene: Scene
    revision: int = 0
    probes: dict[str, MeasurementProbe] = field(default_factory=dict)
    patient_id: str | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)


def _collision_payload(scene: Scene) -> dict:
    placed = scene.place()
    reports = scene_collision(placed)
    beam = beam_couch_intersection(placed)
    highlight = sorted({cid for r in reports for cid in r.highlight})
    return {
        "collisions": [r.to_dict() for r in reports],
        "beam": [r.to_dict() for r in beam],
        "any_collision": any(r.colliding for r in reports),
        "beam_intersects_couch": any(r.colliding for r in beam),
        "highlight": highlight,
    }


def _state_payload(s: SessionData) -> dict:
    return {
        "session": s.session_id,
        "machine": s.machine,
        "revision": s.revision,
        "state": s.scene.state.to_dict(),
        "attachments": list(s.scene.attachment_ids),
        "patient": s.patient_id,
        "probes": [p.to_dict() for p in s.probes.values()],
    }


def create_app(catalog: MachineCatalog | None = None, detail: float = 1.0,
               scenario_dir: str | Path | None = None,
               static_dir: str | Path | None = None,
               max_upload_mb: int = 64) -> FastAPI:
    catalog = catalog or MachineCatalog()
    scenario_path = Path(scenario_dir) if scenario_dir else Path(tempfile.mkdtemp(prefix="rtroom-scenarios-"))
    scenario_path.mkdir(parents=True, exist_ok=True)
    app = FastAPI(title="rtroom", version="0.1.0")
    sessions: dict[str, SessionData] = {}
    app.state.sessions = sessions
    app.state.catalog = catalog
    app.state.detail = detail

    def get_session(session_id: str) -> SessionData:
        s = sessions.get(session_id)
        if s is None:
            raise HTTPException(404, f"unknown session: {session_id}")
        return s

    @app.exception_handler(MachineError)
    async def _machine_error(_req: Request, exc: MachineError):
        raise HTTPException(422, str(exc))

    @app.post("/sessions")
    def create_session(body: dict):
        name = body.get("machine")
        if name not in catalog.names():
            raise HTTPException(404, f"unknown machine: {name}")
        desc = catalog.machine(name, detail=detail)
        s = SessionData(session_id=uuid.uuid4().hex[:12], machine=name,
                        scene=Scene(desc))
        sessions[s.session_id] = s
        return _state_payload(s)

    @app.get("/sessions/{session_id}/state")
    def get_state(session_id: str):
        s = get_session(session_id)
        with s.lock:
            return _state_payload(s)

    @app.put("/sessions/{session_id}/state")
    def put_state(session_id: str, body: dict):
        s = get_session(session_id)
        with s.lock:
            merged = s.scene.state.to_dict()
            try:
                merged.update({k: float(v) for k, v in body.items()})
                new_state = MachineState.from_dict(merged)
            except (TypeError, ValueError) as exc:
                raise HTTPException(422, f"malformed state: {exc}")
            s.scene = s.scene.with_state(new_state)  # clamped to limits
            s.revision += 1
            return {**_state_payload(s), **_collision_payload(s.scene)}

    @app.post("/sessions/{session_id}/attachments")
    def add_attachment(session_id: str, body: dict):
        s = get_session(session_id)
        aid = body.get("id")
        with s.lock:
            if aid in s.scene.attachment_ids:
                raise HTTPException(409, f"attachment already installed: {aid}")
            if aid not in s.scene.machine.attachments:
                raise HTTPException(404, f"unknown attachment: {aid}")
            s.scene = s.scene.attach(aid)
            s.revision += 1
            return {**_state_payload(s), **_collision_payload(s.scene)}

    @app.delete("/sessions/{session_id}/attachments/{aid}")
    def remove_attachment(session_id: str, aid: str):
        s = get_session(session_id)
        with s.lock:
            if aid not in s.scene.attachment_ids:
                raise HTTPException(404, f"attachment not installed: {aid}")
            s.scene = s.scene.detach(aid)
            s.revision += 1
            return {**_state_payload(s), **_collision_payload(s.scene)}

    def _reconstruct_stack(blob: bytes, iso: float, budget: int) -> TriMesh:
        with tempfile.TemporaryDirectory(prefix="rtroom-stack-") as tmp:
            with zipfile.ZipFile(io.BytesIO(blob)) as zf:
                for member in zf.namelist():
                    target = Path(tmp) / member
                    if not target.resolve().is_relative_to(Path(tmp).resolve()):
                        raise HTTPException(422, "unsafe path in slice-stack archive")
                zf.extractall(tmp)
            metas = list(Path(tmp).rglob("meta.json"))
            if not metas:
                raise HTTPException(422, "slice-stack archive has no meta.json")
            grid = load_slice_stack(metas[0].parent)
            surf = largest_component(marching_cubes(grid, iso))
            if surf.mesh.n_triangles == 0:
                raise HTTPException(422, f"empty isosurface: {surf.empty_reason}")
            if surf.mesh.n_triangles > budget:
                surf = decimate(surf, budget)
            return surf.mesh

    @app.post("/sessions/{session_id}/patient")
    async def upload_patient(session_id: str, file: UploadFile,
                             iso: float = DEFAULT_SKIN_ISO,
                             budget: int = DEFAULT_PATIENT_BUDGET):
        s = get_session(session_id)
        blob = await file.read()
        if len(blob) > max_upload_mb * 1024 * 1024:
            raise HTTPException(422, "upload exceeds size limit")
        name = (file.filename or "").lower()
        try:
            if name.endswith(".stl"):
                mesh = read_stl_bytes(blob, name="patient")
            elif name.endswith(".obj"):
                with tempfile.NamedTemporaryFile(suffix=".obj", mode="wb") as f:
                    f.write(blob)
                    f.flush()
                    mesh = read_obj(f.name)
            elif name.endswith(".zip"):
                mesh = _reconstruct_stack(blob, iso, budget)
            else:
                raise HTTPException(422, f"unsupported patient upload: {file.filename}")
        except (CtError, GeometryError) as exc:
            raise HTTPException(422, str(exc))
        # rest the mesh on the couch surface, centered over the couch axis
        bb = mesh.aabb()
        center = (bb.min + bb.max) / 2.0
        offset = tr.translate(-center[0], -350.0 - center[1], -float(bb.min[2]))
        with s.lock:
            mesh_id = f"patient-{uuid.uuid4().hex[:8]}"
            s.scene = Scene(s.scene.machine, s.scene.state,
                            s.scene.attachment_ids, mesh, offset)
            s.patient_id = mesh_id
            s.revision += 1
            return {**_state_payload(s), "mesh_id": mesh_id,
                    "triangles": mesh.n_triangles}

    @app.post("/sessions/{session_id}/phantom")
    def set_phantom(session_id: str, body: dict | None = None):
        s = get_session(session_id)
        body = body or {}
        semi = tuple(body.get("semi_axes_mm", DEFAULT_PHANTOM_SEMI_AXES))
        mesh = builtin_phantom(semi, detail=detail)
        offset = tr.translate(0.0, -350.0, float(semi[2]))
        with s.lock:
            s.scene = Scene(s.scene.machine, s.scene.state,
                            s.scene.attachment_ids, mesh, offset)
            s.patient_id = PHANTOM_ID
            s.revision += 1
            return {**_state_payload(s), "mesh_id": PHANTOM_ID,
                    "triangles": mesh.n_triangles}

    @app.delete("/sessions/{session_id}/patient")
    def remove_patient(session_id: str):
        s = get_session(session_id)
        with s.lock:
            s.scene = Scene(s.scene.machine, s.scene.state,
                            s.scene.attachment_ids, None, None)
            s.patient_id = None
            s.revision += 1
            return _state_payload(s)

    @app.get("/sessions/{session_id}/collision")
    def get_collision(session_id: str):
        s = get_session(session_id)
        with s.lock:
            return {"session": s.session_id, "revision": s.revision,
                    **_collision_payload(s.scene)}

    @app.post("/sessions/{session_id}/probes")
    def add_probe(session_id: str, body: dict):
        s = get_session(session_id)
        try:
            probe = MeasurementProbe.from_dict(body)
        except (KeyError, GeometryError) as exc:
            raise HTTPException(422, f"malformed probe: {exc}")
        with s.lock:
            s.probes[probe.name] = probe
            s.revision += 1
            return _state_payload(s)

    @app.delete("/sessions/{session_id}/probes/{name}")
    def remove_probe(session_id: str, name: str):
        s = get_session(session_id)
        with s.lock:
            if name not in s.probes:
                raise HTTPException(404, f"unknown probe: {name}")
            del s.probes[name]
            s.revision += 1
            return _state_payload(s)

    @app.get("/sessions/{session_id}/measure")
    def get_measure(session_id: str, ax: float | None = None, ay: float = 0.0,
                    az: float = 0.0, bx: float = 0.0, by: float = 0.0,
                    bz: float = 0.0, probe: str | None = None):
        s = get_session(session_id)
        with s.lock:
            placed = s.scene.place(include_beam=False)
            readings = {}
            try:
                if ax is not None:
                    ad_hoc = MeasurementProbe(
                        "ad-hoc", ProbeEnd(np.array([ax, ay, az])),
                        ProbeEnd(np.array([bx, by, bz])))
                    readings["ad-hoc"] = measure(ad_hoc, placed)
                elif probe is not None:
                    if probe not in s.probes:
                        raise HTTPException(404, f"unknown probe: {probe}")
                    readings[probe] = measure(s.probes[probe], placed)
                else:
                    readings = {n: measure(p, placed) for n, p in s.probes.items()}
            except GeometryError as exc:
                raise HTTPException(422, str(exc))
            return {"session": s.session_id, "revision": s.revision,
                    "readings_mm": readings}

    @app.get("/machines")
    def list_machines():
        return {
            "machines": catalog.names(),
            "phantoms": [{"id": PHANTOM_ID,
                          "semi_axes_mm": list(DEFAULT_PHANTOM_SEMI_AXES)}],
        }

    @app.get("/machines/{name}")
    def machine_info(name: str):
        if name not in catalog.names():
            raise HTTPException(404, f"unknown machine: {name}")
        desc = catalog.machine(name, detail=detail)
        return {
            "name": desc.name,
            "sad_mm": desc.sad_mm,
            "limits": {k: list(v) for k, v in desc.limits.items()},
            "components": {k: m.n_triangles for k, m in desc.meshes.items()},
            "mounts": {k: [float(x) for x in t[:3, 3]]
                       for k, t in desc.mounts.items()},
            "attachments": [{"id": a.attachment_id, "name": a.display_name,
                             "mount": a.mount,
                             "offset_mm": [float(x) for x in a.offset[:3, 3]]}
                            for a in desc.attachments.values()],
        }

    @app.get("/machines/{name}/meshes/{component}")
    def machine_mesh(name: str, component: str):
        if name not in catalog.names():
            raise HTTPException(404, f"unknown machine: {name}")
        desc = catalog.machine(name, detail=detail)
        if component in desc.meshes:
            mesh = desc.meshes[component]
        elif component in desc.attachments:
            mesh = desc.attachments[component].mesh
        elif component == PHANTOM_ID:
            mesh = builtin_phantom(detail=detail)
        else:
            raise HTTPException(404, f"unknown component: {component}")
        return Response(content=write_stl_bytes(mesh),
                        media_type="model/stl",
                        headers={"X-Triangle-Count": str(mesh.n_triangles)})

    @app.post("/sessions/{session_id}/scenario")
    def save_session_scenario(session_id: str, body: dict):
        s = get_session(session_id)
        name = body.get("name")
        if not name or "/" in name or name.startswith("."):
            raise HTTPException(422, "scenario name must be a plain filename stem")
        with s.lock:
            patient = None
            if s.scene.patient is not None:
                patient = {"phantom_semi_axes_mm": list(DEFAULT_PHANTOM_SEMI_AXES),
                           "couch_offset_mm": [0.0, -350.0,
                                               float(DEFAULT_PHANTOM_SEMI_AXES[2])]}
            sc = Scenario(name=name, machine=s.machine, state=s.scene.state,
                          attachment_ids=s.scene.attachment_ids,
                          patient=patient, probes=tuple(s.probes.values()),
                          mesh_detail=detail)
            save_scenario(sc, scenario_path / f"{name}.json")
            return {"saved": f"{name}.json", "scenario": sc.to_dict()}

    @app.post("/scenarios/{name}/run")
    def run_saved_scenario(name: str):
        path = scenario_path / f"{name}.json"
        if not path.is_file():
            raise HTTPException(404, f"unknown scenario: {name}")
        result = run_scenario(load_scenario(path), catalog, base_dir=scenario_path)
        return result.to_dict()

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
