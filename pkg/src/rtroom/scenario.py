"""Scenario files: persisted room setups with optional expected results.

A scenario pins a machine, a machine state, attachments, an optional patient,
and measurement probes (schema ``rtroom-scenario/1``, JSON).  Replaying one is
deterministic: forward kinematics -> collision queries -> probe readings.
Scenarios carrying an ``expected`` block double as regression fixtures; the
suite runner reports any boolean deviation or distance deviation above
1e-6 mm.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import transforms as tr
from .collision import CollisionReport, beam_couch_intersection, scene_collision
from .machine import (MachineDescription, MachineState, Scene, build_machine,
                      builtin_machine_specs, builtin_phantom, MachineError)
from .measure import MeasurementProbe, measure
from .mesh import TriMesh, ellipsoid

SCENARIO_SCHEMA = "rtroom-scenario/1"
DISTANCE_TOL_MM = 1e-6


class MachineCatalog:
    """Machine descriptions built on demand, cached per (name, detail)."""

    def __init__(self, specs: dict[str, dict] | None = None):
        self.specs = dict(specs) if specs is not None else builtin_machine_specs()
        self._cache: dict[tuple[str, float], MachineDescription] = {}

    @classmethod
    def from_directory(cls, path) -> "MachineCatalog":
        specs = {}
        for f in sorted(Path(path).glob("*.json")):
            spec = json.loads(f.read_text())
            specs[spec["name"]] = spec
        if not specs:
            raise MachineError(f"no machine files in {path}")
        return cls(specs)

    def names(self) -> list[str]:
        return sorted(self.specs)

    def machine(self, name: str, detail: float = 1.0) -> MachineDescription:
        if name not in self.specs:
            raise MachineError(f"unknown machine: {name}")
        key = (name, detail)
        if key not in self._cache:
            self._cache[key] = build_machine(self.specs[name], detail=detail)
        return self._cache[key]


@dataclass(frozen=True)
class Scenario:
    name: str
    machine: str
    state: MachineState
    attachment_ids: tuple[str, ...] = ()
    patient: dict | None = None            # phantom spec or mesh reference
    probes: tuple[MeasurementProbe, ...] = ()
    mesh_detail: float = 0.15
    expected: dict | None = None

    def to_dict(self) -> dict:
        d = {
            "schema": SCENARIO_SCHEMA,
            "name": self.name,
            "machine": self.machine,
            "mesh_detail": self.mesh_detail,
            "state": self.state.to_dict(),
            "attachments": list(self.attachment_ids),
            "probes": [p.to_dict() for p in self.probes],
        }
        if self.patient is not None:
            d["patient"] = self.patient
        if self.expected is not None:
            d["expected"] = self.expected
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        if d.get("schema") != SCENARIO_SCHEMA:
            raise MachineError(f"unsupported scenario schema: {d.get('schema')!r}")
        return cls(
            name=d.get("name", ""),
            machine=d["machine"],
            state=MachineState.from_dict(d.get("state", {})),
            attachment_ids=tuple(d.get("attachments", ())),
            patient=d.get("patient"),
            probes=tuple(MeasurementProbe.from_dict(p) for p in d.get("probes", ())),
            mesh_detail=float(d.get("mesh_detail", 0.15)),
            expected=d.get("expected"))


def load_scenario(path) -> Scenario:
    return Scenario.from_dict(json.loads(Path(path).read_text()))


def save_scenario(s: Scenario, path) -> None:
    Path(path).write_text(json.dumps(s.to_dict(), indent=2))


def _patient_mesh(spec: dict, detail: float, base_dir: Path | None) -> tuple[TriMesh, np.ndarray]:
    offset = tr.translate(*spec.get("couch_offset_mm", (0.0, 0.0, 0.0)))
    if "phantom_semi_axes_mm" in spec:
        mesh = builtin_phantom(tuple(spec["phantom_semi_axes_mm"]), detail=detail)
        return mesh, offset
    if "mesh" in spec:
        from .meshio import read_mesh
        path = Path(spec["mesh"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return read_mesh(path), offset
    raise MachineError("patient spec needs phantom_semi_axes_mm or mesh")


def build_scene(s: Scenario, catalog: MachineCatalog,
                base_dir: Path | None = None) -> Scene:
    desc = catalog.machine(s.machine, detail=s.mesh_detail)
    patient = None
    offset = None
    if s.patient is not None:
        patient, offset = _patient_mesh(s.patient, s.mesh_detail, base_dir)
    scene = Scene(desc, patient=patient, patient_offset=offset)
    for a in s.attachment_ids:
        scene = scene.attach(a)
    return scene.with_state(s.state)


@dataclass(frozen=True)
class ScenarioResult:
    scenario: Scenario
    reports: tuple[CollisionReport, ...]
    beam_reports: tuple[CollisionReport, ...]
    probe_readings_mm: dict[str, float]
    deviations: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return not self.deviations

    def frozen_expected(self) -> dict:
        """Expected-results block for freezing this run as a fixture."""
        return {
            "pairs": [{"source": r.source, "target": r.target,
                       "colliding": r.colliding, "distance_mm": r.distance_mm}
                      for r in self.reports],
            "beam": [{"target": r.target, "colliding": r.colliding,
                      "distance_mm": r.distance_mm} for r in self.beam_reports],
            "probes_mm": dict(self.probe_readings_mm),
        }

    def to_dict(self) -> dict:
        return {
            "name": self.scenario.name,
            "passed": self.passed,
            "deviations": list(self.deviations),
            "collisions": [r.to_dict() for r in self.reports],
            "beam": [r.to_dict() for r in self.beam_reports],
            "probes_mm": dict(self.probe_readings_mm),
        }


def _compare(result_reports, expected_rows, kind: str, deviations: list[str]):
    by_pair = {(r.source, r.target): r for r in result_reports}
    for row in expected_rows:
        key = (row.get("source", "beam"), row["target"])
        r = by_pair.get(key)
        if r is None:
            deviations.append(f"{kind} {key}: missing from result")
            continue
        if bool(row["colliding"]) != r.colliding:
            deviations.append(
                f"{kind} {key}: colliding {r.colliding} != expected {row['colliding']}")
        if "distance_mm" in row and abs(r.distance_mm - row["distance_mm"]) > DISTANCE_TOL_MM:
            deviations.append(
                f"{kind} {key}: distance {r.distance_mm!r} != expected "
                f"{row['distance_mm']!r} (tol {DISTANCE_TOL_MM})")


def run_scenario(s: Scenario, catalog: MachineCatalog | None = None,
                 base_dir: Path | None = None) -> ScenarioResult:
    catalog = catalog or MachineCatalog()
    scene = build_scene(s, catalog, base_dir)
    placed = scene.place()
    reports = tuple(scene_collision(placed))
    beam = tuple(beam_couch_intersection(placed))
    readings = {p.name: measure(p, placed) for p in s.probes}
    deviations: list[str] = []
    if s.expected is not None:
        _compare(reports, s.expected.get("pairs", ()), "pair", deviations)
        _compare(beam, s.expected.get("beam", ()), "beam", deviations)
        for name, exp in s.expected.get("probes_mm", {}).items():
            got = readings.get(name)
            if got is None:
                deviations.append(f"probe {name}: missing from result")
            elif abs(got - exp) > DISTANCE_TOL_MM:
                deviations.append(f"probe {name}: {got!r} != expected {exp!r}")
    return ScenarioResult(s, reports, beam, readings, tuple(deviations))


def run_suite(directory, catalog: MachineCatalog | None = None) -> list[ScenarioResult]:
    """Replay every scenario file in a directory (sorted by filename)."""
    catalog = catalog or MachineCatalog()
    directory = Path(directory)
    files = sorted(directory.glob("*.json"))
    if not files:
        raise MachineError(f"no scenario files in {directory}")
    return [run_scenario(load_scenario(f), catalog, base_dir=directory)
            for f in files]
