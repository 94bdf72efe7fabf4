"""Scenario persistence, replay determinism, and the suite runner."""

import json

import numpy as np
import pytest

from rtroom.machine import MachineError, MachineState
from rtroom.measure import MeasurementProbe, ProbeEnd
from rtroom.scenario import (MachineCatalog, Scenario, build_scene,
                             load_scenario, run_scenario, run_suite,
                             save_scenario)

from conftest import TEST_DETAIL


def make_scenario(name="demo", state=None, expected=None, probes=(),
                  attachments=()):
    return Scenario(
        name=name, machine="atlas-100",
        state=state or MachineState(gantry_deg=45.0, couch_vertical_mm=-100.0),
        attachment_ids=tuple(attachments),
        patient={"phantom_semi_axes_mm": [170, 750, 110],
                 "couch_offset_mm": [0, -350, 110]},
        probes=tuple(probes), mesh_detail=TEST_DETAIL, expected=expected)


def test_dict_roundtrip(tmp_path):
    probe = MeasurementProbe("iso", ProbeEnd(np.zeros(3)),
                             ProbeEnd(np.array([30.0, 40.0, 0.0])))
    s = make_scenario(probes=[probe], attachments=["headframe"])
    path = tmp_path / "demo.json"
    save_scenario(s, path)
    back = load_scenario(path)
    assert back.to_dict() == s.to_dict()


def test_rejects_unknown_schema(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"schema": "rtroom-scenario/9", "machine": "atlas-100"}))
    with pytest.raises(MachineError):
        load_scenario(path)


def test_build_scene(catalog):
    s = make_scenario(attachments=["headframe", "econe"])
    scene = build_scene(s, catalog)
    assert scene.machine.name == "atlas-100"
    assert scene.attachment_ids == ("headframe", "econe")
    assert scene.patient is not None
    assert scene.state.gantry_deg == 45.0


def test_run_deterministic(catalog):
    s = make_scenario(probes=[MeasurementProbe(
        "iso", ProbeEnd(np.zeros(3)), ProbeEnd(np.array([30.0, 40.0, 0.0])))])
    r1 = run_scenario(s, catalog)
    r2 = run_scenario(s, catalog)
    assert r1.probe_readings_mm == {"iso": 50.0}
    for a, b in zip(r1.reports, r2.reports):
        assert (a.source, a.target, a.colliding, a.distance_mm) == \
               (b.source, b.target, b.colliding, b.distance_mm)
    assert r1.passed  # no expectations attached


def test_frozen_expected_replays_clean(catalog):
    s = make_scenario()
    frozen = run_scenario(s, catalog).frozen_expected()
    assert frozen["pairs"] and "probes_mm" in frozen
    pinned = Scenario(**{**s.__dict__, "expected": frozen})
    result = run_scenario(pinned, catalog)
    assert result.passed, result.deviations


def test_deviations_detected(catalog):
    s = make_scenario()
    frozen = run_scenario(s, catalog).frozen_expected()
    frozen["pairs"][0]["colliding"] = not frozen["pairs"][0]["colliding"]
    frozen["pairs"][1]["distance_mm"] += 0.5
    frozen["probes_mm"] = {"ghost": 1.0}
    bad = Scenario(**{**s.__dict__, "expected": frozen})
    result = run_scenario(bad, catalog)
    assert not result.passed
    text = "\n".join(result.deviations)
    assert "colliding" in text and "distance" in text and "ghost" in text


def test_result_to_dict(catalog):
    r = run_scenario(make_scenario(), catalog)
    d = r.to_dict()
    assert d["passed"] is True
    assert d["collisions"] and d["beam"]


def test_run_suite(tmp_path, catalog):
    for i, gantry in enumerate((0.0, 30.0)):
        save_scenario(make_scenario(name=f"s{i}",
                                    state=MachineState(gantry_deg=gantry)),
                      tmp_path / f"s{i}.json")
    results = run_suite(tmp_path, catalog)
    assert [r.scenario.name for r in results] == ["s0", "s1"]
    assert all(r.passed for r in results)
    with pytest.raises(MachineError):
        run_suite(tmp_path / "empty")


def test_catalog(tmp_path):
    c = MachineCatalog()
    assert c.names() == ["atlas-100", "polaris-80"]
    m1 = c.machine("atlas-100", detail=0.05)
    assert c.machine("atlas-100", detail=0.05) is m1  # cached
    with pytest.raises(MachineError):
        c.machine("gamma-knife")
    # directory-backed catalog
    spec = c.specs["polaris-80"]
    (tmp_path / "p.json").write_text(json.dumps(spec))
    c2 = MachineCatalog.from_directory(tmp_path)
    assert c2.names() == ["polaris-80"]
    with pytest.raises(MachineError):
        MachineCatalog.from_directory(tmp_path / "none")
