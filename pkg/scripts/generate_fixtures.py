#!/usr/bin/env python3
"""Regenerate the frozen scenario fixtures under tests/fixtures/scenarios/.

Each fixture is a scenario (machine, state, attachments, phantom, probes)
whose collision reports, beam reports, and probe readings were captured by
replaying the scenario and freezing the results into its ``expected`` block.
Run this only when the machine geometry or kinematics intentionally change;
the suite runner treats any deviation from the frozen values as a regression.
"""

from pathlib import Path

from rtroom.machine import MachineState
from rtroom.measure import MeasurementProbe, ProbeEnd
from rtroom.scenario import (MachineCatalog, Scenario, run_scenario,
                             save_scenario)

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "scenarios"
DETAIL = 0.15

PHANTOM = {"phantom_semi_axes_mm": [170, 750, 110],
           "couch_offset_mm": [0, -350, 110]}

ISO_PROBE = MeasurementProbe("iso-corner",
                             ProbeEnd([0.0, 0.0, 0.0]),
                             ProbeEnd([30.0, 40.0, 0.0]))
COUCH_PROBE = MeasurementProbe("couch-to-iso",
                               ProbeEnd([0.0, 0.0, 0.0], anchor="couch_top"),
                               ProbeEnd([0.0, 0.0, 0.0]))


def S(**kw):
    return MachineState(**kw)


# name -> (machine, state, attachments, patient)
CASES = {
    # clear / baseline poses
    "01-home-clear": ("atlas-100", S(), (), PHANTOM),
    "02-polaris-home-clear": ("polaris-80", S(), (), PHANTOM),
    "03-gantry-90-clear": ("atlas-100", S(gantry_deg=90.0), (), PHANTOM),
    "04-gantry-270-clear": ("atlas-100", S(gantry_deg=-90.0), (), PHANTOM),
    "05-couch-rotated-clear": ("atlas-100", S(couch_rotation_deg=45.0), (), PHANTOM),

    # near-collision poses (small positive clearances)
    "06-couch-high-near": ("atlas-100", S(couch_vertical_mm=150.0), (), PHANTOM),
    "07-gantry-90-lateral-near": (
        "atlas-100", S(gantry_deg=90.0, couch_lateral_mm=100.0), (), PHANTOM),
    "08-gantry-45-couch-up-near": (
        "atlas-100", S(gantry_deg=45.0, couch_vertical_mm=250.0), (), PHANTOM),
    "09-polaris-couch-high-near": (
        "polaris-80", S(couch_vertical_mm=100.0), (), PHANTOM),
    "10-rotated-couch-gantry-90-near": (
        "atlas-100", S(gantry_deg=90.0, couch_rotation_deg=10.0,
                       couch_lateral_mm=80.0), (), PHANTOM),

    # colliding poses
    "11-couch-patient-head-crash": (
        "atlas-100", S(couch_vertical_mm=240.0), (), PHANTOM),
    "12-couch-max-height-crash": (
        "atlas-100", S(couch_vertical_mm=450.0), (), PHANTOM),
    "13-gantry-90-lateral-crash": (
        "atlas-100", S(gantry_deg=90.0, couch_lateral_mm=280.0,
                       couch_vertical_mm=100.0), (), PHANTOM),
    "14-gantry-270-lateral-crash": (
        "atlas-100", S(gantry_deg=-90.0, couch_lateral_mm=-280.0,
                       couch_vertical_mm=100.0), (), PHANTOM),
    "15-polaris-couch-crash": (
        "polaris-80", S(couch_vertical_mm=450.0), (), PHANTOM),
    "16-rotated-crash": (
        "atlas-100", S(gantry_deg=90.0, couch_rotation_deg=45.0,
                       couch_vertical_mm=400.0, couch_lateral_mm=250.0), (), PHANTOM),

    # attachments in play
    "17-headframe-clear": ("atlas-100", S(), ("headframe",), PHANTOM),
    "18-headframe-gantry-90-near": (
        "atlas-100", S(gantry_deg=90.0, couch_lateral_mm=120.0),
        ("headframe",), PHANTOM),
    "19-headframe-crash": (
        "atlas-100", S(couch_vertical_mm=300.0), ("headframe",), PHANTOM),
    "20-econe-couch-up-crash": (
        "atlas-100", S(couch_vertical_mm=200.0), ("econe",), PHANTOM),
    "21-stereocone-near": (
        "atlas-100", S(couch_vertical_mm=100.0), ("stereocone",), PHANTOM),
    "22-breastboard-long-travel": (
        "atlas-100", S(couch_longitudinal_mm=400.0), ("breastboard",), PHANTOM),
    "23-two-attachments-crash": (
        "atlas-100", S(couch_vertical_mm=280.0), ("headframe", "econe"), PHANTOM),

    # no patient on the couch
    "24-no-patient-clear": ("atlas-100", S(gantry_deg=180.0), (), None),
}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    catalog = MachineCatalog()
    n_colliding = 0
    for name, (machine, state, attachments, patient) in sorted(CASES.items()):
        scenario = Scenario(name=name, machine=machine, state=state,
                            attachment_ids=attachments, patient=patient,
                            probes=(ISO_PROBE, COUCH_PROBE),
                            mesh_detail=DETAIL)
        result = run_scenario(scenario, catalog)
        frozen = result.frozen_expected()
        pinned = Scenario(name=scenario.name, machine=machine, state=state,
                          attachment_ids=attachments, patient=patient,
                          probes=scenario.probes, mesh_detail=DETAIL,
                          expected=frozen)
        save_scenario(pinned, OUT / f"{name}.json")
        colliding = any(r["colliding"] for r in frozen["pairs"])
        n_colliding += colliding
        nearest = min((r["distance_mm"] for r in frozen["pairs"]
                       if not r["colliding"]), default=0.0)
        print(f"{name:40s} {'COLLIDING' if colliding else f'{nearest:9.3f} mm'}")
    print(f"\n{len(CASES)} fixtures written to {OUT} ({n_colliding} colliding)")


if __name__ == "__main__":
    main()
