"""Machine model, forward kinematics, and the built-in catalog.

Kinematic oracles are closed-form: rotation matrices for single-axis moves,
exact identity at home, and the source point at SAD for arbitrary states.
"""

import json

import numpy as np
import pytest

from rtroom import transforms as tr
from rtroom.machine import (AXIS_NAMES, COMPONENT_NAMES, Attachment,
                            MachineError, MachineState, Scene, beam_frustum,
                            build_machine, builtin_machine_specs,
                            builtin_machines, builtin_phantom, clamp_state,
                            collimator_transform, couch_transform,
                            default_patient_offset, forward_kinematics,
                            gantry_transform, load_machine_file,
                            save_machine_file, source_point, state_within_limits)
from rtroom.mesh import box

from conftest import TEST_DETAIL


def random_state(rng, desc):
    values = {a: rng.uniform(*desc.limits[a]) for a in AXIS_NAMES}
    values["field_x_mm"] = rng.uniform(10, 400)
    values["field_y_mm"] = rng.uniform(10, 400)
    return MachineState(**values)


class TestState:
    def test_roundtrip(self):
        s = MachineState(gantry_deg=42.0, couch_vertical_mm=-10.0)
        assert MachineState.from_dict(s.to_dict()) == s

    def test_rejects_unknown_fields(self):
        with pytest.raises(MachineError):
            MachineState.from_dict({"gantry_deg": 0.0, "warp_factor": 9.0})

    def test_clamp_idempotent_and_within(self, atlas, rng):
        wild = MachineState(gantry_deg=720, couch_vertical_mm=-9999,
                            couch_lateral_mm=1e6, field_x_mm=1e9)
        c = clamp_state(atlas, wild)
        assert clamp_state(atlas, c) == c
        assert state_within_limits(atlas, c)
        assert not state_within_limits(atlas, wild)
        lo, hi = atlas.limits["gantry_deg"]
        assert lo <= c.gantry_deg <= hi


class TestKinematics:
    def test_home_is_identity(self):
        home = MachineState()
        assert np.array_equal(gantry_transform(home), np.eye(4))
        assert np.array_equal(collimator_transform(home), np.eye(4))
        assert np.array_equal(couch_transform(home), np.eye(4))

    def test_single_axis_matches_rotation(self, rng):
        for _ in range(20):
            a = rng.uniform(-180, 180)
            np.testing.assert_array_equal(
                gantry_transform(MachineState(gantry_deg=a)), tr.rot_y(a))
            np.testing.assert_array_equal(
                couch_transform(MachineState(couch_rotation_deg=a)), tr.rot_z(a))

    def test_gantry_roundtrip(self, rng):
        for _ in range(50):
            a = rng.uniform(-185, 185)
            fwd = gantry_transform(MachineState(gantry_deg=a))
            back = gantry_transform(MachineState(gantry_deg=-a))
            np.testing.assert_allclose(tr.compose(fwd, back), np.eye(4), atol=1e-9)

    def test_collimator_spins_about_beam_axis(self):
        # with the gantry at 90 the beam axis is +X; collimator rotation must
        # leave the beam axis fixed
        s = MachineState(gantry_deg=90.0, collimator_deg=37.0)
        axis_pt = tr.apply_point(collimator_transform(s), (0.0, 0.0, 123.0))
        np.testing.assert_allclose(axis_pt, [123.0, 0.0, 0.0], atol=1e-9)

    def test_couch_order_rotation_then_translation(self):
        s = MachineState(couch_rotation_deg=90.0, couch_longitudinal_mm=100.0)
        # the translation rides inside the rotated frame
        p = tr.apply_point(couch_transform(s), (0.0, 0.0, 0.0))
        np.testing.assert_allclose(p, [-100.0, 0.0, 0.0], atol=1e-9)

    def test_source_at_sad_for_random_states(self, atlas, rng):
        for _ in range(100):
            s = random_state(rng, atlas)
            src = source_point(atlas, s)
            assert np.linalg.norm(src) == pytest.approx(atlas.sad_mm, abs=1e-9)

    def test_source_home_straight_up(self, atlas):
        np.testing.assert_allclose(source_point(atlas, MachineState()),
                                   [0, 0, atlas.sad_mm], atol=1e-12)


class TestBeam:
    def test_apex_and_iso_cross_section(self, atlas):
        s = MachineState(field_x_mm=100.0, field_y_mm=60.0)
        beam = beam_frustum(atlas, s, past_iso_mm=500.0)
        assert beam.is_watertight()
        apex = beam.vertices[np.argmax(beam.vertices[:, 2])]
        np.testing.assert_allclose(apex, [0, 0, atlas.sad_mm], atol=1e-12)
        # cross-section at z=0 by similar triangles: exactly the field size
        base = beam.vertices[beam.vertices[:, 2] < 0]
        frac = atlas.sad_mm / (atlas.sad_mm + 500.0)
        np.testing.assert_allclose((base.max(0) - base.min(0))[:2] * frac,
                                   [100.0, 60.0], atol=1e-9)

    def test_rotates_with_collimator(self, atlas):
        s = MachineState(gantry_deg=90.0, field_x_mm=80, field_y_mm=80)
        beam = beam_frustum(atlas, s)
        apex = beam.vertices[np.argmax(beam.vertices[:, 0])]
        np.testing.assert_allclose(apex, [atlas.sad_mm, 0, 0], atol=1e-9)

    def test_rejects_bad_field(self, atlas):
        with pytest.raises(MachineError):
            beam_frustum(atlas, MachineState(field_x_mm=0.0))


class TestForwardKinematics:
    def test_components_present(self, atlas_scene):
        placed = atlas_scene.place()
        ids = [c.component_id for c in placed]
        for comp in COMPONENT_NAMES:
            assert comp in ids
        assert "patient" in ids and "beam" in ids

    def test_home_transforms_identity(self, atlas):
        placed = forward_kinematics(atlas, MachineState(), include_beam=False)
        for c in placed:
            assert np.array_equal(c.transform, np.eye(4))

    def test_couch_base_ignores_vertical(self, atlas):
        s = MachineState(couch_vertical_mm=200.0, couch_lateral_mm=50.0)
        placed = {c.component_id: c for c in forward_kinematics(atlas, s)}
        assert placed["couch_top"].transform[2, 3] == 200.0
        assert placed["couch_base"].transform[2, 3] == 0.0
        assert placed["couch_base"].transform[0, 3] == 50.0

    def test_attachment_inherits_parent_exactly(self, atlas, rng):
        s = random_state(rng, atlas)
        placed = {c.component_id: c
                  for c in forward_kinematics(
                      atlas, s, (atlas.attachments["headframe"],
                                 atlas.attachments["econe"]))}
        couch_t = couch_transform(s)
        want = tr.compose(couch_t, tr.compose(atlas.mounts["couch"],
                                              atlas.attachments["headframe"].offset))
        np.testing.assert_array_equal(placed["headframe"].transform, want)
        want = tr.compose(collimator_transform(s),
                          tr.compose(atlas.mounts["collimator"],
                                     atlas.attachments["econe"].offset))
        np.testing.assert_array_equal(placed["econe"].transform, want)

    def test_patient_rides_couch(self, atlas, rng):
        phantom = builtin_phantom(detail=TEST_DETAIL)
        off = default_patient_offset()
        s = random_state(rng, atlas)
        placed = {c.component_id: c
                  for c in forward_kinematics(atlas, s, patient=phantom,
                                              patient_offset=off)}
        np.testing.assert_array_equal(placed["patient"].transform,
                                      tr.compose(couch_transform(s), off))

    def test_strict_mode(self, atlas):
        bad = MachineState(gantry_deg=999.0)
        with pytest.raises(MachineError):
            forward_kinematics(atlas, bad, strict=True)
        forward_kinematics(atlas, bad)  # non-strict accepts

    def test_duplicate_attachments_rejected(self, atlas):
        a = atlas.attachments["headframe"]
        with pytest.raises(MachineError):
            forward_kinematics(atlas, MachineState(), (a, a))


class TestScene:
    def test_attach_detach_roundtrip(self, atlas_scene):
        s = atlas_scene.attach("headframe")
        assert s.attachment_ids == ("headframe",)
        assert s.detach("headframe").attachment_ids == ()
        with pytest.raises(MachineError):
            s.attach("headframe")          # duplicate
        with pytest.raises(MachineError):
            s.attach("hoverboard")         # unknown
        with pytest.raises(MachineError):
            atlas_scene.detach("headframe")  # not installed

    def test_with_state_clamps(self, atlas_scene):
        s = atlas_scene.with_state(MachineState(gantry_deg=400.0))
        assert s.state.gantry_deg == atlas_scene.machine.limits["gantry_deg"][1]
        s2 = atlas_scene.with_state(MachineState(gantry_deg=400.0), clamp=False)
        assert s2.state.gantry_deg == 400.0


class TestCatalogAndFiles:
    def test_builtin_machines(self):
        machines = builtin_machines(detail=TEST_DETAIL)
        assert len(machines) >= 2
        names = {m.name for m in machines}
        assert {"atlas-100", "polaris-80"} <= names
        for m in machines:
            for comp in COMPONENT_NAMES:
                mesh = m.meshes[comp]
                assert mesh.is_watertight()
                assert mesh.n_triangles > 0
            assert m.obb_fit_deviation_mm < 1.0  # couch top is box-like

    def test_full_detail_triangle_budget(self):
        spec = builtin_machine_specs()["atlas-100"]
        desc = build_machine(spec, detail=1.0)
        total = sum(desc.meshes[c].n_triangles for c in COMPONENT_NAMES)
        assert 80_000 <= total <= 130_000

    def test_detail_scales_triangles(self, atlas):
        spec = builtin_machine_specs()["atlas-100"]
        coarse = build_machine(spec, detail=0.05)
        assert coarse.meshes["gantry"].n_triangles < atlas.meshes["gantry"].n_triangles

    def test_machine_file_roundtrip(self, tmp_path):
        spec = builtin_machine_specs()["polaris-80"]
        path = tmp_path / "polaris.json"
        save_machine_file(spec, path)
        desc = load_machine_file(path, detail=0.1)
        assert desc.name == "polaris-80"
        assert desc.sad_mm == 1000.0
        assert set(desc.attachments) == {"headframe", "breastboard", "econe",
                                         "stereocone"}

    def test_bad_schema_rejected(self, tmp_path):
        spec = dict(builtin_machine_specs()["atlas-100"])
        spec["schema"] = "rtroom-machine/99"
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(spec))
        with pytest.raises(MachineError):
            load_machine_file(path)

    def test_description_validation(self, atlas):
        with pytest.raises(MachineError):
            Attachment("x", "X", box((1, 1, 1)), mount="ceiling")
        spec = json.loads(json.dumps(builtin_machine_specs()["atlas-100"]))
        spec["limits"]["gantry_deg"] = [10, 10]
        with pytest.raises(MachineError):
            build_machine(spec, detail=0.05)

    def test_phantom(self):
        p = builtin_phantom(detail=TEST_DETAIL)
        assert p.is_watertight()
        bb = p.aabb()
        size = bb.max - bb.min
        # inscribed faceting: never larger than the exact ellipsoid, close to it
        assert np.all(size <= np.array([340.0, 1500.0, 220.0]) + 1e-9)
        np.testing.assert_allclose(size, [340.0, 1500.0, 220.0], rtol=0.05)
        off = default_patient_offset()
        # resting pose: bottom of phantom touches the couch plane z=0
        lowest = tr.apply_points(off, p.vertices)[:, 2].min()
        assert lowest == pytest.approx(0.0, abs=1e-9)
