"""HTTP service behavior via the in-process test client."""

import io
import zipfile

import numpy as np
import pytest
from fastapi.testclient import TestClient

from rtroom.ct import SliceStackMeta, write_slice_stack
from rtroom.meshio import read_stl_bytes, write_stl_bytes
from rtroom.mesh import box
from rtroom.scenario import MachineCatalog
from rtroom.server import create_app

from conftest import TEST_DETAIL
from test_ct import sphere_scalars


@pytest.fixture(scope="module")
def client(tmp_path_factory):
    app = create_app(MachineCatalog(), detail=TEST_DETAIL,
                     scenario_dir=tmp_path_factory.mktemp("scenarios"))
    with TestClient(app) as c:
        yield c


@pytest.fixture()
def session(client):
    r = client.post("/sessions", json={"machine": "atlas-100"})
    assert r.status_code == 200
    return r.json()["session"]


class TestSessions:
    def test_create_and_get(self, client, session):
        r = client.get(f"/sessions/{session}/state")
        body = r.json()
        assert body["machine"] == "atlas-100"
        assert body["revision"] == 0
        assert body["state"]["gantry_deg"] == 0.0

    def test_unknown_machine(self, client):
        assert client.post("/sessions", json={"machine": "nope"}).status_code == 404

    def test_unknown_session(self, client):
        assert client.get("/sessions/nope/state").status_code == 404

    def test_isolation(self, client):
        a = client.post("/sessions", json={"machine": "atlas-100"}).json()["session"]
        b = client.post("/sessions", json={"machine": "polaris-80"}).json()["session"]
        client.put(f"/sessions/{a}/state", json={"gantry_deg": 90.0})
        sb = client.get(f"/sessions/{b}/state").json()
        assert sb["state"]["gantry_deg"] == 0.0
        assert sb["machine"] == "polaris-80"


class TestState:
    def test_put_merges_and_bumps_revision(self, client, session):
        r1 = client.put(f"/sessions/{session}/state", json={"gantry_deg": 45.0})
        r2 = client.put(f"/sessions/{session}/state",
                        json={"couch_vertical_mm": -100.0})
        b2 = r2.json()
        assert b2["state"]["gantry_deg"] == 45.0          # merge keeps earlier axes
        assert b2["state"]["couch_vertical_mm"] == -100.0
        assert b2["revision"] == r1.json()["revision"] + 1
        assert "collisions" in b2 and "any_collision" in b2

    def test_put_clamps_to_limits(self, client, session):
        r = client.put(f"/sessions/{session}/state", json={"gantry_deg": 999.0})
        assert r.json()["state"]["gantry_deg"] == 185.0

    def test_put_rejects_garbage(self, client, session):
        assert client.put(f"/sessions/{session}/state",
                          json={"gantry_deg": "sideways"}).status_code == 422
        assert client.put(f"/sessions/{session}/state",
                          json={"warp": 1.0}).status_code == 422


class TestAttachments:
    def test_lifecycle(self, client, session):
        r = client.post(f"/sessions/{session}/attachments", json={"id": "headframe"})
        assert r.status_code == 200
        assert r.json()["attachments"] == ["headframe"]
        assert client.post(f"/sessions/{session}/attachments",
                           json={"id": "headframe"}).status_code == 409
        assert client.post(f"/sessions/{session}/attachments",
                           json={"id": "jetpack"}).status_code == 404
        r = client.delete(f"/sessions/{session}/attachments/headframe")
        assert r.json()["attachments"] == []
        assert client.delete(f"/sessions/{session}/attachments/headframe"
                             ).status_code == 404


class TestCollision:
    def test_collision_banner_flow(self, client, session):
        client.post(f"/sessions/{session}/phantom", json={})
        clear = client.put(f"/sessions/{session}/state", json={"gantry_deg": 0.0}).json()
        assert clear["any_collision"] is False and clear["highlight"] == []
        crash = client.put(f"/sessions/{session}/state",
                           json={"couch_vertical_mm": 450.0}).json()
        assert crash["any_collision"] is True
        assert "gantry" in crash["highlight"] or "collimator" in crash["highlight"]
        # dedicated endpoint agrees
        body = client.get(f"/sessions/{session}/collision").json()
        assert body["any_collision"] is True
        assert body["highlight"] == crash["highlight"]

    def test_beam_flag(self, client, session):
        client.post(f"/sessions/{session}/phantom", json={})
        body = client.get(f"/sessions/{session}/collision").json()
        assert body["beam_intersects_couch"] is True  # beam straight down at home


class TestPatient:
    def test_phantom(self, client, session):
        r = client.post(f"/sessions/{session}/phantom", json={})
        body = r.json()
        assert body["patient"] == "ellipse-phantom"
        assert body["triangles"] > 0

    def test_stl_upload_and_remove(self, client, session):
        blob = write_stl_bytes(box((100, 200, 50), segments=(2, 2, 2)))
        r = client.post(f"/sessions/{session}/patient",
                        files={"file": ("patient.stl", blob, "model/stl")})
        assert r.status_code == 200
        assert r.json()["patient"].startswith("patient-")
        r = client.delete(f"/sessions/{session}/patient")
        assert r.json()["patient"] is None

    def test_bad_upload(self, client, session):
        r = client.post(f"/sessions/{session}/patient",
                        files={"file": ("patient.stl", b"not an stl", "model/stl")})
        assert r.status_code == 422
        r = client.post(f"/sessions/{session}/patient",
                        files={"file": ("notes.txt", b"hello", "text/plain")})
        assert r.status_code == 422

    def test_slice_stack_upload(self, client, session, tmp_path):
        n, radius = 24, 8.0
        stored = np.round(sphere_scalars(n, radius) * 50).astype(np.int16)
        meta = SliceStackMeta(rows=n, cols=n, pixel_size_mm=2.0,
                              slice_spacing_mm=2.0, slices=n, slope=0.02)
        write_slice_stack(stored, meta, tmp_path / "stack")
        buf = io.BytesIO()
        with zipfile.ZipFile(buf, "w") as zf:
            for f in (tmp_path / "stack").iterdir():
                zf.write(f, f"stack/{f.name}")
        r = client.post(f"/sessions/{session}/patient?iso=0&budget=500",
                        files={"file": ("ct.zip", buf.getvalue(), "application/zip")})
        assert r.status_code == 200
        assert 0 < r.json()["triangles"] <= 500


class TestProbes:
    def test_probe_crud_and_measure(self, client, session):
        r = client.post(f"/sessions/{session}/probes", json={
            "name": "iso-corner",
            "a": {"point": [0.0, 0.0, 0.0]},
            "b": {"point": [30.0, 40.0, 0.0]},
        })
        assert r.status_code == 200
        readings = client.get(f"/sessions/{session}/measure").json()["readings_mm"]
        assert readings["iso-corner"] == 50.0
        r = client.get(f"/sessions/{session}/measure", params={"probe": "iso-corner"})
        assert r.json()["readings_mm"] == {"iso-corner": 50.0}
        assert client.delete(f"/sessions/{session}/probes/iso-corner").status_code == 200
        assert client.delete(f"/sessions/{session}/probes/iso-corner").status_code == 404

    def test_ad_hoc_measure(self, client, session):
        r = client.get(f"/sessions/{session}/measure",
                       params={"ax": 0, "ay": 0, "az": 0, "bx": 30, "by": 40, "bz": 0})
        assert r.json()["readings_mm"]["ad-hoc"] == 50.0

    def test_anchored_probe_tracks_state(self, client, session):
        client.post(f"/sessions/{session}/probes", json={
            "name": "couch-iso",
            "a": {"point": [0.0, 0.0, 0.0], "anchor": "couch_top"},
            "b": {"point": [0.0, 0.0, 0.0]},
        })
        at_home = client.get(f"/sessions/{session}/measure").json()["readings_mm"]
        assert at_home["couch-iso"] == 0.0
        client.put(f"/sessions/{session}/state", json={"couch_vertical_mm": -120.0})
        moved = client.get(f"/sessions/{session}/measure").json()["readings_mm"]
        assert moved["couch-iso"] == pytest.approx(120.0, abs=1e-12)

    def test_malformed_probe(self, client, session):
        assert client.post(f"/sessions/{session}/probes",
                           json={"name": "x"}).status_code == 422


class TestMachines:
    def test_list(self, client):
        body = client.get("/machines").json()
        assert body["machines"] == ["atlas-100", "polaris-80"]
        assert body["phantoms"][0]["id"] == "ellipse-phantom"

    def test_detail(self, client):
        body = client.get("/machines/atlas-100").json()
        assert body["sad_mm"] == 1000.0
        assert set(body["components"]) == {"gantry", "collimator", "couch_top",
                                           "couch_base"}
        assert body["limits"]["gantry_deg"] == [-185, 185]
        assert body["mounts"]["couch"] == [0.0, 450.0, 0.0]
        ids = {a["id"] for a in body["attachments"]}
        assert "headframe" in ids and "econe" in ids
        assert client.get("/machines/nope").status_code == 404

    def test_mesh_download(self, client):
        r = client.get("/machines/atlas-100/meshes/gantry")
        assert r.status_code == 200
        assert r.headers["content-type"].startswith("model/stl")
        mesh = read_stl_bytes(r.content)
        assert mesh.n_triangles == int(r.headers["X-Triangle-Count"])
        assert client.get("/machines/atlas-100/meshes/flywheel").status_code == 404
        # attachment and phantom meshes are downloadable too
        assert client.get("/machines/atlas-100/meshes/econe").status_code == 200
        assert client.get("/machines/atlas-100/meshes/ellipse-phantom").status_code == 200


class TestScenarios:
    def test_save_and_run(self, client, session):
        client.post(f"/sessions/{session}/phantom", json={})
        client.put(f"/sessions/{session}/state", json={"gantry_deg": 30.0})
        r = client.post(f"/sessions/{session}/scenario", json={"name": "demo"})
        assert r.status_code == 200
        assert r.json()["saved"] == "demo.json"
        result = client.post("/scenarios/demo/run").json()
        assert result["name"] == "demo" and result["passed"] is True
        assert result["collisions"]
        assert client.post("/scenarios/missing/run").status_code == 404

    def test_bad_scenario_name(self, client, session):
        assert client.post(f"/sessions/{session}/scenario",
                           json={"name": "../evil"}).status_code == 422
