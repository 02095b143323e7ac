import numpy as np
import pytest
from fastapi.testclient import TestClient

from emitpair import __version__
from emitpair.coherence import Detector, EmitterPair, coherence_report
from emitpair.config import medium_from_params
from emitpair.scan import LAMBDA
from emitpair.schemas import MediumParams
from emitpair.service import create_app
from emitpair.solver import assemble


@pytest.fixture()
def client():
    return TestClient(create_app())


MEDIUM = {
    "seed": 5,
    "n_scatterers": 30,
    "region": {"x0": -1.0, "y0": -1.0, "width": 2.0, "height": 2.0},
    "alpha_bare": 2.0,
    "exclusion_radius": 0.02,
    "mode": "TE",
    "wavelength_nm": 698.0,
}
FREE_TM = {"n_scatterers": 0, "mode": "TM"}
EMITTERS = {"r1": [-0.25, 0.0], "r2": [0.25, 0.0]}
DETECTORS = {"a": {"r": [0.0, 1.3]}, "b": {"r": [0.0, -2.1]}}


class TestHealth:
    def test_health(self, client):
        r = client.get("/health")
        assert r.status_code == 200
        assert r.json() == {"status": "ok", "version": __version__}


class TestMediaStore:
    def test_create_fetch_diagnose(self, client):
        r = client.post("/media", json={"medium": MEDIUM})
        assert r.status_code == 200
        body = r.json()
        assert body["n_scatterers"] == 30
        assert body["mode"] == "TE"
        mid = body["medium_id"]

        got = client.get(f"/media/{mid}")
        assert got.status_code == 200
        med = medium_from_params(MediumParams(**MEDIUM))
        assert got.json()["positions_lambda"] == med.canonical_dict()["positions_lambda"]

        diag = client.post(f"/media/{mid}/diagnostics")
        assert diag.status_code == 200
        assert diag.json()["k_ell"] > 0.0

    def test_unknown_medium_id(self, client):
        assert client.get("/media/deadbeef").status_code == 404
        assert client.post("/media/deadbeef/diagnostics").status_code == 404

    def test_deterministic_digest(self, client):
        a = client.post("/media", json={"medium": MEDIUM}).json()["medium_id"]
        b = client.post("/media", json={"medium": MEDIUM}).json()["medium_id"]
        assert a == b


class TestG2Endpoint:
    def test_matches_direct_computation(self, client):
        r = client.post("/g2", json={
            "medium": FREE_TM, "emitters": EMITTERS, "detectors": DETECTORS})
        assert r.status_code == 200
        body = r.json()
        fact = assemble(medium_from_params(MediumParams(**FREE_TM)))
        em = EmitterPair(r1=(-0.25 * LAMBDA, 0.0), r2=(0.25 * LAMBDA, 0.0))
        rep = coherence_report(fact, em,
                               Detector(r=(0.0, 1.3 * LAMBDA)),
                               Detector(r=(0.0, -2.1 * LAMBDA)))
        assert body["g2"] == rep.g2
        assert body["big_g2"] == rep.big_g2
        assert body["classification"] == rep.classification.value

    def test_medium_id_flow(self, client):
        mid = client.post("/media", json={"medium": MEDIUM}).json()["medium_id"]
        r = client.post("/g2", json={
            "medium_id": mid, "emitters": EMITTERS, "detectors": DETECTORS})
        assert r.status_code == 200
        assert 0.0 <= r.json()["g2"] <= 1.0 + 1e-12

    def test_requires_some_medium(self, client):
        r = client.post("/g2", json={"emitters": EMITTERS, "detectors": DETECTORS})
        assert r.status_code == 400

    def test_unknown_body_key_rejected(self, client):
        r = client.post("/g2", json={
            "medium": FREE_TM, "emitters": EMITTERS, "detectors": DETECTORS,
            "surprise": 1})
        assert r.status_code == 422


class TestMapEndpoints:
    def test_g2_map_matches_scan(self, client):
        req = {
            "medium": FREE_TM,
            "emitters": {"r1": [0.0, 0.0], "r2": [0.0, 0.0]},
            "grid": {"origin": [-0.5, -0.5], "extent": [1.0, 1.0], "nx": 7, "ny": 5},
        }
        r = client.post("/maps/g2", json=req)
        assert r.status_code == 200
        body = r.json()
        assert body["nx"] == 7 and body["ny"] == 5
        vals = np.array(body["values"], dtype=float)
        assert vals.shape == (5, 7)
        from emitpair.scan import GridSpec, g2_map
        fact = assemble(medium_from_params(MediumParams(**FREE_TM)))
        grid = g2_map(fact, ((0.0, 0.0), (1.0, 0.0), 1.0 + 0.0j), ((1.0, 0.0), 1.0 + 0.0j),
                      GridSpec(origin=(-0.5, -0.5), extent=(1.0, 1.0), nx=7, ny=5))
        assert np.array_equal(vals, grid.values)

    def test_sentinel_pixels_are_null(self, client):
        req = {
            "medium": {"seed": 3, "n_scatterers": 1,
                       "region": {"x0": 0.0, "y0": 0.0, "width": 1.0, "height": 1.0},
                       "alpha_bare": 1.0, "exclusion_radius": 0.0, "mode": "TM"},
            "emitters": {"r1": [2.0, 2.0], "r2": [2.0, 2.0]},
            "grid": {"origin": [0.0, 0.0], "extent": [1.0, 1.0], "nx": 1, "ny": 1},
        }
        # the single pixel center may or may not hit the scatterer; force it
        med = medium_from_params(MediumParams(**req["medium"]))
        x, y = med.positions_lambda[0]
        req["grid"] = {"origin": [x - 0.5e-10, y - 0.5e-10],
                       "extent": [1e-10, 1e-10], "nx": 1, "ny": 1}
        r = client.post("/maps/g2", json=req)
        assert r.status_code == 200
        assert r.json()["values"][0][0] is None

    def test_dos_maps(self, client):
        req = {
            "medium": FREE_TM,
            "emitters": {"r1": [0.0, 0.0], "r2": [1.0, 0.0]},
            "grid": {"origin": [-0.5, -0.5], "extent": [1.0, 1.0], "nx": 5, "ny": 5},
        }
        r = client.post("/maps/dos", json=req)
        assert r.status_code == 200
        body = r.json()
        ldos = np.array(body["ldos"]["values"], dtype=float)
        assert np.allclose(ldos, 0.25, atol=1e-14)
        assert body["cdos"]["channel"] == "CDOS"


class TestDetectorSearch:
    def test_maximize(self, client):
        r = client.post("/detectors/search", json={
            "medium": FREE_TM,
            "emitters": {"r1": [-0.16, 0.0], "r2": [0.16, 0.0]},
            "search": {"region": {"x0": -0.5, "y0": 0.3, "width": 1.0, "height": 0.7},
                       "target": "maximize", "coarse": 7},
        })
        assert r.status_code == 200
        assert r.json()["g2"] >= 1.0 - 1e-6

    def test_geometry_error_maps_to_400(self, client):
        r = client.post("/detectors/search", json={
            "medium": FREE_TM,
            "emitters": {"r1": [0.0, 0.0], "r2": [0.5, 0.0]},
            "search": {"region": {"x0": -1.0, "y0": -1.0, "width": 2.0, "height": 2.0},
                       "target": "maximize"},
        })
        assert r.status_code == 400
        assert r.json()["error"] == "GeometryError"
