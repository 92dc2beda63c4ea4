"""HTTP service: endpoint behaviour and error mapping."""

import pytest
from fastapi.testclient import TestClient

from adaptdose.service.app import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


class TestHealth:
    def test_healthz(self, client):
        resp = client.get("/healthz")
        assert resp.status_code == 200
        assert resp.json()["status"] == "ok"


class TestComputeEndpoints:
    def test_winner_prob_defaults(self, client):
        resp = client.post("/winner-prob", json={})
        assert resp.status_code == 200
        body = resp.json()
        assert body["w"] == pytest.approx(body["w1"] + body["w2"], abs=1e-12)

    def test_winner_prob_random_selection(self, client):
        resp = client.post("/winner-prob", json={
            "Cx": 0.0, "Cs": 0.0, "rho_xy": 0.0, "rho_xs": 0.0, "rho_ys": 0.0})
        assert resp.json()["w"] == pytest.approx(0.5, abs=1e-9)

    def test_fig3_grid(self, client):
        resp = client.post("/fig3", json={"cx_grid": [0.0, 0.1], "rho_ys_list": [-0.3]})
        assert resp.status_code == 200
        rows = resp.json()["rows"]
        assert len(rows) == 4  # 2 scenarios x 1 rho x 2 Cx
        assert {r["scenario"] for r in rows} == {1, 2}

    def test_alpha_exact_w_half(self, client):
        resp = client.post("/alpha-exact", json={"w_grid": [0.5]})
        assert resp.json()["rows"][0]["alphaE"] == 0.025

    def test_adjust_p(self, client):
        resp = client.post("/adjust-p", json={"p1s": 0.5, "w": 1.0, "r": 1.0})
        assert resp.json()["p1a"] == pytest.approx(2.0 / 3.0, abs=1e-9)

    def test_combine(self, client):
        resp = client.post("/combine", json={"p1a": 0.12, "p2s": 0.34, "s": 0.0})
        assert resp.json()["p_c"] == 0.34

    def test_alpha_combo(self, client):
        resp = client.post("/alpha-combo", json={"w_grid": [0.5], "grid_n": 2000})
        row = resp.json()["rows"][0]
        assert row["method"] == "exact"
        assert row["alpha_c"] == pytest.approx(0.025, abs=1e-6)

    def test_fig4(self, client):
        resp = client.post("/fig4", json={"w_grid": [0.5, 0.8], "grid_n": 2000})
        rows = resp.json()["rows"]
        assert len(rows) == 2
        for row in rows:
            assert abs(row["alphaE"] - row["alphaC"]) <= 0.001
        assert rows[0]["alphaC_sidak"] == rows[1]["alphaC_sidak"]

    def test_simulate_w(self, client):
        body = {"target": "w", "n": 10_000, "seed": 3}
        resp = client.post("/simulate", json=body)
        assert resp.status_code == 200
        a = resp.json()
        b = client.post("/simulate", json=body).json()
        assert a == b
        assert set(a) == {"value", "std_error", "n", "seed"}

    def test_simulate_abstract_requires_w(self, client):
        resp = client.post("/simulate", json={"target": "type1-abstract", "n": 100_000})
        assert resp.status_code == 422
        assert resp.json()["kind"] == "validation"

    def test_simulate_full(self, client):
        resp = client.post("/simulate", json={
            "target": "type1-full", "test": "sidak", "n": 100_000, "seed": 1,
            "Cx": 0.1})
        assert resp.status_code == 200
        assert resp.json()["value"] < 0.025


class TestEstimateCorr:
    def test_subgroup(self, client):
        rows = [
            {"variable": "v1", "subgroup": "a", "effect1": 1.0, "effect2": 2.0},
            {"variable": "v1", "subgroup": "b", "effect1": 0.0, "effect2": 0.0},
            {"variable": "v2", "subgroup": "a", "effect1": 2.0, "effect2": 4.0},
            {"variable": "v2", "subgroup": "b", "effect1": 1.0, "effect2": 2.0},
        ]
        resp = client.post("/estimate-corr", json={"method": "subgroup",
                                                   "subgroups": rows})
        body = resp.json()
        assert body["estimate"] == pytest.approx(1.0, abs=1e-12)
        assert body["ci_low"] is None
        assert body["method"] == "subgroup"
        assert body["n_resamples"] == 0

    def test_bootstrap(self, client):
        patients = []
        for arm in ("treatment", "control"):
            for i in range(60):
                flag = bool((i * 7 + len(arm)) % 3 == 0)
                patients.append({"arm": arm, "response": flag, "ae": flag,
                                 "time": 1.0, "event": False})
        resp = client.post("/estimate-corr", json={
            "method": "bootstrap", "patients": patients, "B": 200, "seed": 4})
        body = resp.json()
        assert resp.status_code == 200
        assert body["estimate"] == pytest.approx(1.0, abs=1e-9)
        assert body["n_resamples"] == 200

    def test_subgroup_data_error(self, client):
        rows = [
            {"variable": "v1", "subgroup": "a", "effect1": 1.0, "effect2": 2.0},
            {"variable": "v1", "subgroup": "b", "effect1": 0.0, "effect2": 0.0},
            {"variable": "v1", "subgroup": "c", "effect1": 2.0, "effect2": 1.0},
        ]
        resp = client.post("/estimate-corr", json={"method": "subgroup",
                                                   "subgroups": rows})
        assert resp.status_code == 400
        assert resp.json()["kind"] == "data"


class TestErrorMapping:
    def test_core_validation_is_422(self, client):
        resp = client.post("/winner-prob", json={"Rx": 1.5})
        assert resp.status_code == 422
        assert resp.json()["kind"] == "validation"

    def test_non_psd_is_409(self, client):
        resp = client.post("/winner-prob", json={
            "rho_xy": 0.9, "rho_xs": -0.9, "rho_ys": 0.9})
        assert resp.status_code == 409
        assert resp.json()["kind"] == "numeric"

    def test_schema_validation_is_422(self, client):
        resp = client.post("/winner-prob", json={"scenario": 7})
        assert resp.status_code == 422
