import pytest
from fastapi.testclient import TestClient

import api
from conftest import make_tiny1
from utils.instance_utils import save_instance


@pytest.fixture
def client():
    return TestClient(api.app)


@pytest.fixture
def tiny1_text():
    return save_instance(make_tiny1())


def test_root_and_health(client):
    assert client.get("/").json() == {"message": "SPCAP Solver API is running"}
    assert client.get("/health").json()["status"] == "healthy"


def test_bounds_job(client, tiny1_text):
    response = client.post("/bounds", json={"instance": tiny1_text, "name": "TINY1"})
    assert response.status_code == 200
    body = response.json()
    assert body["status"] == "accepted"

    job = client.get(f"/jobs/{body['job_id']}").json()
    assert job["kind"] == "bounds"
    assert job["status"] == "success"
    assert job["result"]["ID"] == "TINY1"
    assert job["result"]["PI<=BM"] is True
    assert job["result"]["PI-bound"] >= 10.0 - 1e-6


def test_oracle_solve_job(client, tiny1_text):
    body = client.post("/solve/oracle", json={"instance": tiny1_text, "name": "TINY1"}).json()
    job = client.get(f"/jobs/{body['job_id']}").json()
    assert job["status"] == "success"
    assert job["result"]["mode"] == "oracle"
    assert job["result"]["row"]["objective"] == pytest.approx(10.0)
    assert job["result"]["row"]["coverage"] == 1.0
    assert "OBJ" in job["result"]["solution"]
    assert "saved" not in job["result"]


def test_hybrid_solve_job(client, tiny1_text):
    body = client.post("/solve/hybrid", json={"instance": tiny1_text, "params": {"loops": 2, "seed": 4}}).json()
    job = client.get(f"/jobs/{body['job_id']}").json()
    assert job["status"] == "success"
    assert job["result"]["row"]["served_aco"] is not None


def test_invalid_parameters_fail_the_job(client, tiny1_text):
    body = client.post("/solve/hybrid", json={"instance": tiny1_text, "params": {"alpha": 2.0}}).json()
    job = client.get(f"/jobs/{body['job_id']}").json()
    assert job["status"] == "error"
    assert "alpha" in job["message"]


@pytest.mark.parametrize("path, payload", [
    ("/solve/greedy", {}),
    ("/solve/hybrid", {"params": {"beta": 1}}),
    ("/bounds", {"lp_backend": "cplex"}),
])
def test_bad_requests(client, tiny1_text, path, payload):
    response = client.post(path, json={"instance": tiny1_text, **payload})
    assert response.status_code == 400


def test_malformed_instance(client):
    response = client.post("/bounds", json={"instance": "SPCAP v1 1 1\n"})
    assert response.status_code == 400
    assert "Invalid instance" in response.json()["detail"]


def test_unknown_job(client):
    assert client.get("/jobs/nope").status_code == 404
