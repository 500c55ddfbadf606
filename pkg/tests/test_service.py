import pytest
from fastapi.testclient import TestClient

from semipart.service import app

client = TestClient(app, raise_server_exceptions=False)

SPLIT_DOC = {
    "cpus": 2,
    "K": 2,
    "tasks": [
        {"id": 1, "C": 30, "D": 40, "T": 40},
        {"id": 2, "C": 30, "D": 40, "T": 40},
        {"id": 3, "C": 4, "D": 10, "T": 10},
    ],
}

WORKED_DOC = {
    "cpus": 3,
    "K": 11,
    "tasks": [
        {"id": 1, "C": 117, "D": 121, "T": 121},
        {"id": 2, "C": 62, "D": 121, "T": 121},
        {"id": 3, "C": 60, "D": 121, "T": 121},
        {"id": 4, "C": 57, "D": 121, "T": 121},
        {"id": 5, "C": 56, "D": 121, "T": 121},
        {"id": 6, "C": 1, "D": 11, "T": 11},
    ],
}

OVERLOADED_DOC = {
    "cpus": 2,
    "K": 2,
    "tasks": [
        {"id": 1, "C": 3, "D": 5, "T": 5},
        {"id": 2, "C": 3, "D": 5, "T": 5},
        {"id": 3, "C": 3, "D": 5, "T": 5},
    ],
}


def test_health():
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json() == {"status": "ok"}


def test_generate_is_deterministic():
    body = {"cpus": 2, "util": 0.6, "seed": 11, "k": 3}
    a = client.post("/generate", json=body)
    b = client.post("/generate", json=body)
    assert a.status_code == 200
    assert a.json() == b.json()
    doc = a.json()
    assert doc["cpus"] == 2
    assert doc["K"] == 3
    assert doc["tasks"]


def test_generate_rejects_bad_util():
    r = client.post("/generate", json={"cpus": 2, "util": 1.5})
    assert r.status_code == 422


def test_analyze_split_system():
    r = client.post("/analyze", json={"system": SPLIT_DOC})
    assert r.status_code == 200
    doc = r.json()
    assert doc["status"] == "schedulable"
    assert doc["schedulable"] is True
    assert doc["plan"]["fixed"] == {"1": 0, "2": 1}
    assert doc["plan"]["jobs"] == {"3": [1, 1]}
    assert doc["plan"]["sequence"] == {"3": [0, 1]}
    assert len(doc["per_cpu"]) == 2
    assert all("/" in f["density"] or f["density"].isdigit() for f in doc["per_cpu"])


def test_analyze_worked_example():
    r = client.post("/analyze", json={"system": WORKED_DOC})
    assert r.status_code == 200
    doc = r.json()
    assert doc["schedulable"] is True
    assert doc["plan"]["jobs"] == {"6": [4, 2, 5]}
    assert doc["plan"]["sequence"] == {"6": [0, 1, 0, 2, 2, 0, 1, 2, 0, 2, 2]}
    assert all(f["density"] == "1" for f in doc["per_cpu"])


def test_analyze_k_override():
    r = client.post("/analyze", json={"system": SPLIT_DOC, "k": 1})
    assert r.status_code == 200
    assert r.json()["status"] == "not-schedulable"  # task 3 fits nowhere whole


def test_analyze_packed_mode():
    r = client.post("/analyze", json={"system": SPLIT_DOC, "mode": "packed"})
    assert r.status_code == 200
    assert r.json()["schedulable"] is True


def test_analyze_rejects_unknown_mode():
    r = client.post("/analyze", json={"system": SPLIT_DOC, "mode": "magic"})
    assert r.status_code == 400


def test_analyze_rejects_bad_task():
    doc = {"cpus": 1, "K": 1, "tasks": [{"id": 1, "C": 9, "D": 5, "T": 5}]}
    r = client.post("/analyze", json={"system": doc})
    assert r.status_code == 400
    assert "task 1" in r.json()["detail"]


def test_analyze_missing_field_is_422():
    doc = {"cpus": 1, "tasks": []}  # no K
    r = client.post("/analyze", json={"system": doc})
    assert r.status_code == 422


def test_simulate_auto_plan():
    r = client.post("/simulate", json={"system": SPLIT_DOC, "horizon": 80})
    assert r.status_code == 200
    doc = r.json()
    assert doc["ok"] is True
    assert doc["misses"] == []
    assert doc["migrations"] > 0


def test_simulate_with_explicit_plan():
    plan = {
        "cpus": 2,
        "K": 2,
        "fixed": {"1": 0, "2": 1},
        "jobs": {"3": [1, 1]},
        "sequence": {"3": [0, 1]},
    }
    r = client.post("/simulate", json={"system": SPLIT_DOC, "plan": plan, "horizon": 80})
    assert r.status_code == 200
    assert r.json()["ok"] is True


def test_simulate_bad_plan_reports_misses():
    plan = {"cpus": 2, "K": 1, "fixed": {"1": 0, "2": 0, "3": 0}}
    r = client.post("/simulate", json={"system": SPLIT_DOC, "plan": plan, "horizon": 40})
    assert r.status_code == 200
    doc = r.json()
    assert doc["ok"] is False
    assert doc["misses"]
    miss = doc["misses"][0]
    assert {"task_id", "job_index", "cpu", "deadline", "completion"} <= set(miss)


def test_simulate_unschedulable_without_plan_is_400():
    r = client.post("/simulate", json={"system": OVERLOADED_DOC, "horizon": 40})
    assert r.status_code == 400
    assert "verdict" in r.json()["detail"]


def test_simulate_sporadic_deterministic():
    body = {
        "system": SPLIT_DOC,
        "horizon": 400,
        "model": "sporadic",
        "seed": 3,
        "max_jitter": 4,
    }
    a = client.post("/simulate", json=body)
    b = client.post("/simulate", json=body)
    assert a.status_code == 200
    assert a.json() == b.json()


def test_simulate_rejects_bad_model():
    r = client.post("/simulate", json={"system": SPLIT_DOC, "horizon": 10, "model": "zeno"})
    assert r.status_code == 422


def test_sweep_endpoint():
    body = {
        "cpus": [2],
        "fractions": ["0.6", 0.8],
        "k_values": [2],
        "trials": 4,
        "seed": 2,
    }
    r = client.post("/sweep", json=body)
    assert r.status_code == 200
    rows = r.json()["rows"]
    cells = {(row["m"], row["fraction"], row["K"], row["mode"]) for row in rows}
    assert (2, "0.60", 1, "ffd") in cells
    assert (2, "0.80", 2, "pattern") in cells
    assert len(rows) == 6
    for row in rows:
        assert row["trials"] == 4
        assert 0 <= row["successes"] <= 4
        assert row["ratio"] == pytest.approx(row["successes"] / 4, abs=1e-4)


def test_sweep_rejects_out_of_range_fraction():
    body = {"cpus": [2], "fractions": [0.2], "k_values": [2]}
    r = client.post("/sweep", json=body)
    assert r.status_code == 400
