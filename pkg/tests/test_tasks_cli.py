"""Config-driven tasks, the HTTP service, and the command-line client."""

import json
import math
import socket
import subprocess
import sys
import threading
import time
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient
from pydantic import ValidationError

from qherm.service import create_app
from qherm.tasks import (
    RunConfig,
    fit_order,
    outcome_to_json_dict,
    run_task,
    table_to_csv,
)

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def cfg(**overrides):
    base = {"model": "swanson", "task": "spectrum", "params": {}}
    base.update(overrides)
    return RunConfig.model_validate(base)


# -- fit_order -------------------------------------------------------------------

def test_fit_order_synthetic_cubes():
    gs = [0.04, 0.02, 0.01]
    assert fit_order(gs, [g**3 for g in gs]) == pytest.approx(3.0, abs=1e-12)
    assert fit_order(gs, [5 * g**2 for g in gs]) == pytest.approx(2.0, abs=1e-12)


def test_fit_order_exact_identity_sentinel():
    assert fit_order([0.04, 0.02, 0.01], [0.0, 0.0, 0.0]) == math.inf


def test_fit_order_guards():
    with pytest.raises(ValueError):
        fit_order([0.04, 0.02], [1.0, 1.0])
    with pytest.raises(ValueError):
        fit_order([0.04, -0.02, 0.01], [1.0, 1.0, 1.0])


# -- config validation --------------------------------------------------------------

def test_unknown_keys_rejected():
    with pytest.raises(ValidationError):
        RunConfig.model_validate(
            {"model": "swanson", "task": "spectrum", "params": {}, "bogus": 1}
        )
    with pytest.raises(ValidationError):
        RunConfig.model_validate(
            {"model": "swanson", "task": "spectrum", "params": {"mass": 1.0}}
        )


def test_model_specific_params_validated():
    with pytest.raises(ValidationError):
        cfg(params={"epsilon": 1.5})
    with pytest.raises(ValidationError):
        RunConfig.model_validate({"model": "cubic", "task": "spectrum", "params": {"epsilon": 0.4}})
    with pytest.raises(ValidationError):
        RunConfig.model_validate({"model": "swanson", "task": "series-scan", "params": {}})


# -- table plumbing -------------------------------------------------------------------

def test_spectrum_task_values():
    out = run_task(cfg(task_params={"levels": 20}))
    assert len(out.table.rows) == 20
    for n, row in enumerate(out.table.rows):
        assert abs(row[1] - (n + 0.5)) < 1e-8
    assert out.exit_code == 0


def test_determinism_across_runs():
    config = cfg(task_params={"levels": 12})
    out1 = run_task(config)
    out2 = run_task(config)
    assert out1.table.same_data(out2.table)


def test_csv_round_trip_precision():
    out = run_task(cfg(task_params={"levels": 8}))
    text = table_to_csv(out.table)
    lines = text.strip().splitlines()
    header = lines[0].split(",")
    assert header == ["n", "energy_re", "energy_im"]
    for n, line in enumerate(lines[1:]):
        cells = line.split(",")
        assert float(cells[1]) == out.table.rows[n][1]  # 17 digits round-trip


def test_json_round_trip():
    config = cfg(task_params={"levels": 8})
    out = run_task(config)
    doc = outcome_to_json_dict(config, out)
    rehydrated = json.loads(json.dumps(doc))
    assert rehydrated["results"]["rows"] == out.table.rows
    assert rehydrated["config"] == config.model_dump(mode="json")
    for c in rehydrated["checks"]:
        assert set(c) == {"name", "residual", "threshold", "pass"}


def test_rates_task_metric_ratio():
    config = RunConfig.model_validate(
        {
            "model": "swanson",
            "task": "rates",
            "params": {"epsilon": 0.6, "metric_case": "both"},
            "task_params": {"transitions": [[1, 0]]},
        }
    )
    out = run_task(config)
    assert [c.name for c in out.table.columns] == [
        "model", "metric_case", "i", "j", "omega_ij",
        "element_re", "element_im", "mu", "rate", "route",
    ]
    r1, r2 = out.table.rows[0][8], out.table.rows[1][8]
    assert abs(r1 / r2 - 0.64) < 1e-8


def test_cubic_metric_check_order():
    config = RunConfig.model_validate(
        {"model": "cubic", "task": "metric-check", "params": {"g": 0.02}}
    )
    out = run_task(config)
    assert out.exit_code == 0
    order = out.table.rows[0][3]
    assert order >= 2.7


def test_series_scan_all_families():
    out = run_task(RunConfig.model_validate({"model": "cubic", "task": "series-scan", "params": {}}))
    assert out.exit_code == 0
    names = {c.name for c in out.checks}
    assert names == {
        "quasi_hermiticity_order", "X_series_order", "P_series_order",
        "h_series_order", "rewriting_identity_order",
    }
    assert all(c.residual >= 2.7 for c in out.checks)


def test_gauge_check_task_both_cases():
    for case in ("case_i", "case_ii"):
        out = run_task(
            RunConfig.model_validate(
                {"model": "swanson", "task": "gauge-check", "params": {"metric_case": case}}
            )
        )
        assert out.exit_code == 0, [c for c in out.checks if not c.passed]


def test_gauge_check_wrong_model_rejected():
    config = RunConfig.model_validate({"model": "cubic", "task": "gauge-check", "params": {}})
    with pytest.raises(ValueError, match="swanson"):
        run_task(config)


def test_basis_override_smaller_run():
    out = run_task(cfg(basis={"N": 32, "margin": 4}, task_params={"levels": 10}))
    assert len(out.table.rows) == 10
    assert abs(out.table.rows[0][1] - 0.5) < 1e-8


def test_check_breach_gives_exit_3():
    config = RunConfig.model_validate(
        {
            "model": "swanson",
            "task": "metric-check",
            "params": {"metric_case": "case_i"},
            "task_params": {"threshold": 1e-20},
        }
    )
    out = run_task(config)
    assert out.exit_code == 3
    assert not out.checks[0].passed


# -- HTTP service ------------------------------------------------------------------------

@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def test_service_health(client):
    body = client.get("/health").json()
    assert body["status"] == "ok"


def test_service_run_rates(client):
    r = client.post(
        "/run",
        json={
            "model": "swanson",
            "task": "rates",
            "params": {"epsilon": 0.6, "metric_case": "both"},
        },
    )
    assert r.status_code == 200
    body = r.json()
    assert body["exit_code"] == 0
    rates = [row[8] for row in body["table"]["rows"]]
    assert abs(rates[0] - np.pi) < 1e-9
    assert abs(rates[0] / rates[1] - 0.64) < 1e-8


def test_service_rejects_invalid_config(client):
    r = client.post("/run", json={"model": "swanson", "task": "rates", "params": {"epsilon": 2.0}})
    assert r.status_code == 422


def test_service_reports_breach_exit_code(client):
    r = client.post(
        "/run",
        json={
            "model": "swanson",
            "task": "metric-check",
            "params": {},
            "task_params": {"threshold": 1e-20},
        },
    )
    assert r.status_code == 200
    body = r.json()
    assert body["exit_code"] == 3
    assert not body["checks"][0]["passed"]


def test_service_matches_local_run(client):
    payload = {"model": "cubic", "task": "metric-check", "params": {"g": 0.02}}
    remote = client.post("/run", json=payload).json()
    local = run_task(RunConfig.model_validate(payload))
    assert remote["table"]["rows"] == json.loads(json.dumps(local.table.rows))


# -- CLI ----------------------------------------------------------------------------------

def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "qherm.cli", *args],
        capture_output=True, text=True, timeout=300,
    )


def test_cli_spectrum_and_output(tmp_path):
    out_path = tmp_path / "spec.csv"
    res = run_cli(
        "spectrum", "--config", str(CONFIG_DIR / "swanson_spectrum.json"),
        "--output", str(out_path), "--format", "csv", "--quiet",
    )
    assert res.returncode == 0
    lines = out_path.read_text().strip().splitlines()
    assert lines[0] == "n,energy_re,energy_im"
    assert len(lines) == 21


def test_cli_param_override(tmp_path):
    out_path = tmp_path / "rates.json"
    res = run_cli(
        "rates", "--config", str(CONFIG_DIR / "swanson_rates.json"),
        "--param", "params.epsilon=0.8", "--quiet",
        "--output", str(out_path), "--format", "json",
    )
    assert res.returncode == 0
    doc = json.loads(out_path.read_text())
    rates = [row[8] for row in doc["results"]["rows"]]
    assert abs(rates[0] / rates[1] - (1 - 0.8**2)) < 1e-8
    assert doc["config"]["params"]["epsilon"] == 0.8


def test_cli_missing_config_is_exit_2():
    res = run_cli("spectrum", "--config", "/no/such/file.json")
    assert res.returncode == 2
    assert "config error" in res.stderr


def test_cli_invalid_value_is_exit_2(tmp_path):
    res = run_cli(
        "spectrum", "--config", str(CONFIG_DIR / "swanson_spectrum.json"),
        "--param", "params.epsilon=2.0",
    )
    assert res.returncode == 2


def test_cli_breach_is_exit_3_and_names_check():
    res = run_cli(
        "metric-check", "--config", str(CONFIG_DIR / "swanson_metric_check.json"),
        "--param", "task_params.threshold=1e-20", "--quiet",
    )
    assert res.returncode == 3
    assert "quasi_hermiticity_case_i_qx" in res.stderr


def test_cli_unknown_key_is_exit_2():
    res = run_cli(
        "spectrum", "--config", str(CONFIG_DIR / "swanson_spectrum.json"),
        "--param", "params.mass=2.0",
    )
    assert res.returncode == 2


def _free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


@pytest.fixture(scope="module")
def live_server():
    import uvicorn

    port = _free_port()
    config = uvicorn.Config(create_app(), host="127.0.0.1", port=port, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("uvicorn did not start")
        time.sleep(0.05)
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)


def test_cli_against_live_server(live_server):
    res = run_cli(
        "rates", "--config", str(CONFIG_DIR / "swanson_rates.json"),
        "--server", live_server,
    )
    assert res.returncode == 0
    assert "4.908738521" in res.stdout
