"""HTTP layer checks: request validation, response shapes, consistency
between endpoints and the library calls they wrap."""

import math

import numpy as np
import pytest
from fastapi.testclient import TestClient

from roughvol import (
    FractionalKernel,
    IntegrationConfig,
    ModelParams,
    Partition,
    smile,
    uniform_partition,
    weights_from_partition,
)
from roughvol.kernels import optimal_step
from roughvol.service import app


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as c:
        yield c


def test_health_and_defaults(client):
    r = client.get("/health")
    assert r.status_code == 200
    body = r.json()
    assert body["status"] == "ok"
    assert isinstance(body["version"], str)

    r = client.get("/defaults")
    assert r.status_code == 200
    d = r.json()
    model = d["model"]
    assert model["lambda"] == 0.3
    assert model["rho"] == -0.7
    assert model["nu"] == 0.3
    assert model["hurst"] == 0.1
    assert model["v0"] == 0.02
    assert model["theta"] == 0.02
    assert model["horizon"] == 1.0
    assert d["simulation"]["seed"] == 42
    assert d["bench"]["steps_grid"] == [100, 200, 400, 800]
    assert d["bench"]["factor_counts"] == [20, 100, 500]


def test_model_accepts_lambda_alias_and_field_name(client):
    for key in ("lambda", "lam"):
        r = client.post(
            "/kernel", json={"model": {key: 0.5}, "factor_counts": [3]}
        )
        assert r.status_code == 200
        assert r.json()["config"]["model"]["lambda"] == 0.5


def test_kernel_endpoint_shapes_and_monotonicity(client):
    r = client.post("/kernel", json={"factor_counts": [5, 10, 20]})
    assert r.status_code == 200
    body = r.json()
    kernels = body["kernels"]
    assert [k["n"] for k in kernels] == [5, 10, 20]
    for k in kernels:
        rates = k["rates"]
        assert len(k["weights"]) == k["n"]
        assert all(c > 0 for c in k["weights"])
        assert all(b > a for a, b in zip(rates, rates[1:]))
        assert len(k["partition"]["etas"]) == k["n"] + 1
        assert k["l1_err"] <= k["f1_bound"] * (1 + 1e-12)
    l1s = [k["l1_err"] for k in kernels]
    l2s = [k["l2_err"] for k in kernels]
    assert l1s == sorted(l1s, reverse=True)
    assert l2s == sorted(l2s, reverse=True)
    lines = body["summary_csv"].splitlines()
    assert lines[0] == "n,l1_err,l2_err,f1_bound,f2_bound"
    assert len(lines) == 4


def test_kernel_endpoint_matches_library(client):
    r = client.post("/kernel", json={"factor_counts": [7]})
    k = r.json()["kernels"][0]
    direct = weights_from_partition(
        0.1, uniform_partition(7, optimal_step(7, 1.0, 0.1))
    )
    assert np.allclose(k["weights"], direct.weights, rtol=1e-14)
    assert np.allclose(k["rates"], direct.rates, rtol=1e-14)


def test_kernel_explicit_partition_roundtrip(client):
    r1 = client.post("/kernel", json={"factor_counts": [6]})
    first = r1.json()["kernels"][0]
    r2 = client.post(
        "/kernel",
        json={"choice": "explicit", "partition": first["partition"], "factor_counts": [6]},
    )
    assert r2.status_code == 200
    second = r2.json()["kernels"][0]
    assert second["weights"] == first["weights"]
    assert second["rates"] == first["rates"]
    assert second["partition"] == first["partition"]


def test_kernel_validation_errors(client):
    r = client.post("/kernel", json={"choice": "explicit"})
    assert r.status_code == 422
    r = client.post("/kernel", json={"choice": "explicit", "partition": {"etas": [0.0]}})
    assert r.status_code == 422
    r = client.post("/kernel", json={"factor_counts": []})
    assert r.status_code == 422
    r = client.post("/kernel", json={"model": {"hurst": 0.7}})
    assert r.status_code == 422
    r = client.post("/kernel", json={"unknown_key": 1})
    assert r.status_code == 422


def test_riccati_endpoint_rows_and_flagging(client):
    r = client.post(
        "/riccati",
        json={
            "factor_counts": [5],
            "b_grid": [0.0, 5.0, 10.0],
            "steps": 50,
        },
    )
    assert r.status_code == 200
    body = r.json()
    rows = body["rows"]
    assert len(rows) == 3
    zero_row = rows[0]
    assert zero_row["b"] == 0.0
    assert zero_row["defined"] is False
    assert zero_row["rel_err"] is None
    assert rows[1]["defined"] is True
    assert rows[1]["rel_err"] > rows[2]["rel_err"] > 0
    lines = body["csv"].splitlines()
    assert lines[0] == "n,b,rel_err,l1_err,f1_bound,f2_bound"
    assert "nan" in lines[1]


def test_riccati_endpoint_grid_spec(client):
    r = client.post(
        "/riccati",
        json={
            "factor_counts": [3],
            "b_grid": {"start": 2.0, "stop": 6.0, "count": 3},
            "steps": 30,
        },
    )
    assert r.status_code == 200
    assert [row["b"] for row in r.json()["rows"]] == [2.0, 4.0, 6.0]


def test_price_and_smile_agree(client):
    req = {"kernel": {"n": 5}, "steps": 50}
    rp = client.post("/price", json={**req, "k": 0.1})
    rs = client.post("/smile", json={**req, "k_grid": [0.1]})
    assert rp.status_code == 200 and rs.status_code == 200
    p = rp.json()
    s = rs.json()
    k, price, iv = s["fractional"]["points"][0]
    assert k == 0.1
    assert math.isclose(p["fractional"]["price"], price, rel_tol=1e-12)
    assert math.isclose(p["fractional"]["iv"], iv, rel_tol=1e-12)
    k, price, iv = s["multifactor"]["points"][0]
    assert math.isclose(p["multifactor"]["price"], price, rel_tol=1e-12)
    assert math.isclose(p["multifactor"]["iv"], iv, rel_tol=1e-12)
    assert math.isclose(
        p["price_diff"], p["multifactor"]["price"] - p["fractional"]["price"], rel_tol=1e-9
    )


def test_smile_matches_library_call(client):
    r = client.post(
        "/smile", json={"kernel": {"n": 5}, "k_grid": [-0.1, 0.0], "steps": 40}
    )
    assert r.status_code == 200
    got = r.json()["fractional"]["points"]
    params = ModelParams(
        lam=0.3, rho=-0.7, nu=0.3, hurst=0.1, v0=0.02, theta=0.02, s0=1.0, horizon=1.0
    )
    direct = smile(
        params, FractionalKernel(0.1), [-0.1, 0.0], 1.0, 40, IntegrationConfig()
    )
    for (k1, p1, v1), (k2, p2, v2) in zip(got, direct.points):
        assert k1 == k2
        assert math.isclose(p1, p2, rel_tol=1e-13)
        assert math.isclose(v1, v2, rel_tol=1e-13)


def test_smile_csv_blocks(client):
    r = client.post(
        "/smile", json={"kernel": {"n": 4}, "k_grid": [-0.1, 0.0, 0.1], "steps": 30}
    )
    body = r.json()
    frac_lines = body["fractional"]["csv"].splitlines()
    assert frac_lines[0] == "k,price,iv"
    assert len(frac_lines) == 4
    diff_lines = body["diff_csv"].splitlines()
    assert diff_lines[0] == (
        "k,price_fractional,iv_fractional,price_multifactor,iv_multifactor,"
        "price_diff,iv_diff"
    )
    assert len(diff_lines) == 4
    first = diff_lines[1].split(",")
    assert len(first) == 7
    assert math.isclose(float(first[5]), float(first[3]) - float(first[1]), abs_tol=1e-15)


def test_smile_validation(client):
    r = client.post("/smile", json={"k_grid": []})
    assert r.status_code == 422
    r = client.post("/smile", json={"steps": 0})
    assert r.status_code == 422
    r = client.post("/smile", json={"integration": {"n_nodes": 4}})
    assert r.status_code == 422


def test_simulate_endpoint_fields(client):
    req = {
        "kernel": {"n": 4},
        "simulation": {
            "n_paths": 400,
            "steps": 30,
            "seed": 9,
            "antithetic": True,
        },
        "strikes": [-0.1, 0.0],
        "threads": 2,
        "include_paths": True,
    }
    r = client.post("/simulate", json=req)
    assert r.status_code == 200
    body = r.json()
    assert [p["k"] for p in body["prices"]] == [-0.1, 0.0]
    for p in body["prices"]:
        assert p["price"] > 0
        assert p["std_error"] > 0
    assert 0.0 <= body["negative_fraction"] <= 1.0
    assert body["mean_terminal_spot"] > 0
    assert body["config"]["simulation"]["seed"] == 9
    spots = body["terminal_spots_csv"].splitlines()
    assert spots[0] == "terminal_spot"
    assert len(spots) == 401

    r2 = client.post("/simulate", json={**req, "include_paths": False})
    assert "terminal_spots_csv" not in r2.json()
    assert r2.json()["prices"] == body["prices"]


def test_simulate_volterra_scheme(client):
    r = client.post(
        "/simulate",
        json={
            "simulation": {
                "n_paths": 200,
                "steps": 25,
                "seed": 3,
                "scheme": "volterra_oracle",
                "antithetic": False,
            },
            "strikes": [0.0],
        },
    )
    assert r.status_code == 200
    assert r.json()["config"]["kernel"] is None


def test_simulate_validation(client):
    r = client.post(
        "/simulate",
        json={"simulation": {"n_paths": 3, "antithetic": True, "steps": 10}},
    )
    assert r.status_code == 422
    r = client.post(
        "/simulate",
        json={
            "simulation": {"n_paths": 10, "steps": 10, "antithetic": False},
            "strikes": [],
        },
    )
    assert r.status_code == 422
    r = client.post(
        "/simulate",
        json={
            "simulation": {
                "n_paths": 10,
                "steps": 3000,
                "scheme": "volterra_oracle",
                "antithetic": False,
            }
        },
    )
    assert r.status_code == 422


def test_bench_endpoint_rows_and_ratios(client):
    r = client.post(
        "/bench",
        json={
            "steps_grid": [50, 100],
            "factor_counts": [5, 10],
            "z_batch": 4,
            "repeats": 1,
        },
    )
    assert r.status_code == 200
    body = r.json()
    rows = body["rows"]
    assert len(rows) == 2 + 2 * 2
    assert {row["solver"] for row in rows} == {"adams", "multifactor"}
    assert all(row["seconds"] > 0 for row in rows)
    lines = body["csv"].splitlines()
    assert lines[0] == "solver,n,steps,seconds"
    assert len(lines) == 1 + len(rows)
    assert body["ratios"] == {}

    r = client.post(
        "/bench",
        json={
            "steps_grid": [200, 400],
            "factor_counts": [100, 500],
            "z_batch": 2,
            "repeats": 1,
        },
    )
    ratios = r.json()["ratios"]
    assert set(ratios) == {
        "adams_steps_400_over_200",
        "multifactor_steps_400_over_200",
        "multifactor_n_500_over_100",
    }
    assert all(v > 0 for v in ratios.values())


def test_bench_validation(client):
    r = client.post("/bench", json={"steps_grid": []})
    assert r.status_code == 422
    r = client.post("/bench", json={"factor_counts": [0]})
    assert r.status_code == 422
