import json
from fastapi.testclient import TestClient
from roughvol.service import app

c = TestClient(app)

r = c.get("/health")
print("health", r.status_code, r.json())

r = c.get("/defaults")
print("defaults", r.status_code)
print(json.dumps(r.json(), indent=1)[:800])

r = c.post("/kernel", json={"factor_counts": [5, 10]})
print("kernel", r.status_code)
d = r.json()
print("  keys", sorted(d))
print("  csv:", d["summary_csv"].splitlines()[:3])
print("  k0 keys", sorted(d["kernels"][0]))

r = c.post("/riccati", json={"factor_counts": [5, 10], "b_grid": [0.0, 5.0, 10.0]})
print("riccati", r.status_code, len(r.json()["rows"]), "rows")
print("  csv head:", r.json()["csv"].splitlines()[:2])

r = c.post("/price", json={"kernel": {"n": 5}, "steps": 50})
print("price", r.status_code, r.json()["fractional"], r.json()["multifactor"])

r = c.post("/smile", json={"kernel": {"n": 5}, "k_grid": [-0.2, 0.0, 0.2], "steps": 50})
d = r.json()
print("smile", r.status_code)
print("  frac csv:", d["fractional"]["csv"].splitlines()[:2])
print("  diff csv:", d["diff_csv"].splitlines()[:2])

r = c.post("/simulate", json={
    "kernel": {"n": 5},
    "simulation": {"n_paths": 2000, "steps": 50, "seed": 7, "antithetic": True},
    "strikes": [-0.1, 0.0, 0.1],
    "threads": 2,
})
d = r.json()
print("simulate", r.status_code, d["prices"], "neg", d["negative_fraction"], "meanS", d["mean_terminal_spot"])

r = c.post("/simulate", json={
    "simulation": {"n_paths": 500, "steps": 50, "seed": 7, "scheme": "volterra_oracle"},
    "strikes": [0.0], "include_paths": True,
})
d = r.json()
print("simulate volterra", r.status_code, d["prices"], "csv lines", len(d["terminal_spots_csv"].splitlines()))
print("  kernel echo:", d["config"]["kernel"])

r = c.post("/bench", json={"steps_grid": [50, 100], "factor_counts": [5, 10], "z_batch": 8, "repeats": 1})
d = r.json()
print("bench", r.status_code, d["ratios"])
print("  rows", len(d["rows"]), "csv:", d["csv"].splitlines()[:2])

# error paths
r = c.post("/kernel", json={"choice": "explicit"})
print("explicit no partition ->", r.status_code, r.json()["detail"])
r = c.post("/smile", json={"k_grid": []})
print("empty k_grid ->", r.status_code, r.json()["detail"])
r = c.post("/simulate", json={"simulation": {"n_paths": 3, "antithetic": True, "steps": 10}})
print("odd antithetic ->", r.status_code, r.json()["detail"])
r = c.post("/kernel", json={"model": {"hurst": 0.7}})
print("bad hurst ->", r.status_code, r.json()["detail"])
r = c.post("/kernel", json={"bogus": 1})
print("extra key ->", r.status_code)
