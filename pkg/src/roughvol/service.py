"""HTTP service exposing the library's batch operations.

Every compute endpoint is a POST taking a JSON body and returning a JSON
document that already contains the rendered CSV blocks, so clients only
marshal configuration and write files.  Partition construction results
are cached per (choice, n, hurst, horizon) because the optimized choices
run a multi-seed quasi-Newton search.
"""

from __future__ import annotations

import math
import time
from functools import lru_cache
from typing import Literal, Union

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict, Field, field_validator

from . import __version__
from .kernels import (
    FractionalKernel,
    Partition,
    f1_bound,
    f2_bound,
    l1_error,
    l2_error,
    optimal_step,
    optimize_partition_detailed,
    uniform_partition,
    weights_from_partition,
)
from .montecarlo import (
    SimulationConfig,
    mc_call_price,
    simulate_multifactor,
    simulate_volterra_oracle,
)
from .params import ModelParams, ThetaCurve
from .pricing import (
    IntegrationConfig,
    error_report_to_csv,
    riccati_error_report,
    smile,
)
from .riccati import _solve_adams_batch, _solve_multifactor_batch

KernelChoice = Literal["uniform_optimal", "f1_opt", "f2_opt", "explicit"]


class ModelSpec(BaseModel):
    """Model parameters; accepts 'lambda' as the mean-reversion key."""

    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    lam: float = Field(default=0.3, alias="lambda")
    rho: float = -0.7
    nu: float = 0.3
    hurst: float = 0.1
    v0: float = 0.02
    theta: Union[float, dict] = 0.02
    s0: float = 1.0
    horizon: float = 1.0

    def to_params(self) -> ModelParams:
        try:
            return ModelParams(
                lam=self.lam,
                rho=self.rho,
                nu=self.nu,
                hurst=self.hurst,
                v0=self.v0,
                theta=ThetaCurve.from_jsonable(self.theta),
                s0=self.s0,
                horizon=self.horizon,
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    def echo(self) -> dict:
        return self.to_params().to_dict()


class GridSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    start: float
    stop: float
    count: int = Field(ge=1)

    def resolve(self) -> list[float]:
        return [float(x) for x in np.linspace(self.start, self.stop, self.count)]


Grid = Union[list[float], GridSpec]


def _resolve_grid(grid: Grid, name: str) -> list[float]:
    values = grid.resolve() if isinstance(grid, GridSpec) else [float(x) for x in grid]
    if not values:
        raise HTTPException(status_code=422, detail=f"{name} must not be empty")
    return values


class KernelSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    choice: KernelChoice = "uniform_optimal"
    n: int = Field(default=20, ge=1)
    partition: Union[dict, None] = None


@lru_cache(maxsize=256)
def _partition_for(choice: str, n: int, hurst: float, horizon: float) -> Partition:
    if choice == "uniform_optimal":
        return uniform_partition(n, optimal_step(n, horizon, hurst))
    objective = "f1" if choice == "f1_opt" else "f2"
    partition, _, _, _ = optimize_partition_detailed(n, hurst, horizon, objective)
    return partition


def _build_kernel(spec: KernelSpec, hurst: float, horizon: float):
    if spec.choice == "explicit":
        if spec.partition is None:
            raise HTTPException(
                status_code=422, detail="explicit kernel choice needs a partition"
            )
        try:
            partition = Partition.from_jsonable(spec.partition)
        except (ValueError, KeyError, TypeError) as exc:
            raise HTTPException(status_code=422, detail=f"bad partition: {exc}")
    else:
        partition = _partition_for(spec.choice, spec.n, hurst, horizon)
    return weights_from_partition(hurst, partition), partition


class IntegrationSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    b_max: float = 200.0
    n_nodes: int = 2000
    tail_tol: float = 1e-10
    max_doublings: int = 5

    def resolve(self) -> IntegrationConfig:
        try:
            return IntegrationConfig(
                b_max=self.b_max,
                n_nodes=self.n_nodes,
                tail_tol=self.tail_tol,
                max_doublings=self.max_doublings,
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))


class KernelRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: ModelSpec = ModelSpec()
    choice: KernelChoice = "uniform_optimal"
    factor_counts: list[int] = [20]
    partition: Union[dict, None] = None


class RiccatiRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: ModelSpec = ModelSpec()
    choice: Literal["uniform_optimal", "f1_opt", "f2_opt"] = "uniform_optimal"
    factor_counts: list[int] = [10, 20, 50, 100, 500]
    b_grid: Grid = GridSpec(start=1.0, stop=30.0, count=30)
    maturity: float = 1.0
    steps: int = Field(default=200, ge=1)


class SmileRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: ModelSpec = ModelSpec()
    kernel: KernelSpec = KernelSpec()
    k_grid: Grid = GridSpec(start=-0.4, stop=0.4, count=17)
    maturity: float = 1.0
    steps: int = Field(default=200, ge=1)
    integration: IntegrationSpec = IntegrationSpec()


class PriceRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: ModelSpec = ModelSpec()
    kernel: KernelSpec = KernelSpec()
    k: float = 0.0
    maturity: float = 1.0
    steps: int = Field(default=200, ge=1)
    integration: IntegrationSpec = IntegrationSpec()


class SimulationSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_paths: int = 100_000
    steps: int = 200
    seed: int = 42
    scheme: Literal["multifactor", "volterra_oracle"] = "multifactor"
    antithetic: bool = True
    snapshot_every: int = 0
    snapshot_paths: int = 8

    def resolve(self) -> SimulationConfig:
        try:
            return SimulationConfig(
                n_paths=self.n_paths,
                steps=self.steps,
                seed=self.seed,
                scheme=self.scheme,
                antithetic=self.antithetic,
                snapshot_every=self.snapshot_every,
                snapshot_paths=self.snapshot_paths,
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))


class SimulateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: ModelSpec = ModelSpec()
    kernel: KernelSpec = KernelSpec()
    simulation: SimulationSpec = SimulationSpec()
    strikes: list[float] = [0.0]
    threads: int = Field(default=1, ge=1)
    include_paths: bool = False


class BenchRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: ModelSpec = ModelSpec()
    steps_grid: list[int] = [100, 200, 400, 800]
    factor_counts: list[int] = [20, 100, 500]
    z_batch: int = Field(default=256, ge=1)
    repeats: int = Field(default=3, ge=1)

    @field_validator("steps_grid", "factor_counts")
    @classmethod
    def _positive(cls, v):
        if not v or any(x < 1 for x in v):
            raise ValueError("grid entries must be positive integers")
        return v


app = FastAPI(title="roughvol", version=__version__)


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.get("/defaults")
def defaults() -> dict:
    """The benchmark parameter set every request model defaults to."""
    return {
        "model": ModelSpec().echo(),
        "kernel": KernelSpec().model_dump(),
        "riccati": RiccatiRequest().model_dump(exclude={"model"}),
        "smile": SmileRequest().model_dump(exclude={"model", "kernel"}),
        "simulation": SimulationSpec().model_dump(),
        "bench": BenchRequest().model_dump(exclude={"model"}),
    }


@app.post("/kernel")
def kernel_endpoint(req: KernelRequest) -> dict:
    params = req.model.to_params()
    if not req.factor_counts:
        raise HTTPException(status_code=422, detail="factor_counts must not be empty")
    kernels = []
    for n in req.factor_counts:
        spec = KernelSpec(choice=req.choice, n=n, partition=req.partition)
        kern, partition = _build_kernel(spec, params.hurst, params.horizon)
        kernels.append(
            {
                "n": kern.n,
                "weights": list(kern.weights),
                "rates": list(kern.rates),
                "partition": partition.to_jsonable(params.hurst),
                "l1_err": l1_error(kern, params.hurst, params.horizon),
                "l2_err": l2_error(kern, params.hurst, params.horizon),
                "f1_bound": f1_bound(params.hurst, params.horizon, partition),
                "f2_bound": f2_bound(params.hurst, params.horizon, partition),
            }
        )
    lines = ["n,l1_err,l2_err,f1_bound,f2_bound"]
    for k in kernels:
        lines.append(
            f"{k['n']},{k['l1_err']:.17g},{k['l2_err']:.17g},"
            f"{k['f1_bound']:.17g},{k['f2_bound']:.17g}"
        )
    return {
        "config": {"model": req.model.echo(), "choice": req.choice},
        "kernels": kernels,
        "summary_csv": "\n".join(lines) + "\n",
    }


def _json_safe_rows(rows: list[dict]) -> list[dict]:
    """Replace non-finite floats with None so the rows are valid JSON."""
    out = []
    for row in rows:
        out.append(
            {
                k: (None if isinstance(v, float) and not math.isfinite(v) else v)
                for k, v in row.items()
            }
        )
    return out


@app.post("/riccati")
def riccati_endpoint(req: RiccatiRequest) -> dict:
    params = req.model.to_params()
    b_grid = _resolve_grid(req.b_grid, "b_grid")
    if not req.factor_counts:
        raise HTTPException(status_code=422, detail="factor_counts must not be empty")
    try:
        rows = riccati_error_report(
            params, req.factor_counts, b_grid, req.maturity,
            choice=req.choice, steps=req.steps,
        )
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return {
        "config": {
            "model": req.model.echo(),
            "choice": req.choice,
            "factor_counts": req.factor_counts,
            "maturity": req.maturity,
            "steps": req.steps,
        },
        "rows": _json_safe_rows(rows),
        "csv": error_report_to_csv(rows),
    }


def _smile_payload(sm) -> dict:
    return {
        "maturity": sm.maturity,
        "points": [list(p) for p in sm.points],
        "csv": sm.to_csv(),
    }


@app.post("/smile")
def smile_endpoint(req: SmileRequest) -> dict:
    params = req.model.to_params()
    k_grid = _resolve_grid(req.k_grid, "k_grid")
    integration = req.integration.resolve()
    kern, _ = _build_kernel(req.kernel, params.hurst, params.horizon)
    try:
        sm_frac = smile(
            params, FractionalKernel(params.hurst), k_grid, req.maturity,
            req.steps, integration,
        )
        sm_multi = smile(params, kern, k_grid, req.maturity, req.steps, integration)
    except (ValueError, RuntimeError) as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    lines = [
        "k,price_fractional,iv_fractional,price_multifactor,iv_multifactor,"
        "price_diff,iv_diff"
    ]
    for (k, pf, vf), (_, pm, vm) in zip(sm_frac.points, sm_multi.points):
        lines.append(
            f"{k:.17g},{pf:.17g},{vf:.17g},{pm:.17g},{vm:.17g},"
            f"{pm - pf:.17g},{vm - vf:.17g}"
        )
    return {
        "config": {
            "model": req.model.echo(),
            "kernel": req.kernel.model_dump(),
            "maturity": req.maturity,
            "steps": req.steps,
        },
        "fractional": _smile_payload(sm_frac),
        "multifactor": _smile_payload(sm_multi),
        "diff_csv": "\n".join(lines) + "\n",
    }


@app.post("/price")
def price_endpoint(req: PriceRequest) -> dict:
    params = req.model.to_params()
    integration = req.integration.resolve()
    kern, _ = _build_kernel(req.kernel, params.hurst, params.horizon)
    try:
        sm_frac = smile(
            params, FractionalKernel(params.hurst), [req.k], req.maturity,
            req.steps, integration,
        )
        sm_multi = smile(params, kern, [req.k], req.maturity, req.steps, integration)
    except (ValueError, RuntimeError) as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    _, pf, vf = sm_frac.points[0]
    _, pm, vm = sm_multi.points[0]
    return {
        "config": {
            "model": req.model.echo(),
            "kernel": req.kernel.model_dump(),
            "k": req.k,
            "maturity": req.maturity,
            "steps": req.steps,
        },
        "fractional": {"price": pf, "iv": vf},
        "multifactor": {"price": pm, "iv": vm},
        "price_diff": pm - pf,
        "iv_diff": vm - vf,
    }


@app.post("/simulate")
def simulate_endpoint(req: SimulateRequest) -> dict:
    params = req.model.to_params()
    config = req.simulation.resolve()
    if not req.strikes:
        raise HTTPException(status_code=422, detail="strikes must not be empty")
    try:
        if config.scheme == "multifactor":
            kern, _ = _build_kernel(req.kernel, params.hurst, params.horizon)
            result = simulate_multifactor(params, kern, config, threads=req.threads)
        else:
            result = simulate_volterra_oracle(params, config, threads=req.threads)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    prices = []
    for k in req.strikes:
        price, se = mc_call_price(result, float(k), params.s0)
        prices.append({"k": float(k), "price": price, "std_error": se})
    payload = {
        "config": {
            "model": req.model.echo(),
            "kernel": req.kernel.model_dump() if config.scheme == "multifactor" else None,
            "simulation": config.to_dict(),
        },
        "prices": prices,
        "negative_fraction": result.negative_fraction,
        "mean_terminal_spot": float(result.terminal_spots.mean()),
        "mean_realized_variance": float(result.realized_variance.mean()),
    }
    if req.include_paths:
        payload["terminal_spots_csv"] = result.terminal_spots_csv()
    return payload


def _time_call(fn, repeats: int) -> float:
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


@app.post("/bench")
def bench_endpoint(req: BenchRequest) -> dict:
    params = req.model.to_params()
    z = 0.5 + 1j * np.linspace(1.0, 40.0, req.z_batch)
    rows = []
    adams_by_steps = {}
    for steps in req.steps_grid:
        seconds = _time_call(
            lambda: _solve_adams_batch(params, z, steps), req.repeats
        )
        adams_by_steps[steps] = seconds
        rows.append({"solver": "adams", "n": 0, "steps": steps, "seconds": seconds})
    multi_by = {}
    for n in req.factor_counts:
        kern = weights_from_partition(
            params.hurst, _partition_for("uniform_optimal", n, params.hurst, params.horizon)
        )
        for steps in req.steps_grid:
            seconds = _time_call(
                lambda: _solve_multifactor_batch(kern, params, z, steps), req.repeats
            )
            multi_by[(n, steps)] = seconds
            rows.append(
                {"solver": "multifactor", "n": n, "steps": steps, "seconds": seconds}
            )
    ratios = {}
    if 200 in adams_by_steps and 400 in adams_by_steps:
        ratios["adams_steps_400_over_200"] = adams_by_steps[400] / adams_by_steps[200]
    mid_n = req.factor_counts[len(req.factor_counts) // 2]
    if (mid_n, 400) in multi_by and (mid_n, 200) in multi_by:
        ratios["multifactor_steps_400_over_200"] = (
            multi_by[(mid_n, 400)] / multi_by[(mid_n, 200)]
        )
    if (500, 200) in multi_by and (100, 200) in multi_by:
        ratios["multifactor_n_500_over_100"] = (
            multi_by[(500, 200)] / multi_by[(100, 200)]
        )
    lines = ["solver,n,steps,seconds"]
    for r in rows:
        lines.append(f"{r['solver']},{r['n']},{r['steps']},{r['seconds']:.6g}")
    return {
        "config": {
            "model": req.model.echo(),
            "steps_grid": req.steps_grid,
            "factor_counts": req.factor_counts,
            "z_batch": req.z_batch,
            "repeats": req.repeats,
        },
        "rows": rows,
        "ratios": ratios,
        "csv": "\n".join(lines) + "\n",
    }
