"""Path simulation of the factor model and a rough Volterra Euler oracle.

The factor scheme integrates each mean-reverting factor by exponential
Euler with full-truncation regularization of the variance, and the spot by
exact log-Euler.  The Volterra oracle discretizes the integral equation
for the variance directly (left-point Euler with panel-averaged kernel
weights), which costs O(steps^2) per path batch and exists to cross-check
the factor scheme in distribution.

Every path owns an independent counter-based random stream keyed by the
seed and indexed by the path (pair index when antithetic), so serial,
chunked and threaded runs produce identical output bytes.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .kernels import FractionalKernel, MultiFactorKernel
from .params import ModelParams
from .riccati import g_curve

__all__ = [
    "SimulationConfig",
    "SimulationResult",
    "simulate_multifactor",
    "simulate_volterra_oracle",
    "mc_call_price",
]

_SCHEMES = ("multifactor", "volterra_oracle")
_VOLTERRA_STEP_CAP = 2000
_CHUNK = 4096


@dataclass(frozen=True)
class SimulationConfig:
    """Simulation run settings.

    Attributes
    ----------
    n_paths : int
        Paths to simulate, >= 1 (even when antithetic).
    steps : int
        Uniform time steps on [0, horizon].
    seed : int
        64-bit unsigned stream key.
    scheme : {'multifactor', 'volterra_oracle'}
    antithetic : bool
        Pair consecutive paths with mirrored normal draws.
    snapshot_every : int
        Record (S, V, factors) every this many steps for the first
        ``snapshot_paths`` paths; 0 disables snapshots.
    snapshot_paths : int
        Paths retained in the snapshot block.
    """

    n_paths: int
    steps: int
    seed: int
    scheme: str = "multifactor"
    antithetic: bool = False
    snapshot_every: int = 0
    snapshot_paths: int = 8

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError(f"n_paths must be >= 1, got {self.n_paths}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit an unsigned 64-bit integer")
        if self.scheme not in _SCHEMES:
            raise ValueError(f"scheme must be one of {_SCHEMES}, got {self.scheme!r}")
        if self.antithetic and self.n_paths % 2:
            raise ValueError("antithetic pairing needs an even n_paths")
        if self.snapshot_every < 0:
            raise ValueError("snapshot_every must be >= 0")
        if self.snapshot_paths < 0:
            raise ValueError("snapshot_paths must be >= 0")

    def to_dict(self) -> dict:
        return {
            "n_paths": self.n_paths,
            "steps": self.steps,
            "seed": self.seed,
            "scheme": self.scheme,
            "antithetic": self.antithetic,
            "snapshot_every": self.snapshot_every,
            "snapshot_paths": self.snapshot_paths,
        }


@dataclass(frozen=True, eq=False)
class SimulationResult:
    """Simulated ensemble.

    Attributes
    ----------
    config : SimulationConfig
    terminal_spots : ndarray
        S_T per path, > 0.
    terminal_variance : ndarray
        Raw V_T per path (may be slightly negative at O(delta) size; the
        diffusion always consumed the truncated value).
    realized_variance : ndarray
        Left-point Riemann sum of the raw variance states per path; the
        raw sum is the unbiased discrete analogue of the time integral of
        V (truncating first would add the truncation mass as bias).
    negative_fraction : float
        Fraction of (path, step) variance states that went negative
        before truncation.
    snapshot_times, snapshot_spots, snapshot_variance, snapshot_factors
        Thinned-grid recordings for the first paths, or None when
        snapshots were disabled (factors are None for the Volterra
        scheme as well).  Stored variance snapshots are truncated at 0.
    """

    config: SimulationConfig
    terminal_spots: np.ndarray
    terminal_variance: np.ndarray
    realized_variance: np.ndarray
    negative_fraction: float
    snapshot_times: np.ndarray | None = None
    snapshot_spots: np.ndarray | None = None
    snapshot_variance: np.ndarray | None = None
    snapshot_factors: np.ndarray | None = None

    def terminal_spots_csv(self) -> str:
        buf = io.StringIO()
        buf.write("terminal_spot\n")
        for s in self.terminal_spots:
            buf.write(f"{s:.17g}\n")
        return buf.getvalue()


def _chunk_normals(seed: int, steps: int, start: int, stop: int, antithetic: bool):
    """Per-path standard normals, rows (xi_W, xi_perp); mirrored pairs."""
    out = np.empty((stop - start, 2, steps))
    if antithetic:
        for pair in range(start // 2, stop // 2):
            rng = np.random.Generator(np.random.Philox(key=seed).jumped(pair))
            draw = rng.standard_normal((2, steps))
            out[2 * pair - start] = draw
            out[2 * pair + 1 - start] = -draw
    else:
        for path in range(start, stop):
            rng = np.random.Generator(np.random.Philox(key=seed).jumped(path))
            out[path - start] = rng.standard_normal((2, steps))
    return out


class _SnapshotSink:
    """Preallocated snapshot block written by whichever chunks own the paths."""

    def __init__(self, config: SimulationConfig, grid: np.ndarray, n_factors: int):
        self.every = config.snapshot_every
        self.n_keep = min(config.snapshot_paths, config.n_paths) if self.every else 0
        if not self.n_keep:
            self.nodes = None
            return
        self.nodes = np.arange(0, config.steps + 1, self.every)
        self.index_of = {int(n): i for i, n in enumerate(self.nodes)}
        self.times = grid[self.nodes]
        m = self.nodes.shape[0]
        self.spots = np.empty((self.n_keep, m))
        self.variance = np.empty((self.n_keep, m))
        self.factors = np.empty((self.n_keep, m, n_factors)) if n_factors else None

    def record(self, node, start, logs, v, y=None):
        if not self.n_keep or start >= self.n_keep:
            return
        col = self.index_of.get(int(node))
        if col is None:
            return
        take = min(self.n_keep - start, logs.shape[0])
        rows = slice(start, start + take)
        self.spots[rows, col] = np.exp(logs[:take])
        self.variance[rows, col] = np.maximum(v[:take], 0.0)
        if self.factors is not None and y is not None:
            self.factors[rows, col, :] = y[:take]


def _run_chunks(worker, n_paths: int, threads: int) -> int:
    """Run worker(idx, start, stop) over path chunks; returns chunk count."""
    spans = [
        (i, s, min(s + _CHUNK, n_paths))
        for i, s in enumerate(range(0, n_paths, _CHUNK))
    ]
    if threads <= 1 or len(spans) == 1:
        for span in spans:
            worker(*span)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda sp: worker(*sp), spans))
    return len(spans)


def simulate_multifactor(
    params: ModelParams,
    kernel: MultiFactorKernel,
    config: SimulationConfig,
    threads: int = 1,
) -> SimulationResult:
    """Simulate the n-factor model by exponential Euler with full truncation.

    Per step of size delta, with V+ = max(V, 0) at the current node:
    each factor gets e^{-gamma_i delta} decay, the drift increment
    ((1 - e^{-gamma_i delta})/gamma_i)(-lambda V+), and the shared
    diffusion increment sqrt(delta) nu sqrt(V+) xi_B; the variance is
    reassembled as g^n(t) + sum_i c_i V^{n,i}; the log-spot moves by
    -V+ delta/2 + sqrt(V+ delta) xi_W with corr(xi_W, xi_B) = rho.

    Parameters
    ----------
    params : ModelParams
    kernel : MultiFactorKernel
        Factor weights and mean-reversion rates; must match params.hurst.
    config : SimulationConfig
        scheme must be 'multifactor'.
    threads : int
        Worker threads over path chunks; any value yields identical output.

    Returns
    -------
    SimulationResult
    """
    if config.scheme != "multifactor":
        raise ValueError(f"config.scheme must be 'multifactor', got {config.scheme!r}")
    if kernel.hurst != params.hurst:
        raise ValueError("kernel hurst does not match model hurst")
    if kernel.n < 1:
        raise ValueError("need at least one factor")
    steps = config.steps
    delta = params.horizon / steps
    grid = np.linspace(0.0, params.horizon, steps + 1)
    g_vals = g_curve(params, kernel, "standard", grid)
    c = np.asarray(kernel.weights)
    gam = np.asarray(kernel.rates)
    decay = np.exp(-gam * delta)
    drift_w = -np.expm1(-gam * delta) / gam
    sq_delta = math.sqrt(delta)
    rho_perp = math.sqrt(max(1.0 - params.rho ** 2, 0.0))

    spots = np.empty(config.n_paths)
    vterm = np.empty(config.n_paths)
    rvar = np.empty(config.n_paths)
    neg_counts = np.zeros(-(-config.n_paths // _CHUNK), dtype=np.int64)
    sink = _SnapshotSink(config, grid, kernel.n)

    def worker(idx, start, stop):
        xi = _chunk_normals(config.seed, steps, start, stop, config.antithetic)
        xw = xi[:, 0, :]
        xb = params.rho * xw + rho_perp * xi[:, 1, :]
        npath = stop - start
        y = np.zeros((npath, kernel.n))
        v = np.full(npath, g_vals[0])
        logs = np.full(npath, math.log(params.s0))
        rv = np.zeros(npath)
        neg = 0
        sink.record(0, start, logs, v, y)
        for k in range(steps):
            vp = np.maximum(v, 0.0)
            rv += v * delta
            logs += -0.5 * vp * delta + np.sqrt(vp * delta) * xw[:, k]
            shock = params.nu * np.sqrt(vp) * sq_delta * xb[:, k]
            y = decay * y + (-params.lam * vp)[:, None] * drift_w + shock[:, None]
            v = g_vals[k + 1] + y @ c
            neg += int(np.count_nonzero(v < 0.0))
            sink.record(k + 1, start, logs, v, y)
        spots[start:stop] = np.exp(logs)
        vterm[start:stop] = v
        rvar[start:stop] = rv
        neg_counts[idx] = neg

    _run_chunks(worker, config.n_paths, threads)
    return SimulationResult(
        config=config,
        terminal_spots=spots,
        terminal_variance=vterm,
        realized_variance=rvar,
        negative_fraction=float(neg_counts.sum() / (config.n_paths * steps)),
        snapshot_times=sink.times if sink.nodes is not None else None,
        snapshot_spots=sink.spots if sink.nodes is not None else None,
        snapshot_variance=sink.variance if sink.nodes is not None else None,
        snapshot_factors=sink.factors if sink.nodes is not None else None,
    )


def _volterra_weights(alpha: float, steps: int, delta: float) -> np.ndarray:
    m = np.arange(steps + 1, dtype=float) * delta
    return (m[1:] ** alpha - m[:-1] ** alpha) / (delta * math.gamma(alpha + 1.0))


def _g_grid_volterra(params: ModelParams, kernel: FractionalKernel, grid: np.ndarray):
    if kernel.classical:
        return params.v0 + np.array([params.theta.integral(float(t)) for t in grid])
    return g_curve(params, kernel, "standard", grid)


def simulate_volterra_oracle(
    params: ModelParams, config: SimulationConfig, threads: int = 1
) -> SimulationResult:
    """Simulate the variance integral equation directly (left-point Euler).

    V(t_{k+1}) = g(t_{k+1}) + sum_{j<=k} w_{k+1-j} (-lambda V+(t_j) delta
    + nu sqrt(V+(t_j)) dB_j), where w_m averages the singular kernel over
    the panel [(m-1) delta, m delta] instead of sampling it at a point.
    At hurst = 1/2 the weights collapse to 1 and the recursion telescopes
    to the classical square-root-diffusion Euler scheme.

    Parameters
    ----------
    params : ModelParams
    config : SimulationConfig
        scheme must be 'volterra_oracle'; steps capped at 2000 because the
        history sum makes the cost quadratic in steps.
    threads : int
        Worker threads over path chunks.

    Returns
    -------
    SimulationResult
    """
    if config.scheme != "volterra_oracle":
        raise ValueError(
            f"config.scheme must be 'volterra_oracle', got {config.scheme!r}"
        )
    if config.steps > _VOLTERRA_STEP_CAP:
        raise ValueError(
            f"steps must be <= {_VOLTERRA_STEP_CAP} for the Volterra oracle, "
            f"got {config.steps}"
        )
    kernel = FractionalKernel(params.hurst, classical=params.hurst == 0.5)
    steps = config.steps
    delta = params.horizon / steps
    grid = np.linspace(0.0, params.horizon, steps + 1)
    g_vals = _g_grid_volterra(params, kernel, grid)
    w = _volterra_weights(params.alpha, steps, delta)
    sq_delta = math.sqrt(delta)
    rho_perp = math.sqrt(max(1.0 - params.rho ** 2, 0.0))

    spots = np.empty(config.n_paths)
    vterm = np.empty(config.n_paths)
    rvar = np.empty(config.n_paths)
    neg_counts = np.zeros(-(-config.n_paths // _CHUNK), dtype=np.int64)
    sink = _SnapshotSink(config, grid, 0)

    def worker(idx, start, stop):
        xi = _chunk_normals(config.seed, steps, start, stop, config.antithetic)
        xw = xi[:, 0, :]
        xb = params.rho * xw + rho_perp * xi[:, 1, :]
        npath = stop - start
        shocks = np.empty((npath, steps))
        v = np.full(npath, g_vals[0])
        logs = np.full(npath, math.log(params.s0))
        rv = np.zeros(npath)
        neg = 0
        sink.record(0, start, logs, v)
        for k in range(steps):
            vp = np.maximum(v, 0.0)
            rv += v * delta
            logs += -0.5 * vp * delta + np.sqrt(vp * delta) * xw[:, k]
            shocks[:, k] = -params.lam * vp * delta + params.nu * np.sqrt(vp) * sq_delta * xb[:, k]
            v = g_vals[k + 1] + shocks[:, : k + 1] @ w[k::-1]
            neg += int(np.count_nonzero(v < 0.0))
            sink.record(k + 1, start, logs, v)
        spots[start:stop] = np.exp(logs)
        vterm[start:stop] = v
        rvar[start:stop] = rv
        neg_counts[idx] = neg

    _run_chunks(worker, config.n_paths, threads)
    return SimulationResult(
        config=config,
        terminal_spots=spots,
        terminal_variance=vterm,
        realized_variance=rvar,
        negative_fraction=float(neg_counts.sum() / (config.n_paths * steps)),
        snapshot_times=sink.times if sink.nodes is not None else None,
        snapshot_spots=sink.spots if sink.nodes is not None else None,
        snapshot_variance=sink.variance if sink.nodes is not None else None,
        snapshot_factors=None,
    )


def mc_call_price(result: SimulationResult, k: float, s0: float):
    """Monte Carlo call price and standard error from terminal spots.

    Antithetic ensembles are averaged pairwise first, so the standard
    error reflects the number of independent pairs.

    Parameters
    ----------
    result : SimulationResult
    k : float
        Log-moneyness log(K/s0).
    s0 : float
        Spot the strike is quoted against.

    Returns
    -------
    (price, std_error) : tuple of float
    """
    spots = np.asarray(result.terminal_spots, dtype=float)
    if spots.size == 0:
        raise ValueError("result has no terminal spots")
    payoff = np.maximum(spots - s0 * math.exp(k), 0.0)
    if result.config.antithetic:
        payoff = 0.5 * (payoff[0::2] + payoff[1::2])
    mean = float(payoff.mean())
    se = float(payoff.std(ddof=1) / math.sqrt(payoff.size)) if payoff.size > 1 else 0.0
    return mean, se
