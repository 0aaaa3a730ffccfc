"""Tests for the fractional kernel, its exponential-sum approximation and
the error functionals.  Frozen reference values were produced by
high-precision mpmath quadrature/summation oracles; structural properties
are checked against scipy quadrature and independent 1-d minimization.
"""

import json
import math
import warnings

import mpmath
import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

from roughvol.kernels import (
    FractionalKernel,
    MultiFactorKernel,
    Partition,
    f1_bound,
    f2_bound,
    frac_kernel_eval,
    kernel_eval,
    l1_error,
    l2_error,
    mu_density,
    optimal_step,
    optimize_partition,
    optimize_partition_detailed,
    uniform_partition,
    weights_from_partition,
)


def _gg(alpha):
    return math.gamma(alpha) * math.gamma(1.0 - alpha)


def _random_partition(rng, n_max=8):
    n = int(rng.integers(1, n_max + 1))
    incr = rng.uniform(0.05, 2.0, size=n)
    return Partition(tuple(np.concatenate([[0.0], np.cumsum(incr)])))


def test_frac_kernel_frozen_values():
    k01 = FractionalKernel(0.1)
    assert frac_kernel_eval(k01, 1.0) == pytest.approx(0.67150497244207336, rel=1e-13)
    assert frac_kernel_eval(k01, 4.0) == pytest.approx(0.3856783286082695, rel=1e-13)
    assert frac_kernel_eval(k01, 0.25) == pytest.approx(1.1691580640311906, rel=1e-13)
    k025 = FractionalKernel(0.25)
    assert frac_kernel_eval(k025, 0.5) == pytest.approx(0.97045120456607654, rel=1e-13)


def test_frac_kernel_validation():
    for bad in (0.0, 0.5, 0.6, -0.1):
        with pytest.raises(ValueError):
            FractionalKernel(bad)
    with pytest.raises(ValueError):
        FractionalKernel(0.1, classical=True)
    k = FractionalKernel(0.1)
    with pytest.raises(ValueError):
        k.evaluate(0.0)
    with pytest.raises(ValueError):
        k.evaluate(np.array([0.5, -1.0]))
    classical = FractionalKernel(0.5, classical=True)
    assert classical.evaluate(0.3) == 1.0
    assert np.all(classical.evaluate(np.array([0.1, 2.0])) == 1.0)


def test_mu_density_frozen_and_validation():
    assert mu_density(0.1, 1.0) == pytest.approx(0.30273069145626279, rel=1e-13)
    assert mu_density(0.1, 16.0) == pytest.approx(0.057356740528925668, rel=1e-13)
    with pytest.raises(ValueError):
        mu_density(0.1, 0.0)
    with pytest.raises(ValueError):
        mu_density(0.5, 1.0)


def test_weights_frozen_two_cell():
    kern = weights_from_partition(0.1, Partition((0.0, 1.0, 2.0)))
    assert kern.weights[0] == pytest.approx(0.75682672864064258, rel=1e-13)
    assert kern.rates[0] == pytest.approx(2.0 / 7.0, rel=1e-13)
    assert kern.weights[1] == pytest.approx(0.24181212688506049, rel=1e-13)
    assert kern.rates[1] == pytest.approx(1.465660845750477, rel=1e-13)
    assert kern.hurst == 0.1


def test_weights_match_measure_moments_quadrature():
    # c_i must equal the cell mass of mu and gamma_i the cell mean rate
    for seed in range(5):
        rng = np.random.default_rng(seed)
        hurst = float(rng.uniform(0.05, 0.45))
        part = _random_partition(rng, n_max=5)
        kern = weights_from_partition(hurst, part)
        alpha = hurst + 0.5
        norm = 1.0 / _gg(alpha)
        for i, (lo, hi) in enumerate(zip(part.etas, part.etas[1:])):
            if lo == 0.0:
                m0 = quad(lambda g: norm, 0.0, hi, weight="alg", wvar=(-alpha, 0))[0]
                m1 = quad(lambda g: norm * g, 0.0, hi, weight="alg", wvar=(-alpha, 0))[0]
            else:
                m0 = quad(lambda g: norm * g ** -alpha, lo, hi)[0]
                m1 = quad(lambda g: norm * g ** (1.0 - alpha), lo, hi)[0]
            assert kern.weights[i] == pytest.approx(m0, rel=1e-10)
            assert kern.rates[i] == pytest.approx(m1 / m0, rel=1e-10)


def test_weights_degenerate_cell_raises():
    etas = (0.0, 1.0, np.nextafter(1.0, 2.0))
    with pytest.raises(ValueError):
        weights_from_partition(0.1, Partition(etas))


def test_uniform_partition_and_validation():
    part = uniform_partition(4, 0.5)
    assert part.etas == (0.0, 0.5, 1.0, 1.5, 2.0)
    assert part.n == 4
    with pytest.raises(ValueError):
        uniform_partition(0, 0.5)
    with pytest.raises(ValueError):
        uniform_partition(3, 0.0)
    with pytest.raises(ValueError):
        Partition((0.0,))
    with pytest.raises(ValueError):
        Partition((0.1, 1.0))
    with pytest.raises(ValueError):
        Partition((0.0, 1.0, 1.0))


def test_optimal_step_frozen():
    assert optimal_step(20, 1.0, 0.1) == pytest.approx(0.42514150020859694, rel=1e-13)
    assert optimal_step(100, 1.0, 0.1) == pytest.approx(0.30813391353661782, rel=1e-13)
    assert optimal_step(500, 1.0, 0.1) == pytest.approx(0.22332919422076198, rel=1e-13)
    with pytest.raises(ValueError):
        optimal_step(0, 1.0, 0.1)
    with pytest.raises(ValueError):
        optimal_step(5, -1.0, 0.1)


def test_optimal_step_minimizes_bound_estimate():
    # independent 1-d minimization of the uniform-grid estimate of the L2
    # bound: variance bounded by step^2 x cell mass, plus the measure tail
    def argmin_step(n, T, hurst):
        alpha = hurst + 0.5
        gg = _gg(alpha)

        def h(step):
            eta = n * step
            mass = eta ** (1.0 - alpha) / ((1.0 - alpha) * gg)
            tail = eta ** -hurst / (hurst * gg * math.sqrt(2.0))
            return (T ** 2.5 / (2.0 * math.sqrt(5.0))) * step * step * mass + tail

        res = minimize_scalar(h, bounds=(1e-4, 50.0), method="bounded", options={"xatol": 1e-12})
        return res.x

    for n, T, hurst in [(20, 1.0, 0.1), (7, 2.0, 0.3), (100, 0.5, 0.05)]:
        assert optimal_step(n, T, hurst) == pytest.approx(argmin_step(n, T, hurst), rel=1e-6)


def test_kernel_eval_matches_hand_sum():
    kern = MultiFactorKernel((0.7, 0.3), (0.5, 4.0), 0.1)
    for t in (0.0, 0.3, 2.0):
        expected = 0.7 * math.exp(-0.5 * t) + 0.3 * math.exp(-4.0 * t)
        assert kernel_eval(kern, t) == pytest.approx(expected, rel=1e-15)
    arr = kernel_eval(kern, np.array([0.0, 0.3, 2.0]))
    assert arr.shape == (3,)
    assert arr[1] == pytest.approx(kernel_eval(kern, 0.3), rel=1e-15)
    empty = MultiFactorKernel((), (), 0.1)
    assert kernel_eval(empty, 1.0) == 0.0
    with pytest.raises(ValueError):
        kernel_eval(kern, -0.5)


def test_multifactor_validation():
    with pytest.raises(ValueError):
        MultiFactorKernel((1.0,), (1.0, 2.0), 0.1)
    with pytest.raises(ValueError):
        MultiFactorKernel((0.0,), (1.0,), 0.1)
    with pytest.raises(ValueError):
        MultiFactorKernel((1.0,), (0.0,), 0.1)
    with pytest.raises(ValueError):
        MultiFactorKernel((1.0, 1.0), (2.0, 2.0), 0.1)


def test_l2_frozen_values():
    empty = MultiFactorKernel((), (), 0.1)
    assert l2_error(empty, 0.1, 1.0) == pytest.approx(1.501530765609599, rel=1e-12)
    kern = weights_from_partition(0.1, Partition((0.0, 1.0, 2.0)))
    assert l2_error(kern, 0.1, 1.0) == pytest.approx(1.0067726431770483, rel=1e-12)
    with pytest.raises(ValueError):
        l2_error(kern, 0.1, 0.0)


def test_l2_matches_quadrature_random():
    # substituting u = t^(2H) removes the endpoint singularity of the
    # squared difference, so tanh-sinh quadrature reaches full precision
    mpmath.mp.dps = 30
    for seed in range(3):
        rng = np.random.default_rng(100 + seed)
        hurst = float(rng.uniform(0.05, 0.45))
        T = float(rng.uniform(0.5, 2.0))
        part = _random_partition(rng, n_max=6)
        kern = weights_from_partition(hurst, part)
        alpha = hurst + 0.5
        c, g = kern.weights, kern.rates
        h2 = 2.0 * hurst

        def integrand(u):
            if u == 0:
                return 1.0 / (h2 * mpmath.gamma(alpha) ** 2)
            t = u ** (1.0 / h2)
            kn = mpmath.fsum(ci * mpmath.e ** (-gi * t) for ci, gi in zip(c, g))
            d = t ** (alpha - 1.0) / mpmath.gamma(alpha) - kn
            return d * d * t / (h2 * u)

        oracle = math.sqrt(float(mpmath.quad(integrand, [0, mpmath.mpf(T) ** h2])))
        assert l2_error(kern, hurst, T) == pytest.approx(oracle, rel=1e-11)


def test_l1_frozen_values():
    empty = MultiFactorKernel((), (), 0.1)
    assert l1_error(empty, 0.1, 1.0) == pytest.approx(1.1191749540701223, rel=1e-12)
    assert l1_error(empty, 0.1, 1.0) == pytest.approx(1.0 / math.gamma(1.6), rel=1e-13)
    kern = weights_from_partition(0.1, Partition((0.0, 1.0, 2.0)))
    assert l1_error(kern, 0.1, 1.0) == pytest.approx(0.333978937094918, rel=1e-12)


def test_l1_sign_change_roots():
    # 2 e^-t crosses the H=0.1 kernel once before t=1 and again near 1.146
    kern = MultiFactorKernel((2.0,), (1.0,), 0.1)
    assert l1_error(kern, 0.1, 1.0) == pytest.approx(0.32932467440293506, rel=1e-12)
    assert l1_error(kern, 0.1, 2.0) == pytest.approx(0.4505948633752269, rel=1e-12)
    # with sign changes the L1 error strictly exceeds the plain integral
    alpha = 0.6
    plain = abs(1.0 / math.gamma(alpha + 1.0) - 2.0 * (1.0 - math.exp(-1.0)))
    assert l1_error(kern, 0.1, 1.0) > plain + 1e-3


def test_l1_moment_matched_no_crossing():
    # moment matching keeps K^n below K, so L1 equals the plain integral
    for seed in range(3):
        rng = np.random.default_rng(200 + seed)
        hurst = float(rng.uniform(0.05, 0.45))
        part = _random_partition(rng, n_max=6)
        kern = weights_from_partition(hurst, part)
        frac = FractionalKernel(hurst)
        grid = np.exp(np.linspace(math.log(1e-9), 0.0, 2001))
        assert np.all(kern.evaluate(grid) < frac.evaluate(grid))
        alpha = hurst + 0.5
        c, g = np.asarray(kern.weights), np.asarray(kern.rates)
        plain = 1.0 / math.gamma(alpha + 1.0) + float((np.expm1(-g) / g) @ c)
        assert l1_error(kern, hurst, 1.0) == pytest.approx(plain, rel=1e-12)


def test_bounds_dominate_errors_random():
    for seed in range(10):
        rng = np.random.default_rng(300 + seed)
        hurst = float(rng.uniform(0.05, 0.45))
        T = float(rng.uniform(0.5, 2.0))
        part = _random_partition(rng)
        kern = weights_from_partition(hurst, part)
        assert l2_error(kern, hurst, T) <= f2_bound(hurst, T, part)
        assert l1_error(kern, hurst, T) <= f1_bound(hurst, T, part)


def test_bound_scaling_identity():
    # doubling all etas scales the variance term by 2^(3-alpha) and the
    # tail terms by 2^-H (f2) and 2^-alpha (f1)
    rng = np.random.default_rng(7)
    part = _random_partition(rng, n_max=6)
    doubled = Partition(tuple(2.0 * e for e in part.etas))
    for hurst, T in [(0.1, 1.0), (0.3, 1.7)]:
        alpha = hurst + 0.5
        eta_n = part.etas[-1]
        tail2 = eta_n ** -hurst / (hurst * _gg(alpha) * math.sqrt(2.0))
        tail1 = eta_n ** (-alpha) / (math.gamma(alpha + 1.0) * math.gamma(1.0 - alpha))
        got2 = f2_bound(hurst, T, doubled)
        want2 = 2.0 ** (3.0 - alpha) * (f2_bound(hurst, T, part) - tail2) + 2.0 ** -hurst * tail2
        assert got2 == pytest.approx(want2, rel=1e-12)
        got1 = f1_bound(hurst, T, doubled)
        want1 = 2.0 ** (3.0 - alpha) * (f1_bound(hurst, T, part) - tail1) + 2.0 ** -alpha * tail1
        assert got1 == pytest.approx(want1, rel=1e-12)


def test_bounds_frozen_uniform_optimal():
    part = uniform_partition(20, optimal_step(20, 1.0, 0.1))
    assert f2_bound(0.1, 1.0, part) == pytest.approx(1.73420294764826, rel=1e-12)
    assert f1_bound(0.1, 1.0, part) == pytest.approx(0.14419129156102, rel=1e-12)


def test_optimizer_n1_matches_scalar_oracle():
    for objective in ("f2", "f1"):
        part, value, _, _ = optimize_partition_detailed(1, 0.1, 1.0, objective)
        bound = f2_bound if objective == "f2" else f1_bound

        def cost(log_eta):
            return bound(0.1, 1.0, Partition((0.0, math.exp(log_eta))))

        res = minimize_scalar(cost, bounds=(-5.0, 8.0), method="bounded", options={"xatol": 1e-12})
        assert value == pytest.approx(res.fun, rel=1e-6)
        assert bound(0.1, 1.0, part) == pytest.approx(value, rel=1e-12)


def test_optimizer_improves_uniform():
    part, value, improved, seed_value = optimize_partition_detailed(20, 0.1, 1.0, "f2")
    assert improved
    assert value < seed_value
    assert part.n == 20
    assert f2_bound(0.1, 1.0, part) == pytest.approx(value, rel=1e-12)
    with warnings.catch_warnings():
        warnings.simplefilter("error", RuntimeWarning)
        same = optimize_partition(20, 0.1, 1.0, "f2")
    assert same.etas == part.etas


def test_optimizer_objective_ordering():
    f1opt, v1, _, _ = optimize_partition_detailed(10, 0.1, 1.0, "f1")
    f2opt, v2, _, _ = optimize_partition_detailed(10, 0.1, 1.0, "f2")
    assert f1_bound(0.1, 1.0, f1opt) <= f1_bound(0.1, 1.0, f2opt) * (1.0 + 1e-9)
    assert f2_bound(0.1, 1.0, f2opt) <= f2_bound(0.1, 1.0, f1opt) * (1.0 + 1e-9)
    assert v1 == pytest.approx(f1_bound(0.1, 1.0, f1opt), rel=1e-12)
    assert v2 == pytest.approx(f2_bound(0.1, 1.0, f2opt), rel=1e-12)


def test_optimizer_validation():
    with pytest.raises(ValueError):
        optimize_partition_detailed(0, 0.1, 1.0)
    with pytest.raises(ValueError):
        optimize_partition_detailed(5, 0.1, 1.0, "f3")
    with pytest.raises(ValueError):
        optimize_partition_detailed(5, 0.7, 1.0)


def test_serialization_roundtrips():
    part = Partition((0.0, 0.5, 2.0))
    blob = json.loads(json.dumps(part.to_jsonable(hurst=0.1)))
    assert blob["hurst"] == 0.1
    assert Partition.from_jsonable(blob) == part
    kern = weights_from_partition(0.1, part)
    blob = json.loads(json.dumps(kern.to_jsonable()))
    assert MultiFactorKernel.from_jsonable(blob) == kern


def test_errors_decrease_with_n():
    errs2, errs1 = [], []
    for n in (5, 20):
        part = uniform_partition(n, optimal_step(n, 1.0, 0.1))
        kern = weights_from_partition(0.1, part)
        errs2.append(l2_error(kern, 0.1, 1.0))
        errs1.append(l1_error(kern, 0.1, 1.0))
    assert errs2[1] < errs2[0]
    assert errs1[1] < errs1[0]
