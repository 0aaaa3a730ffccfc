"""Shared fixtures and independent reference oracles.

The oracles here deliberately avoid the library's own code paths: they use
mpmath/scipy quadrature and plain series so that frozen numbers in the
tests stay independent of the implementation under test.
"""

import mpmath
import pytest

from roughvol import ModelParams


@pytest.fixture
def benchmark_params() -> ModelParams:
    """The rough Heston setting used throughout the experiment suite."""
    return ModelParams(
        lam=0.3, rho=-0.7, nu=0.3, hurst=0.1, v0=0.02, theta=0.02, s0=1.0, horizon=1.0
    )


def ml_reference(alpha: float, beta: float, x: float) -> float:
    """High-precision Mittag-Leffler via mpmath Taylor with guard digits.

    The alternating series for x < 0 peaks at ~exp(|x|^(1/alpha)); the
    working precision absorbs that cancellation, so this is accurate for
    any argument where the term count stays sane (|x|^(1/alpha) <~ 300).
    """
    peak = float(abs(x) ** (1.0 / alpha))
    dps = 40 + int(0.4343 * peak)
    with mpmath.workdps(dps):
        a, b, xm = mpmath.mpf(alpha), mpmath.mpf(beta), mpmath.mpf(x)
        total = mpmath.mpf(0)
        k = 0
        while True:
            term = xm ** k / mpmath.gamma(a * k + b)
            total += term
            if k > 10 and abs(term) < mpmath.mpf(10) ** (-(dps - 5)) * max(1, abs(total)):
                return float(total)
            k += 1
            if k > 500_000:
                raise RuntimeError("reference series did not converge")


@pytest.fixture
def disabled_capture(capsys):
    """Context manager that lets a test print its summary line unconditionally."""
    return capsys.disabled
