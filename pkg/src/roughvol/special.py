"""Gamma, Mittag-Leffler, the fractional-kernel resolvent and forward variance.

The two-parameter Mittag-Leffler function is the only delicate piece: its
Taylor series is alternating for x < 0 with a peak term of magnitude
~exp(|x|^(1/alpha)), so plain float64 summation loses digits fast.  The
evaluation strategy here keeps everything to >= 10 significant digits on
the documented range:

* x >= 0: float64 Taylor sum (all terms positive, no cancellation).
* x < 0 with |x|^(1/alpha) below a crossover: Taylor sum in mpmath with
  just enough guard digits to absorb the cancellation.
* x < 0 beyond the crossover: algebraic asymptotic series
  -sum_k x^(-k)/Gamma(beta - alpha k), truncated at the smallest term;
  the optimal-truncation remainder is O(exp(-|x|^(1/alpha))), negligible
  past the crossover.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np
from scipy.special import rgamma

from .params import ModelParams

__all__ = [
    "X_MAX",
    "gamma_eval",
    "mittag_leffler",
    "frac_resolvent",
    "resolvent_integral",
    "forward_variance",
]

# Documented argument range for mittag_leffler.
X_MAX = 1.0e6

# Switch to the asymptotic series once |x|**(1/alpha) exceeds this; the
# remainder there is ~exp(-38) while the Taylor guard digits stay < 40.
_ASYMPTOTIC_CUT = 38.0

_LOG10_E = 0.4342944819032518


def gamma_eval(x: float) -> float:
    """Gamma function for x > 0."""
    if not x > 0.0:
        raise ValueError(f"gamma_eval requires x > 0, got {x}")
    return math.gamma(x)


def _ml_taylor_pos(alpha: float, beta: float, x: float) -> float:
    """Taylor sum for x >= 0 in float64; returns inf on overflow."""
    peak = x ** (1.0 / alpha)
    if peak > 740.0:
        # sum ~ exp(x^(1/alpha))/alpha, past float64 range
        return math.inf
    k_peak = peak / alpha
    log_x = math.log(x)
    total = 0.0
    k = 0
    while True:
        log_term = k * log_x - math.lgamma(alpha * k + beta)
        if log_term > 709.0:
            return math.inf
        term = math.exp(log_term)
        total += term
        if k > k_peak and term < 1e-18 * total:
            return total
        k += 1
        if k > 1_000_000:
            raise ArithmeticError(
                f"Mittag-Leffler series did not converge (alpha={alpha}, beta={beta}, x={x})"
            )


def _ml_taylor_neg_mp(alpha: float, beta: float, x: float) -> float:
    """Alternating Taylor sum with guard digits; |x|**(1/alpha) < crossover."""
    peak = (-x) ** (1.0 / alpha)
    dps = 20 + int(_LOG10_E * peak) + 1
    with mpmath.workdps(dps):
        xm = mpmath.mpf(x)
        # the Gamma arguments must be formed in working precision: float
        # rounding of alpha*k perturbs each huge near-peak term coherently
        # enough to poison the cancelled sum at ~1e-8
        am = mpmath.mpf(alpha)
        bm = mpmath.mpf(beta)
        total = mpmath.mpf(0)
        k_peak = peak / alpha
        eps = mpmath.mpf(10) ** (-(dps + 2))
        k = 0
        while True:
            term = xm ** k / mpmath.gamma(am * k + bm)
            total += term
            if k > k_peak and abs(term) < eps * max(1, abs(total)):
                return float(total)
            k += 1
            if k > 200_000:
                raise ArithmeticError(
                    f"Mittag-Leffler series did not converge (alpha={alpha}, beta={beta}, x={x})"
                )


def _ml_asymptotic_neg(alpha: float, beta: float, x: float) -> float:
    """Algebraic expansion for large negative x, optimally truncated."""
    terms = []
    x_pow = 1.0
    scale = 0.0
    tiny_run = 0
    for k in range(1, 501):
        x_pow /= x
        term = -x_pow * float(rgamma(beta - alpha * k))
        if not math.isfinite(term):
            break  # reciprocal-Gamma overflow: far past the optimal cutoff
        terms.append(term)
        if x_pow == 0.0:
            break  # x^{-k} underflowed: every remaining term is zero
        mag = abs(term)
        if scale == 0.0:
            scale = mag
        # require two consecutive negligible terms: a single dip can be a
        # near-pole of Gamma where the term vanishes but the tail does not
        if 0.0 < mag < 1e-25 * scale:
            tiny_run += 1
            if tiny_run >= 2:
                return math.fsum(terms)
        else:
            tiny_run = 0
    # the expansion diverges past its smallest terms: truncate where the
    # two-term magnitude envelope bottoms out (the envelope rides over the
    # vanishing terms at Gamma poles, which are not true convergence)
    mags = [abs(t) for t in terms]
    env = [max(mags[i], mags[i + 1]) for i in range(len(mags) - 1)]
    k_opt = min(range(len(env)), key=env.__getitem__)
    return math.fsum(terms[: k_opt + 1])


def mittag_leffler(alpha: float, beta: float, x: float) -> float:
    """Two-parameter Mittag-Leffler function E_{alpha,beta}(x) for real x.

    Parameters
    ----------
    alpha : float in (0, 1]
    beta : float > 0
    x : float with |x| <= X_MAX (1e6)

    Returns
    -------
    float
        E_{alpha,beta}(x) = sum_k x^k / Gamma(alpha k + beta), accurate to
        >= 10 significant digits wherever the value is representable in
        float64 (math.inf is returned on overflow for large positive x).

    Notes
    -----
    The single-index function of the fractional-resolvent literature,
    often written E_alpha, is E_{alpha,alpha} here; pass beta=alpha.
    For alpha = 1 with integer beta >= 3 and large negative x the value is
    exponentially small and only absolute accuracy ~exp(x) is attainable.
    """
    alpha = float(alpha)
    beta = float(beta)
    x = float(x)
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if not beta > 0.0:
        raise ValueError(f"beta must be > 0, got {beta}")
    if not abs(x) <= X_MAX:
        raise ValueError(f"|x| must be <= {X_MAX:g}, got {x}")
    if x == 0.0:
        return 1.0 / math.gamma(beta)
    if alpha == 1.0:
        if beta == 1.0:
            return math.exp(x)
        if beta == 2.0:
            return math.expm1(x) / x
    if x > 0.0:
        return _ml_taylor_pos(alpha, beta, x)
    if (-x) ** (1.0 / alpha) >= _ASYMPTOTIC_CUT:
        return _ml_asymptotic_neg(alpha, beta, x)
    return _ml_taylor_neg_mp(alpha, beta, x)


def frac_resolvent(alpha: float, lam: float, t: float) -> float:
    """Canonical resolvent of the fractional kernel: t^(alpha-1) E_{alpha,alpha}(-lam t^alpha).

    ``alpha`` in (1/2, 1]; alpha = 1 gives the classical exp(-lam t).
    """
    alpha = float(alpha)
    if not 0.5 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (1/2, 1], got {alpha}")
    if lam < 0.0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    if not t > 0.0:
        raise ValueError(f"t must be > 0, got {t}")
    return t ** (alpha - 1.0) * mittag_leffler(alpha, alpha, -lam * t ** alpha)


def resolvent_integral(alpha: float, lam: float, t: float) -> float:
    """int_0^t of the resolvent: t^alpha E_{alpha,alpha+1}(-lam t^alpha); 0 at t=0."""
    alpha = float(alpha)
    if not 0.5 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (1/2, 1], got {alpha}")
    if lam < 0.0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    if t < 0.0:
        raise ValueError(f"t must be >= 0, got {t}")
    if t == 0.0:
        return 0.0
    return t ** alpha * mittag_leffler(alpha, alpha + 1.0, -lam * t ** alpha)


def forward_variance(params: ModelParams, t: float) -> float:
    """Expected variance E[V_t] of the rough Heston model.

    Evaluates V0 E_alpha(-lam t^alpha) + int_0^t R(t-s) theta(s) ds with R
    the canonical resolvent of the fractional kernel: the unique solution
    of the linear equation E[V] = V0 + K * (theta - lam E[V]) satisfied by
    the first moment.  Piecewise-constant theta makes the integral a
    telescoping difference of resolvent integrals, which are exact
    Mittag-Leffler evaluations (no quadrature, endpoint singularity
    included analytically).
    """
    t = float(t)
    if not 0.0 <= t <= params.horizon:
        raise ValueError(f"t must lie in [0, {params.horizon}], got {t}")
    if t == 0.0:
        return params.v0
    alpha = params.alpha
    acc = params.v0 * mittag_leffler(alpha, 1.0, -params.lam * t ** alpha)
    for a, b, value in params.theta.segments(t):
        if value == 0.0:
            continue
        # int over s in [a,b] of R(t-s) = G(t-a) - G(t-b), G = resolvent_integral
        acc += value * (
            resolvent_integral(alpha, params.lam, t - a)
            - resolvent_integral(alpha, params.lam, t - b)
        )
    return acc


def forward_variance_curve(params: ModelParams, times: np.ndarray) -> np.ndarray:
    """Vectorized convenience wrapper around :func:`forward_variance`."""
    return np.array([forward_variance(params, float(t)) for t in np.asarray(times)])
