"""Multi-factor Markovian approximation of rough volatility models.

Sum-of-exponentials approximations of the fractional kernel, Riccati
solvers for the rough Heston characteristic function (fractional Adams
and multi-factor exponential integrators), Lewis Fourier call pricing,
and Monte Carlo simulation of the multi-factor model.
"""

from .params import ModelParams, ThetaCurve
from .special import (
    X_MAX,
    forward_variance,
    frac_resolvent,
    gamma_eval,
    mittag_leffler,
    resolvent_integral,
)
from .kernels import (
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
    uniform_partition,
    weights_from_partition,
)
from .riccati import (
    RiccatiSolution,
    char_fn,
    g_curve,
    riccati_rhs,
    solve_fractional_riccati_adams,
    solve_multifactor_riccati,
)
from .pricing import (
    IntegrationConfig,
    Smile,
    bs_call_price,
    error_report_to_csv,
    implied_vol,
    lewis_call_price,
    riccati_error_report,
    smile,
)
from .montecarlo import (
    SimulationConfig,
    SimulationResult,
    mc_call_price,
    simulate_multifactor,
    simulate_volterra_oracle,
)

__version__ = "0.1.0"

__all__ = [
    "ModelParams",
    "ThetaCurve",
    "X_MAX",
    "gamma_eval",
    "mittag_leffler",
    "frac_resolvent",
    "resolvent_integral",
    "forward_variance",
    "FractionalKernel",
    "Partition",
    "MultiFactorKernel",
    "frac_kernel_eval",
    "mu_density",
    "weights_from_partition",
    "uniform_partition",
    "optimal_step",
    "kernel_eval",
    "l1_error",
    "l2_error",
    "f1_bound",
    "f2_bound",
    "optimize_partition",
    "RiccatiSolution",
    "riccati_rhs",
    "solve_fractional_riccati_adams",
    "solve_multifactor_riccati",
    "g_curve",
    "char_fn",
    "IntegrationConfig",
    "Smile",
    "bs_call_price",
    "implied_vol",
    "lewis_call_price",
    "smile",
    "riccati_error_report",
    "error_report_to_csv",
    "SimulationConfig",
    "SimulationResult",
    "simulate_multifactor",
    "simulate_volterra_oracle",
    "mc_call_price",
]
