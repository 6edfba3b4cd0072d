"""Divergence-minimal martingale measures and optimal portfolios for
exponential Levy markets.

The package is organized along the pipeline:

- levy_core: triplets, jump measures, exponents, model validation
- divergence: the common divergence family and its conjugate utility
- measure_solver: the Levy-preserving minimal measure change (beta, Y)
- density_engine: density process Z, moment curves, exact simulation
- strategy_engine: budget multiplier, optimal wealth and strategies
- verification_harness: MC and analytic checks of every closed form
- cli_reporting: command-line interface and result artifacts
"""

from .divergence import DivergenceSpec
from .errors import (
    ConfigError,
    DivergentMomentError,
    LevymartError,
    QuadratureError,
    SolverError,
    VerificationError,
    WealthDomainError,
    YDomainError,
)
from .levy_core import (
    AtomicJumps,
    DensityJumps,
    JumpMeasure,
    LevyTriplet,
    MarketModel,
    NoJumps,
    laplace_exponent,
    levy_exponent,
    linear_drift,
    truncate_small_jumps,
    validate_model,
)
from .measure_solver import (
    GirsanovPair,
    candidate_Y,
    hellinger_half,
    martingale_residual,
    q_model,
    q_triplet,
    solve_beta,
    validate_conditions,
)
from .density_engine import (
    MomentCurve,
    SimulatedPath,
    TerminalSample,
    h_closed_form,
    log_density_triplet,
    sample_terminals,
    simulate_paths,
    subgrid_indices,
    trivial_pair,
    xi_closed_form,
    xi_monte_carlo,
)
from .strategy_engine import (
    GammaConstants,
    StrategyProblem,
    StrategyState,
    WealthSeries,
    build_problem,
    compute_gamma_constants,
    duality_gap,
    expected_utility,
    solve_lambda,
    solve_lambda_bisection,
    stopped_node_mask,
    strategy_amounts,
    strategy_at,
    terminal_identity_residuals,
    truncated_terminal_wealth,
    wealth_closed_form,
    wealth_process,
)
from .verification_harness import (
    McEstimate,
    budget_check,
    constant_mix_terminal_wealth,
    decay_rates,
    levy_preservation_test,
    martingale_check,
    mc_mean,
    moment_check,
    representation_residual,
    run_suite,
    select_strategy_scaling,
    terminal_replication_study,
    utility_dominance_scan,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "DivergenceSpec",
    "LevymartError", "ConfigError", "SolverError", "YDomainError",
    "WealthDomainError", "DivergentMomentError", "QuadratureError",
    "VerificationError",
    "LevyTriplet", "MarketModel", "JumpMeasure", "NoJumps", "AtomicJumps",
    "DensityJumps", "levy_exponent", "laplace_exponent", "linear_drift",
    "validate_model", "truncate_small_jumps",
    "GirsanovPair", "solve_beta", "candidate_Y", "martingale_residual",
    "validate_conditions", "q_triplet", "q_model", "hellinger_half",
    "MomentCurve", "SimulatedPath", "TerminalSample", "log_density_triplet",
    "xi_closed_form", "h_closed_form", "xi_monte_carlo", "trivial_pair",
    "sample_terminals", "simulate_paths", "subgrid_indices",
    "StrategyProblem", "StrategyState", "GammaConstants", "WealthSeries",
    "build_problem", "solve_lambda", "solve_lambda_bisection",
    "wealth_closed_form", "strategy_amounts", "strategy_at", "wealth_process",
    "terminal_identity_residuals", "compute_gamma_constants",
    "expected_utility", "duality_gap", "truncated_terminal_wealth",
    "stopped_node_mask",
    "McEstimate", "mc_mean", "budget_check", "moment_check",
    "martingale_check", "terminal_replication_study", "decay_rates",
    "select_strategy_scaling", "representation_residual",
    "levy_preservation_test", "constant_mix_terminal_wealth",
    "utility_dominance_scan", "run_suite",
]
