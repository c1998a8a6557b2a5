"""Constant equilibria of competing fund managers who rank excess log-returns.

n-player and mean-field games under exponential utility and time-consistent
mean-variance preferences, with independent oracles (best-response iteration,
deviation scans, Monte Carlo, finite differences) for every closed form.
"""

from .exponential import aggregate_D, best_response_exp, equilibrium_exp, fixed_point_exp
from .fixedpoint import EquilibriumResult
from .market import (
    ConstantStrategy,
    Criterion,
    GaussianLaw,
    ManagerType,
    MarketParams,
    Population,
    PrivateAsset,
    excess_law_mfg,
    excess_law_nplayer,
    exposure,
    return_law,
)
from .meanvariance import aggregate_K, best_response_mv, equilibrium_mv, fixed_point_mv
from .mfg import (
    TypeDistribution,
    aggregate_L,
    aggregate_R,
    convergence_study,
    fixed_point_mfg,
    mfe,
    mfe_exp,
    mfe_mv,
)
from .montecarlo import SimConfig, SimResult, mc_payoff, simulate
from .payoff import GridSpec, deviation_scan, deviation_scan_mfg, exp_payoff, mv_payoff
from .sensitivity import (
    CaseLabel,
    classify_case,
    figure_sweep,
    partials_exp,
    partials_mfe,
    partials_mv,
)

__version__ = "0.1.0"

__all__ = [
    "aggregate_D",
    "best_response_exp",
    "equilibrium_exp",
    "fixed_point_exp",
    "EquilibriumResult",
    "ConstantStrategy",
    "Criterion",
    "GaussianLaw",
    "ManagerType",
    "MarketParams",
    "Population",
    "PrivateAsset",
    "excess_law_mfg",
    "excess_law_nplayer",
    "exposure",
    "return_law",
    "aggregate_K",
    "best_response_mv",
    "equilibrium_mv",
    "fixed_point_mv",
    "TypeDistribution",
    "aggregate_L",
    "aggregate_R",
    "convergence_study",
    "fixed_point_mfg",
    "mfe",
    "mfe_exp",
    "mfe_mv",
    "SimConfig",
    "SimResult",
    "mc_payoff",
    "simulate",
    "GridSpec",
    "deviation_scan",
    "deviation_scan_mfg",
    "exp_payoff",
    "mv_payoff",
    "CaseLabel",
    "classify_case",
    "figure_sweep",
    "partials_exp",
    "partials_mfe",
    "partials_mv",
]
