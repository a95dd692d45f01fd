"""Equilibrium, cooperative and welfare analysis of pro-rata AMM liquidity provision."""

from ._validation import DomainError
from .closed_form import (
    EquilibriumReport,
    ExcessLVR,
    ExcessVolume,
    PoAReport,
    RebateReport,
    Regime,
    RegimeError,
    best_response,
    classify_regime,
    cooperative_liquidity,
    demand_multiplier,
    equilibrium,
    equilibrium_liquidity,
    equilibrium_weight,
    excess_lvr,
    excess_volume,
    limit_liquidity,
    price_of_anarchy,
    rebate_analysis,
    rebate_ratio_closed_form,
)
from .demand import DemandCurve, DemandKind, demand_slope, demand_value
from .game import (
    Allocation,
    GameSetup,
    MarketParams,
    adverse_selection_from_bp,
    aggregate_profit,
    investor_payoff,
    lp_performance,
    marginal_benefit_n,
    marginal_cost,
    monopolist_marginal_benefit,
)
from .numeric import (
    ConvergenceError,
    CooperativeOptimum,
    SolverConfig,
    cooperative_optimum,
    max_deviation_gain,
    numeric_best_response,
    numeric_poa,
    symmetric_equilibrium,
)

__version__ = "0.1.0"
