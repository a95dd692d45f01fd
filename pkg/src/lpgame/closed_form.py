"""Exact solutions of the liquidity game under linear demand.

With ``D(V) = B + gamma * V`` everything reduces to comparing the full marginal
cost of deposited capital ``A + r`` with the marginal fee benefit. Writing
``kappa = A + r - f * gamma`` for the net marginal cost, the symmetric
equilibrium deposits

    V_eq = (N - 1) / N * B * f / kappa

in the interior regime, while a cooperative only posts the small amount
``epsilon`` needed to capture base demand.
"""

import enum
import math
from dataclasses import dataclass

from ._validation import DomainError, check_nonnegative, check_unit_interval
from .demand import demand_value
from .game import _require_linear, aggregate_profit, lp_performance


class Regime(str, enum.Enum):
    FULL_DEPOSIT = "FullDeposit"
    INTERIOR = "Interior"
    NO_DEPOSIT = "NoDeposit"


class RegimeError(DomainError):
    """Raised when a quantity is only defined in another regime."""


@dataclass(frozen=True)
class EquilibriumReport:
    regime: Regime
    weight: float
    aggregate_liquidity: float
    profit: float
    performance: float
    clamped: bool = False


@dataclass(frozen=True)
class PoAReport:
    cooperative_liquidity: float
    equilibrium_liquidity: float
    cooperative_performance: float
    equilibrium_performance: float
    poa: float


@dataclass(frozen=True)
class ExcessLVR:
    value: float
    d_dA: float
    d_df: float


@dataclass(frozen=True)
class ExcessVolume:
    value: float
    limit_as_n_grows: float
    d_dBD: float


@dataclass(frozen=True)
class RebateReport:
    mitigation_fraction: float
    rebate_liquidity: float
    lvr_ratio: float
    regime_before: Regime
    regime_after: Regime


def classify_regime(m, curve):
    _require_linear(curve)
    cost = m.total_cost
    liquidity_effect = m.fee * curve.gamma
    if cost <= liquidity_effect:
        return Regime.FULL_DEPOSIT
    if cost <= m.fee * (curve.base_demand + curve.gamma):
        return Regime.INTERIOR
    return Regime.NO_DEPOSIT


def _net_cost(m, curve):
    return m.total_cost - m.fee * curve.gamma


def _require_game(setup):
    if setup.n_investors < 2:
        raise ValueError("the closed-form game requires n_investors >= 2; use cooperative_liquidity for N = 1")


def _require_interior(m, curve, what):
    regime = classify_regime(m, curve)
    if regime is not Regime.INTERIOR:
        raise RegimeError(f"{what} is only defined in the Interior regime, got {regime.value}")


def best_response(m, curve, setup, others_liquidity):
    """Utility-maximising weight of one investor against others' liquidity ``S``.

    In the interior case the deposit solves ``f*S*B/(v+S)^2 + f*gamma = A + r``,
    i.e. ``v = sqrt(B*S*f/kappa) - S``, clamped to the endowment.
    """
    _require_linear(curve)
    _require_game(setup)
    s = check_nonnegative("others_liquidity", others_liquidity)
    cost = m.total_cost
    if cost <= m.fee * curve.gamma:
        return 1.0
    if s == 0:
        raise DomainError("best response is undefined against zero opposing liquidity in the interior case")
    if m.fee * (curve.base_demand / s + curve.gamma) < cost:
        return 0.0
    own = math.sqrt(curve.base_demand * s * m.fee / _net_cost(m, curve)) - s
    return min(max(own / setup.endowment, 0.0), 1.0)


def _unclamped_weight(m, curve, setup):
    n = setup.n_investors
    return (n - 1) / n**2 * (curve.base_demand / setup.endowment) * m.fee / _net_cost(m, curve)


def equilibrium_weight(m, curve, setup):
    _require_game(setup)
    regime = classify_regime(m, curve)
    if regime is Regime.FULL_DEPOSIT:
        return 1.0
    if regime is Regime.NO_DEPOSIT:
        return 0.0
    return min(_unclamped_weight(m, curve, setup), 1.0)


def equilibrium_liquidity(m, curve, setup):
    _require_game(setup)
    regime = classify_regime(m, curve)
    if regime is Regime.FULL_DEPOSIT:
        return setup.total_endowment
    if regime is Regime.NO_DEPOSIT:
        return 0.0
    n = setup.n_investors
    v = (n - 1) / n * curve.base_demand * m.fee / _net_cost(m, curve)
    return min(v, setup.total_endowment)


def limit_liquidity(m, curve):
    """Interior equilibrium liquidity as the number of investors grows without bound."""
    _require_interior(m, curve, "the large-N liquidity limit")
    return curve.base_demand * m.fee / _net_cost(m, curve)


def _is_clamped(m, curve, setup):
    return classify_regime(m, curve) is Regime.INTERIOR and _unclamped_weight(m, curve, setup) > 1.0


def equilibrium(m, curve, setup):
    """Symmetric equilibrium summary."""
    w = equilibrium_weight(m, curve, setup)
    v = equilibrium_liquidity(m, curve, setup)
    return EquilibriumReport(
        regime=classify_regime(m, curve),
        weight=w,
        aggregate_liquidity=v,
        profit=aggregate_profit(m, curve, v),
        performance=lp_performance(m, curve, v),
        clamped=_is_clamped(m, curve, setup),
    )


def cooperative_liquidity(m, curve, setup):
    regime = classify_regime(m, curve)
    if regime is Regime.FULL_DEPOSIT:
        return setup.total_endowment
    if regime is Regime.INTERIOR:
        return setup.epsilon
    return 0.0


def poa_ratio(cooperative_performance, equilibrium_performance):
    """Cooperative over equilibrium performance with the degenerate cases made total."""
    if cooperative_performance == equilibrium_performance:
        return 1.0
    if equilibrium_performance > 0:
        return cooperative_performance / equilibrium_performance
    if cooperative_performance > 0:
        return math.inf
    # both arms lose money; a ratio carries no welfare meaning
    return math.nan


def price_of_anarchy(m, curve, setup):
    _require_game(setup)
    v_coop = cooperative_liquidity(m, curve, setup)
    v_eq = equilibrium_liquidity(m, curve, setup)
    p_coop = lp_performance(m, curve, v_coop)
    p_eq = lp_performance(m, curve, v_eq)
    regime = classify_regime(m, curve)
    if regime is Regime.INTERIOR and not _is_clamped(m, curve, setup):
        base_fees = m.fee * curve.base_demand
        poa = setup.n_investors * (base_fees - setup.epsilon * _net_cost(m, curve)) / base_fees
    elif regime is Regime.INTERIOR:
        poa = poa_ratio(p_coop, p_eq)
    else:
        poa = 1.0
    return PoAReport(v_coop, v_eq, p_coop, p_eq, poa)


def _liquidity_sensitivities(m, curve, setup):
    """Partial derivatives of V_eq in (A, f, B); zero once the endowment cap binds.

    The fee derivative is total: ``A`` moves with ``f`` at the configured
    sensitivity.
    """
    if _is_clamped(m, curve, setup):
        return 0.0, 0.0, 0.0
    n = setup.n_investors
    scale = (n - 1) / n
    kappa = _net_cost(m, curve)
    b, f = curve.base_demand, m.fee
    d_a = -scale * b * f / kappa**2
    d_f = scale * b * (m.total_cost - f * m.adverse_selection_fee_sensitivity) / kappa**2
    d_b = scale * f / kappa
    return d_a, d_f, d_b


def excess_lvr(m, curve, setup):
    """Adverse-selection cost carried by liquidity beyond the cooperative amount.

    ``d_dA`` and ``d_df`` are exact derivatives of ``value``; the fee derivative
    includes the dependence of ``A`` on ``f``.
    """
    _require_game(setup)
    _require_interior(m, curve, "excess LVR")
    a = m.adverse_selection
    v_eq = equilibrium_liquidity(m, curve, setup)
    excess = v_eq - cooperative_liquidity(m, curve, setup)
    dv_da, dv_df, _ = _liquidity_sensitivities(m, curve, setup)
    return ExcessLVR(
        value=a * excess,
        d_dA=excess + a * dv_da,
        d_df=m.adverse_selection_fee_sensitivity * excess + a * dv_df,
    )


def excess_volume(m, curve, setup):
    _require_game(setup)
    _require_interior(m, curve, "excess volume")
    v_eq = equilibrium_liquidity(m, curve, setup)
    v_coop = cooperative_liquidity(m, curve, setup)
    _, _, dv_db = _liquidity_sensitivities(m, curve, setup)
    return ExcessVolume(
        value=demand_value(curve, v_eq) - demand_value(curve, v_coop),
        limit_as_n_grows=curve.gamma * (limit_liquidity(m, curve) - setup.epsilon),
        d_dBD=curve.gamma * dv_db,
    )


def demand_multiplier(m, curve, setup):
    """Change in equilibrium traded volume per unit of extra base demand."""
    _require_game(setup)
    _require_interior(m, curve, "the demand multiplier")
    _, _, dv_db = _liquidity_sensitivities(m, curve, setup)
    return 1.0 + curve.gamma * dv_db


def rebate_ratio_closed_form(m, curve, p):
    """LVR ratio after mitigation when both parameter sets are interior and unclamped."""
    net = m.external_return - m.fee * curve.gamma
    return (1 - p) * (m.adverse_selection + net) / ((1 - p) * m.adverse_selection + net)


def rebate_analysis(m, curve, setup, p):
    """Total LVR after removing a fraction ``p`` of the per-unit arbitrage intensity.

    The ratio is computed from the two equilibria, so endowment caps are
    honoured; it is infinite when LVR grows from zero.
    """
    _require_game(setup)
    p = check_unit_interval("mitigation_fraction", p, closed_right=False)
    mitigated = m.replace(adverse_selection=(1 - p) * m.adverse_selection)
    v_eq = equilibrium_liquidity(m, curve, setup)
    v_reb = equilibrium_liquidity(mitigated, curve, setup)
    before = m.adverse_selection * v_eq
    after = mitigated.adverse_selection * v_reb
    if before > 0:
        ratio = after / before
    elif after > 0:
        ratio = math.inf
    else:
        ratio = 1.0
    return RebateReport(
        mitigation_fraction=p,
        rebate_liquidity=v_reb,
        lvr_ratio=ratio,
        regime_before=classify_regime(m, curve),
        regime_after=classify_regime(mitigated, curve),
    )
