"""Payoff accounting for the pro-rata liquidity provision game.

``N`` symmetric investors each hold an endowment ``E`` and split it between
the AMM pool and an outside investment returning ``r``. Capital in the pool
earns a pro-rata share of the aggregate LP profit

    pi(V) = f * D(V) - A * V

while the liquidity-provider performance also charges the opportunity cost

    P(V) = pi(V) - r * V.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from ._validation import (
    DomainError,
    check_finite,
    check_int,
    check_nonnegative,
    check_positive,
    check_unit_interval,
)
from .demand import demand_slope, demand_value


@dataclass(frozen=True)
class MarketParams:
    """Fee level and per-horizon cost/return rates.

    ``adverse_selection_fee_sensitivity`` is the user-supplied derivative of
    the adverse-selection intensity with respect to the fee; it only enters
    the fee sensitivity of excess LVR.
    """

    fee: float
    adverse_selection: float
    external_return: float = 0.0
    adverse_selection_fee_sensitivity: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "fee", check_positive("fee", self.fee))
        object.__setattr__(
            self, "adverse_selection", check_nonnegative("adverse_selection", self.adverse_selection)
        )
        object.__setattr__(
            self, "external_return", check_nonnegative("external_return", self.external_return)
        )
        sens = check_finite("adverse_selection_fee_sensitivity", self.adverse_selection_fee_sensitivity)
        if sens > 0:
            raise ValueError(f"adverse_selection_fee_sensitivity must be <= 0, got {sens}")
        object.__setattr__(self, "adverse_selection_fee_sensitivity", sens)

    @property
    def total_cost(self):
        """Per-unit cost of deposited capital including the forgone outside return."""
        return self.adverse_selection + self.external_return

    def replace(self, **changes):
        return replace(self, **changes)


def adverse_selection_from_bp(bp_daily, horizon_days=1.0):
    """Convert a daily adverse-selection rate in basis points to a per-horizon decimal."""
    return check_nonnegative("bp_daily", bp_daily) * 1e-4 * check_positive("horizon_days", horizon_days)


@dataclass(frozen=True)
class GameSetup:
    n_investors: int
    endowment: float
    epsilon: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "n_investors", check_int("n_investors", self.n_investors, 1))
        object.__setattr__(self, "endowment", check_positive("endowment", self.endowment))
        object.__setattr__(self, "epsilon", check_nonnegative("epsilon", self.epsilon))
        if self.epsilon >= self.total_endowment:
            raise ValueError(
                f"epsilon ({self.epsilon}) must be smaller than n_investors * endowment "
                f"({self.total_endowment})"
            )

    @property
    def total_endowment(self):
        return self.n_investors * self.endowment

    def replace(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class Allocation:
    """Fractions of their endowment each investor deposits."""

    weights: tuple = field()

    def __post_init__(self):
        weights = tuple(check_unit_interval(f"weights[{i}]", w) for i, w in enumerate(self.weights))
        object.__setattr__(self, "weights", weights)

    @classmethod
    def symmetric(cls, n_investors, weight):
        return cls((weight,) * n_investors)

    def aggregate_liquidity(self, endowment):
        return endowment * sum(self.weights)

    def others_liquidity(self, i, endowment):
        return endowment * (sum(self.weights) - self.weights[i])


def aggregate_profit(m, curve, liquidity):
    """Fee income minus adverse-selection cost at pool liquidity ``liquidity``."""
    return m.fee * demand_value(curve, liquidity) - m.adverse_selection * liquidity


def profit_slope(m, curve, liquidity):
    """Analytic derivative of ``aggregate_profit`` in liquidity."""
    return m.fee * demand_slope(curve, liquidity) - m.adverse_selection


def lp_performance(m, curve, liquidity):
    """Aggregate LP profit net of the opportunity cost of the deposited capital."""
    return aggregate_profit(m, curve, liquidity) - m.external_return * liquidity


def investor_payoff(m, curve, setup, own_weight, others_liquidity):
    """Objective of one investor: pro-rata pool share plus the outside return.

    With ``own_weight == 0`` the investor holds only the outside asset and the
    pool is never evaluated.
    """
    own_weight = check_unit_interval("own_weight", own_weight)
    others_liquidity = check_nonnegative("others_liquidity", others_liquidity)
    endowment = setup.endowment
    outside = endowment * m.external_return
    if own_weight == 0:
        return outside
    return outside + deposit_gain(m, curve, own_weight * endowment, others_liquidity)


def deposit_gain(m, curve, own_liquidity, others_liquidity):
    """Investor payoff in excess of keeping the whole endowment outside.

    Equals ``v * (pi(v + S) / (v + S) - r)`` for own liquidity ``v`` and others'
    liquidity ``S``, and 0 at ``v = 0``. Vectorised over ``own_liquidity``.
    Subtracting the constant ``E * r`` leaves the maximiser unchanged but keeps
    comparisons between nearby deposits free of cancellation.
    """
    if isinstance(own_liquidity, float) or np.ndim(own_liquidity) == 0:
        v = float(own_liquidity)
        if v == 0:
            return 0.0
        total = v + others_liquidity
        return v * (aggregate_profit(m, curve, total) / total - m.external_return)
    v = np.asarray(own_liquidity, float)
    out = np.zeros_like(v)
    pos = v > 0
    if np.any(pos):
        total = v[pos] + others_liquidity
        out[pos] = v[pos] * (aggregate_profit(m, curve, total) / total - m.external_return)
    return out


def deposit_gain_slope(m, curve, own_liquidity, others_liquidity):
    """Derivative of ``deposit_gain`` in own liquidity (for ``v + S > 0``)."""
    v = own_liquidity
    total = v + others_liquidity
    avg = aggregate_profit(m, curve, total) / total
    return (others_liquidity * avg + v * profit_slope(m, curve, total)) / total - m.external_return


def _require_linear(curve):
    if not curve.is_linear:
        raise DomainError(f"operation is only defined for linear demand, got {curve.kind.value}")


def marginal_benefit_n(m, curve, own_liquidity, others_liquidity):
    """Marginal fee benefit of one more unit of own liquidity under competition.

    The first term is the competition effect (a larger share of base-demand
    fees), the second the liquidity effect ``f * gamma``.
    """
    _require_linear(curve)
    v = check_nonnegative("own_liquidity", own_liquidity)
    s = check_nonnegative("others_liquidity", others_liquidity)
    if v == 0 and s == 0:
        return m.fee * (curve.base_demand + curve.gamma)
    return m.fee * s * curve.base_demand / (v + s) ** 2 + m.fee * curve.gamma


def marginal_cost(m):
    """Adverse-selection cost per extra unit of liquidity.

    Excludes the outside return; regime tests compare benefits against
    ``m.total_cost`` instead.
    """
    return m.adverse_selection


def monopolist_marginal_benefit(m, curve, at_zero):
    _require_linear(curve)
    if at_zero:
        return m.fee * (curve.base_demand + curve.gamma)
    return m.fee * curve.gamma
