"""Aggregate trading demand as a function of pool liquidity.

Demand is split into a base part that trades regardless of pool depth and a
liquidity-sensitive part that grows with the liquidity ``V`` deposited in the
pool. Two curves are supported:

* linear:       ``D(V) = base_demand + gamma * V``
* logarithmic:  ``D(V) = base_demand + log(gamma * V)``, defined for ``V > 0``

Both ``demand_value`` and ``demand_slope`` accept scalars or numpy arrays.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from ._validation import DomainError, check_nonnegative


class DemandKind(str, enum.Enum):
    LINEAR = "linear"
    LOGARITHMIC = "logarithmic"


@dataclass(frozen=True)
class DemandCurve:
    """Demand curve parameters.

    ``gamma`` is the marginal demand per unit of liquidity for the linear
    curve and the scale inside the logarithm for the logarithmic one.
    """

    kind: DemandKind
    base_demand: float
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "kind", DemandKind(self.kind))
        object.__setattr__(self, "base_demand", check_nonnegative("base_demand", self.base_demand))
        object.__setattr__(self, "gamma", check_nonnegative("gamma", self.gamma))

    @classmethod
    def linear(cls, base_demand, gamma):
        return cls(DemandKind.LINEAR, base_demand, gamma)

    @classmethod
    def logarithmic(cls, base_demand, gamma):
        return cls(DemandKind.LOGARITHMIC, base_demand, gamma)

    @property
    def is_linear(self):
        return self.kind is DemandKind.LINEAR

    @property
    def min_liquidity(self):
        """Smallest liquidity at which traded volume is nonnegative."""
        if self.is_linear:
            return 0.0
        if self.gamma == 0:
            return math.inf
        return math.exp(-self.base_demand) / self.gamma

    def with_base_demand(self, base_demand):
        return DemandCurve(self.kind, base_demand, self.gamma)

    def value(self, liquidity):
        return demand_value(self, liquidity)

    def slope(self, liquidity):
        return demand_slope(self, liquidity)


def _check_scalar(curve, v):
    if curve.is_linear:
        if v < 0:
            raise DomainError(f"liquidity must be >= 0 for linear demand, got {v}")
    elif curve.gamma == 0:
        raise DomainError("logarithmic demand requires gamma > 0")
    elif not v > 0:
        raise DomainError(f"logarithmic demand requires liquidity > 0, got {v}")


def _check_array(curve, v):
    if curve.is_linear:
        if np.any(v < 0):
            raise DomainError("liquidity must be >= 0 for linear demand")
    elif curve.gamma == 0:
        raise DomainError("logarithmic demand requires gamma > 0")
    elif not np.all(v > 0):
        raise DomainError("logarithmic demand requires liquidity > 0")


def demand_value(curve, liquidity):
    """Volume traded per horizon at pool liquidity ``liquidity``.

    The logarithmic curve is returned as-is and goes negative below
    ``curve.min_liquidity``; solvers keep their search above that point.
    """
    if np.ndim(liquidity) == 0:
        v = float(liquidity)
        _check_scalar(curve, v)
        if curve.is_linear:
            return curve.base_demand + curve.gamma * v
        return curve.base_demand + math.log(curve.gamma * v)
    v = np.asarray(liquidity, float)
    _check_array(curve, v)
    if curve.is_linear:
        return curve.base_demand + curve.gamma * v
    return curve.base_demand + np.log(curve.gamma * v)


def demand_slope(curve, liquidity):
    """Derivative of demand with respect to liquidity."""
    if np.ndim(liquidity) == 0:
        v = float(liquidity)
        _check_scalar(curve, v)
        return curve.gamma if curve.is_linear else 1.0 / v
    v = np.asarray(liquidity, float)
    _check_array(curve, v)
    return np.full(v.shape, curve.gamma) if curve.is_linear else 1.0 / v
