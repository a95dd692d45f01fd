"""Demand-curve-agnostic solvers for the liquidity game.

The investor objective is one-dimensional, so best responses are found by a
coarse grid scan that brackets the maximum, golden-section refinement inside
the bracket, and a final root polish of the analytic first-order condition.
A projected gradient-ascent mode is available through ``SolverConfig.method``.

The symmetric equilibrium is a fixed point ``w = BR((N - 1) * E * w) / E``. It
is found by damped fixed-point steps, safeguarded by a sign bracket on the
residual: plain damping only contracts when ``damping < 4 / N`` for linear
demand, so steps that leave the bracket fall back to secant or bisection.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ._validation import DomainError, check_int, check_positive
from .closed_form import EquilibriumReport, PoAReport, Regime, poa_ratio
from .game import aggregate_profit, deposit_gain, deposit_gain_slope, lp_performance, profit_slope

INV_PHI = (math.sqrt(5) - 1) / 2
METHODS = ("golden", "gradient")


class ConvergenceError(RuntimeError):
    """Raised when the fixed-point iteration exhausts its iteration budget."""

    def __init__(self, message, last_iterate=math.nan, residual=math.nan):
        super().__init__(f"{message} (last iterate {last_iterate!r}, residual {residual!r})")
        self.last_iterate = last_iterate
        self.residual = residual


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-10
    max_iterations: int = 10_000
    damping: float = 0.5
    grid_points: int = 1024
    method: str = "golden"

    def __post_init__(self):
        object.__setattr__(self, "tolerance", check_positive("tolerance", self.tolerance))
        object.__setattr__(self, "max_iterations", check_int("max_iterations", self.max_iterations, 1))
        object.__setattr__(self, "grid_points", check_int("grid_points", self.grid_points, 3))
        damping = check_positive("damping", self.damping)
        if damping > 1:
            raise ValueError(f"damping must lie in (0, 1], got {damping}")
        object.__setattr__(self, "damping", damping)
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")


@dataclass(frozen=True)
class CooperativeOptimum:
    liquidity: float
    performance: float


def golden_section_max(func, lo, hi, xtol, max_iterations=200):
    """Maximise a unimodal ``func`` on ``[lo, hi]``; returns ``(x, f(x), width)``."""
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = func(c), func(d)
    for _ in range(max_iterations):
        if b - a <= xtol(0.5 * (a + b)):
            break
        # ">=" keeps the left part on ties so the smaller argument wins
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = func(d)
    if fc >= fd:
        return c, fc, b - a
    return d, fd, b - a


def _polish_root(slope, a, b, fallback):
    """Refine a stationary point with a bracketing root-finder on the analytic slope.

    Golden section alone resolves the argmax only to about the square root of
    machine precision because the objective is flat at its maximum.
    """
    try:
        sa, sb = slope(a), slope(b)
    except (ZeroDivisionError, DomainError):
        return fallback
    if not (sa > 0 > sb):
        return fallback
    return brentq(slope, a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=200)


def _pick(value, x, others):
    """Keep ``x`` unless one of ``others`` is better beyond rounding noise."""
    best_v, best_f = x, value(x)
    for v in sorted(others):
        f = value(v)
        if f > best_f + 1e-12 * abs(best_f) + 1e-300:
            best_v, best_f = v, f
    return best_v, best_f


def _gradient_ascent(value, slope, x0, lo, hi, cfg, xtol):
    """Projected gradient ascent with secant (Barzilai-Borwein) steps and backtracking."""
    x, fx = x0, value(x0)
    gx = slope(x)
    step = (hi - lo) / cfg.grid_points / max(abs(gx), 1e-300)
    x_prev = g_prev = None
    for _ in range(cfg.max_iterations):
        if x_prev is not None and gx != g_prev:
            bb = -(x - x_prev) / (gx - g_prev)
            if bb > 0:
                step = bb
        while True:
            x_new = min(max(x + step * gx, lo), hi)
            f_new = value(x_new)
            if f_new >= fx + 1e-4 * (x_new - x) * gx or abs(x_new - x) <= xtol(x):
                break
            step *= 0.5
        if abs(x_new - x) <= xtol(x):
            return x_new if f_new >= fx else x
        x_prev, g_prev = x, gx
        x, fx = x_new, f_new
        gx = slope(x)
    return x


def numeric_best_response(m, curve, setup, others_liquidity, cfg=SolverConfig()):
    """Weight in ``[0, 1]`` maximising the investor payoff against ``others_liquidity``.

    Ties, including indifference with the outside option, go to the smallest
    deposit.
    """
    endowment = setup.endowment
    s = float(others_liquidity)
    if s < 0:
        raise ValueError(f"others_liquidity must be >= 0, got {s}")
    lo = max(0.0, curve.min_liquidity - s)
    if lo >= endowment:
        raise DomainError(
            f"no deposit up to the endowment reaches the demand curve's domain (needs >= {lo})"
        )
    tol = cfg.tolerance

    def gain(v):
        return deposit_gain(m, curve, v, s)

    def slope(v):
        if s == 0:
            # alone in the pool the gain is pi(v) - r*v, so the slope is defined at 0+
            return profit_slope(m, curve, v) - m.external_return
        return deposit_gain_slope(m, curve, v, s)

    def xtol(x):
        return tol * max(abs(x), tol * endowment)

    grid = np.linspace(lo, endowment, cfg.grid_points)
    gains = gain(grid)
    k = int(np.argmax(gains))
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, len(grid) - 1)]

    if cfg.method == "golden":
        x, _, _ = golden_section_max(gain, a, b, xtol, max_iterations=cfg.max_iterations)
        x = _polish_root(slope, a, b, x)
    else:
        x = _gradient_ascent(gain, slope, grid[k], lo, endowment, cfg, xtol)
    x = min(max(x, lo), endowment)

    best_v, best_gain = _pick(gain, x, {a, b})
    # indifference with the outside option resolves to no deposit
    if best_gain <= 0:
        return 0.0
    return min(max(best_v / endowment, 0.0), 1.0)


def _regime_from_weight(weight):
    if weight >= 1.0:
        return Regime.FULL_DEPOSIT
    if weight <= 0.0:
        return Regime.NO_DEPOSIT
    return Regime.INTERIOR


def pool_outcome(m, curve, liquidity):
    """``(profit, performance)`` at ``liquidity``; an empty pool outside the curve's domain earns nothing."""
    if liquidity == 0 and not curve.is_linear:
        return 0.0, 0.0
    return aggregate_profit(m, curve, liquidity), lp_performance(m, curve, liquidity)


def _fixed_point(residual, w0, lo, g_lo, hi, g_hi, cfg):
    """Damped iteration ``w += damping * residual(w)`` kept inside a sign bracket.

    Returns ``(w, residual)`` on convergence, ``None`` when the budget runs out.
    """
    tol = cfg.tolerance
    w = min(max(w0, lo), hi)
    w_prev = g_prev = None
    for _ in range(cfg.max_iterations):
        g = residual(w)
        if abs(g) <= tol * max(w, 1e-300):
            return w, g
        if g > 0:
            lo, g_lo = w, g
        else:
            hi, g_hi = w, g
        if hi - lo <= tol * max(hi, 1e-300):
            w_end = lo if abs(g_lo) <= abs(g_hi) else hi
            return w_end, g_lo if w_end == lo else g_hi
        candidate = w + cfg.damping * g
        contracting = g_prev is None or abs(g) <= 0.5 * abs(g_prev)
        if not (lo < candidate < hi and contracting):
            candidate = None
            if g_prev is not None and g != g_prev:
                secant = w - g * (w - w_prev) / (g - g_prev)
                if lo < secant < hi:
                    candidate = secant
            if candidate is None:
                false_pos = lo - g_lo * (hi - lo) / (g_hi - g_lo)
                mid = 0.5 * (lo + hi)
                # false position stalls near one end; bisect when it does
                span = hi - lo
                candidate = false_pos if lo + 0.05 * span < false_pos < hi - 0.05 * span else mid
        w_prev, g_prev = w, g
        w = candidate
    return None


def symmetric_equilibrium(m, curve, setup, cfg=SolverConfig(), start=0.5):
    """Symmetric Nash equilibrium where every investor deposits the same weight."""
    n = setup.n_investors
    if n < 2:
        raise ValueError("symmetric_equilibrium requires n_investors >= 2")
    endowment = setup.endowment

    def residual(w):
        return numeric_best_response(m, curve, setup, (n - 1) * endowment * w, cfg) - w

    g0 = residual(0.0)
    g1 = residual(1.0)
    if g0 <= 0:
        w, g = 0.0, g0
    elif g1 >= 0:
        w, g = 1.0, g1
    else:
        result = None
        for w0 in (start, 0.01, 0.99):
            result = _fixed_point(residual, w0, 0.0, g0, 1.0, g1, cfg)
            if result is not None:
                break
        if result is None:
            raise ConvergenceError("symmetric equilibrium did not converge", w0, math.nan)
        w, g = result

    if abs(g) > 10 * cfg.tolerance * max(w, 1e-300) and 0 < w < 1:
        raise ConvergenceError("returned weight is not a best response to itself", w, g)

    liquidity = n * endowment * w
    profit, performance = pool_outcome(m, curve, liquidity)
    return EquilibriumReport(_regime_from_weight(w), w, liquidity, profit, performance)


def cooperative_optimum(m, curve, setup, cfg=SolverConfig()):
    """Liquidity maximising LP performance when all investors act jointly.

    The cooperative either stays out (performance 0) or posts at least
    ``epsilon`` to capture base demand; ties go to the smaller liquidity.
    """
    total = setup.total_endowment
    lo = max(setup.epsilon, curve.min_liquidity)
    if lo > total:
        return CooperativeOptimum(0.0, 0.0)
    tol = cfg.tolerance

    def perf(v):
        return lp_performance(m, curve, v)

    def slope(v):
        return profit_slope(m, curve, v) - m.external_return

    def xtol(x):
        return tol * max(abs(x), tol * total)

    grid = np.linspace(lo, total, cfg.grid_points)
    values = perf(grid)
    k = int(np.argmax(values))
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, len(grid) - 1)]
    x, _, _ = golden_section_max(perf, a, b, xtol, max_iterations=cfg.max_iterations)
    x = _polish_root(slope, a, b, x)
    # endpoints first, so a flat or decreasing performance resolves to the smallest liquidity
    best_v, best_p = _pick(perf, lo, {a, b, x, total})
    if best_p <= 0 and lo > 0:
        return CooperativeOptimum(0.0, 0.0)
    return CooperativeOptimum(best_v, best_p)


def numeric_poa(m, curve, setup, cfg=SolverConfig()):
    eq = symmetric_equilibrium(m, curve, setup, cfg)
    coop = cooperative_optimum(m, curve, setup, cfg)
    return PoAReport(
        cooperative_liquidity=coop.liquidity,
        equilibrium_liquidity=eq.aggregate_liquidity,
        cooperative_performance=coop.performance,
        equilibrium_performance=eq.performance,
        poa=poa_ratio(coop.performance, eq.performance),
    )


def symmetric_foc_residual(m, curve, n_investors, liquidity):
    """Residual of ``(1 - 1/N) * pi(V)/V + pi'(V)/N - r`` at aggregate liquidity ``V``."""
    n = n_investors
    avg = aggregate_profit(m, curve, liquidity) / liquidity
    return (1 - 1 / n) * avg + profit_slope(m, curve, liquidity) / n - m.external_return


def max_deviation_gain(m, curve, setup, weight, grid_points=10_001):
    """Best unilateral improvement over ``weight`` on a grid of deviation weights.

    All other investors stay at ``weight``. Returns ``(improvement, payoff)``
    where ``payoff`` is the investor's payoff at ``weight``; deviations whose
    pool liquidity falls outside the demand curve's domain are skipped.
    """
    endowment = setup.endowment
    others = (setup.n_investors - 1) * endowment * weight
    cand = np.linspace(0.0, 1.0, grid_points) * endowment
    cand = cand[(cand == 0) | (cand + others >= curve.min_liquidity)]
    base = deposit_gain(m, curve, weight * endowment, others)
    improvement = float(np.max(deposit_gain(m, curve, cand, others)) - base)
    return improvement, float(base + endowment * m.external_return)
