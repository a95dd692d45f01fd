"""Evaluate scenarios over parameter sweeps and write the results as CSV."""

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from . import closed_form as cf
from . import numeric as nm
from .demand import demand_value

METRIC_COLUMNS = (
    "regime",
    "equilibrium_weight",
    "equilibrium_liquidity",
    "cooperative_liquidity",
    "equilibrium_profit",
    "cooperative_profit",
    "equilibrium_performance",
    "cooperative_performance",
    "poa",
    "excess_lvr",
    "excess_volume",
    "demand_multiplier",
)
SOLVER_ERRORS = (ValueError, ArithmeticError, nm.ConvergenceError)


@dataclass
class ResultTable:
    columns: list
    rows: list = field(default_factory=list)

    def column(self, name):
        if name not in self.columns:
            raise KeyError(f"no column named {name!r}; have {', '.join(self.columns)}")
        return [row.get(name) for row in self.rows]

    @property
    def failed_rows(self):
        return [row for row in self.rows if row.get("error")]


def table_columns(scenario, cross_check=False):
    cols = [scenario.parameter_name, *METRIC_COLUMNS]
    if scenario.mitigation_fraction is not None or (
        scenario.sweep is not None and scenario.sweep.parameter == "mitigation_fraction"
    ):
        cols.append("lvr_ratio")
    if cross_check:
        cols.append("cross_check_discrepancy")
    cols.append("error")
    return cols


def _closed_form_metrics(point):
    m, curve, setup = point.market, point.curve, point.setup
    eq = cf.equilibrium(m, curve, setup)
    poa = cf.price_of_anarchy(m, curve, setup)
    row = {
        "regime": eq.regime.value,
        "equilibrium_weight": eq.weight,
        "equilibrium_liquidity": eq.aggregate_liquidity,
        "cooperative_liquidity": poa.cooperative_liquidity,
        "equilibrium_profit": eq.profit,
        "cooperative_profit": cf.aggregate_profit(m, curve, poa.cooperative_liquidity),
        "equilibrium_performance": eq.performance,
        "cooperative_performance": poa.cooperative_performance,
        "poa": poa.poa,
        "excess_lvr": math.nan,
        "excess_volume": math.nan,
        "demand_multiplier": math.nan,
    }
    if eq.regime is cf.Regime.INTERIOR:
        row["excess_lvr"] = cf.excess_lvr(m, curve, setup).value
        row["excess_volume"] = cf.excess_volume(m, curve, setup).value
        row["demand_multiplier"] = cf.demand_multiplier(m, curve, setup)
    if point.mitigation_fraction is not None:
        row["lvr_ratio"] = cf.rebate_analysis(m, curve, setup, point.mitigation_fraction).lvr_ratio
    return row


def _volume(curve, liquidity):
    # an empty pool carries no trades
    return 0.0 if liquidity == 0 else demand_value(curve, liquidity)


def numeric_lvr_ratio(m, curve, setup, p, cfg):
    """Total LVR after mitigation over total LVR before, from two numeric equilibria."""
    before = m.adverse_selection * nm.symmetric_equilibrium(m, curve, setup, cfg).aggregate_liquidity
    mitigated = m.replace(adverse_selection=(1 - p) * m.adverse_selection)
    after = mitigated.adverse_selection * nm.symmetric_equilibrium(mitigated, curve, setup, cfg).aggregate_liquidity
    if before > 0:
        return after / before
    return math.inf if after > 0 else 1.0


def numeric_demand_multiplier(m, curve, setup, cfg, rel_step=1e-4):
    """Central finite difference of equilibrium volume in base demand."""
    b = curve.base_demand
    h = rel_step * max(b, 1.0)
    lo_curve = curve.with_base_demand(max(b - h, 0.0))
    hi_curve = curve.with_base_demand(b + h)
    lo = _volume(lo_curve, nm.symmetric_equilibrium(m, lo_curve, setup, cfg).aggregate_liquidity)
    hi = _volume(hi_curve, nm.symmetric_equilibrium(m, hi_curve, setup, cfg).aggregate_liquidity)
    return (hi - lo) / (hi_curve.base_demand - lo_curve.base_demand)


def _numeric_metrics(point, with_multiplier=True):
    m, curve, setup, cfg = point.market, point.curve, point.setup, point.solver
    eq = nm.symmetric_equilibrium(m, curve, setup, cfg)
    coop = nm.cooperative_optimum(m, curve, setup, cfg)
    coop_profit, _ = nm.pool_outcome(m, curve, coop.liquidity)
    row = {
        "regime": eq.regime.value,
        "equilibrium_weight": eq.weight,
        "equilibrium_liquidity": eq.aggregate_liquidity,
        "cooperative_liquidity": coop.liquidity,
        "equilibrium_profit": eq.profit,
        "cooperative_profit": coop_profit,
        "equilibrium_performance": eq.performance,
        "cooperative_performance": coop.performance,
        "poa": cf.poa_ratio(coop.performance, eq.performance),
        "excess_lvr": m.adverse_selection * (eq.aggregate_liquidity - coop.liquidity),
        "excess_volume": _volume(curve, eq.aggregate_liquidity) - _volume(curve, coop.liquidity),
        "demand_multiplier": numeric_demand_multiplier(m, curve, setup, cfg) if with_multiplier else math.nan,
    }
    if point.mitigation_fraction is not None:
        row["lvr_ratio"] = numeric_lvr_ratio(m, curve, setup, point.mitigation_fraction, cfg)
    return row


def relative_discrepancy(a, b):
    if a == b:
        return 0.0
    if math.isinf(a) or math.isinf(b) or math.isnan(a) or math.isnan(b):
        return math.inf
    return abs(a - b) / max(abs(a), abs(b))


CROSS_CHECK_COLUMNS = ("equilibrium_weight", "equilibrium_liquidity", "poa")


def evaluate_point(scenario, value, cross_check=False):
    """Metrics for one sweep point; failures are reported in the ``error`` cell."""
    columns = table_columns(scenario, cross_check)
    row = {name: math.nan for name in columns}
    row[scenario.parameter_name] = value
    row["regime"] = ""
    row["error"] = ""
    try:
        point = scenario.at(value)
        if point.curve.is_linear:
            row.update(_closed_form_metrics(point))
            if cross_check:
                numeric = _numeric_metrics(point, with_multiplier=False)
                row["cross_check_discrepancy"] = max(
                    relative_discrepancy(row[c], numeric[c]) for c in CROSS_CHECK_COLUMNS
                )
        else:
            row.update(_numeric_metrics(point))
    except SOLVER_ERRORS as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _evaluate_star(args):
    return evaluate_point(*args)


def run_scenario(scenario, cross_check=False, jobs=1):
    """One row per sweep point, ordered by sweep index.

    Linear curves use the closed forms; other curves the numeric solvers. With
    ``cross_check`` linear points are also solved numerically and the largest
    relative gap in weight, liquidity and PoA is reported.
    """
    table = ResultTable(table_columns(scenario, cross_check))
    tasks = [(scenario, value, cross_check) for value in scenario.points()]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            table.rows = list(pool.map(_evaluate_star, tasks))
    else:
        table.rows = [_evaluate_star(t) for t in tasks]
    return table


def format_cell(value):
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(value, ".12g")


def emit_csv(table, path):
    """Write ``table`` as CSV (CRLF line ends, 12 significant digits)."""
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            write_csv(table, fh)
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc.strerror or exc}") from exc


def write_csv(table, fh):
    writer = csv.writer(fh, lineterminator="\r\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([format_cell(row.get(c)) for c in table.columns])


def read_csv(path):
    """Read a table written by ``emit_csv``; numeric cells come back as floats."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        columns = next(reader)
        rows = []
        for cells in reader:
            row = {}
            for name, cell in zip(columns, cells):
                try:
                    row[name] = float(cell)
                except ValueError:
                    row[name] = cell
            rows.append(row)
    return ResultTable(columns, rows)

