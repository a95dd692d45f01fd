"""Command-line interface.

Exit codes: 0 success, 1 config error, 2 solver failure (all sweep points
failed, or a ``check`` did not pass), 3 I/O error.
"""

import argparse
import sys
from pathlib import Path

from . import closed_form as cf
from . import numeric as nm
from .chart import emit_chart
from .scenario import ConfigError, load_scenario
from .sweep import (
    SOLVER_ERRORS,
    emit_csv,
    format_cell,
    numeric_lvr_ratio,
    relative_discrepancy,
    run_scenario,
    write_csv,
)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3


def _out_paths(out):
    base = Path(out)
    if base.suffix in (".csv", ".svg"):
        base = base.with_suffix("")
    return base.with_suffix(".csv"), base.with_suffix(".svg")


def _print_fields(obj, stream):
    for name, value in vars(obj).items():
        if hasattr(value, "value"):
            value = value.value
        print(f"{name} = {format_cell(value)}", file=stream)


def _write_outputs(args, scenario, table, stream):
    if args.out is None:
        if args.svg:
            raise ConfigError("--svg needs --out")
        write_csv(table, stream)
        return
    csv_path, svg_path = _out_paths(args.out)
    if args.csv or not args.svg:
        emit_csv(table, csv_path)
        print(f"wrote {csv_path}", file=stream)
    if args.svg:
        x = scenario.chart.x or scenario.parameter_name
        y = args.y_column or scenario.chart.y
        emit_chart(table, x, y, svg_path, scenario.chart.width, scenario.chart.height, scenario.chart.title)
        print(f"wrote {svg_path}", file=stream)


def cmd_sweep(args, scenario, stream):
    table = run_scenario(scenario, cross_check=args.cross_check, jobs=args.jobs)
    for row in table.failed_rows:
        print(f"point {row[scenario.parameter_name]}: {row['error']}", file=sys.stderr)
    _write_outputs(args, scenario, table, stream)
    if table.rows and len(table.failed_rows) == len(table.rows):
        return EXIT_SOLVER
    return EXIT_OK


def cmd_equilibrium(args, scenario, stream):
    m, curve, setup, cfg = scenario.market, scenario.curve, scenario.setup, scenario.solver
    report = cf.equilibrium(m, curve, setup) if curve.is_linear else nm.symmetric_equilibrium(m, curve, setup, cfg)
    _print_fields(report, stream)
    if args.cross_check and curve.is_linear:
        numeric = nm.symmetric_equilibrium(m, curve, setup, cfg)
        gap = relative_discrepancy(report.weight, numeric.weight)
        print(f"cross_check_discrepancy = {format_cell(gap)}", file=stream)
    return EXIT_OK


def cmd_poa(args, scenario, stream):
    m, curve, setup, cfg = scenario.market, scenario.curve, scenario.setup, scenario.solver
    report = cf.price_of_anarchy(m, curve, setup) if curve.is_linear else nm.numeric_poa(m, curve, setup, cfg)
    _print_fields(report, stream)
    if args.cross_check and curve.is_linear:
        numeric = nm.numeric_poa(m, curve, setup, cfg)
        print(f"cross_check_discrepancy = {format_cell(relative_discrepancy(report.poa, numeric.poa))}", file=stream)
    return EXIT_OK


def cmd_rebate(args, scenario, stream):
    p = scenario.mitigation_fraction
    if p is None:
        raise ConfigError("the rebate command needs rebate.mitigation_fraction in the config")
    m, curve, setup, cfg = scenario.market, scenario.curve, scenario.setup, scenario.solver
    if curve.is_linear:
        _print_fields(cf.rebate_analysis(m, curve, setup, p), stream)
    else:
        print(f"mitigation_fraction = {format_cell(p)}", file=stream)
        print(f"lvr_ratio = {format_cell(numeric_lvr_ratio(m, curve, setup, p, cfg))}", file=stream)
    return EXIT_OK


def cmd_check(args, scenario, stream, tolerance=1e-6, deviation_tolerance=1e-8):
    """Cross-validate every sweep point and certify the equilibria it returns."""
    failures = 0
    for value in scenario.points():
        point = scenario.at(value)
        m, curve, setup, cfg = point.market, point.curve, point.setup, point.solver
        label = f"{scenario.parameter_name}={format_cell(value)}"
        try:
            numeric = nm.symmetric_equilibrium(m, curve, setup, cfg)
            weights = {"numeric": numeric.weight}
            if curve.is_linear:
                closed = cf.equilibrium(m, curve, setup)
                gap = relative_discrepancy(closed.weight, numeric.weight)
                ok = gap <= tolerance
                failures += not ok
                print(f"{'PASS' if ok else 'FAIL'} {label} closed-form vs numeric weight gap {gap:.3g}", file=stream)
                if closed.regime is not cf.Regime.NO_DEPOSIT:
                    weights["closed-form"] = closed.weight
            for name, w in weights.items():
                gain, payoff = nm.max_deviation_gain(m, curve, setup, w)
                ok = gain <= deviation_tolerance * max(1.0, abs(payoff))
                failures += not ok
                print(f"{'PASS' if ok else 'FAIL'} {label} {name} deviation gain {gain:.3g}", file=stream)
        except SOLVER_ERRORS as exc:
            failures += 1
            print(f"FAIL {label} {type(exc).__name__}: {exc}", file=stream)
    print(f"{failures} failure(s)", file=stream)
    return EXIT_OK if failures == 0 else EXIT_SOLVER


COMMANDS = {
    "equilibrium": (cmd_equilibrium, "solve the symmetric equilibrium at the base point"),
    "poa": (cmd_poa, "price of anarchy at the base point"),
    "sweep": (cmd_sweep, "evaluate every sweep point and emit CSV / SVG"),
    "rebate": (cmd_rebate, "LVR ratio after an LVR-mitigation rebate"),
    "check": (cmd_check, "cross-validate closed form and numeric solvers and certify equilibria"),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="lpgame", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="scenario file (dotted key = value lines)")
        p.add_argument("--out", help="output path prefix; .csv and .svg are appended")
        p.add_argument("--csv", action="store_true", help="write PREFIX.csv")
        p.add_argument("--svg", action="store_true", help="write PREFIX.svg")
        p.add_argument("--cross-check", action="store_true", help="also solve linear points numerically")
        p.add_argument("--y-column", help="column plotted on the chart's y axis")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    return parser


def main(argv=None, stream=None):
    stream = stream or sys.stdout
    args = build_parser().parse_args(argv)
    handler = COMMANDS[args.command][0]
    try:
        scenario = load_scenario(args.config)
    except OSError as exc:
        print(f"config error: cannot read {args.config}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return handler(args, scenario, stream)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyError as exc:
        print(f"config error: {exc.args[0]}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SOLVER_ERRORS as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
