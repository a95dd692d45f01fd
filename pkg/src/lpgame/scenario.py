"""Scenario files: flat ``dotted.key = value`` text, one scenario per file.

Lines starting with ``#`` and blank lines are ignored. See the README for the
complete key list.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .demand import DemandCurve, DemandKind
from .game import GameSetup, MarketParams, adverse_selection_from_bp
from .numeric import SolverConfig

SWEEPABLE = ("n_investors", "base_demand", "fee", "adverse_selection", "gamma", "mitigation_fraction")
INTEGER_PARAMETERS = frozenset({"n_investors"})

_FLOAT_KEYS = {
    "market.fee",
    "market.adverse_selection",
    "market.adverse_selection_bp_daily",
    "market.horizon_days",
    "market.external_return",
    "market.adverse_selection_fee_sensitivity",
    "curve.base_demand",
    "curve.gamma",
    "setup.endowment",
    "setup.epsilon",
    "solver.tolerance",
    "solver.damping",
    "sweep.start",
    "sweep.stop",
    "rebate.mitigation_fraction",
}
_INT_KEYS = {
    "setup.n_investors",
    "solver.max_iterations",
    "solver.grid_points",
    "sweep.steps",
    "chart.width",
    "chart.height",
}
_STR_KEYS = {
    "curve.kind",
    "solver.method",
    "sweep.parameter",
    "sweep.spacing",
    "chart.x",
    "chart.y",
    "chart.title",
}
KNOWN_KEYS = _FLOAT_KEYS | _INT_KEYS | _STR_KEYS
REQUIRED_KEYS = ("market.fee", "curve.kind", "curve.base_demand", "curve.gamma",
                 "setup.n_investors", "setup.endowment")


class ConfigError(ValueError):
    """Malformed scenario file; the message names the line or key at fault."""


@dataclass(frozen=True)
class Sweep:
    parameter: str
    start: float
    stop: float
    steps: int
    spacing: str = "linear"

    def __post_init__(self):
        if self.parameter not in SWEEPABLE:
            raise ValueError(f"sweep.parameter must be one of {', '.join(SWEEPABLE)}, got {self.parameter!r}")
        if not self.start < self.stop:
            raise ValueError(f"sweep.start ({self.start}) must be smaller than sweep.stop ({self.stop})")
        if self.steps < 2:
            raise ValueError(f"sweep.steps must be >= 2, got {self.steps}")
        if self.spacing not in ("linear", "log"):
            raise ValueError(f"sweep.spacing must be 'linear' or 'log', got {self.spacing!r}")
        if self.spacing == "log" and self.start <= 0:
            raise ValueError("log spacing requires sweep.start > 0")

    def values(self):
        if self.spacing == "log":
            grid = np.geomspace(self.start, self.stop, self.steps)
        else:
            grid = np.linspace(self.start, self.stop, self.steps)
        if self.parameter in INTEGER_PARAMETERS:
            # integer grids: round and drop repeats, keeping order
            seen, out = set(), []
            for v in np.rint(grid).astype(int).tolist():
                if v not in seen:
                    seen.add(v)
                    out.append(v)
            return out
        return [float(v) for v in grid]


@dataclass(frozen=True)
class ChartOptions:
    x: str = None
    y: str = "poa"
    width: int = 640
    height: int = 400
    title: str = None


@dataclass(frozen=True)
class Scenario:
    market: MarketParams
    curve: DemandCurve
    setup: GameSetup
    solver: SolverConfig = SolverConfig()
    sweep: Sweep = None
    mitigation_fraction: float = None
    chart: ChartOptions = field(default_factory=ChartOptions)

    @property
    def parameter_name(self):
        return self.sweep.parameter if self.sweep else "point"

    def points(self):
        return self.sweep.values() if self.sweep else [0]

    def at(self, value):
        """Scenario with the swept parameter set to ``value``."""
        if self.sweep is None:
            return self
        name = self.sweep.parameter
        if name == "n_investors":
            return replace(self, setup=self.setup.replace(n_investors=int(value)))
        if name == "base_demand":
            return replace(self, curve=DemandCurve(self.curve.kind, value, self.curve.gamma))
        if name == "gamma":
            return replace(self, curve=DemandCurve(self.curve.kind, self.curve.base_demand, value))
        if name == "fee":
            return replace(self, market=self.market.replace(fee=value))
        if name == "adverse_selection":
            return replace(self, market=self.market.replace(adverse_selection=value))
        return replace(self, mitigation_fraction=value)


def _convert(key, raw, where):
    try:
        if key in _INT_KEYS:
            value = float(raw)
            if not value.is_integer():
                raise ValueError
            return int(value)
        if key in _FLOAT_KEYS:
            value = float(raw)
            if math.isnan(value):
                raise ValueError
            return value
    except ValueError:
        kind = "an integer" if key in _INT_KEYS else "a number"
        raise ConfigError(f"{where}: {key} must be {kind}, got {raw!r}") from None
    return raw


def parse_config(text, source="<config>"):
    """Parse scenario text into a ``{key: value}`` dict, checking syntax and key names."""
    values, lines = {}, {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        where = f"{source}:{lineno}"
        if "=" not in stripped:
            raise ConfigError(f"{where}: expected 'key = value', got {stripped!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{where}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{where}: duplicate key {key!r} (first set on line {lines[key]})")
        if raw == "":
            raise ConfigError(f"{where}: empty value for {key!r}")
        values[key] = _convert(key, raw, where)
        lines[key] = lineno
    return values, lines


def scenario_from_text(text, source="<config>"):
    values, lines = parse_config(text, source)

    def where(key):
        return f"{source}:{lines[key]}" if key in lines else source

    for key in REQUIRED_KEYS:
        if key not in values:
            raise ConfigError(f"{source}: missing required key {key!r}")

    has_decimal = "market.adverse_selection" in values
    has_bp = "market.adverse_selection_bp_daily" in values
    if has_decimal and has_bp:
        later = max(("market.adverse_selection", "market.adverse_selection_bp_daily"), key=lines.get)
        raise ConfigError(
            f"{where(later)}: give either market.adverse_selection "
            "or market.adverse_selection_bp_daily, not both"
        )
    if "market.horizon_days" in values and not has_bp:
        raise ConfigError(f"{where('market.horizon_days')}: market.horizon_days needs market.adverse_selection_bp_daily")
    if not (has_decimal or has_bp):
        raise ConfigError(f"{source}: missing market.adverse_selection or market.adverse_selection_bp_daily")

    def build(section, factory):
        try:
            return factory()
        except (TypeError, ValueError) as exc:
            keys = [k for k in values if k.startswith(section + ".")]
            line = min((lines[k] for k in keys), default=None)
            prefix = f"{source}:{line}" if line else source
            raise ConfigError(f"{prefix}: invalid [{section}] settings: {exc}") from None

    def market():
        if has_bp:
            a = adverse_selection_from_bp(values["market.adverse_selection_bp_daily"],
                                          values.get("market.horizon_days", 1.0))
        else:
            a = values["market.adverse_selection"]
        return MarketParams(
            fee=values["market.fee"],
            adverse_selection=a,
            external_return=values.get("market.external_return", 0.0),
            adverse_selection_fee_sensitivity=values.get("market.adverse_selection_fee_sensitivity", 0.0),
        )

    def curve():
        try:
            kind = DemandKind(values["curve.kind"].lower())
        except ValueError:
            raise ValueError(f"curve.kind must be 'linear' or 'logarithmic', got {values['curve.kind']!r}") from None
        return DemandCurve(kind, values["curve.base_demand"], values["curve.gamma"])

    def setup():
        kwargs = {"n_investors": values["setup.n_investors"], "endowment": values["setup.endowment"]}
        if "setup.epsilon" in values:
            kwargs["epsilon"] = values["setup.epsilon"]
        return GameSetup(**kwargs)

    def solver():
        mapping = {"tolerance": "solver.tolerance", "max_iterations": "solver.max_iterations",
                   "damping": "solver.damping", "grid_points": "solver.grid_points", "method": "solver.method"}
        return SolverConfig(**{k: values[v] for k, v in mapping.items() if v in values})

    def sweep():
        keys = ("sweep.parameter", "sweep.start", "sweep.stop", "sweep.steps")
        present = [k for k in keys if k in values]
        if not present and "sweep.spacing" not in values:
            return None
        missing = [k for k in keys if k not in values]
        if missing:
            raise ValueError(f"incomplete sweep, missing {', '.join(missing)}")
        return Sweep(values["sweep.parameter"], values["sweep.start"], values["sweep.stop"],
                     values["sweep.steps"], values.get("sweep.spacing", "linear"))

    def chart():
        kwargs = {k.split(".", 1)[1]: v for k, v in values.items() if k.startswith("chart.")}
        return ChartOptions(**kwargs)

    m = build("market", market)
    c = build("curve", curve)
    s = build("setup", setup)
    cfg = build("solver", solver)
    sw = build("sweep", sweep)
    ch = build("chart", chart)
    p = values.get("rebate.mitigation_fraction")
    if p is not None and not 0 <= p < 1:
        raise ConfigError(f"{where('rebate.mitigation_fraction')}: rebate.mitigation_fraction must lie in [0, 1)")
    if sw is not None and sw.parameter == "mitigation_fraction" and not (0 <= sw.start and sw.stop < 1):
        raise ConfigError(f"{where('sweep.parameter')}: mitigation_fraction sweeps must stay within [0, 1)")
    return Scenario(m, c, s, cfg, sw, p, ch)


def load_scenario(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return scenario_from_text(text, source=str(path))
