"""Scenario configuration: one JSON document with overridable defaults."""

import dataclasses
import json
from dataclasses import dataclass, field

from .errors import ConfigError
from .semantics import DEFAULT_MSG_PER_BIT
from .solver import BarrierParams
from .topology import DEFAULT_BANDWIDTH_BUDGET_HZ, DEFAULT_NOISE_POWER_DBM

METHOD_NAMES = ("two-stage", "max-sinr-wf", "max-sinr-even")
SWEEP_VARIABLES = ("num_mus", "alpha", "tau", "num_bss")


@dataclass
class SweepSpec:
    variable: str
    values: tuple

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ConfigError(f"sweep.variable must be one of {SWEEP_VARIABLES}")
        if not self.values:
            raise ConfigError("sweep.values must be non-empty")
        self.values = tuple(self.values)


@dataclass
class ScenarioConfig:
    scenario_id: str = "default"
    region_radius_m: float = 500.0
    num_macro: int = 1
    num_pico: int = 5
    num_femto: int = 10
    num_users: int = 200
    macro_power_dbm: float = 43.0
    pico_power_dbm: float = 35.0
    femto_power_dbm: float = 20.0
    bandwidth_budget_hz: float = DEFAULT_BANDWIDTH_BUDGET_HZ
    noise_power_dbm: float = DEFAULT_NOISE_POWER_DBM
    num_domains: int = 4
    kb_per_bs: int = 3
    needs_per_mu: int = 1
    msg_per_bit: float = DEFAULT_MSG_PER_BIT
    tau: float = 0.5
    sigma: float = 0.1
    alpha: float = 0.95
    bit_rate_threshold_bps: float = 1e4
    # The knowledge constraint is a system constraint, so the max-SINR
    # baselines pick the strongest BS inside each user's feasible set by
    # default; set False for the fully knowledge-oblivious variant.
    baseline_respects_kb: bool = True
    barrier: BarrierParams = field(default_factory=BarrierParams)
    methods: tuple = METHOD_NAMES
    seeds: tuple = (1,)
    sweep: SweepSpec = None

    def __post_init__(self):
        self.methods = tuple(self.methods)
        self.seeds = tuple(int(s) for s in self.seeds)
        self.validate()

    def validate(self):
        checks = (
            ("region_radius_m", self.region_radius_m > 0),
            ("num_users", self.num_users >= 0),
            ("tier counts", min(self.num_macro, self.num_pico, self.num_femto) >= 0),
            ("bandwidth_budget_hz", self.bandwidth_budget_hz > 0),
            ("num_domains", self.num_domains >= 1),
            ("kb_per_bs", 1 <= self.kb_per_bs <= self.num_domains),
            ("needs_per_mu", 1 <= self.needs_per_mu <= self.num_domains),
            ("msg_per_bit", self.msg_per_bit > 0),
            ("tau", 0.0 < self.tau < 1.0),
            ("sigma", self.sigma >= 0.0),
            ("alpha", 0.0 < self.alpha < 1.0),
            ("bit_rate_threshold_bps", self.bit_rate_threshold_bps > 0),
            ("seeds", len(self.seeds) >= 1),
        )
        for name, ok in checks:
            if not ok:
                raise ConfigError(f"config field {name!r} is out of range")
        for m in self.methods:
            if m not in METHOD_NAMES:
                raise ConfigError(f"unknown method {m!r}; expected subset of {METHOD_NAMES}")

    def replace(self, **kwargs):
        return dataclasses.replace(self, **kwargs)

    def to_dict(self):
        out = dataclasses.asdict(self)
        out["barrier"] = dataclasses.asdict(self.barrier)
        out["methods"] = list(self.methods)
        out["seeds"] = list(self.seeds)
        out["sweep"] = None if self.sweep is None else {
            "variable": self.sweep.variable,
            "values": list(self.sweep.values),
        }
        return out


def config_from_dict(data):
    if not isinstance(data, dict):
        raise ConfigError("config document must be a JSON object")
    known = {f.name for f in dataclasses.fields(ScenarioConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config field(s): {sorted(unknown)}")
    kwargs = dict(data)
    if "barrier" in kwargs and kwargs["barrier"] is not None:
        bfields = {f.name for f in dataclasses.fields(BarrierParams)}
        extra = set(kwargs["barrier"]) - bfields
        if extra:
            raise ConfigError(f"unknown barrier field(s): {sorted(extra)}")
        kwargs["barrier"] = BarrierParams(**kwargs["barrier"])
    if "sweep" in kwargs and kwargs["sweep"] is not None:
        sw = kwargs["sweep"]
        if not isinstance(sw, dict) or set(sw) - {"variable", "values"}:
            raise ConfigError("sweep must be an object with 'variable' and 'values'")
        kwargs["sweep"] = SweepSpec(variable=sw["variable"], values=tuple(sw["values"]))
    try:
        return ScenarioConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad config: {exc}") from exc


def load_config(path):
    """Load and validate a scenario config, with line/field diagnostics."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    try:
        return config_from_dict(data)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
