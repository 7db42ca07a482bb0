"""Experiment configuration: a YAML file of sections, every key optional.

Omitted keys take the defaults below, which follow the simulation table of
the reference setup (1000 m x 1000 m, 1024-bit packets, 15 kbit/s, 5 J,
0.1-0.8 W, 0.05 W receive power, 40-120 nodes, 20-100 CBR pairs).  Unknown
sections or keys are rejected.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field

import yaml

from .energy import EnergyParams
from .errors import ConfigError
from .geometry import RangeMap
from .linkmodel import RadioParams
from .pareto import GaConfig
from .sim.engine import SimParams
from .sim.sweep import Cell, Settings



class _Loader(yaml.SafeLoader):
    pass


# YAML 1.1 wants a dot in floats, so plain 4e-10 would load as a string
_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
                |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                |[-+]?\.(?:inf|Inf|INF)
                |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."))

_num = (int, float)


def _pos(v):
    return v > 0


def _prob(v):
    return 0.0 <= v <= 1.0


def _int_pos(v):
    return isinstance(v, int) and v >= 1


def _int_nonneg(v):
    return isinstance(v, int) and v >= 0


# section -> key -> (default, accepted types, check, description of the check)
SCHEMA = {
    "radio": {
        "beta": (3.16, _num, _pos, "> 0"),
        "eta": (2.0, _num, lambda v: 2.0 <= v <= 5.0, "in [2, 5]"),
        "K": (1e-4, _num, _pos, "> 0"),
        "G": (4.0, _num, _pos, "> 0"),
        "P_n": (4e-10, _num, _pos, "> 0"),
    },
    "energy": {
        "E_r": (0.05, _num, _pos, "> 0"),
        "xi": (1.0, _num, _pos, "> 0"),
        "packet_bits": (1024, _num, _pos, "> 0"),
        "data_rate": (15000, _num, _pos, "> 0"),
        "initial": (5.0, _num, _pos, "> 0"),
    },
    "power": {
        "p_min": (0.1, _num, _pos, "> 0"),
        "p_max": (0.8, _num, _pos, "> 0"),
        "p_init": (0.8, _num, _pos, "> 0"),
        "r_ref": (200.0, _num, _pos, "> 0"),
        "hello": (0.8, _num, _pos, "> 0"),
    },
    "ga": {
        "population": (16, int, lambda v: v >= 4 and v % 2 == 0, "even and >= 4"),
        "generations": (12, int, _int_pos, ">= 1"),
        "crossover_prob": (0.9, _num, _prob, "in [0, 1]"),
        "crossover_eta": (15.0, _num, _pos, "> 0"),
        "mutation_prob": (0.5, _num, _prob, "in [0, 1]"),
        "mutation_eta": (20.0, _num, _pos, "> 0"),
    },
    "topology": {
        "prnd_tol": (0.01, _num, lambda v: 0.0 <= v < 1.0, "in [0, 1)"),
        "match_tol": (0.01, _num, lambda v: 0.0 <= v < 1.0, "in [0, 1)"),
        "reopt_period": (30.0, _num, _pos, "> 0"),
    },
    "sim": {
        "duration": (300.0, _num, _pos, "> 0"),
        "area": ([1000.0, 1000.0], list, lambda v: len(v) == 2 and all(
            isinstance(x, _num) and not isinstance(x, bool) and x > 0 for x in v),
            "two positive numbers"),
        "hello_period": (1.0, _num, _pos, "> 0"),
        "staleness_periods": (3, int, _int_pos, ">= 1"),
        "hello_bits": (128, _num, _pos, "> 0"),
        "cbr_rate": (4.0, _num, _pos, "> 0"),
        "slot": (0.005, _num, _pos, "> 0"),
        "contention_window": (16, int, _int_pos, ">= 1"),
        "retx_budget": (7, int, _int_pos, ">= 1"),
        "hop_limit": (32, int, _int_pos, ">= 1"),
        "noroute_retries": (3, int, _int_nonneg, ">= 0"),
        "queue_limit": (64, int, _int_pos, ">= 1"),
    },
    "sweep": {
        "nodes": ([40, 60, 80, 100, 120], list, lambda v: len(v) >= 1 and all(
            isinstance(x, int) and not isinstance(x, bool) and x >= 2 for x in v),
            "a non-empty list of integers >= 2"),
        "cbr_pairs": ([20, 40, 60, 80, 100], list, lambda v: len(v) >= 1 and all(
            isinstance(x, int) and not isinstance(x, bool) and x >= 1 for x in v),
            "a non-empty list of integers >= 1"),
        "layout": ("series", str, lambda v: v in ("series", "grid"), "'series' or 'grid'"),
        "load_nodes": (100, int, lambda v: v >= 2, ">= 2"),
        "replications": (5, int, _int_pos, ">= 1"),
        "algorithms": (["erto", "exor"], list, lambda v: len(v) >= 1 and len(set(v)) == len(v)
                       and all(a in ("erto", "exor") for a in v),
                       "distinct entries from ['erto', 'exor']"),
        "base_seed": (2024, int, _int_nonneg, ">= 0"),
    },
    "output": {
        "dir": ("results", str, lambda v: len(v) > 0, "non-empty"),
        "trace": (False, bool, lambda v: True, ""),
    },
}


@dataclass
class ExperimentConfig:
    values: dict = field(default_factory=lambda: _defaults())

    def __getitem__(self, dotted: str):
        section, key = dotted.split(".")
        return self.values[section][key]

    def __eq__(self, other):
        return isinstance(other, ExperimentConfig) and self.values == other.values

    # -- runtime objects --------------------------------------------------
    def radio(self) -> RadioParams:
        return RadioParams(**self.values["radio"])

    def energy(self) -> EnergyParams:
        e = self.values["energy"]
        return EnergyParams(E_r=e["E_r"], xi=e["xi"], L=e["packet_bits"], B=e["data_rate"])

    def range_map(self) -> RangeMap:
        p = self.values["power"]
        return RangeMap(r_ref=p["r_ref"], p_ref=p["p_max"], eta=self.values["radio"]["eta"])

    def ga(self) -> GaConfig:
        return GaConfig(**self.values["ga"])

    def sim(self) -> SimParams:
        s, p, t = self.values["sim"], self.values["power"], self.values["topology"]
        return SimParams(
            duration=s["duration"], hello_period=s["hello_period"],
            staleness_periods=s["staleness_periods"], hello_bits=s["hello_bits"],
            cbr_rate=s["cbr_rate"], slot=s["slot"], contention_window=s["contention_window"],
            retx_budget=s["retx_budget"], hop_limit=s["hop_limit"],
            noroute_retries=s["noroute_retries"], queue_limit=s["queue_limit"],
            initial_energy=self.values["energy"]["initial"], p_min=p["p_min"], p_max=p["p_max"],
            p_init=p["p_init"], hello_power=p["hello"], prnd_tol=t["prnd_tol"],
            match_tol=t["match_tol"], ga=self.ga(), reopt_period=t["reopt_period"])

    def settings(self) -> Settings:
        return Settings(self.sim(), self.radio(), self.energy(), self.range_map(),
                        tuple(self.values["sim"]["area"]))

    def cells(self) -> list[Cell]:
        sw = self.values["sweep"]
        if sw["layout"] == "grid":
            return [Cell(n, c) for n in sw["nodes"] for c in sw["cbr_pairs"]]
        cells = [Cell(n, sw["cbr_pairs"][0]) for n in sw["nodes"]]
        cells += [Cell(sw["load_nodes"], c) for c in sw["cbr_pairs"]
                  if Cell(sw["load_nodes"], c) not in cells]
        return cells

    # -- serialisation ----------------------------------------------------
    def dump(self) -> str:
        return yaml.safe_dump(self.values, sort_keys=True, default_flow_style=False)

    def digest(self) -> str:
        blob = json.dumps(self.values, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _defaults() -> dict:
    return {sec: {k: _copy(spec[0]) for k, spec in keys.items()} for sec, keys in SCHEMA.items()}


def _copy(v):
    return list(v) if isinstance(v, list) else v


def _check(section: str, key: str, value):
    default, types, ok, what = SCHEMA[section][key]
    name = f"{section}.{key}"
    if isinstance(value, bool) and types is not bool:
        raise ConfigError(f"{name}: expected a number, got {value!r}")
    if types is float or types == _num:
        if not isinstance(value, _num):
            raise ConfigError(f"{name}: expected a number, got {value!r}")
        if not math.isfinite(value):
            raise ConfigError(f"{name}: must be finite")
        value = float(value) if isinstance(default, float) else value
    elif not isinstance(value, types):
        raise ConfigError(f"{name}: expected {types.__name__}, got {value!r}")
    if not ok(value):
        raise ConfigError(f"{name}: {value!r} must be {what}")
    if isinstance(value, list) and section == "sim":
        value = [float(x) for x in value]
    return value


def from_mapping(data) -> ExperimentConfig:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping of sections")
    values = _defaults()
    for section, body in data.items():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section {section!r}")
        if body is None:
            continue
        if not isinstance(body, dict):
            raise ConfigError(f"section {section!r} must be a mapping")
        for key, value in body.items():
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")
            values[section][key] = _check(section, key, value)
    p = values["power"]
    if p["p_min"] > p["p_max"]:
        raise ConfigError("power.p_min: must not exceed power.p_max")
    if not p["p_min"] <= p["p_init"] <= p["p_max"]:
        raise ConfigError("power.p_init: must lie in [power.p_min, power.p_max]")
    return ExperimentConfig(values)


def loads(text: str) -> ExperimentConfig:
    try:
        data = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}: " if mark else ""
        raise ConfigError(f"parse error: {where}{getattr(exc, 'problem', exc)}") from None
    if isinstance(data, dict) and "tool_version" in data and "config" in data:
        data = data["config"]   # a run manifest carries its full config
    return from_mapping(data)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return loads(text)
