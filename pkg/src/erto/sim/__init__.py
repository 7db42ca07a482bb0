"""Discrete-event simulator, scenarios and sweeps."""

from .engine import SimParams, World
from .metrics import CSV_COLUMNS, MetricsRecord, to_csv
from .scenario import Scenario, build_scenario
from .trace import Trace, read_trace

__all__ = ["SimParams", "World", "MetricsRecord", "CSV_COLUMNS", "to_csv", "Scenario",
           "build_scenario", "Trace", "read_trace"]
