"""Per-run metrics and the CSV table they are written to."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

CSV_COLUMNS = ("scenario_id", "algorithm", "n_nodes", "n_cbr", "replication", "pdr", "delay_s",
               "throughput_bps", "residual_j", "cfs_mean", "duplicates", "drops")


@dataclass
class MetricsRecord:
    algorithm: str
    n_nodes: int
    n_cbr: int
    sent: int
    delivered: int
    dropped: int
    in_flight: int
    pdr: float
    delay_s: float
    throughput_bps: float
    residual_j: float
    initial_j: float
    cfs_mean: float
    duplicates: int
    drops: dict = field(default_factory=dict)
    data_tx: int = 0
    optimisations: int = 0
    scenario_id: str = ""
    replication: int = 0

    @property
    def pdr_defined(self) -> bool:
        return self.sent > 0

    def row(self) -> list:
        drops = ";".join(f"{k}={v}" for k, v in sorted(self.drops.items()))
        return [self.scenario_id, self.algorithm, self.n_nodes, self.n_cbr, self.replication,
                _fmt(self.pdr), _fmt(self.delay_s), _fmt(self.throughput_bps),
                _fmt(self.residual_j), _fmt(self.cfs_mean), self.duplicates, drops]


def _fmt(x: float) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return f"{x:.6f}"


def to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()
