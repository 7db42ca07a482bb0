"""Replicated parameter sweeps over node count and traffic load.

Seeds: every (cell, replication) gets its own seed from
``numpy.random.SeedSequence([base_seed, cell_index, replication])``; the
first 32-bit word of its state seeds both the deployment and the world.
ERTO and ExOR runs of the same (cell, replication) therefore share the
deployment and traffic pairs.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..energy import EnergyParams
from ..errors import InvalidParameter
from ..geometry import RangeMap
from ..linkmodel import RadioParams
from .engine import SimParams, World
from .metrics import MetricsRecord
from .scenario import build_scenario

METRICS = ("pdr", "delay_s", "throughput_bps", "residual_j", "cfs_mean", "duplicates")


@dataclass(frozen=True)
class Cell:
    n_nodes: int
    n_cbr: int


@dataclass(frozen=True)
class Settings:
    """Everything a worker needs to build and run one world."""

    sim: SimParams = field(default_factory=SimParams)
    radio: RadioParams = field(default_factory=RadioParams)
    energy: EnergyParams = field(default_factory=EnergyParams)
    rmap: RangeMap | None = None
    area: tuple = (1000.0, 1000.0)

    def range_map(self) -> RangeMap:
        return self.rmap or RangeMap(eta=self.radio.eta)


@dataclass(frozen=True)
class Job:
    scenario_id: str
    algorithm: str
    cell: Cell
    replication: int
    seed: int


def cell_seed(base_seed: int, cell_index: int, replication: int) -> int:
    ss = np.random.SeedSequence([int(base_seed), int(cell_index), int(replication)])
    return int(ss.generate_state(1)[0])


def plan(cells, algorithms, replications: int, base_seed: int) -> list[Job]:
    if replications < 1:
        raise InvalidParameter("replications must be >= 1")
    jobs = []
    for ci, cell in enumerate(cells):
        for rep in range(replications):
            seed = cell_seed(base_seed, ci, rep)
            sid = f"n{cell.n_nodes}-c{cell.n_cbr}-r{rep}"
            for alg in algorithms:
                jobs.append(Job(sid, alg, cell, rep, seed))
    return jobs


def run_job(job: Job, settings: Settings, trace: bool = False):
    """One world; returns the metrics record and the trace text (or None)."""
    sc = build_scenario(job.cell.n_nodes, job.cell.n_cbr, settings.area, job.seed)
    world = World(sc.positions, sc.flows, job.algorithm, settings.sim, settings.radio,
                  settings.energy, settings.range_map(), settings.area, job.seed, trace)
    rec = world.run()
    rec.scenario_id = job.scenario_id
    rec.replication = job.replication
    return rec, (world.trace.text() if trace else None)


def _run_star(args):
    return run_job(*args)


def sweep(cells, replications: int, base_seed: int, algorithms=("erto", "exor"),
          settings: Settings | None = None, workers: int = 1, trace: bool = False):
    """Run every (cell, replication, algorithm).

    Returns ``(records, traces)`` in plan order regardless of ``workers``.
    """
    settings = settings or Settings()
    jobs = plan(cells, algorithms, replications, base_seed)
    args = [(j, settings, trace) for j in jobs]
    if workers <= 1:
        out = [_run_star(a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_run_star, args))
    records = [r for r, _ in out]
    traces = [t for _, t in out]
    return records, traces


def summarize(records) -> dict:
    """``{(algorithm, n_nodes, n_cbr): {metric: (mean, std)}}``; undefined
    values (no traffic, no deliveries) are left out of the averages."""
    groups: dict = {}
    for r in records:
        groups.setdefault((r.algorithm, r.n_nodes, r.n_cbr), []).append(r)
    table = {}
    for key, recs in groups.items():
        row = {}
        for m in METRICS:
            vals = np.array([getattr(r, m) for r in recs], dtype=float)
            vals = vals[~np.isnan(vals)]
            row[m] = (float(vals.mean()), float(vals.std())) if len(vals) else (math.nan, math.nan)
        row["runs"] = len(recs)
        table[key] = row
    return table


def summary_csv(table: dict) -> str:
    lines = ["algorithm,n_nodes,n_cbr,runs," + ",".join(f"{m}_mean,{m}_std" for m in METRICS)]
    for (alg, n, c), row in sorted(table.items()):
        cols = [alg, str(n), str(c), str(row["runs"])]
        for m in METRICS:
            mean, std = row[m]
            cols += [_f(mean), _f(std)]
        lines.append(",".join(cols))
    return "\n".join(lines) + "\n"


def _f(x):
    return "nan" if math.isnan(x) else f"{x:.6f}"


__all__ = ["Cell", "Settings", "Job", "cell_seed", "plan", "run_job", "sweep", "summarize",
           "summary_csv", "MetricsRecord"]
