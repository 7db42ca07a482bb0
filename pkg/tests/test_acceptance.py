"""Acceptance criteria 1-10, each at its stated tolerance and time budget.

Every test records one PASS/FAIL line, printed in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from erto import pareto, topocontrol, verify
from erto.linkmodel import InterfererSnapshot, RadioParams, p_si
from erto.sim.engine import SimParams, World
from erto.sim.metrics import to_csv
from erto.sim.sweep import Cell, Settings, summarize, sweep

# traffic for the network-level criteria; see the README for why it is lower
# than the configuration default
CBR_RATE = 0.075
BASE_SEED = 2024
NET = Settings(sim=SimParams(cbr_rate=CBR_RATE))


def record(number, passed, detail):
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


def run_suite(fn, **kw):
    t0 = time.time()
    checks = fn(**kw)
    return checks, time.time() - t0


def test_c01_link_probability_against_montecarlo():
    checks, secs = run_suite(verify.linkmodel_suite, draws=50, samples=10 ** 6)
    worst = max(c.measured for c in checks)
    ok = all(c.passed for c in checks) and len(checks) == 50 and secs < 120
    record(1, ok, f"50 draws, worst |z|={worst:.2f} (<=3), {secs:.0f} s (<120)")


def test_c02_candidate_area_against_montecarlo():
    checks, secs = run_suite(verify.area_suite, pairs=100, points=10 ** 6)
    clamped = [c for c in checks if float(c.name.split("r/d=")[1]) >= 2.0]
    worst = max(c.measured for c in checks)
    ok = all(c.passed for c in checks) and clamped and secs < 60
    record(2, ok, f"100 pairs ({len(clamped)} clamped), worst rel={worst:.2e} (<=5e-3), "
                  f"{secs:.0f} s (<60)")


def test_c03_degree_distribution():
    checks, _ = run_suite(verify.degree_suite, placements=10 ** 5)
    tv = max(c.measured for c in checks if c.name.startswith("tv"))
    norm = max(c.measured for c in checks if c.name.startswith("normalisation"))
    record(3, all(c.passed for c in checks), f"worst TV={tv:.4f} (<=0.02), "
                                             f"normalisation error={norm:.1e} (<=1e-9)")


def test_c04_energy_cost():
    checks, _ = run_suite(verify.energy_suite, configs=20, trials=10 ** 5)
    worst = max(c.measured for c in checks if c.name.startswith("cost"))
    inv = [c for c in checks if c.name == "inverse_square"][0]
    record(4, all(c.passed for c in checks), f"20 configs, worst rel={worst:.4f} (<=0.02), "
                                             f"inverse-square dev={inv.measured:.1e}")


def test_c05_front_against_grid():
    checks, secs = run_suite(verify.pareto_suite, contexts=10)
    cov = max(c.measured for c in checks if c.name.startswith("coverage"))
    hv = min(c.measured for c in checks if c.name.startswith("hypervolume"))
    ok = all(c.passed for c in checks) and secs < 300
    record(5, ok, f"10 contexts, coverage L_inf={cov:.4f} (<=1e-2), HV ratio min={hv:.4f} "
                  f"(>=0.98), {secs:.0f} s (<300)")


def _feasible_sets():
    sets = []
    # full-size optimiser runs (two of these five give sets of several hundred)
    for seed in range(5):
        ctx = verify.desk_context(700 + seed)
        front = pareto.nsga2_front(ctx, pareto.GaConfig(seed=seed))
        sets.append(topocontrol.feasible_set(front))
    for n in (40, 80):
        world = World(*_scenario(n, 10, 5), "erto", SimParams(duration=60.0, cbr_rate=0.5), seed=5)
        world.run()
        sets += world.router.feasible_sets
    return sets


def _scenario(n, pairs, seed):
    from erto.sim.scenario import build_scenario
    sc = build_scenario(n, pairs, seed=seed)
    return sc.positions, sc.flows


def test_c06_feasible_set_ordering_and_selection():
    t0 = time.time()
    sets = _feasible_sets()
    bad = 0
    for fs in sets:
        psc = [s.p_sc for s in fs.members]
        cs = [s.cost for s in fs.members]
        distinct = len(set(psc)) == len(psc) and len(set(cs)) == len(cs)
        ordered = psc == sorted(psc) and cs == sorted(cs)
        choice = topocontrol.balanced_select(fs)
        member = any(choice is s for s in fs.members)
        middle = True
        if len(fs) >= 3:
            st = fs.stats()
            k = len(fs)
            # odd sizes take the median; even sizes pick by the larger spread
            if k % 2:
                middle = choice is fs.members[k // 2]
            elif st.v_psc >= st.v_cs:
                middle = choice is fs.members[k // 2]
            else:
                middle = choice is fs.members[k // 2 - 1]
        bad += not (distinct and ordered and member and middle)
    sizes = [len(fs) for fs in sets]
    secs = time.time() - t0
    record(6, bad == 0 and len(sets) > 0 and secs < 60,
           f"{len(sets)} feasible sets (sizes {min(sizes)}-{max(sizes)}), {bad} violations, "
           f"{secs:.0f} s (<60)")


def test_c07_determinism_across_workers():
    cells = [Cell(30, 4), Cell(50, 6)]
    settings = Settings(sim=SimParams(duration=40.0, cbr_rate=1.0))
    a, ta = sweep(cells, 2, 77, settings=settings, workers=1, trace=True)
    b, tb = sweep(cells, 2, 77, settings=settings, workers=4, trace=True)
    same_csv = to_csv(a).encode() == to_csv(b).encode()
    same_trace = [t.encode() for t in ta] == [t.encode() for t in tb]
    record(7, same_csv and same_trace,
           f"CSV identical={same_csv}, {len(ta)} traces identical={same_trace}")


@pytest.mark.slow
def test_c08_node_density_sweep():
    t0 = time.time()
    recs, _ = sweep([Cell(n, 20) for n in (40, 80, 120)], 5, BASE_SEED, settings=NET)
    secs = time.time() - t0
    tab = summarize(recs)
    m = {(a, n): tab[(a, n, 20)] for a in ("erto", "exor") for n in (40, 80, 120)}
    ratio = [m["erto", n]["pdr"][0] / m["exor", n]["pdr"][0] for n in (40, 80, 120)]
    a = all(r >= 1.10 for r in ratio)
    b = all(m["erto", n]["residual_j"][0] >= m["exor", n]["residual_j"][0] for n in (40, 80, 120))
    e80, e120 = m["erto", 80]["cfs_mean"][0], m["erto", 120]["cfs_mean"][0]
    change = abs(e120 - e80) / e80
    x = [m["exor", n]["cfs_mean"][0] for n in (40, 80, 120)]
    c = change < 0.15 and x[0] < x[1] < x[2]
    ok = a and b and c and secs < 600
    record(8, ok, "PDR ratio " + "/".join(f"{r:.2f}" for r in ratio) + " (>=1.10); "
           f"residual ok={b}; ERTO CFS 80->120 {change:+.1%} (<15%), ExOR CFS "
           + "<".join(f"{v:.2f}" for v in x) + f"; {secs:.0f} s (<600)")


@pytest.mark.slow
def test_c09_traffic_load_sweep():
    t0 = time.time()
    recs, _ = sweep([Cell(100, c) for c in (20, 60, 100)], 3, BASE_SEED, settings=NET)
    secs = time.time() - t0
    tab = summarize(recs)
    pdr = {a: [tab[(a, 100, c)]["pdr"][0] for c in (20, 60, 100)] for a in ("erto", "exor")}
    mono = all(p[0] >= p[1] >= p[2] for p in pdr.values())
    drop = {a: (p[0] - p[2]) / p[0] for a, p in pdr.items()}
    ok = mono and drop["erto"] < drop["exor"] and secs < 600
    record(9, ok, "PDR ERTO " + "/".join(f"{v:.3f}" for v in pdr["erto"]) + ", ExOR "
           + "/".join(f"{v:.3f}" for v in pdr["exor"])
           + f"; relative drop ERTO {drop['erto']:.1%} vs ExOR {drop['exor']:.1%}; {secs:.0f} s (<600)")


def test_c10_simulated_attempts_match_link_probability():
    # a lone link at full power, far enough out that p_si is near one half
    d = 185.0
    sim = SimParams(duration=10000.0, cbr_rate=20.0, queue_limit=10 ** 6, initial_energy=1e9)
    world = World(np.array([[0.0, 0.0], [d, 0.0]]), [(0, 1)], "exor", sim, seed=4, trace=True)
    world.run()
    attempts = len(world.trace.of_kind("tx"))
    hits = len(world.trace.of_kind("rx"))
    p = p_si(sim.p_max, d, InterfererSnapshot(), RadioParams())
    sigma = math.sqrt(p * (1 - p) / attempts)
    z = abs(hits / attempts - p) / sigma
    record(10, attempts >= 10 ** 5 and z <= 3.0,
           f"{attempts} attempts, freq={hits / attempts:.4f} vs p_si={p:.4f}, |z|={z:.2f} (<=3)")
