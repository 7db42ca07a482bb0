import math
import random

import numpy as np
import pytest

from erto.errors import InvalidParameter
from erto.linkmodel import InterfererSnapshot, RadioParams, p_si, sample_reception
from erto.sim.engine import SimParams, World
from erto.sim.scenario import build_scenario, mean_nearest_neighbor
from erto.sim.trace import read_trace

QUIET = RadioParams(P_n=1e-30)   # noise far below any received power


def _line_world(alg="exor", **kw):
    pos = np.array([[0.0, 0.0], [150.0, 0.0], [300.0, 0.0]])
    sim = SimParams(duration=2.5, cbr_rate=1.0)
    return World(pos, [(0, 2)], alg, sim, QUIET, seed=3, trace=True, flow_offsets=[2.0], **kw)


@pytest.mark.parametrize("alg", ["exor", "erto"])
def test_trivial_pair_delivers_everything(alg):
    w = World(np.array([[0.0, 0.0], [50.0, 0.0]]), [(0, 1)], alg,
              SimParams(duration=20.0, cbr_rate=1.0), QUIET, seed=3)
    m = w.run()
    assert m.sent > 0 and m.pdr == 1.0
    assert m.delay_s == pytest.approx(w.energy_params.delta + w.sim.slot, rel=1e-9)


def test_three_node_line_hand_trace():
    w = _line_world()
    w.run()
    d, s = w.energy_params.delta, w.sim.slot
    got = [(e.node, e.event, e.rank) for e in w.trace.events]
    assert got == [(0, "gen", 0), (0, "tx", 0), (1, "rx", 1), (1, "tx", 0),
                   (2, "rx", 1), (2, "deliver", 1)]
    times = [e.time for e in w.trace.events]
    expect = [2.0, 2.0, 2.0 + d, 2.0 + d + s, 2.0 + 2 * d + s, 2.0 + 2 * d + 2 * s]
    assert times == pytest.approx(expect, abs=1e-6)


def test_trace_round_trip(tmp_path):
    w = _line_world()
    w.run()
    path = tmp_path / "t.csv"
    w.trace.write(path)
    assert read_trace(str(path)) == read_trace(w.trace.text())
    assert path.read_text().splitlines()[0] == "time,node,event,packet,power,rank"


@pytest.fixture(scope="module")
def busy_world():
    sc = build_scenario(40, 6, seed=17)
    sim = SimParams(duration=60.0, cbr_rate=2.0, initial_energy=1.0)
    w = World(sc.positions, sc.flows, "erto", sim, seed=17, trace=True)
    return w, w.run()


def test_energy_conservation(busy_world):
    w, m = busy_world
    assert m.initial_j - m.residual_j == pytest.approx(math.fsum(w.debits), rel=1e-12)
    assert all(0.0 <= n.energy <= w.sim.initial_energy for n in w.nodes)


def test_per_flow_accounting(busy_world):
    w, m = busy_world
    rows = w.flow_accounting()
    for row in rows:
        assert row["delivered"] + row["dropped"] + row["in_flight"] == row["sent"]
    assert sum(r["sent"] for r in rows) == m.sent
    assert m.delivered + m.dropped + m.in_flight == m.sent


def test_powers_stay_in_bounds(busy_world):
    w, _ = busy_world
    for e in w.trace.of_kind("tx"):
        assert w.sim.p_min - 1e-12 <= e.power <= w.sim.p_max + 1e-12


def test_trace_is_causal_and_dead_nodes_are_silent(busy_world):
    w, _ = busy_world
    times = [e.time for e in w.trace.events]
    assert times == sorted(times)
    died = {e.node: e.time for e in w.trace.of_kind("dead")}
    assert died, "the low battery budget should exhaust some node"
    for e in w.trace.of_kind("tx"):
        assert e.node not in died or e.time <= died[e.node]


def test_no_traffic_spends_only_on_hellos():
    sc = build_scenario(10, 1, seed=2)
    w = World(sc.positions, [], "erto", SimParams(duration=10.0), seed=2)
    m = w.run()
    assert m.sent == 0 and math.isnan(m.pdr) and not m.pdr_defined
    assert set(w.spent) <= {"hello_tx", "hello_rx"}


def test_same_seed_same_trace():
    sc = build_scenario(20, 3, seed=5)
    texts = []
    for _ in range(2):
        w = World(sc.positions, sc.flows, "erto", SimParams(duration=20.0, cbr_rate=1.0),
                  seed=5, trace=True)
        w.run()
        texts.append(w.trace.text())
    assert texts[0] == texts[1]


def test_scenario_builder():
    two = build_scenario(2, 1, seed=1)
    assert two.flows in ([(0, 1)], [(1, 0)])
    assert build_scenario(30, 5, seed=4) == build_scenario(30, 5, seed=4)
    sc = build_scenario(30, 5, seed=4)
    assert all(s != d for s, d in sc.flows) and len(set(sc.flows)) == 5
    assert (sc.positions >= 0).all() and (sc.positions <= 1000).all()
    with pytest.raises(InvalidParameter):
        build_scenario(3, 7)
    with pytest.raises(InvalidParameter):
        build_scenario(1, 1)


def test_nearest_neighbour_scale():
    rho = 120 / 1e6
    vals = [mean_nearest_neighbor(build_scenario(120, 1, seed=s).positions) for s in range(50)]
    assert np.mean(vals) == pytest.approx(0.5 / math.sqrt(rho), rel=0.10)


def test_sampled_reception_matches_closed_form():
    radio = RadioParams()
    snap = InterfererSnapshot(powers=(0.5,), distances=(260.0,), activity=(1.0,))
    p = p_si(0.6, 180.0, snap, radio)
    rng = random.Random(99)
    n = 10 ** 5
    hits = sum(sample_reception(rng, 0.6, 180.0, [(0.5, 260.0)], radio) for _ in range(n))
    assert abs(hits / n - p) <= 3 * math.sqrt(p * (1 - p) / n)
