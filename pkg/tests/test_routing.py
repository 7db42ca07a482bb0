import math

import numpy as np
import pytest

from erto.energy import EnergyParams
from erto.errors import InvalidParameter, NoRoute, UnreachableCandidate
from erto.geometry import RangeMap, candidate_set, range_of_power
from erto.linkmodel import InterfererSnapshot, RadioParams, p_si
from erto.node import NeighborEntry, NodeState, Packet
from erto.routing import (ERTO, EXOR, Action, Router, etx, on_overhear, on_receive,
                          order_by_etx)


def _node(nid, xy, neighbours=()):
    n = NodeState(nid, xy, 5.0, 5.0, 0.8)
    for j, pos in neighbours:
        n.hear_hello(NeighborEntry(j, pos, 0.0, 0.8))
    return n


def _router(mode=EXOR, **kw):
    return Router(mode, RadioParams(), RangeMap(), EnergyParams(), 1e-4, **kw)


def test_etx_examples():
    assert etx(1.0) == 1.0
    assert etx(0.5) == 2.0
    assert etx(0.1) == pytest.approx(10.0)
    with pytest.raises(UnreachableCandidate):
        etx(0.0)
    with pytest.raises(InvalidParameter):
        etx(1.2)


def test_order_by_etx():
    ids, etxs = order_by_etx([4, 7], [0.5, 0.9])
    assert ids == [7, 4]
    assert etxs == pytest.approx([1 / 0.9, 2.0])
    assert order_by_etx([1, 2], [0.0, 0.3])[0] == [2]


def test_destination_in_range_goes_first():
    node = _node(0, (0.0, 0.0), [(1, (50.0, 0.0)), (2, (120.0, 0.0))])
    plan = _router().plan_forward(node, 2, (120.0, 0.0))
    assert plan.direct and plan.candidates == [2]


def test_plan_matches_independent_recomputation():
    rng = np.random.default_rng(12)
    pos = rng.uniform(0, 600, (20, 2))
    sender, dst = 0, 19
    pos[dst] = (590.0, 590.0)
    r = range_of_power(0.8, RangeMap())
    neigh = [(j, tuple(pos[j])) for j in range(1, 20)
             if j != dst and math.dist(pos[j], pos[sender]) <= r]
    node = _node(sender, tuple(pos[sender]), neigh)
    plan = _router().plan_forward(node, dst, tuple(pos[dst]))
    members = candidate_set(sender, dst, {i: p for i, p in neigh} | {sender: tuple(pos[sender]),
                                                                    dst: tuple(pos[dst])}, r)
    rows = []
    for j in members:
        p = p_si(0.8, math.dist(pos[j], pos[sender]), InterfererSnapshot(), RadioParams())
        rows.append((1 / p, j))
    assert plan.candidates == [j for _, j in sorted(rows)]
    assert plan.etx == pytest.approx([e for e, _ in sorted(rows)])


def test_no_candidates_raises():
    node = _node(0, (0.0, 0.0), [(1, (-50.0, 0.0))])
    with pytest.raises(NoRoute):
        _router().plan_forward(node, 2, (900.0, 0.0))


def test_erto_power_within_bounds_and_cached():
    neigh = [(i, (60.0 * i, 15.0 * (-1) ** i)) for i in range(1, 6)]
    node = _node(0, (0.0, 0.0), neigh)
    router = _router(ERTO)
    plan = router.plan_forward(node, 9, (800.0, 0.0), now=0.0)
    assert 0.1 <= plan.power <= 0.8
    assert router.optimisations == 1
    again = router.plan_forward(node, 9, (800.0, 0.0), now=5.0)
    assert again.power == plan.power and router.optimisations == 1
    router.plan_forward(node, 9, (800.0, 0.0), now=31.0)
    assert router.optimisations == 2


def test_unknown_mode():
    with pytest.raises(InvalidParameter):
        _router("aodv")


def test_destination_delivers_once():
    dst = _node(5, (0.0, 0.0))
    pkt = Packet(1, 0, 0, 5, 0.0, 1024, hops=2)
    assert on_receive(dst, pkt, 1, 0.005) == (Action.DELIVER, 0.005)
    assert on_receive(dst, pkt, 1, 0.005)[0] is Action.SUPPRESS


def test_lower_priority_suppresses_after_overhearing():
    pkt = Packet(3, 0, 0, 9, 0.0, 1024)
    first, second = _node(1, (0.0, 0.0)), _node(2, (0.0, 0.0))
    a1, w1 = on_receive(first, pkt, 1, 0.005)
    a2, w2 = on_receive(second, pkt, 2, 0.005)
    assert a1 is a2 is Action.FORWARD and w1 < w2
    first.pending[3] = second.pending[3] = 1
    # rank 1 forwards first; rank 2 hears hop-1 copy and cancels its own
    assert on_overhear(second, pkt.forwarded(), from_id=1)
    assert (3, 1) in second.cancelled
    assert on_receive(second, pkt, 2, 0.005)[0] is Action.SUPPRESS


def test_hop_limit_drop():
    relay = _node(1, (0.0, 0.0))
    pkt = Packet(4, 0, 0, 9, 0.0, 1024, hops=31)
    assert on_receive(relay, pkt, 1, 0.005, hop_limit=32)[0] is Action.DROP


def test_overhear_tie_break_keeps_lower_id():
    pkt = Packet(8, 0, 0, 9, 0.0, 1024, hops=2)
    low, high = _node(1, (0, 0)), _node(4, (0, 0))
    for n in (low, high):
        n.pending[8] = 2
        n.attempted.add(8)
    assert not on_overhear(low, pkt, from_id=4)
    assert on_overhear(high, pkt, from_id=1)
