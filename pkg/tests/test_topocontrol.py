import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from erto import pareto, topocontrol, verify
from erto.errors import EmptyFront, InvalidParameter
from erto.pareto import ParetoSet, Solution
from erto.topocontrol import FeasibleSet, balanced_select, decide, feasible_set


def sol(p, n, psc, prnd, cost):
    return Solution(p, n, (-psc, -prnd, cost))


def test_feasible_set_singletons():
    only = sol(0.4, 2, 0.7, 0.3, 0.02)
    assert feasible_set(ParetoSet([only])).members == [only]
    front = ParetoSet([sol(0.2, 1, 0.5, 0.30, 0.01), sol(0.5, 2, 0.8, 0.35, 0.03),
                       sol(0.8, 3, 0.9, 0.20, 0.05)])
    fs = feasible_set(front, tol=0.0)
    assert [(s.p_ts, s.n_rel) for s in fs.members] == [(0.5, 2)]


def test_feasible_set_empty_front():
    with pytest.raises(EmptyFront):
        feasible_set(ParetoSet([]))


def test_feasible_set_equals_grid_filter():
    ctx = verify.desk_context(11)
    grid = pareto.brute_force_front(ctx)
    fs = feasible_set(grid, 0.01)
    p_star = max(s.p_rnd for s in grid)
    near = [s for s in grid if s.p_rnd >= 0.99 * p_star]
    assert fs.p_rnd_star == p_star
    assert set(fs.members) | set(fs.dropped) == set(near)
    assert [s.p_sc for s in fs.members] == sorted(s.p_sc for s in fs.members)


def test_balanced_select_rules():
    a, b, c, d = (sol(0.2, 1, 0.40, 0.3, 0.030), sol(0.3, 1, 0.50, 0.3, 0.031),
                  sol(0.4, 1, 0.60, 0.3, 0.032), sol(0.5, 1, 0.95, 0.3, 0.033))
    assert balanced_select(FeasibleSet([a], 0.3)) is a
    assert balanced_select(FeasibleSet([a, b, c], 0.3)) is b
    # p_sc spread dominates the cost spread: take the upper middle member
    fs = FeasibleSet([a, b, c, d], 0.3)
    st_ = fs.stats()
    assert st_.v_psc > st_.v_cs
    assert balanced_select(fs) is c
    with pytest.raises(InvalidParameter):
        balanced_select(FeasibleSet([], 0.3))


def test_balanced_select_even_cost_branch():
    a, b = sol(0.2, 1, 0.50, 0.3, 0.01), sol(0.3, 1, 0.51, 0.3, 0.05)
    fs = FeasibleSet([a, b], 0.3)
    assert fs.stats().v_cs > fs.stats().v_psc
    assert balanced_select(fs) is a


def test_decide_keep_and_adjust():
    front = ParetoSet([sol(0.2, 1, 0.5, 0.30, 0.01), sol(0.5, 2, 0.8, 0.35, 0.03)])
    fs = feasible_set(front)
    assert decide((0.5, 2), front, fs).keep
    assert decide((0.503, 2), front, fs).keep          # within 1 %
    d = decide((0.5, 3), front, fs)
    assert d.adjust and d.target is balanced_select(fs)


@settings(max_examples=50)
@given(st.lists(st.tuples(st.floats(0.1, 0.8), st.integers(1, 6)), min_size=1, max_size=6),
       st.floats(0.1, 0.8), st.integers(1, 6))
def test_decide_iff_membership(points, p, n):
    front = ParetoSet([sol(pp, nn, 0.5, 0.3, 0.01 * k) for k, (pp, nn) in enumerate(points, 1)])
    fs = FeasibleSet([front[0]], 0.3)
    member = any(s.n_rel == n and abs(s.p_ts - p) <= 0.01 * s.p_ts for s in front)
    assert decide((p, n), front, fs).keep == member


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 500))
def test_feasible_sets_ordering_on_real_fronts(seed):
    ctx = verify.desk_context(seed)
    front = pareto.nsga2_front(ctx, pareto.GaConfig(population=24, generations=10, seed=seed))
    fs = feasible_set(front)
    psc = [s.p_sc for s in fs.members]
    cs = [s.cost for s in fs.members]
    assert len(set(psc)) == len(psc) and len(set(cs)) == len(cs)
    assert list(np.argsort(psc)) == list(np.argsort(cs))
    choice = balanced_select(fs)
    assert choice in fs.members
    if len(fs) >= 3:
        assert min(psc) < choice.p_sc < max(psc)


def test_ordering_violators_are_dropped():
    a = sol(0.2, 1, 0.50, 0.3, 0.02)
    b = sol(0.3, 1, 0.60, 0.3, 0.01)    # better on both counts: a breaks the ordering
    fs = feasible_set(ParetoSet([a, b]))
    assert fs.members == [b] and fs.dropped == [a]
    assert topocontrol.ordering_consistent(fs.members)
