"""From a Pareto set to the one (power, degree) pair a node actually uses."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyFront, InvalidParameter
from .pareto import ParetoSet, Solution

log = logging.getLogger(__name__)

DEFAULT_PRND_TOL = 0.01
DEFAULT_MATCH_TOL = 0.01


@dataclass
class PerformanceStats:
    v_psc: float
    v_cs: float


@dataclass
class FeasibleSet:
    """Front members sharing the (near-)maximal ``p_rnd``, ascending ``p_sc``."""

    members: list
    p_rnd_star: float
    dropped: list = field(default_factory=list)

    def __len__(self):
        return len(self.members)

    def stats(self) -> PerformanceStats:
        psc = np.array([s.p_sc for s in self.members])
        cs = np.array([s.cost for s in self.members])
        return PerformanceStats(_cv(psc), _cv(cs))


def _cv(x: np.ndarray) -> float:
    mean = abs(float(x.mean()))
    return float(x.std()) / mean if mean > 0 else 0.0


def ordering_consistent(members) -> bool:
    """Ascending-p_sc order equals ascending-cost order, with no ties in either."""
    psc = [s.p_sc for s in members]
    cs = [s.cost for s in members]
    if len(set(psc)) != len(psc) or len(set(cs)) != len(cs):
        return False
    return list(np.argsort(psc, kind="stable")) == list(np.argsort(cs, kind="stable"))


def feasible_set(front: ParetoSet, tol: float = DEFAULT_PRND_TOL) -> FeasibleSet:
    if len(front) == 0:
        raise EmptyFront("empty Pareto set")
    p_star = max(s.p_rnd for s in front)
    near = [s for s in front if s.p_rnd >= (1.0 - tol) * p_star]
    # p_rnd is treated as equal inside the set, so any member beaten on both
    # p_sc and cost (or an exact tie) breaks the monotone ordering: drop it.
    near.sort(key=lambda s: (-s.p_sc, s.cost, s.p_ts, s.n_rel))
    kept, dropped = [], []
    best_cost = np.inf
    for s in near:
        if s.cost < best_cost:
            kept.append(s)
            best_cost = s.cost
        else:
            dropped.append(s)
    kept.reverse()
    if dropped:
        log.debug("feasible set: dropped %d members violating p_sc/cost ordering", len(dropped))
    fs = FeasibleSet(kept, p_star, dropped)
    if not ordering_consistent(kept):
        raise AssertionError("feasible set ordering check failed after duplicate drop")
    return fs


def balanced_select(fs: FeasibleSet) -> Solution:
    m = len(fs)
    if m == 0:
        raise InvalidParameter("empty feasible set")
    members = fs.members
    if m % 2 == 1:
        return members[(m + 1) // 2 - 1]
    lower, upper = members[m // 2 - 1], members[m // 2]
    st = fs.stats()
    if st.v_psc >= st.v_cs:
        return upper if upper.p_sc > lower.p_sc else lower
    return lower if lower.cost < upper.cost else upper


def on_front(p_ts: float, n_rel: int, front: ParetoSet, tol: float = DEFAULT_MATCH_TOL) -> bool:
    return any(s.n_rel == n_rel and abs(s.p_ts - p_ts) <= tol * abs(s.p_ts) for s in front)


@dataclass(frozen=True)
class Decision:
    keep: bool
    target: Solution | None = None

    @property
    def adjust(self) -> bool:
        return not self.keep


def decide(current: tuple, front: ParetoSet, fs: FeasibleSet,
           tol: float = DEFAULT_MATCH_TOL) -> Decision:
    """Keep the current (power, degree) if it sits on the front, else move to
    the balanced member of the feasible set."""
    p_ts, n_rel = current
    if on_front(p_ts, n_rel, front, tol):
        return Decision(True)
    return Decision(False, balanced_select(fs))
