"""Opportunistic forwarding with ETX priorities: ERTO and the ExOR baseline.

ERTO picks its transmission power per destination through the Pareto
optimisation and topology-control rules; ExOR always transmits at its fixed
initial power.  Both rank candidates by ``ETX = 1 / p_si`` computed from the
same fading/interference model.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from . import topocontrol
from .energy import EnergyParams
from .errors import EmptyFront, InvalidParameter, NoRoute, UnreachableCandidate
from .geometry import RangeMap, distance, range_of_power
from .linkmodel import InterfererSnapshot, LinkScene, RadioParams, p_si
from .node import NodeState, Packet
from .pareto import Context, GaConfig, nsga2_front

log = logging.getLogger(__name__)

ERTO = "erto"
EXOR = "exor"
MODES = (ERTO, EXOR)


def etx(p: float) -> float:
    if p <= 0.0:
        raise UnreachableCandidate("p_si = 0: candidate unreachable")
    if p > 1.0:
        raise InvalidParameter(f"p_si={p} > 1")
    return 1.0 / p


@dataclass
class ForwardPlan:
    candidates: list      # ordered by priority
    etx: list
    power: float
    cfs_size: int = 0
    direct: bool = False

    def rank(self, node_id: int) -> int:
        """1-based priority of ``node_id``; 0 when not a candidate."""
        try:
            return self.candidates.index(node_id) + 1
        except ValueError:
            return 0


def order_by_etx(ids, probs):
    """Candidates with p_si > 0, ascending ETX, ties by node id."""
    rows = sorted((etx(p), i) for i, p in zip(ids, probs) if p > 0.0)
    return [i for _, i in rows], [e for e, _ in rows]


class Router:
    def __init__(self, mode: str, radio: RadioParams, rmap: RangeMap, energy: EnergyParams,
                 rho: float, p_min: float = 0.1, p_max: float = 0.8, p_init: float = 0.8,
                 ga: GaConfig = GaConfig(population=16, generations=12),
                 prnd_tol: float = topocontrol.DEFAULT_PRND_TOL,
                 match_tol: float = topocontrol.DEFAULT_MATCH_TOL,
                 hello_period: float = 1.0, reopt_period: float = 30.0, seed: int = 0):
        if mode not in MODES:
            raise InvalidParameter(f"unknown routing mode {mode!r}")
        self.mode = mode
        self.radio = radio
        self.rmap = rmap
        self.energy = energy
        self.rho = rho
        self.p_min, self.p_max, self.p_init = p_min, p_max, p_init
        self.ga = ga
        self.prnd_tol = prnd_tol
        self.match_tol = match_tol
        self.hello_period = hello_period
        self.reopt_period = reopt_period
        self.seed = seed
        self.optimisations = 0
        self.feasible_sets = []   # ordering-property audit trail

    def scene(self, node: NodeState, dst: int, dst_xy) -> LinkScene:
        neigh = {i: e.xy for i, e in node.neighbors.items()}
        tx = [(i, e.xy[0], e.xy[1], e.power, 1.0)
              for i, e in node.neighbors.items() if e.active]
        tx.sort()
        return LinkScene(node.xy, dst_xy, neigh, tx, self.radio, self.rmap, node.id, dst)

    def choose_power(self, node: NodeState, dst: int, scene: LinkScene, now: float) -> float:
        """ERTO: re-run the optimisation when the neighbour set changed or the
        cached front is older than ``reopt_period``; otherwise reuse it."""
        if self.mode == EXOR:
            return self.p_init
        ids = frozenset(node.neighbors)
        cached = node.topo_cache.get(dst)
        if cached is not None and cached[1] == ids and now - cached[0] < self.reopt_period:
            return node.power_for.get(dst, self.p_init)
        ctx = Context(scene, self.rho, self.energy, self.p_min, self.p_max)
        epoch = int(math.floor(now / self.hello_period))
        seed = int(np.random.SeedSequence([self.seed, node.id, dst, epoch]).generate_state(1)[0])
        ga = replace(self.ga, seed=seed)
        self.optimisations += 1
        try:
            front = nsga2_front(ctx, ga)
            fs = topocontrol.feasible_set(front, self.prnd_tol)
            self.feasible_sets.append(fs)
        except EmptyFront:
            front = fs = None
        node.topo_cache[dst] = (now, ids)
        current = node.power_for.get(dst)
        if front is None:
            power = self.p_max
        elif current is None:
            # no operating point toward this destination yet: adopt the balanced choice
            power = topocontrol.balanced_select(fs).p_ts
        else:
            n_now = len(scene.candidate_ids(current))
            decision = topocontrol.decide((current, n_now), front, fs, self.match_tol)
            power = current if decision.keep else decision.target.p_ts
        node.power_for[dst] = power
        return power

    def plan_forward(self, node: NodeState, dst: int, dst_xy, now: float = 0.0) -> ForwardPlan:
        if not node.alive:
            raise NoRoute("sender is dead")
        scene = self.scene(node, dst, dst_xy)
        power = self.choose_power(node, dst, scene, now)
        members = scene.members(power)
        cfs = int(members.sum())
        d_ds = distance(node.xy, dst_xy)
        if d_ds <= range_of_power(power, self.rmap):
            snap_rows = [(t[3], math.hypot(t[1] - dst_xy[0], t[2] - dst_xy[1]), t[4])
                         for t in scene.transmitters
                         if t[0] != dst and 0 < math.hypot(t[1] - dst_xy[0], t[2] - dst_xy[1])
                         <= range_of_power(t[3], self.rmap)]
            p = p_si(power, d_ds, InterfererSnapshot.of(snap_rows), self.radio)
            return ForwardPlan([dst], [etx(max(p, 1e-300))], power, cfs, direct=True)
        probs = scene.p_si_table([power])[0]
        ids, etxs = order_by_etx(scene.ids[members], probs[members])
        if not ids:
            raise NoRoute(f"node {node.id}: empty candidate set toward {dst}")
        return ForwardPlan(ids, etxs, power, cfs)


class Action(enum.Enum):
    DELIVER = "deliver"
    FORWARD = "forward"
    SUPPRESS = "suppress"
    DROP = "drop"


def on_receive(node: NodeState, packet: Packet, rank: int, slot: float,
               hop_limit: int = 32) -> tuple[Action, float]:
    """What a candidate does with a packet it decoded at priority ``rank``.

    A relay accepts a copy unless it already held one at the same or a later
    hop.  Candidates are strictly closer to the destination than their
    sender, so re-accepting a packet that moved on cannot loop.
    Returns the action and the delay before acting (``slot * rank``).
    """
    delay = slot * rank
    if node.id == packet.dst:
        if packet.pid in node.seen:
            return Action.SUPPRESS, delay
        node.seen[packet.pid] = packet.hops + 1
        return Action.DELIVER, delay
    hops = packet.hops + 1
    if node.seen.get(packet.pid, -1) >= hops:
        return Action.SUPPRESS, delay
    node.seen[packet.pid] = hops
    if hops >= hop_limit:
        return Action.DROP, delay
    return Action.FORWARD, delay


def on_overhear(node: NodeState, packet: Packet, from_id: int = -1) -> bool:
    """A forward of ``packet`` by ``from_id`` was decoded; cancel our pending
    copy when the overheard one is at least as far along.

    Two relays that both already transmitted the same copy would otherwise
    cancel each other; between those the lower node id keeps forwarding.
    Returns True when a pending copy was cancelled.
    """
    hops = node.pending.get(packet.pid)
    if hops is None or (packet.pid, hops) in node.cancelled or hops > packet.hops:
        return False
    if hops == packet.hops and packet.pid in node.attempted and node.id < from_id:
        return False
    node.cancelled.add((packet.pid, hops))
    return True
