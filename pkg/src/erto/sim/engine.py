"""Discrete-event simulation of opportunistic forwarding over a fading channel.

Channel model: a transmission occupies the air for ``L / B`` seconds.  Two
transmissions interfere at a receiver when their air times overlap and the
interferer's range covers the receiver.  Each receiver decides decoding
with a single fading draw of the SINR.  Channel access is a slotted carrier
sense: a node that hears an ongoing transmission defers until it ends plus
a random number of slots.
"""

from __future__ import annotations

import heapq
import logging
import math
import random
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..energy import EnergyParams
from ..errors import NoRoute
from ..geometry import RangeMap, range_of_power
from ..linkmodel import RadioParams, sample_reception
from ..node import NeighborEntry, NodeState, Packet
from ..pareto import GaConfig
from ..routing import ERTO, Action, Router, on_overhear, on_receive
from .metrics import MetricsRecord
from .trace import Trace

log = logging.getLogger(__name__)

# event kinds; the int order only matters for readability of the heap
HELLO, CBR, TRY, TXEND, TIMER, ACK = range(6)


@dataclass
class SimParams:
    duration: float = 300.0
    hello_period: float = 1.0
    staleness_periods: int = 3
    hello_bits: int = 128
    cbr_rate: float = 4.0          # packets/s per flow
    slot: float = 0.005
    contention_window: int = 16    # slots
    retx_budget: int = 7
    hop_limit: int = 32
    noroute_retries: int = 3
    queue_limit: int = 64
    initial_energy: float = 5.0
    p_min: float = 0.1
    p_max: float = 0.8
    p_init: float = 0.8
    hello_power: float = 0.8
    prnd_tol: float = 0.01
    match_tol: float = 0.01
    ga: GaConfig = field(default_factory=lambda: GaConfig(population=16, generations=12))
    reopt_period: float = 30.0


@dataclass
class Tx:
    tid: int
    sender: int
    power: float
    reach: float
    start: float
    end: float
    packet: Packet | None = None
    plan: object = None


class World:
    """A static deployment with its traffic flows, ready to run once."""

    def __init__(self, positions: np.ndarray, flows: list, algorithm: str = ERTO,
                 sim: SimParams | None = None, radio: RadioParams | None = None,
                 energy: EnergyParams | None = None, rmap: RangeMap | None = None,
                 area=(1000.0, 1000.0), seed: int = 0, trace: bool = False,
                 flow_offsets: list | None = None):
        self.sim = sim or SimParams()
        self.radio = radio or RadioParams()
        self.energy_params = energy or EnergyParams()
        self.rmap = rmap or RangeMap(eta=self.radio.eta)
        self.positions = np.asarray(positions, dtype=float)
        self.flows = list(flows)
        self.algorithm = algorithm
        self.area = area
        self.seed = seed
        n = len(self.positions)
        self.dist = np.hypot(*(self.positions[:, None, :] - self.positions[None, :, :]).transpose(2, 0, 1))
        self.nodes = [NodeState(i, (float(x), float(y)), self.sim.initial_energy,
                                self.sim.initial_energy, self.sim.p_init)
                      for i, (x, y) in enumerate(self.positions)]
        rho = n / (area[0] * area[1])
        self.router = Router(algorithm, self.radio, self.rmap, self.energy_params, rho,
                             self.sim.p_min, self.sim.p_max, self.sim.p_init, self.sim.ga,
                             self.sim.prnd_tol, self.sim.match_tol, self.sim.hello_period,
                             self.sim.reopt_period, seed)
        self.rng = random.Random(seed)
        self.trace = Trace() if trace else None
        self.flow_offsets = flow_offsets
        self._heap = []
        self._seq = 0
        self._tid = 0
        self.now = 0.0
        self.air = []            # transmissions that may still overlap new ones
        self.debits = []         # every energy debit, for the conservation audit
        self.spent = {}          # joules by debit kind
        self.status = {}         # pid -> [copies, delivered_time | None, last_drop_reason, flow]
        self.sent = 0
        self.delivered = 0
        self.delays = []
        self.drops = {}
        self.flow_drops = [0] * len(self.flows)
        self.duplicates = 0
        self.cfs_sizes = []
        self.forwarders = {}
        self.data_tx = 0
        self.deaths = []

    # -- event plumbing -------------------------------------------------
    def schedule(self, t: float, kind: int, payload=None) -> None:
        if t < self.now:
            raise RuntimeError(f"event scheduled in the past: {t} < {self.now}")
        heapq.heappush(self._heap, (t, self._seq, kind, payload))
        self._seq += 1

    def log(self, node, event, pid=-1, power=0.0, rank=0):
        if self.trace is not None:
            self.trace.add(self.now, node, event, pid, power, rank)

    # -- energy -----------------------------------------------------------
    def debit(self, node: NodeState, joules: float, kind: str = "other") -> None:
        if not node.alive:
            return
        amount = min(joules, node.energy)
        node.energy -= amount
        self.debits.append(amount)
        self.spent[kind] = self.spent.get(kind, 0.0) + amount
        if node.energy <= 0.0:
            node.energy = 0.0
            self._kill(node)

    def _kill(self, node: NodeState) -> None:
        self.log(node.id, "dead")
        self.deaths.append((self.now, node.id))
        for pkt in list(node.queue):
            self._end_copy(pkt.pid, "dead")
        node.queue.clear()
        for pkt in node.parked:
            self._end_copy(pkt.pid, "dead")
        node.parked.clear()

    # -- packet copy accounting --------------------------------------------
    @staticmethod
    def _release(node, pkt):
        if node.pending.get(pkt.pid) == pkt.hops:
            del node.pending[pkt.pid]
            node.attempted.discard(pkt.pid)

    def _new_copy(self, pid):
        self.status[pid][0] += 1

    def _end_copy(self, pid, reason):
        st = self.status[pid]
        st[0] -= 1
        if reason != "suppressed":
            st[2] = reason
        if st[0] == 0 and st[1] is None:
            r = st[2] or reason
            self.drops[r] = self.drops.get(r, 0) + 1
            self.flow_drops[st[3]] += 1

    # -- run --------------------------------------------------------------
    def run(self) -> MetricsRecord:
        sim = self.sim
        phase = random.Random(self.seed ^ 0x5A5A5A)
        for node in self.nodes:
            self.schedule(phase.uniform(0, sim.hello_period * 0.5), HELLO, node.id)
        interval = 1.0 / sim.cbr_rate
        for f, _ in enumerate(self.flows):
            if self.flow_offsets is not None:
                start = self.flow_offsets[f]
            else:
                start = sim.hello_period + phase.uniform(0, interval)
            if start < sim.duration:
                self.schedule(start, CBR, f)
        handlers = {HELLO: self._hello, CBR: self._cbr, TRY: self._try, TXEND: self._txend,
                    TIMER: self._timer, ACK: self._ack}
        heap = self._heap
        while heap:
            t, _, kind, payload = heap[0]
            if t > sim.duration:
                break
            heapq.heappop(heap)
            self.now = t
            handlers[kind](payload)
        self.now = sim.duration
        return self.metrics()

    # -- handlers -----------------------------------------------------------
    def _hello(self, nid):
        node = self.nodes[nid]
        sim = self.sim
        nxt = self.now + sim.hello_period
        if not node.alive:
            return
        self.schedule(nxt, HELLO, nid)
        node.expire(self.now, sim.staleness_periods * sim.hello_period)
        delta = sim.hello_bits / self.energy_params.B
        reach = range_of_power(sim.hello_power, self.rmap)
        active = self.now - node.last_data_tx <= sim.hello_period
        self.debit(node, self.energy_params.xi * sim.hello_power * delta, "hello_tx")
        if not node.alive:
            return
        for j in np.nonzero(self.dist[nid] <= reach)[0]:
            if j == nid:
                continue
            other = self.nodes[j]
            if not other.alive:
                continue
            self.debit(other, self.energy_params.E_r * delta, "hello_rx")
            if other.alive:
                other.hear_hello(NeighborEntry(nid, node.xy, self.now, node.power, active))
        # parked packets get another routing attempt each hello period
        if node.parked:
            parked, node.parked = node.parked, []
            for pkt in parked:
                pkt.noroute_retries += 1
                if pkt.noroute_retries > sim.noroute_retries:
                    self.log(nid, "drop", pkt.pid, 0.0, 0)
                    self._end_copy(pkt.pid, "no_route")
                else:
                    node.queue.append(pkt)
            self._kick(node)

    def _cbr(self, f):
        src, dst = self.flows[f]
        nxt = self.now + 1.0 / self.sim.cbr_rate
        if nxt <= self.sim.duration:
            self.schedule(nxt, CBR, f)
        pid = self.sent
        self.sent += 1
        self.status[pid] = [1, None, None, f]
        node = self.nodes[src]
        pkt = Packet(pid, f, src, dst, self.now, int(self.energy_params.L))
        self.log(src, "gen", pid)
        if not node.alive:
            self._end_copy(pid, "dead")
            return
        if len(node.queue) >= self.sim.queue_limit:
            self._end_copy(pid, "queue")
            return
        node.seen[pid] = 0
        node.queue.append(pkt)
        self._kick(node)

    def _kick(self, node, delay=0.0):
        if node.try_pending or node.transmitting or node.waiting or not node.alive:
            return
        node.try_pending = True
        self.schedule(self.now + delay, TRY, node.id)

    def _busy_until(self, nid):
        """End time of the latest audible transmission, or None if idle."""
        until = None
        for tx in self.air:
            if tx.start <= self.now < tx.end and tx.sender != nid and self.dist[tx.sender, nid] <= tx.reach:
                until = tx.end if until is None else max(until, tx.end)
        return until

    def _try(self, nid):
        node = self.nodes[nid]
        node.try_pending = False
        if not node.alive or node.transmitting or node.waiting:
            return
        while node.queue:
            pkt = node.queue[0]
            if (pkt.pid, pkt.hops) in node.cancelled:
                node.queue.popleft()
                self._release(node, pkt)
                self.log(nid, "suppress", pkt.pid)
                self._end_copy(pkt.pid, "suppressed")
                continue
            break
        if not node.queue:
            return
        busy = self._busy_until(nid)
        if busy is not None:
            backoff = self.rng.randint(1, self.sim.contention_window) * self.sim.slot
            node.try_pending = True
            self.schedule(busy + backoff, TRY, nid)
            return
        pkt = node.queue[0]
        dst_xy = self.nodes[pkt.dst].xy
        try:
            plan = self.router.plan_forward(node, pkt.dst, dst_xy, self.now)
        except NoRoute:
            node.queue.popleft()
            node.parked.append(pkt)
            self.log(nid, "noroute", pkt.pid)
            self._kick(node)
            return
        node.queue.popleft()
        self._transmit(node, pkt, plan)

    def _transmit(self, node, pkt, plan):
        delta = self.energy_params.delta
        node.power = plan.power
        reach = range_of_power(plan.power, self.rmap)
        tx = Tx(self._tid, node.id, plan.power, reach, self.now, self.now + delta, pkt, plan)
        self._tid += 1
        self.air.append(tx)
        node.transmitting = True
        node.last_data_tx = self.now
        self.data_tx += 1
        self.cfs_sizes.append(plan.cfs_size)
        if pkt.attempts == 0:
            key = (pkt.pid, pkt.hops)
            first = self.forwarders.setdefault(key, node.id)
            if first != node.id:
                self.duplicates += 1
        if pkt.pid in node.pending:
            node.attempted.add(pkt.pid)
        self.log(node.id, "tx", pkt.pid, plan.power, 0)
        self.debit(node, self.energy_params.xi * plan.power * delta, "data_tx")
        self.schedule(tx.end, TXEND, tx)

    def _overlapping(self, tx):
        return [o for o in self.air if o is not tx and o.start < tx.end and o.end > tx.start]

    def _txend(self, tx):
        sender = self.nodes[tx.sender]
        sender.transmitting = False
        pkt, plan = tx.packet, tx.plan
        delta = self.energy_params.delta
        others = self._overlapping(tx)
        ranks = {c: r for r, c in enumerate(plan.candidates, start=1)}
        listeners = [int(j) for j in np.nonzero(self.dist[tx.sender] <= tx.reach)[0] if j != tx.sender]
        decoded = []
        for j in listeners:
            node = self.nodes[j]
            if not node.alive:
                continue
            self.debit(node, self.energy_params.E_r * delta, "data_rx")
            if not node.alive:
                continue
            interested = j in ranks or pkt.pid in node.pending
            if not interested:
                continue
            if any(o.sender == j for o in others):
                continue  # half duplex
            interferers = [(o.power, self.dist[o.sender, j]) for o in others
                           if self.dist[o.sender, j] <= o.reach]
            if sample_reception(self.rng, tx.power, self.dist[tx.sender, j], interferers, self.radio):
                decoded.append(j)
        got = False
        for j in decoded:
            node = self.nodes[j]
            if j not in ranks:
                if pkt.hops > 0 and on_overhear(node, pkt, tx.sender):
                    self.log(j, "overhear", pkt.pid, 0.0, 0)
                continue
            got = True
            rank = ranks[j]
            if pkt.pid in node.pending and on_overhear(node, pkt, tx.sender):
                self.log(j, "overhear", pkt.pid, 0.0, rank)
            action, wait = on_receive(node, pkt, rank, self.sim.slot, self.sim.hop_limit)
            self.log(j, "rx", pkt.pid, 0.0, rank)
            if action is Action.DELIVER:
                self._new_copy(pkt.pid)
                self.schedule(self.now + wait, TIMER, (j, pkt, rank, True))
            elif action is Action.FORWARD:
                copy = pkt.forwarded()
                old = node.pending.get(pkt.pid)
                if old is not None:
                    node.cancelled.add((pkt.pid, old))   # superseded by the newer copy
                node.pending[pkt.pid] = copy.hops
                node.attempted.discard(pkt.pid)
                self._new_copy(pkt.pid)
                self.schedule(self.now + wait, TIMER, (j, copy, rank, False))
            elif action is Action.DROP:
                self.log(j, "drop", pkt.pid, 0.0, rank)
                self._new_copy(pkt.pid)
                self._end_copy(pkt.pid, "hop_limit")
            elif j == pkt.dst:
                self.duplicates += 1
        if got:
            self._end_copy(pkt.pid, "handed_over")
            self._release(sender, pkt)
        else:
            pkt.attempts += 1
            if pkt.attempts >= self.sim.retx_budget:
                self.log(tx.sender, "drop", pkt.pid, tx.power, 0)
                self._release(sender, pkt)
                self._end_copy(pkt.pid, "retx")
            elif sender.alive:
                sender.queue.appendleft(pkt)
            else:
                self._end_copy(pkt.pid, "dead")
        self._prune_air()
        if sender.alive:
            sender.waiting = True
            window = (len(plan.candidates) + 1) * self.sim.slot
            self.schedule(self.now + window, ACK, tx.sender)

    def _prune_air(self):
        horizon = self.now - self.energy_params.delta
        if self.air and self.air[0].end < horizon:
            self.air = [o for o in self.air if o.end >= horizon]

    def _ack(self, nid):
        node = self.nodes[nid]
        node.waiting = False
        if node.queue and node.queue[0].attempts > 0:
            backoff = self.rng.randint(1, self.sim.contention_window) * self.sim.slot
            self._kick(node, backoff)
        else:
            self._kick(node)

    def _timer(self, payload):
        nid, pkt, rank, deliver = payload
        node = self.nodes[nid]
        if deliver:
            st = self.status[pkt.pid]
            if st[1] is None:
                st[1] = self.now
                self.delivered += 1
                self.delays.append(self.now - pkt.created)
                self.log(nid, "deliver", pkt.pid, 0.0, rank)
            self._end_copy(pkt.pid, "delivered")
            return
        if not node.alive:
            self._release(node, pkt)
            self._end_copy(pkt.pid, "dead")
            return
        if (pkt.pid, pkt.hops) in node.cancelled:
            self._release(node, pkt)
            self.log(nid, "suppress", pkt.pid, 0.0, rank)
            self._end_copy(pkt.pid, "suppressed")
            return
        if len(node.queue) >= self.sim.queue_limit:
            self._release(node, pkt)
            self._end_copy(pkt.pid, "queue")
            return
        # relayed traffic goes ahead of locally generated packets
        node.queue.appendleft(pkt)
        self._kick(node)

    # -- results ------------------------------------------------------------
    def flow_accounting(self) -> list[dict]:
        """Per flow: packets sent, delivered, dropped (from the drop counter)
        and still in flight at the end of the run."""
        rows = [dict(sent=0, delivered=0, dropped=d, in_flight=0) for d in self.flow_drops]
        for copies, delivered, _, f in self.status.values():
            row = rows[f]
            row["sent"] += 1
            if delivered is not None:
                row["delivered"] += 1
            elif copies > 0:
                row["in_flight"] += 1
        return rows

    def metrics(self) -> MetricsRecord:
        delivered = sum(1 for st in self.status.values() if st[1] is not None)
        in_flight = sum(1 for st in self.status.values() if st[1] is None and st[0] > 0)
        dropped = sum(self.drops.values())
        residual = float(sum(n.energy for n in self.nodes))
        return MetricsRecord(
            algorithm=self.algorithm,
            n_nodes=len(self.nodes),
            n_cbr=len(self.flows),
            sent=self.sent,
            delivered=delivered,
            dropped=dropped,
            in_flight=in_flight,
            pdr=(delivered / self.sent) if self.sent else float("nan"),
            delay_s=float(np.mean(self.delays)) if self.delays else float("nan"),
            throughput_bps=delivered * self.energy_params.L / self.sim.duration,
            residual_j=residual,
            initial_j=self.sim.initial_energy * len(self.nodes),
            cfs_mean=float(np.mean(self.cfs_sizes)) if self.cfs_sizes else 0.0,
            duplicates=self.duplicates,
            drops=dict(sorted(self.drops.items())),
            data_tx=self.data_tx,
            optimisations=self.router.optimisations,
        )


def run_world(world: World) -> MetricsRecord:
    return world.run()
