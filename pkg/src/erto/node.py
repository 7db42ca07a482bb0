"""Per-node protocol state shared by the router and the simulator."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field


@dataclass
class NeighborEntry:
    node_id: int
    xy: tuple
    last_timestamp: float
    power: float            # advertised data power, W
    active: bool = False    # sent data during the last hello period

    def update(self, other: "NeighborEntry") -> None:
        if other.last_timestamp >= self.last_timestamp:
            self.xy = other.xy
            self.last_timestamp = other.last_timestamp
            self.power = other.power
            self.active = other.active


@dataclass(eq=False)
class Packet:
    pid: int
    flow: int
    src: int
    dst: int
    created: float
    bits: int
    hops: int = 0
    attempts: int = 0
    noroute_retries: int = 0

    def forwarded(self) -> "Packet":
        return Packet(self.pid, self.flow, self.src, self.dst, self.created, self.bits,
                      self.hops + 1)


@dataclass(eq=False)
class NodeState:
    id: int
    xy: tuple
    energy: float
    initial_energy: float
    power: float
    neighbors: dict = field(default_factory=dict)
    seen: dict = field(default_factory=dict)      # pid -> highest hop count accepted
    cancelled: set = field(default_factory=set)   # (pid, hops) copies to drop
    pending: dict = field(default_factory=dict)   # pid -> hop count of our copy
    attempted: set = field(default_factory=set)   # pending pids already sent once
    queue: deque = field(default_factory=deque)
    parked: list = field(default_factory=list)
    power_for: dict = field(default_factory=dict)
    topo_cache: dict = field(default_factory=dict)
    last_data_tx: float = float("-inf")
    transmitting: bool = False
    waiting: bool = False
    try_pending: bool = False

    @property
    def alive(self) -> bool:
        return self.energy > 0.0

    def hear_hello(self, entry: NeighborEntry) -> None:
        old = self.neighbors.get(entry.node_id)
        if old is None:
            self.neighbors[entry.node_id] = entry
        else:
            old.update(entry)

    def expire(self, now: float, window: float) -> None:
        stale = [i for i, e in self.neighbors.items() if now - e.last_timestamp > window]
        for i in stale:
            del self.neighbors[i]
