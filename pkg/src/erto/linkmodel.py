"""Packet delivery probability under Rayleigh fading and interference.

A receiver at distance ``d_rs`` from a sender transmitting ``p_ts`` decodes
the packet when its SINR reaches ``beta``.  Signal and interference powers
fluctuate with unit-mean exponential fading, which gives a closed form for
the success probability (``p_si``) and, over a candidate set, for the
probability that at least one candidate decodes (``p_sc``).  A Monte-Carlo
sampler of the same SINR model serves both as a validation oracle and as
the per-transmission outcome draw used by the simulator.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidParameter
from .geometry import RangeMap, candidate_set, range_of_power

LOG_SPACE_THRESHOLD = 20


@dataclass(frozen=True)
class RadioParams:
    beta: float = 3.16
    eta: float = 2.0
    K: float = 1e-4
    G: float = 4.0
    P_n: float = 4e-10

    def __post_init__(self):
        for name in ("beta", "eta", "K", "G", "P_n"):
            if not getattr(self, name) > 0:
                raise InvalidParameter(f"{name} must be strictly positive")
        if not 2.0 <= self.eta <= 5.0:
            raise InvalidParameter(f"eta={self.eta} outside [2, 5]")

    @classmethod
    def from_antenna(cls, g_t, g_r, wavelength, system_loss, **kw):
        """Build params with ``K = G_t G_r lambda^2 / ((4 pi)^2 Gamma)``."""
        k = g_t * g_r * wavelength ** 2 / ((4 * math.pi) ** 2 * system_loss)
        return cls(K=k, **kw)


@dataclass(frozen=True)
class InterfererSnapshot:
    """Concurrent transmitters around one receiver."""

    powers: tuple = ()
    distances: tuple = ()
    activity: tuple = ()

    def __post_init__(self):
        if not len(self.powers) == len(self.distances) == len(self.activity):
            raise InvalidParameter("snapshot columns differ in length")
        for p, d, a in zip(self.powers, self.distances, self.activity):
            if not (p > 0 and d > 0):
                raise InvalidParameter("interferer power and distance must be positive")
            if not 0.0 <= a <= 1.0:
                raise InvalidParameter(f"activity {a} outside [0, 1]")

    @classmethod
    def of(cls, rows: Iterable[Sequence[float]]) -> "InterfererSnapshot":
        """From ``(P_Ti, d_ri[, activity])`` rows; activity defaults to 1."""
        p, d, a = [], [], []
        for row in rows:
            p.append(float(row[0]))
            d.append(float(row[1]))
            a.append(float(row[2]) if len(row) > 2 else 1.0)
        return cls(tuple(p), tuple(d), tuple(a))

    def __len__(self):
        return len(self.powers)


NO_INTERFERENCE = InterfererSnapshot()


@dataclass
class LinkEstimate:
    p_si: list[float]
    p_sc: float
    snapshots: list[InterfererSnapshot] = field(default_factory=list)


def _check_link(p_ts, d_rs):
    if not (p_ts > 0 and d_rs > 0):
        raise InvalidParameter(f"power and distance must be positive, got {p_ts}, {d_rs}")


def p_si(p_ts: float, d_rs: float, interferers: InterfererSnapshot,
         params: RadioParams) -> float:
    _check_link(p_ts, d_rs)
    eta, beta = params.eta, params.beta
    log_p = -beta * params.P_n * d_rs ** eta / (p_ts * params.K)
    m = len(interferers)
    if m == 0:
        return math.exp(log_p)
    factors = []
    for pt, dri, a in zip(interferers.powers, interferers.distances, interferers.activity):
        f = 1.0 / (1.0 + beta * pt * (d_rs / dri) ** eta / (params.G * p_ts))
        factors.append(a * f + (1.0 - a))
    if m > LOG_SPACE_THRESHOLD:
        return math.exp(log_p + math.fsum(math.log(f) for f in factors))
    out = math.exp(log_p)
    for f in factors:
        out *= f
    return out


def p_si_montecarlo(p_ts: float, d_rs: float, interferers: InterfererSnapshot,
                    params: RadioParams, samples: int, seed=0,
                    chunk: int = 1 << 20) -> tuple[float, float]:
    """Fraction of fading draws whose SINR clears ``beta``, with its std error."""
    _check_link(p_ts, d_rs)
    if samples < 1:
        raise InvalidParameter("samples must be >= 1")
    rng = np.random.default_rng(seed)
    eta, K = params.eta, params.K
    pw = np.asarray(interferers.powers, dtype=float)
    dist = np.asarray(interferers.distances, dtype=float)
    act = np.asarray(interferers.activity, dtype=float)
    # mean received powers
    s_mean = K * p_ts / d_rs ** eta
    i_mean = K * pw / dist ** eta / params.G
    hits = 0
    left = samples
    while left:
        n = min(left, chunk)
        sig = s_mean * rng.exponential(size=n)
        noise = np.full(n, params.P_n)
        if len(pw):
            fade = rng.exponential(size=(n, len(pw)))
            on = rng.random(size=(n, len(pw))) < act
            noise += (fade * on) @ i_mean
        hits += int(np.count_nonzero(sig >= params.beta * noise))
        left -= n
    p = hits / samples
    return p, math.sqrt(max(p * (1 - p), 0.0) / samples)


def sample_reception(rng: random.Random, p_ts: float, d_rs: float,
                     interferers: Sequence[tuple[float, float]],
                     params: RadioParams) -> bool:
    """One fading draw: does the receiver decode this transmission?

    ``interferers`` holds ``(power, distance)`` of transmitters that are on
    the air for this draw.
    """
    eta, K = params.eta, params.K
    sig = K * p_ts / d_rs ** eta * rng.expovariate(1.0)
    noise = params.P_n
    for pt, dri in interferers:
        noise += K * pt / dri ** eta / params.G * rng.expovariate(1.0)
    return sig >= params.beta * noise


def p_sc(values: Iterable[float]) -> float:
    miss = 1.0
    for v in values:
        if not 0.0 <= v <= 1.0:
            raise InvalidParameter(f"probability {v} outside [0, 1]")
        miss *= 1.0 - v
    return 1.0 - miss


class LinkScene:
    """Local view of one sender: neighbours it may hand a packet to and the
    transmitters around them.

    ``neighbors`` maps node id -> (x, y).  ``transmitters`` rows are
    ``(node_id, x, y, power, activity)``; a transmitter interferes with a
    candidate when its own range covers it.
    """

    def __init__(self, sender_xy, destination_xy, neighbors: dict,
                 transmitters: Sequence[tuple] = (), params: RadioParams = None,
                 rmap: RangeMap = None, sender_id: int = -1, destination_id: int = -2):
        self.params = params or RadioParams()
        self.rmap = rmap or RangeMap(eta=self.params.eta)
        self.sender = np.asarray(sender_xy, dtype=float)
        self.destination = np.asarray(destination_xy, dtype=float)
        self.sender_id = sender_id
        self.destination_id = destination_id
        self.d_ds = float(np.hypot(*(self.sender - self.destination)))
        ids = sorted(i for i in neighbors if i not in (sender_id, destination_id))
        self.ids = np.array(ids, dtype=int)
        self.xy = np.array([neighbors[i] for i in ids], dtype=float).reshape(-1, 2)
        self.d_rs = np.hypot(*(self.xy - self.sender).T) if len(ids) else np.zeros(0)
        d_to_dst = np.hypot(*(self.xy - self.destination).T) if len(ids) else np.zeros(0)
        self.progress = d_to_dst < self.d_ds
        self.transmitters = [t for t in transmitters if t[0] != sender_id]
        self._prepare()

    def _prepare(self):
        prm = self.params
        k = len(self.ids)
        self.noise_coef = prm.beta * prm.P_n * self.d_rs ** prm.eta / prm.K
        m = len(self.transmitters)
        self.int_coef = np.zeros((k, m))
        self.int_act = np.zeros((k, m))
        self.int_dist = np.zeros((k, m))
        self.int_pow = np.zeros(m)
        for j, (tid, tx, ty, tp, ta) in enumerate(self.transmitters):
            self.int_pow[j] = tp
            reach = range_of_power(tp, self.rmap)
            d = np.hypot(self.xy[:, 0] - tx, self.xy[:, 1] - ty) if k else np.zeros(0)
            covers = (d <= reach) & (self.ids != tid) & (d > 0)
            dd = np.where(covers, d, 1.0)
            self.int_dist[:, j] = dd
            self.int_coef[:, j] = np.where(covers, prm.beta * tp * (self.d_rs / dd) ** prm.eta / prm.G, 0.0)
            self.int_act[:, j] = np.where(covers, ta, 0.0)

    def snapshot(self, idx: int) -> InterfererSnapshot:
        cols = np.nonzero(self.int_coef[idx] > 0)[0]
        return InterfererSnapshot(tuple(self.int_pow[cols]), tuple(self.int_dist[idx, cols]),
                                  tuple(self.int_act[idx, cols]))

    def members(self, p_ts: float) -> np.ndarray:
        """Boolean mask of neighbours inside the candidate area at ``p_ts``."""
        r = range_of_power(p_ts, self.rmap)
        return (self.d_rs <= r) & self.progress

    def p_si_table(self, powers) -> np.ndarray:
        """``p_si`` of every neighbour at every power; zero outside the area."""
        powers = np.atleast_1d(np.asarray(powers, dtype=float))
        if np.any(powers <= 0):
            raise InvalidParameter("transmission power must be positive")
        k = len(self.ids)
        if k == 0:
            return np.zeros((len(powers), 0))
        p = powers[:, None]
        log_p = -self.noise_coef[None, :] / p
        if self.int_coef.shape[1]:
            f = 1.0 / (1.0 + self.int_coef[None, :, :] / p[:, :, None])
            blend = self.int_act[None] * f + (1.0 - self.int_act[None])
            log_p = log_p + np.log(blend).sum(axis=2)
        out = np.exp(log_p)
        ranges = self.rmap.r_ref * (powers / self.rmap.p_ref) ** (1.0 / self.rmap.eta)
        mask = (self.d_rs[None, :] <= ranges[:, None]) & self.progress[None, :]
        return np.where(mask, out, 0.0)

    def p_sc_table(self, powers, n_max: int) -> np.ndarray:
        """``p_sc`` over the best ``n`` members, for ``n = 0..n_max``."""
        table = -np.sort(-self.p_si_table(powers), axis=1)
        k = table.shape[1]
        out = np.zeros((table.shape[0], n_max + 1))
        if k:
            miss = np.cumprod(1.0 - table, axis=1)
            cols = np.minimum(np.arange(1, n_max + 1), k) - 1
            out[:, 1:] = 1.0 - miss[:, cols]
        return out

    def estimate(self, p_ts: float) -> LinkEstimate:
        mask = self.members(p_ts)
        idx = np.nonzero(mask)[0]
        ps = [p_si(p_ts, float(self.d_rs[i]), self.snapshot(i), self.params) for i in idx]
        return LinkEstimate(ps, p_sc(ps), [self.snapshot(i) for i in idx])

    def candidate_ids(self, p_ts: float) -> list[int]:
        return [int(i) for i in self.ids[self.members(p_ts)]]


def p_sc_predict(p_ts: float, n_rel: int, scene: LinkScene) -> float:
    """``p_sc`` over the ``n_rel`` most reliable candidates at ``p_ts``."""
    if n_rel < 0:
        raise InvalidParameter("n_rel must be >= 0")
    if n_rel == 0:
        return 0.0
    return float(scene.p_sc_table([p_ts], n_rel)[0, n_rel])


def scene_from_positions(sender: int, destination: int, positions: np.ndarray,
                         powers: Sequence[float], activity: Sequence[float],
                         params: RadioParams, rmap: RangeMap) -> LinkScene:
    """Scene in which every other node is a potential neighbour and interferer."""
    neighbors = {i: tuple(positions[i]) for i in range(len(positions))}
    tx = [(i, positions[i][0], positions[i][1], powers[i], activity[i])
          for i in range(len(positions)) if i != sender and activity[i] > 0]
    return LinkScene(positions[sender], positions[destination], neighbors, tx,
                     params, rmap, sender, destination)


__all__ = [
    "RadioParams", "InterfererSnapshot", "LinkEstimate", "LinkScene", "NO_INTERFERENCE",
    "p_si", "p_si_montecarlo", "sample_reception", "p_sc", "p_sc_predict",
    "scene_from_positions", "candidate_set",
]
