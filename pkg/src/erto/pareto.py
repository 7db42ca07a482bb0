"""Joint power/degree optimisation with NSGA-II.

Decision vector: transmission power ``p_ts`` and forwarding node degree
``n_rel``.  Objectives, all minimised: ``-p_sc``, ``-p_rnd`` and the
expected one-hop energy cost.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .degree import p_rnd_array
from .energy import P_SC_FLOOR, EnergyParams, expected_cost_array
from .errors import EmptyFront, InvalidParameter
from .geometry import candidate_area_array, range_of_power
from .linkmodel import LinkScene


@dataclass(frozen=True)
class Solution:
    p_ts: float
    n_rel: int
    objectives: tuple  # (-p_sc, -p_rnd, cost)

    @property
    def p_sc(self) -> float:
        return -self.objectives[0]

    @property
    def p_rnd(self) -> float:
        return -self.objectives[1]

    @property
    def cost(self) -> float:
        return self.objectives[2]

    @property
    def feasible(self) -> bool:
        return all(math.isfinite(v) for v in self.objectives) and self.p_sc > P_SC_FLOOR


@dataclass
class ParetoSet:
    members: list = field(default_factory=list)

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, i):
        return self.members[i]

    def objectives(self) -> np.ndarray:
        return np.array([s.objectives for s in self.members], dtype=float).reshape(-1, 3)

    def check(self):
        """All-pairs mutual non-dominance."""
        F = self.objectives()
        if len(F) and dominance_matrix(F).any():
            raise AssertionError("Pareto set member dominated by another member")


@dataclass(frozen=True)
class GaConfig:
    population: int = 100
    generations: int = 150
    crossover_prob: float = 0.9
    crossover_eta: float = 15.0
    mutation_prob: float = 0.5
    mutation_eta: float = 20.0
    seed: int = 0
    anchored: bool = True   # seed the start population with per-degree p_rnd maxima

    def __post_init__(self):
        if self.population < 4 or self.population % 2:
            raise InvalidParameter("population must be even and >= 4")
        if self.generations < 1:
            raise InvalidParameter("generations must be >= 1")
        for name in ("crossover_prob", "mutation_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidParameter(f"{name} outside [0, 1]")


@dataclass
class Context:
    """Everything a sender needs to score a decision vector."""

    scene: LinkScene
    rho: float
    energy: EnergyParams = field(default_factory=EnergyParams)
    p_min: float = 0.1
    p_max: float = 0.8
    n_cap: int | None = None

    def __post_init__(self):
        if not 0 < self.p_min <= self.p_max:
            raise InvalidParameter("need 0 < p_min <= p_max")
        if not self.rho > 0:
            raise InvalidParameter("rho must be positive")
        if self.n_cap is None:
            r = range_of_power(self.p_max, self.scene.rmap)
            self.n_cap = max(1, math.ceil(self.rho * math.pi * r * r))

    def lam(self, p_ts) -> np.ndarray:
        """Expected number of nodes in the forwarding region at ``p_ts``."""
        rm = self.scene.rmap
        r = rm.r_ref * (np.asarray(p_ts, float) / rm.p_ref) ** (1.0 / rm.eta)
        return self.rho * candidate_area_array(r, self.scene.d_ds)

    def encode(self, p_ts, n_rel) -> np.ndarray:
        g0 = (np.asarray(p_ts, float) - self.p_min) / max(self.p_max - self.p_min, 1e-300)
        return np.column_stack((np.clip(g0, 0.0, 1.0), np.asarray(n_rel, float) / self.n_cap))

    def decode(self, genes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        p = self.p_min + genes[:, 0] * (self.p_max - self.p_min)
        n = np.rint(genes[:, 1] * self.n_cap).astype(int)
        return p, n


def evaluate_batch(p_ts, n_rel, ctx: Context) -> tuple[np.ndarray, np.ndarray]:
    """Objective rows and feasibility mask for arrays of decision vectors."""
    p_ts = np.asarray(p_ts, dtype=float)
    n_rel = np.asarray(n_rel, dtype=int)
    if np.any(n_rel < 0):
        raise InvalidParameter("n_rel must be >= 0")
    n_max = int(n_rel.max()) if len(n_rel) else 0
    psc = ctx.scene.p_sc_table(p_ts, n_max)[np.arange(len(p_ts)), n_rel]
    lam = ctx.lam(p_ts)
    prnd = p_rnd_array(lam, n_rel)
    cost = expected_cost_array(p_ts, n_rel, psc, ctx.energy)
    F = np.column_stack((-psc, -prnd, cost))
    return F, np.isfinite(cost)


def evaluate(p_ts: float, n_rel: int, ctx: Context) -> Solution:
    if not ctx.p_min <= p_ts <= ctx.p_max or not 0 <= n_rel <= ctx.n_cap:
        raise InvalidParameter("decision vector out of bounds")
    F, _ = evaluate_batch([p_ts], [n_rel], ctx)
    return Solution(float(p_ts), int(n_rel), tuple(float(v) for v in F[0]))


def dominates(a, b) -> bool:
    """Strong Pareto dominance, minimisation."""
    fa = a.objectives if isinstance(a, Solution) else a
    fb = b.objectives if isinstance(b, Solution) else b
    no_worse = all(x <= y for x, y in zip(fa, fb))
    return no_worse and any(x < y for x, y in zip(fa, fb))


def dominance_matrix(F: np.ndarray, G: np.ndarray | None = None) -> np.ndarray:
    """``D[i, j]`` is True when row ``i`` of F dominates row ``j`` of G."""
    G = F if G is None else G
    le = (F[:, None, :] <= G[None, :, :]).all(axis=2)
    lt = (F[:, None, :] < G[None, :, :]).any(axis=2)
    return le & lt


def nondominated_mask(F: np.ndarray) -> np.ndarray:
    if len(F) == 0:
        return np.zeros(0, dtype=bool)
    return ~dominance_matrix(F).any(axis=0)


def fast_nondominated_sort(F: np.ndarray, violation: np.ndarray | None = None) -> np.ndarray:
    """Front rank per row (0 = first front), with constraint domination:
    feasible rows beat infeasible ones, infeasible rows compare by violation."""
    n = len(F)
    if violation is None:
        violation = np.zeros(n)
    feas = violation <= 0
    Ff = np.where(feas[:, None], F, 0.0)
    D = dominance_matrix(Ff) & feas[:, None] & feas[None, :]
    D |= feas[:, None] & ~feas[None, :]
    D |= (~feas[:, None]) & (~feas[None, :]) & (violation[:, None] < violation[None, :])
    counts = D.sum(axis=0)
    rank = np.full(n, -1)
    current = np.nonzero(counts == 0)[0]
    level = 0
    while len(current):
        rank[current] = level
        counts = counts - D[current].sum(axis=0)
        counts[rank >= 0] = -1
        current = np.nonzero(counts == 0)[0]
        level += 1
    return rank


def crowding_distance(F: np.ndarray) -> np.ndarray:
    n, m = F.shape
    d = np.zeros(n)
    if n <= 2:
        return np.full(n, np.inf)
    for k in range(m):
        order = np.argsort(F[:, k], kind="stable")
        col = F[order, k]
        span = col[-1] - col[0]
        d[order[0]] = d[order[-1]] = np.inf
        if span > 0 and np.isfinite(span):
            d[order[1:-1]] += (col[2:] - col[:-2]) / span
    return d


def _sbx(p1, p2, rng, eta, prob):
    """Bounded simulated-binary crossover on genes in [0, 1]."""
    c1, c2 = p1.copy(), p2.copy()
    do = rng.random(len(p1)) < prob
    swap = rng.random(p1.shape) < 0.5
    u = rng.random(p1.shape)
    y1, y2 = np.minimum(p1, p2), np.maximum(p1, p2)
    act = do[:, None] & swap & (y2 - y1 >= 1e-14)
    if not act.any():
        return c1, c2
    y1, y2, u = y1[act], y2[act], u[act]
    dy = y2 - y1
    bq_lo = _sbx_bq(u, 2.0 - (1.0 + 2.0 * y1 / dy) ** -(eta + 1), eta)
    bq_hi = _sbx_bq(u, 2.0 - (1.0 + 2.0 * (1.0 - y2) / dy) ** -(eta + 1), eta)
    a = np.clip(0.5 * ((y1 + y2) - bq_lo * dy), 0.0, 1.0)
    b = np.clip(0.5 * ((y1 + y2) + bq_hi * dy), 0.0, 1.0)
    flip = p1[act] > p2[act]
    c1[act] = np.where(flip, b, a)
    c2[act] = np.where(flip, a, b)
    return c1, c2


def _sbx_bq(u, alpha, eta):
    lo = u <= 1.0 / alpha
    with np.errstate(divide="ignore", invalid="ignore"):
        inner = np.where(lo, u * alpha, 1.0 / (2.0 - u * alpha))
    return inner ** (1.0 / (eta + 1))


def _mutate(x, rng, eta, prob):
    x = x.copy()
    hit = rng.random(x.shape) < prob
    u = rng.random(x.shape)
    mpow = 1.0 / (eta + 1.0)
    d1, d2 = x, 1.0 - x
    lo = u < 0.5
    xy1 = 1.0 - d1
    val_lo = 2.0 * u + (1.0 - 2.0 * u) * xy1 ** (eta + 1)
    xy2 = 1.0 - d2
    val_hi = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * xy2 ** (eta + 1)
    dq = np.where(lo, val_lo ** mpow - 1.0, 1.0 - val_hi ** mpow)
    x = np.where(hit, np.clip(x + dq, 0.0, 1.0), x)
    return x


def _tournament(rank, crowd, rng, size):
    a = rng.integers(0, len(rank), size)
    b = rng.integers(0, len(rank), size)
    better_a = (rank[a] < rank[b]) | ((rank[a] == rank[b]) & (crowd[a] >= crowd[b]))
    return np.where(better_a, a, b)


def _violation(F, feas):
    return np.where(feas, 0.0, np.maximum(P_SC_FLOOR + F[:, 0], 0.0) + 1e-12)


def _select(F, viol, n):
    rank = fast_nondominated_sort(F, viol)
    chosen = []
    crowd = np.zeros(len(F))
    for level in range(rank.max() + 1):
        idx = np.nonzero(rank == level)[0]
        cd = crowding_distance(np.where(np.isfinite(F[idx]), F[idx], 1e300)) if len(idx) else []
        crowd[idx] = cd
        if len(chosen) + len(idx) <= n:
            chosen.extend(idx)
        else:
            order = np.lexsort((idx, -np.asarray(cd)))
            chosen.extend(idx[order[: n - len(chosen)]])
        if len(chosen) >= n:
            break
    chosen = np.array(chosen)
    return chosen, rank[chosen], crowd[chosen]


class _Archive:
    """Non-dominated feasible decision vectors seen so far.

    Batches are buffered and merged a few hundred points at a time; the
    result does not depend on the merge schedule.
    """

    def __init__(self, flush_at: int = 512):
        self.P = np.zeros(0)
        self.N = np.zeros(0, dtype=int)
        self.F = np.zeros((0, 3))
        self._buf = []
        self._pending = 0
        self.flush_at = flush_at

    def add(self, p, n, F, feas):
        self._buf.append((p[feas], n[feas], F[feas]))
        self._pending += int(feas.sum())
        if self._pending >= self.flush_at:
            self.flush()

    def flush(self):
        if not self._buf:
            return
        p = np.concatenate([b[0] for b in self._buf])
        n = np.concatenate([b[1] for b in self._buf])
        F = np.concatenate([b[2] for b in self._buf])
        self._buf, self._pending = [], 0
        if len(p) == 0:
            return
        _, first = np.unique(np.column_stack((p, n)), axis=0, return_index=True)
        first = np.sort(first)
        p, n, F = p[first], n[first], F[first]
        keep = nondominated_mask(F)
        p, n, F = p[keep], n[keep], F[keep]
        if len(self.P):
            # exact repeats of archived decisions carry identical objectives
            seen = (self.P[None, :] == p[:, None]) & (self.N[None, :] == n[:, None])
            fresh = ~seen.any(axis=1) & ~dominance_matrix(self.F, F).any(axis=0)
            p, n, F = p[fresh], n[fresh], F[fresh]
            if len(p) == 0:
                return
            survive = ~dominance_matrix(F, self.F).any(axis=0)
            self.P, self.N, self.F = self.P[survive], self.N[survive], self.F[survive]
        self.P = np.concatenate((self.P, p))
        self.N = np.concatenate((self.N, n))
        self.F = np.concatenate((self.F, F))


def _to_set(P, N, F) -> ParetoSet:
    order = np.lexsort((N, P))
    return ParetoSet([Solution(float(P[i]), int(N[i]), tuple(float(v) for v in F[i]))
                      for i in order])


def degree_anchors(ctx: Context, count: int) -> np.ndarray:
    """Genes of up to ``count`` decision vectors ``(p, n)`` where ``p`` puts
    the expected degree at ``n``, the mode of the Poisson law, so each one
    maximises ``p_rnd`` for its degree.  Clipped to the power bounds and
    raised, where needed, to the power at which the nearest candidate comes
    into range (below it no candidate can receive)."""
    n = np.arange(1, ctx.n_cap + 1)
    if len(n) > count:
        n = np.unique(np.rint(np.linspace(1, ctx.n_cap, count)).astype(int))
    lo = np.full(len(n), ctx.p_min)
    hi = np.full(len(n), ctx.p_max)
    # the region grows with power, so bisect lam(p) = n for all degrees at once
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        below = ctx.lam(mid) < n
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    p = 0.5 * (lo + hi)
    sc = ctx.scene
    near = sc.d_rs[sc.progress]
    if len(near):
        rm = sc.rmap
        p_entry = rm.p_ref * (near.min() / rm.r_ref) ** rm.eta * (1.0 + 1e-9)
        if p_entry <= ctx.p_max:
            p = np.maximum(p, p_entry)
    return ctx.encode(p, n)


def nsga2_front(ctx: Context, ga: GaConfig = GaConfig()) -> ParetoSet:
    """Non-dominated feasible set found by NSGA-II.

    The returned front is taken over every individual evaluated during the
    run (an elitist archive), so late generations cannot lose points that
    earlier ones had found.
    """
    rng = np.random.default_rng(ga.seed)
    N = ga.population
    # stratified start: every power band and every degree band gets a point
    X = qmc.LatinHypercube(d=2, seed=rng).random(N)
    if ga.anchored:
        A = degree_anchors(ctx, N // 2)
        X[: len(A)] = A
    p, n = ctx.decode(X)
    F, feas = evaluate_batch(p, n, ctx)
    archive = _Archive()
    archive.add(p, n, F, feas)
    viol = _violation(F, feas)
    idx, rank, crowd = _select(F, viol, N)
    for _ in range(ga.generations):
        parents = _tournament(rank, crowd, rng, N)
        a, b = X[parents[0::2]], X[parents[1::2]]
        c1, c2 = _sbx(a, b, rng, ga.crossover_eta, ga.crossover_prob)
        kids = _mutate(np.vstack((c1, c2)), rng, ga.mutation_eta, ga.mutation_prob)
        kp, kn = ctx.decode(kids)
        KF, kfeas = evaluate_batch(kp, kn, ctx)
        archive.add(kp, kn, KF, kfeas)
        X = np.vstack((X, kids))
        F = np.vstack((F, KF))
        feas = np.concatenate((feas, kfeas))
        viol = _violation(F, feas)
        idx, rank, crowd = _select(F, viol, N)
        X, F, feas = X[idx], F[idx], feas[idx]
    archive.flush()
    if len(archive.P) == 0:
        raise EmptyFront("no feasible (p_ts, n_rel) found")
    return _to_set(archive.P, archive.N, archive.F)


def power_grid(ctx: Context, steps: int = 200) -> np.ndarray:
    return np.linspace(ctx.p_min, ctx.p_max, steps)


def brute_force_front(ctx: Context, powers=None, degrees=None) -> ParetoSet:
    """Exact non-dominated subset of a finite grid of decision vectors."""
    powers = power_grid(ctx) if powers is None else np.asarray(powers, float)
    degrees = np.arange(0, 11) if degrees is None else np.asarray(degrees, int)
    P, N = np.meshgrid(powers, degrees, indexing="ij")
    P, N = P.ravel(), N.ravel()
    F, feas = evaluate_batch(P, N, ctx)
    P, N, F = P[feas], N[feas], F[feas]
    _, first = np.unique(np.column_stack((P, N)), axis=0, return_index=True)
    first = np.sort(first)
    P, N, F = P[first], N[first], F[first]
    keep = nondominated_mask(F)
    return _to_set(P[keep], N[keep], F[keep])


def hypervolume(F: np.ndarray, ref) -> float:
    """Dominated volume of a 3-objective minimisation set up to ``ref``.

    Sweeps the points in ascending third objective and keeps the 2-D
    staircase of the first two objectives up to date, so each insertion only
    touches the steps it covers.
    """
    ref = np.asarray(ref, dtype=float)
    F = np.asarray(F, dtype=float).reshape(-1, 3)
    F = F[(F < ref).all(axis=1)]
    if len(F) == 0:
        return 0.0
    F = F[np.lexsort((F[:, 1], F[:, 0], F[:, 2]))]
    rx, ry = float(ref[0]), float(ref[1])
    xs, ys = [], []          # staircase: x ascending, y strictly descending
    area = vol = 0.0
    for k in range(len(F)):
        x, y, z = float(F[k, 0]), float(F[k, 1]), float(F[k, 2])
        area += _insert_step(xs, ys, x, y, rx, ry)
        z_next = float(F[k + 1, 2]) if k + 1 < len(F) else float(ref[2])
        vol += area * (z_next - z)
    return vol


def _insert_step(xs, ys, x, y, rx, ry) -> float:
    """Insert ``(x, y)`` into the staircase; return the area it adds."""
    i = bisect.bisect_right(xs, x)
    if i > 0 and ys[i - 1] <= y:
        return 0.0                      # weakly dominated
    j = bisect.bisect_left(xs, x)
    # old height over [x, end) is set by the step to the left, then by the
    # steps the new point swallows
    level = ys[j - 1] if j > 0 else ry
    cursor, gained = x, 0.0
    k = j
    while k < len(xs) and ys[k] >= y:
        gained += (xs[k] - cursor) * (level - y)
        cursor, level = xs[k], ys[k]
        k += 1
    end = xs[k] if k < len(xs) else rx
    gained += (end - cursor) * (level - y)
    del xs[j:k], ys[j:k]
    xs.insert(j, x)
    ys.insert(j, y)
    return gained
