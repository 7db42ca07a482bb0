"""Built-in verification oracles.

Every suite compares a closed form against an independent estimator
(Monte-Carlo sampling, process simulation or exhaustive enumeration) at a
fixed seed and reports the measured error next to its limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import degree, energy, geometry, linkmodel, pareto
from .geometry import ForwardingRegion, Position, RangeMap
from .linkmodel import InterfererSnapshot, LinkScene, RadioParams


@dataclass
class Check:
    suite: str
    name: str
    measured: float
    limit: float
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.suite}:{self.name} measured={self.measured:.6g} limit={self.limit:.6g}"


# -- link model -------------------------------------------------------------

def random_link(rng: np.random.Generator):
    """A random link with a non-degenerate success probability."""
    eta = rng.uniform(2.0, 5.0)
    params_kw = dict(beta=rng.uniform(0.5, 10.0), eta=eta, K=10 ** rng.uniform(-5, -3),
                     G=rng.uniform(1.0, 20.0))
    p_ts = rng.uniform(0.1, 0.8)
    d_rs = rng.uniform(5.0, 200.0)
    # noise sized so the noise-only factor lies in roughly [0.2, 0.99]
    u = rng.uniform(0.01, 1.5)
    params_kw["P_n"] = u * p_ts * params_kw["K"] / (params_kw["beta"] * d_rs ** eta)
    params = RadioParams(**params_kw)
    m = int(rng.integers(0, 7))
    rows = [(rng.uniform(0.1, 0.8), d_rs * rng.uniform(1.0, 6.0), rng.uniform(0.0, 1.0))
            for _ in range(m)]
    return p_ts, d_rs, InterfererSnapshot.of(rows), params


def linkmodel_suite(draws: int = 50, samples: int = 10 ** 6, seed: int = 11) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    for k in range(draws):
        p_ts, d_rs, snap, params = random_link(rng)
        closed = linkmodel.p_si(p_ts, d_rs, snap, params)
        est, se = linkmodel.p_si_montecarlo(p_ts, d_rs, snap, params, samples, seed=seed * 1000 + k)
        z = abs(closed - est) / se if se > 0 else (0.0 if closed == est else math.inf)
        out.append(Check("linkmodel", f"p_si[{k}] m={len(snap)}", z, 3.0, z <= 3.0))
    return out


# -- candidate area ---------------------------------------------------------

def lens_area_montecarlo(r_s: float, d_ds: float, points: int, rng: np.random.Generator,
                         chunk: int = 1 << 20) -> float:
    """Rejection sampling inside the smaller of the two disks."""
    sender = np.zeros(2)
    dest = np.array([d_ds, 0.0])
    if r_s <= d_ds:
        centre, radius = sender, r_s
    else:
        centre, radius = dest, d_ds
    hits, left = 0, points
    while left:
        n = min(left, chunk)
        rr = radius * np.sqrt(rng.random(n))
        th = 2.0 * np.pi * rng.random(n)
        x = centre[0] + rr * np.cos(th)
        y = centre[1] + rr * np.sin(th)
        inside = (x * x + y * y <= r_s * r_s) & ((x - d_ds) ** 2 + y * y <= d_ds * d_ds)
        hits += int(np.count_nonzero(inside))
        left -= n
    return math.pi * radius * radius * hits / points


def area_suite(pairs: int = 100, points: int = 10 ** 6, seed: int = 12) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    for k in range(pairs):
        d_ds = rng.uniform(20.0, 600.0)
        # the last few pairs sit in the saturated regime r_s >= 2 d_ds
        frac = rng.uniform(2.0, 2.5) if k >= pairs - max(1, pairs // 10) else rng.uniform(0.0, 2.5)
        r_s = max(frac, 1e-3) * d_ds
        closed = geometry.candidate_area(r_s, d_ds)
        est = lens_area_montecarlo(r_s, d_ds, points, rng)
        rel = abs(closed - est) / closed
        out.append(Check("area", f"lens[{k}] r/d={r_s / d_ds:.3f}", rel, 5e-3, rel <= 5e-3))
    return out


# -- degree distribution ------------------------------------------------------

DEGREE_CASES = (
    # (p_ts, d_ds, rho)
    (0.4, 300.0, 1e-4),
    (0.8, 250.0, 8e-5),
    (0.1, 400.0, 1.2e-4),
    (0.6, 150.0, 4e-5),
)


def degree_suite(placements: int = 10 ** 5, seed: int = 13,
                 rmap: RangeMap | None = None) -> list[Check]:
    rmap = rmap or RangeMap()
    out = []
    centre = np.array([500.0, 500.0])
    for k, (p_ts, d_ds, rho) in enumerate(DEGREE_CASES):
        r = geometry.range_of_power(p_ts, rmap)
        region = ForwardingRegion(Position(*centre), Position(*(centre + [d_ds, 0.0])), r)
        lam = degree.expected_degree(p_ts, d_ds, rho, rmap)
        counts = degree.empirical_degree_check(placements, rho, region, seed=seed + k)
        tv = degree.total_variation(counts, lam)
        out.append(Check("degree", f"tv[{k}] lambda={lam:.3f}", tv, 0.02, tv <= 0.02))
        total = math.fsum(degree.p_rnd(p_ts, n, d_ds, rho, rmap) for n in range(301))
        err = abs(total - 1.0)
        out.append(Check("degree", f"normalisation[{k}]", err, 1e-9, err <= 1e-9))
    return out


# -- energy -----------------------------------------------------------------------

def energy_suite(configs: int = 20, trials: int = 10 ** 5, seed: int = 14) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    params = energy.EnergyParams()
    for k in range(configs):
        p_ts = rng.uniform(0.1, 0.8)
        n_rel = int(rng.integers(1, 11))
        p_sc = rng.uniform(0.05, 1.0)
        closed = energy.expected_cost(p_ts, n_rel, p_sc, params)
        est = energy.simulate_cost(p_ts, n_rel, p_sc, params, trials, seed=seed * 100 + k)
        rel = abs(est - closed) / closed
        out.append(Check("energy", f"cost[{k}] p_sc={p_sc:.3f}", rel, 0.02, rel <= 0.02))
    # inverse-square law, exact up to rounding
    base = energy.expected_cost(0.5, 3, 1.0, params)
    worst = 0.0
    for p_sc in np.linspace(0.05, 1.0, 20):
        c = energy.expected_cost(0.5, 3, float(p_sc), params)
        worst = max(worst, abs(c * p_sc * p_sc - base) / base)
    out.append(Check("energy", "inverse_square", worst, 1e-12, worst <= 1e-12))
    return out


# -- optimiser ---------------------------------------------------------------------

def desk_context(seed: int, params: RadioParams | None = None, rho: float = 1e-4,
                 neighbors: int = 8, interferers: int = 3) -> pareto.Context:
    """One sender, ``neighbors`` nodes in its candidate area at full power and a
    few active transmitters around it."""
    rng = np.random.default_rng(seed)
    params = params or RadioParams()
    rmap = RangeMap(eta=params.eta)
    r_max = geometry.range_of_power(0.8, rmap)
    d = rng.uniform(1.5 * r_max, 3.0 * r_max)
    nb = {}
    while len(nb) < neighbors:
        x, y = rng.uniform(-r_max, r_max, 2)
        if math.hypot(x, y) <= r_max and math.hypot(x - d, y) < d:
            nb[len(nb) + 1] = (float(x), float(y))
    tx = []
    for j in range(interferers):
        ang = rng.uniform(0, 2 * math.pi)
        r = rng.uniform(0.5 * r_max, 1.75 * r_max)
        tx.append((100 + j, r * math.cos(ang), r * math.sin(ang), rng.uniform(0.1, 0.8), 1.0))
    scene = LinkScene((0.0, 0.0), (d, 0.0), nb, tx, params, rmap, 0, -1)
    return pareto.Context(scene, rho=rho, n_cap=10)


@dataclass
class FrontComparison:
    coverage: float        # worst L-infinity gap from a grid-front point to the GA front
    covered: float         # share of grid-front points within the tolerance
    hv_ratio: float        # GA hypervolume / grid hypervolume
    ga_size: int
    grid_size: int


def compare_fronts(ctx: pareto.Context, ga: pareto.GaConfig, tol: float = 1e-2) -> FrontComparison:
    front = pareto.nsga2_front(ctx, ga)
    grid = pareto.brute_force_front(ctx)
    G, A = grid.objectives(), front.objectives()
    lo, hi = G.min(axis=0), G.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    Gn, An = (G - lo) / span, (A - lo) / span
    gap = np.abs(Gn[:, None, :] - An[None, :, :]).max(axis=2).min(axis=1)
    ref = hypervolume_reference(ctx, lo, span)
    hv_grid = pareto.hypervolume(Gn, ref)
    hv_ga = pareto.hypervolume(An, ref)
    return FrontComparison(float(gap.max()), float((gap <= tol).mean()),
                           hv_ga / hv_grid if hv_grid > 0 else math.nan, len(front), len(grid))


def hypervolume_reference(ctx: pareto.Context, lo, span) -> np.ndarray:
    """Worst corner of the feasible grid, in normalised objectives."""
    P, N = np.meshgrid(pareto.power_grid(ctx), np.arange(0, 11), indexing="ij")
    F, feas = pareto.evaluate_batch(P.ravel(), N.ravel(), ctx)
    worst = F[feas].max(axis=0)
    return (worst - lo) / span


def pareto_suite(contexts: int = 10, ga: pareto.GaConfig | None = None,
                 seed: int = 15) -> list[Check]:
    ga = ga or pareto.GaConfig()
    out = []
    for k in range(contexts):
        ctx = desk_context(seed * 100 + k)
        cmp_ = compare_fronts(ctx, pareto.GaConfig(**{**ga.__dict__, "seed": k}))
        out.append(Check("pareto", f"coverage[{k}]", cmp_.coverage, 1e-2, cmp_.coverage <= 1e-2))
        out.append(Check("pareto", f"hypervolume[{k}]", cmp_.hv_ratio, 0.98, cmp_.hv_ratio >= 0.98))
    return out


SUITES = {
    "linkmodel": linkmodel_suite,
    "area": area_suite,
    "degree": degree_suite,
    "energy": energy_suite,
    "pareto": pareto_suite,
}


def run(name: str) -> list[Check]:
    if name == "all":
        return [c for fn in SUITES.values() for c in fn()]
    return SUITES[name]()
