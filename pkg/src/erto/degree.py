"""Probability that the candidate forwarding area holds exactly n nodes.

Under uniform deployment with density ``rho`` the node count in an area
``A`` is Poisson with mean ``rho * A``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

from .errors import InvalidParameter
from .geometry import ForwardingRegion, RangeMap, candidate_area, range_of_power


def poisson_pmf(n: int, lam: float) -> float:
    if n < 0:
        raise InvalidParameter("n_rel must be >= 0")
    if lam == 0:
        return 1.0 if n == 0 else 0.0
    return math.exp(n * math.log(lam) - lam - math.lgamma(n + 1))


def expected_degree(p_ts: float, d_ds: float, rho: float, rmap: RangeMap) -> float:
    """Mean node count ``rho * Delta`` in the candidate area at ``p_ts``."""
    if not rho > 0:
        raise InvalidParameter("rho must be positive")
    return rho * candidate_area(range_of_power(p_ts, rmap), d_ds)


def p_rnd(p_ts: float, n_rel: int, d_ds: float, rho: float, rmap: RangeMap) -> float:
    return poisson_pmf(n_rel, expected_degree(p_ts, d_ds, rho, rmap))


def p_rnd_array(lam: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Vectorised pmf for arrays of means and counts (broadcast)."""
    lam = np.asarray(lam, dtype=float)
    n = np.asarray(n, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = n * np.log(lam) - lam - gammaln(n + 1)
    logp = np.where((lam == 0) & (n == 0), 0.0, logp)
    return np.exp(logp)


def empirical_degree_check(placements: int, rho: float, region: ForwardingRegion,
                           seed=0, area=(1000.0, 1000.0),
                           chunk_points: int = 4_000_000) -> np.ndarray:
    """Histogram of nodes found in ``region`` over random uniform placements.

    Each placement draws a Poisson number of nodes with mean ``rho * W * H``
    uniformly over the ``W x H`` deployment rectangle.  Returns counts indexed
    by degree.
    """
    if placements < 1:
        raise InvalidParameter("placements must be >= 1")
    rng = np.random.default_rng(seed)
    w, h = area
    totals = rng.poisson(rho * w * h, size=placements)
    degrees = np.zeros(placements, dtype=np.int64)
    start = 0
    while start < placements:
        stop = start
        pts = 0
        while stop < placements and (pts == 0 or pts + totals[stop] <= chunk_points):
            pts += totals[stop]
            stop += 1
        xy = np.column_stack((rng.uniform(0, w, pts), rng.uniform(0, h, pts)))
        owner = np.repeat(np.arange(start, stop), totals[start:stop])
        hit = region.contains(xy) if pts else np.zeros(0, dtype=bool)
        degrees[start:stop] = np.bincount(owner[hit] - start, minlength=stop - start)
        start = stop
    return np.bincount(degrees)


def total_variation(counts: np.ndarray, lam: float, n_max: int = 300) -> float:
    """Total-variation distance between an empirical histogram and Poisson(lam)."""
    counts = np.asarray(counts, dtype=float)
    size = max(len(counts), n_max + 1)
    emp = np.zeros(size)
    emp[:len(counts)] = counts / counts.sum()
    pmf = p_rnd_array(np.full(size, lam), np.arange(size))
    return 0.5 * float(np.abs(emp - pmf).sum() + max(0.0, 1.0 - pmf.sum()))
