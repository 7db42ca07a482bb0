"""Random deployments and CBR flow selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidParameter


@dataclass
class Scenario:
    positions: np.ndarray
    flows: list          # (src, dst) pairs
    area: tuple
    seed: int

    def __eq__(self, other):
        return (isinstance(other, Scenario) and np.array_equal(self.positions, other.positions)
                and self.flows == other.flows and self.area == other.area)


def build_scenario(n_nodes: int, n_cbr: int, area=(1000.0, 1000.0), seed: int = 0) -> Scenario:
    """Uniform i.i.d. placement and ``n_cbr`` distinct ordered (src, dst) pairs."""
    if n_nodes < 2:
        raise InvalidParameter("need at least two nodes")
    if n_cbr < 1:
        raise InvalidParameter("need at least one CBR pair")
    pairs = n_nodes * (n_nodes - 1)
    if n_cbr > pairs:
        raise InvalidParameter(f"{n_cbr} CBR pairs requested, only {pairs} ordered pairs exist")
    rng = np.random.default_rng(seed)
    w, h = area
    positions = np.column_stack((rng.uniform(0, w, n_nodes), rng.uniform(0, h, n_nodes)))
    picks = rng.choice(pairs, size=n_cbr, replace=False)
    flows = []
    for k in picks:
        src, off = divmod(int(k), n_nodes - 1)
        dst = off if off < src else off + 1
        flows.append((src, dst))
    return Scenario(positions, flows, tuple(area), seed)


def mean_nearest_neighbor(positions: np.ndarray) -> float:
    d = np.hypot(*(positions[:, None, :] - positions[None, :, :]).transpose(2, 0, 1))
    np.fill_diagonal(d, np.inf)
    return float(d.min(axis=1).mean())
