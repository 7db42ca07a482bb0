"""Expected one-hop energy cost of delivering a packet to a candidate set."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter, SaturationError

P_SC_FLOOR = 1e-6


@dataclass(frozen=True)
class EnergyParams:
    E_r: float = 0.05       # W, reception
    xi: float = 1.0         # transmit consumption coefficient
    L: float = 1024.0       # bits
    B: float = 15000.0      # bit/s

    def __post_init__(self):
        for name in ("E_r", "xi", "L", "B"):
            if not getattr(self, name) > 0:
                raise InvalidParameter(f"{name} must be strictly positive")

    @property
    def delta(self) -> float:
        """Air time of one packet, seconds."""
        return self.L / self.B


def expected_attempts(p_sc: float) -> float:
    if p_sc <= P_SC_FLOOR:
        raise SaturationError(f"p_sc={p_sc} at or below floor {P_SC_FLOOR}")
    if p_sc > 1.0:
        raise InvalidParameter(f"p_sc={p_sc} > 1")
    return 1.0 / p_sc


def expected_cost(p_ts: float, n_rel: int, p_sc: float, params: EnergyParams) -> float:
    """``(n_rel E_r + xi P_Ts) delta / p_sc**2`` joules.

    One factor of ``1/p_sc`` is the expected number of attempts; the other
    comes from normalising the per-delivery cost by ``p_sc``.
    """
    if n_rel < 1:
        raise InvalidParameter("n_rel must be >= 1: no receivers")
    if p_ts <= 0:
        raise InvalidParameter("p_ts must be positive")
    if p_sc <= P_SC_FLOOR:
        raise SaturationError(f"p_sc={p_sc} at or below floor {P_SC_FLOOR}")
    if p_sc > 1.0:
        raise InvalidParameter(f"p_sc={p_sc} > 1")
    return (n_rel * params.E_r + params.xi * p_ts) * params.delta / (p_sc * p_sc)


def expected_cost_array(p_ts, n_rel, p_sc, params: EnergyParams) -> np.ndarray:
    """Vectorised :func:`expected_cost`; ``inf`` where the solution is unusable."""
    p_ts, n_rel, p_sc = np.broadcast_arrays(np.asarray(p_ts, float), np.asarray(n_rel, float),
                                            np.asarray(p_sc, float))
    ok = (p_sc > P_SC_FLOOR) & (n_rel >= 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        c = (n_rel * params.E_r + params.xi * p_ts) * params.delta / (p_sc * p_sc)
    return np.where(ok, c, np.inf)


def simulate_attempts(p_sc: float, trials: int, seed=0) -> np.ndarray:
    """Attempts until first success for ``trials`` independent Bernoulli runs."""
    rng = np.random.default_rng(seed)
    return rng.geometric(p_sc, size=trials)


def simulate_cost(p_ts: float, n_rel: int, p_sc: float, params: EnergyParams,
                  trials: int, seed=0) -> float:
    """Mean per-delivery energy of retransmit-until-success, normalised like
    the closed form (total energy spent divided by ``p_sc``)."""
    attempts = simulate_attempts(p_sc, trials, seed)
    per_attempt = (params.xi * p_ts + n_rel * params.E_r) * params.delta
    return float(attempts.mean() * per_attempt / p_sc)
