"""Node positions, power-to-range mapping and the candidate forwarding area."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidParameter


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidParameter(f"non-finite position ({self.x}, {self.y})")

    def __iter__(self):
        yield self.x
        yield self.y


@dataclass(frozen=True)
class RangeMap:
    """Range grows as ``r_ref * (p / p_ref) ** (1 / eta)``.

    Anchored at the reference power/range pair; with the default anchor a
    0.8 W transmitter reaches 200 m.
    """

    r_ref: float = 200.0
    p_ref: float = 0.8
    eta: float = 2.0

    def __post_init__(self):
        if self.r_ref <= 0 or self.p_ref <= 0:
            raise InvalidParameter("r_ref and p_ref must be positive")
        if not 2.0 <= self.eta <= 5.0:
            raise InvalidParameter(f"eta={self.eta} outside [2, 5]")


@dataclass(frozen=True)
class ForwardingRegion:
    sender: Position
    destination: Position
    r_s: float

    @property
    def d_ds(self) -> float:
        return distance(self.sender, self.destination)

    @property
    def area(self) -> float:
        return candidate_area(self.r_s, self.d_ds)

    def contains(self, xy: np.ndarray) -> np.ndarray:
        """Vectorised membership test for an ``(n, 2)`` array of points."""
        xy = np.asarray(xy, dtype=float)
        ds = np.hypot(xy[:, 0] - self.sender.x, xy[:, 1] - self.sender.y)
        dd = np.hypot(xy[:, 0] - self.destination.x, xy[:, 1] - self.destination.y)
        return (ds <= self.r_s) & (dd < self.d_ds)


def distance(a, b) -> float:
    (ax, ay), (bx, by) = a, b
    return math.hypot(ax - bx, ay - by)


def range_of_power(p: float, rmap: RangeMap) -> float:
    if not p > 0:
        raise InvalidParameter(f"transmission power must be positive, got {p}")
    return rmap.r_ref * (p / rmap.p_ref) ** (1.0 / rmap.eta)


def power_of_range(r: float, rmap: RangeMap) -> float:
    """Inverse of :func:`range_of_power`."""
    if not r > 0:
        raise InvalidParameter(f"range must be positive, got {r}")
    return rmap.p_ref * (r / rmap.r_ref) ** rmap.eta


def candidate_area(r_s: float, d_ds: float) -> float:
    """Area of the lens between C(sender, r_s) and C(destination, d_ds).

    The two centres are ``d_ds`` apart, so the destination disk passes
    through the sender.  Once ``r_s >= 2 d_ds`` the sender disk swallows the
    destination disk and the area saturates at ``pi d_ds**2``.
    """
    if not (r_s > 0 and d_ds > 0):
        raise InvalidParameter(f"r_s and d_ds must be positive, got {r_s}, {d_ds}")
    if r_s >= 2.0 * d_ds:
        return math.pi * d_ds * d_ds
    theta = math.acos(r_s / (2.0 * d_ds))
    phi = math.pi - 2.0 * theta
    return r_s * r_s * theta + d_ds * d_ds * (phi - math.sin(phi))


def lens_area(r1: float, r2: float, d: float) -> float:
    """Textbook intersection area of two circles with centre distance ``d``."""
    if d >= r1 + r2:
        return 0.0
    if d <= abs(r1 - r2):
        return math.pi * min(r1, r2) ** 2
    a1 = math.acos((d * d + r1 * r1 - r2 * r2) / (2 * d * r1))
    a2 = math.acos((d * d + r2 * r2 - r1 * r1) / (2 * d * r2))
    k = (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)
    return r1 * r1 * a1 + r2 * r2 * a2 - 0.5 * math.sqrt(max(k, 0.0))


def candidate_set(sender: int, destination: int,
                  positions: Mapping[int, Sequence[float]] | np.ndarray,
                  r_s: float) -> list[int]:
    """Node ids inside the candidate forwarding area, ascending.

    ``positions`` is either an ``(n, 2)`` array indexed by node id or a
    mapping from node id to ``(x, y)``.  Members lie within ``r_s`` of the
    sender and strictly closer to the destination than the sender is.
    """
    if sender == destination:
        raise InvalidParameter("sender and destination must differ")
    if isinstance(positions, np.ndarray):
        ids = np.arange(len(positions))
        xy = positions
        if not (0 <= sender < len(ids) and 0 <= destination < len(ids)):
            raise KeyError(f"unknown node id {sender if not 0 <= sender < len(ids) else destination}")
        s, d = xy[sender], xy[destination]
    else:
        s, d = positions[sender], positions[destination]
        ids = np.array(sorted(positions), dtype=int)
        if len(ids) == 0:
            return []
        xy = np.array([positions[i] for i in ids], dtype=float)
    d_ds = distance(s, d)
    ds = np.hypot(xy[:, 0] - s[0], xy[:, 1] - s[1])
    dd = np.hypot(xy[:, 0] - d[0], xy[:, 1] - d[1])
    mask = (ds <= r_s) & (dd < d_ds) & (ids != sender) & (ids != destination)
    return [int(i) for i in ids[mask]]


def candidate_area_array(r_s, d_ds) -> np.ndarray:
    """Vectorised :func:`candidate_area`."""
    r_s, d_ds = np.broadcast_arrays(np.asarray(r_s, float), np.asarray(d_ds, float))
    if np.any(r_s <= 0) or np.any(d_ds <= 0):
        raise InvalidParameter("r_s and d_ds must be positive")
    ratio = np.minimum(r_s / (2.0 * d_ds), 1.0)
    theta = np.arccos(ratio)
    phi = np.pi - 2.0 * theta
    lens = r_s * r_s * theta + d_ds * d_ds * (phi - np.sin(phi))
    return np.where(r_s >= 2.0 * d_ds, np.pi * d_ds * d_ds, lens)
