"""Event trace in a comma-delimited text format.

One header line ``time,node,event,packet,power,rank`` followed by one line
per event.  ``time`` has microsecond resolution, ``power`` is in watts with
four decimals (0 when not applicable), ``packet`` is -1 for events not tied
to a data packet and ``rank`` is the 1-based candidate priority (0 when not
applicable).  Event kinds: gen, tx, rx, overhear, suppress, deliver, drop,
noroute, dead.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

HEADER = ("time", "node", "event", "packet", "power", "rank")


@dataclass(frozen=True)
class TraceEvent:
    time: float
    node: int
    event: str
    packet: int
    power: float
    rank: int

    def line(self) -> str:
        return f"{self.time:.6f},{self.node},{self.event},{self.packet},{self.power:.4f},{self.rank}"


class Trace:
    def __init__(self):
        self.events: list[TraceEvent] = []

    def add(self, time, node, event, packet=-1, power=0.0, rank=0):
        self.events.append(TraceEvent(time, int(node), event, int(packet), float(power), int(rank)))

    def text(self) -> str:
        return "\n".join([",".join(HEADER)] + [e.line() for e in self.events]) + "\n"

    def write(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.text())

    def of_kind(self, *kinds):
        return [e for e in self.events if e.event in kinds]


def read_trace(path_or_text) -> list[TraceEvent]:
    text = path_or_text
    if "\n" not in str(path_or_text):
        with open(path_or_text) as fh:
            text = fh.read()
    rows = csv.reader(io.StringIO(text))
    header = next(rows)
    if tuple(header) != HEADER:
        raise ValueError(f"unexpected trace header {header}")
    return [TraceEvent(float(t), int(n), e, int(p), float(w), int(r)) for t, n, e, p, w, r in rows]
