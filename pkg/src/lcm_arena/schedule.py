"""Scheduler classes, their nesting, and trace-level schedule validation."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .trace import CycleEvent, Trace


class SchedulerClass(str, enum.Enum):
    FSYNCH = "FSYNCH"
    SSYNCH = "SSYNCH"
    ROUNDROBIN = "ROUNDROBIN"
    LC_ATOMIC = "LC_ATOMIC"
    CM_ATOMIC = "CM_ATOMIC"
    M_ATOMIC = "M_ATOMIC"
    ASYNCH = "ASYNCH"

    @classmethod
    def parse(cls, name: str) -> "SchedulerClass":
        key = name.strip().upper().replace("-", "_")
        aliases = {"LC": "LC_ATOMIC", "CM": "CM_ATOMIC", "M": "M_ATOMIC", "RR": "ROUNDROBIN"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown scheduler class {name!r}") from None

    @property
    def parents(self) -> tuple["SchedulerClass", ...]:
        return _PARENTS[self]

    def enclosing(self) -> frozenset["SchedulerClass"]:
        """This class and every class whose schedule set contains it."""
        out = {self}
        frontier = [self]
        while frontier:
            for p in frontier.pop().parents:
                if p not in out:
                    out.add(p)
                    frontier.append(p)
        return frozenset(out)

    def within(self, other: "SchedulerClass") -> bool:
        return other in self.enclosing()

    @property
    def fused_units(self) -> tuple[tuple[str, ...], ...]:
        """How a robot's cycle splits into same-time groups of operations."""
        return _UNITS[self]

    @property
    def allows_transit_views(self) -> bool:
        return self in (SchedulerClass.ASYNCH, SchedulerClass.LC_ATOMIC)


S = SchedulerClass
_PARENTS = {
    S.FSYNCH: (S.SSYNCH,),
    S.ROUNDROBIN: (S.SSYNCH,),
    S.SSYNCH: (S.LC_ATOMIC, S.CM_ATOMIC),
    S.LC_ATOMIC: (S.ASYNCH,),
    S.CM_ATOMIC: (S.M_ATOMIC,),
    S.M_ATOMIC: (S.ASYNCH,),
    S.ASYNCH: (),
}
_WHOLE = (("L", "C", "MB", "ME"),)
_UNITS = {
    S.FSYNCH: _WHOLE,
    S.ROUNDROBIN: _WHOLE,
    S.SSYNCH: _WHOLE,
    S.LC_ATOMIC: (("L", "C"), ("MB",), ("ME",)),
    S.CM_ATOMIC: (("L",), ("C", "MB", "ME")),
    S.M_ATOMIC: (("L",), ("C",), ("MB", "ME")),
    S.ASYNCH: (("L",), ("C",), ("MB",), ("ME",)),
}


@dataclass(frozen=True)
class Violation:
    time: int
    robot: int
    constraint: str
    detail: str = ""

    def to_json(self) -> dict:
        return {"time": self.time, "robot": self.robot, "constraint": self.constraint, "detail": self.detail}


def _same(cycle: dict[str, CycleEvent], kinds: tuple[str, ...]) -> bool:
    times = {cycle[k].time for k in kinds if k in cycle}
    present = [k for k in kinds if k in cycle]
    # a fused unit must be either wholly present at one time or wholly absent
    return len(times) <= 1 and (not present or len(present) == len(kinds))


def _windows(trace: Trace, start: str, end: str) -> list[tuple[int, int, int]]:
    """(robot, open, close) for every cycle with ``start`` recorded; an
    unfinished window closes at infinity."""
    out = []
    for r, cycles in enumerate(trace.cycles()):
        for cyc in cycles:
            if start in cyc:
                close = cyc[end].time if end in cyc else 1 << 62
                out.append((r, cyc[start].time, close))
    return out


def _looks_inside(trace: Trace, windows, label: str, closed_right: bool) -> list[Violation]:
    found = []
    looks = [e for e in trace.events if e.kind == "L"]
    for r, lo, hi in windows:
        if hi <= lo:
            continue
        for e in looks:
            if e.robot == r:
                continue
            inside = lo < e.time <= hi if closed_right else lo < e.time < hi
            if inside:
                found.append(Violation(e.time, e.robot, label, f"Look inside robot {r}'s ({lo}, {hi}) window"))
    return found


def validate_schedule(trace: Trace, cls: SchedulerClass | str) -> list[Violation]:
    """Every way the trace's event pattern breaks ``cls``; empty iff admissible."""
    cls = SchedulerClass.parse(cls) if isinstance(cls, str) else cls
    if cls is S.ASYNCH:
        return []
    out: list[Violation] = []
    cycles = trace.cycles()
    units = cls.fused_units
    for r, per in enumerate(cycles):
        for cyc in per:
            for unit in units:
                if len(unit) > 1 and not _same(cyc, unit):
                    first = min(e.time for e in cyc.values())
                    out.append(Violation(first, r, "fused:" + "+".join(unit), "operations not simultaneous"))
    if cls.within(S.LC_ATOMIC):
        out += _looks_inside(trace, _windows(trace, "L", "C"), "look-during-LC", closed_right=False)
    if cls.within(S.M_ATOMIC):
        out += _looks_inside(trace, _windows(trace, "MB", "ME"), "look-during-move", closed_right=False)
        out += [
            Violation(e.time, e.robot, "transit-view", "Look saw a robot mid-move")
            for e in trace.events
            if e.kind == "L" and e.seen
        ]
    if cls.within(S.CM_ATOMIC):
        out += _looks_inside(trace, _windows(trace, "C", "ME"), "look-during-CM", closed_right=True)
    if cls in (S.FSYNCH, S.ROUNDROBIN):
        n = trace.n
        for k, (t, batch) in enumerate(trace.by_time()):
            robots = {e.robot for e in batch}
            if cls is S.FSYNCH and len(robots) != n:
                missing = sorted(set(range(n)) - robots)
                out.append(Violation(t, missing[0], "fsynch-round", f"robots {missing} not activated"))
            if cls is S.ROUNDROBIN and robots != {k % n}:
                out.append(Violation(t, min(robots), "round-robin", f"expected robot {k % n}, got {sorted(robots)}"))
    return sorted(set(out), key=lambda v: (v.time, v.robot, v.constraint))
