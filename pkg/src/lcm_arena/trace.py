"""Relevant-time event traces: recording, replay and JSONL serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, NamedTuple

from .geometry import LocalFrame, Point
from .models import (
    IDLE,
    LOOKED,
    COMPUTED,
    MOVING,
    Configuration,
    Light,
    begin_look,
    begin_move,
    commit_compute,
    end_move,
    promote_pending,
)

FORMAT_VERSION = 1
KINDS = ("L", "C", "MB", "ME")
KIND_RANK = {k: i for i, k in enumerate(KINDS)}
_STAGE_BEFORE = {"L": IDLE, "C": LOOKED, "MB": COMPUTED, "ME": MOVING}


class TraceError(ValueError):
    pass


class OutOfOrderEvent(TraceError):
    pass


class PhaseOrderViolation(TraceError):
    pass


class MalformedRecord(TraceError):
    def __init__(self, line: int, reason: str) -> None:
        super().__init__(f"line {line}: {reason}")
        self.line = line


class CycleEvent(NamedTuple):
    """One Look / Compute / MoveBegin / MoveEnd of one robot.

    ``pos`` is the robot's position when the event happens (the reached
    destination for ME).  Looks carry the frame used, positions of robots
    seen mid-move (``seen``) and a digest of the exposed configuration.
    """

    time: int
    robot: int
    kind: str
    pos: Point
    light: Light | None = None
    dest: Point | None = None
    frame: LocalFrame | None = None
    seen: tuple[tuple[int, Point], ...] = ()
    snap: str | None = None
    note: str | None = None

    def to_record(self) -> dict[str, Any]:
        rec: dict[str, Any] = {"t": self.time, "r": self.robot, "k": self.kind, "pos": list(self.pos)}
        if self.light is not None:
            rec["light"] = self.light.to_json()
        if self.dest is not None:
            rec["dest"] = list(self.dest)
        if self.frame is not None:
            rec["frame"] = self.frame.as_list()
        if self.seen:
            rec["seen"] = {str(r): list(p) for r, p in self.seen}
        if self.snap is not None:
            rec["snap"] = self.snap
        if self.note is not None:
            rec["note"] = self.note
        return rec

    @classmethod
    def from_record(cls, rec: dict[str, Any]) -> "CycleEvent":
        kind = rec["k"]
        if kind not in KIND_RANK:
            raise ValueError(f"unknown event kind {kind!r}")
        seen = tuple(sorted((int(r), _pt(p)) for r, p in rec.get("seen", {}).items()))
        return cls(
            time=int(rec["t"]),
            robot=int(rec["r"]),
            kind=kind,
            pos=_pt(rec["pos"]),
            light=Light(rec["light"]) if "light" in rec else None,
            dest=_pt(rec["dest"]) if "dest" in rec else None,
            frame=LocalFrame.from_list(rec["frame"]) if "frame" in rec else None,
            seen=seen,
            snap=rec.get("snap"),
            note=rec.get("note"),
        )


def _pt(values: Any) -> Point:
    x, y = values
    return Point(float(x), float(y))


@dataclass(frozen=True)
class TraceHeader:
    n: int
    model: str
    scheduler: str
    init_positions: tuple[Point, ...]
    init_lights: tuple[Light, ...]
    chirality: bool = True
    rigid: bool = True
    seed: int | None = None
    algorithm: str | None = None
    adversary: str | None = None
    version: int = FORMAT_VERSION

    def to_record(self) -> dict[str, Any]:
        return {
            "version": self.version,
            "n": self.n,
            "model": self.model,
            "scheduler": self.scheduler,
            "chirality": self.chirality,
            "rigid": self.rigid,
            "seed": self.seed,
            "algorithm": self.algorithm,
            "adversary": self.adversary,
            "init": {
                "pos": [list(p) for p in self.init_positions],
                "light": [l.to_json() for l in self.init_lights],
            },
        }

    @classmethod
    def from_record(cls, rec: dict[str, Any]) -> "TraceHeader":
        init = rec["init"]
        return cls(
            n=int(rec["n"]),
            model=rec["model"],
            scheduler=rec["scheduler"],
            init_positions=tuple(_pt(p) for p in init["pos"]),
            init_lights=tuple(Light(l) for l in init["light"]),
            chirality=bool(rec["chirality"]),
            rigid=bool(rec["rigid"]),
            seed=rec.get("seed"),
            algorithm=rec.get("algorithm"),
            adversary=rec.get("adversary"),
            version=int(rec["version"]),
        )

    def initial_configuration(self) -> Configuration:
        return Configuration.initial(self.init_positions, self.init_lights)


@dataclass(frozen=True)
class Trace:
    header: TraceHeader
    events: tuple[CycleEvent, ...] = ()

    @property
    def n(self) -> int:
        return self.header.n

    @property
    def last_time(self) -> int:
        return self.events[-1].time if self.events else 0

    def times(self) -> list[int]:
        return sorted({e.time for e in self.events})

    def by_time(self) -> Iterator[tuple[int, list[CycleEvent]]]:
        batch: list[CycleEvent] = []
        for e in self.events:
            if batch and e.time != batch[0].time:
                yield batch[0].time, batch
                batch = []
            batch.append(e)
        if batch:
            yield batch[0].time, batch

    def configs(self) -> list[tuple[int, Configuration]]:
        """Configuration after every relevant time, preceded by time 0."""
        config = self.header.initial_configuration()
        out = [(0, config)]
        for t, batch in self.by_time():
            config = promote_pending(config)
            for e in batch:
                config = apply_event(config, e)
            out.append((t, config))
        return out

    def cycles(self) -> list[list[dict[str, CycleEvent]]]:
        """Per robot, the list of its cycles as ``{kind: event}`` dicts."""
        per: list[list[dict[str, CycleEvent]]] = [[] for _ in range(self.n)]
        for e in self.events:
            if e.kind == "L":
                per[e.robot].append({})
            per[e.robot][-1][e.kind] = e
        return per


def apply_event(config: Configuration, e: CycleEvent) -> Configuration:
    if e.kind == "L":
        return begin_look(config, e.robot)
    if e.kind == "C":
        return commit_compute(config, e.robot, e.dest, e.light)
    if e.kind == "MB":
        return begin_move(config, e.robot)
    return end_move(config, e.robot)


class TraceBuilder:
    """Single-threaded accumulator enforcing time order and cycle order."""

    def __init__(self, header: TraceHeader) -> None:
        self.header = header
        self.events: list[CycleEvent] = []
        self._stage = [IDLE] * header.n

    def append(self, e: CycleEvent) -> None:
        if not 0 <= e.robot < self.header.n:
            raise TraceError(f"robot {e.robot} out of range")
        if self.events:
            last = self.events[-1]
            if e.time < last.time or (e.time == last.time and KIND_RANK[e.kind] < KIND_RANK[last.kind]):
                raise OutOfOrderEvent(f"{e.kind}@{e.time} after {last.kind}@{last.time}")
        elif e.time < 1:
            raise OutOfOrderEvent("relevant times start at 1")
        expected = _STAGE_BEFORE[e.kind]
        if self._stage[e.robot] != expected:
            raise PhaseOrderViolation(
                f"robot {e.robot}: {e.kind} at t={e.time} while {self._stage[e.robot]}"
            )
        self._stage[e.robot] = {"L": LOOKED, "C": COMPUTED, "MB": MOVING, "ME": IDLE}[e.kind]
        self.events.append(e)

    def build(self) -> Trace:
        return Trace(self.header, tuple(self.events))


def append_event(trace: Trace, event: CycleEvent) -> Trace:
    builder = TraceBuilder(trace.header)
    for e in trace.events:
        builder.append(e)
    builder.append(event)
    return builder.build()


def serialize(trace: Trace) -> bytes:
    lines = [json.dumps(trace.header.to_record(), separators=(",", ":"))]
    lines.extend(json.dumps(e.to_record(), separators=(",", ":")) for e in trace.events)
    return ("\n".join(lines) + "\n").encode()


def deserialize(data: bytes | str) -> Trace:
    text = data.decode() if isinstance(data, bytes) else data
    lines = text.splitlines()
    if not lines:
        raise MalformedRecord(1, "missing header")
    try:
        header = TraceHeader.from_record(json.loads(lines[0]))
    except (ValueError, KeyError, TypeError) as exc:
        raise MalformedRecord(1, f"bad header: {exc}") from exc
    builder = TraceBuilder(header)
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            event = CycleEvent.from_record(json.loads(line))
        except (ValueError, KeyError, TypeError) as exc:
            raise MalformedRecord(lineno, str(exc)) from exc
        try:
            builder.append(event)
        except TraceError as exc:
            raise MalformedRecord(lineno, str(exc)) from exc
    return builder.build()


@dataclass(frozen=True)
class FairnessReport:
    window: int
    flagged: tuple[tuple[int, tuple[int, ...]], ...] = field(default=())

    @property
    def fair(self) -> bool:
        return not self.flagged


def fairness_windows(trace: Trace, window: int | None = None) -> FairnessReport:
    """Flag every run of ``window`` consecutive Looks missing some robot.

    Each entry is ``(index of first Look in the window, missing robots)``.
    """
    n = trace.n
    w = 4 * n if window is None else window
    if w < n:
        raise ValueError(f"window {w} smaller than n={n}")
    looks = [e.robot for e in trace.events if e.kind == "L"]
    flagged = []
    counts = [0] * n
    for i, r in enumerate(looks):
        counts[r] += 1
        if i >= w:
            counts[looks[i - w]] -= 1
        if i >= w - 1:
            missing = tuple(q for q in range(n) if counts[q] == 0)
            if missing:
                flagged.append((i - w + 1, missing))
    return FairnessReport(w, tuple(flagged))


def null_move(cycle: dict[str, CycleEvent]) -> bool | None:
    """True/False for a completed cycle's move, None while incomplete."""
    me = cycle.get("ME")
    mb = cycle.get("MB")
    if me is None or mb is None:
        return None
    return mb.pos == me.pos
