"""The execution engine: adversaries propose steps, the engine validates them
against the scheduler class, runs the robots' algorithm and records a trace."""

from __future__ import annotations

import hashlib
import itertools
import logging
import struct
from dataclasses import dataclass, field
from typing import Any, Mapping, NamedTuple, Protocol, Sequence

from .geometry import LocalFrame, Point, lerp, to_global
from .models import (
    COMPUTED,
    IDLE,
    LOOKED,
    MOVING,
    Configuration,
    Light,
    ModelClass,
    Snapshot,
    begin_look,
    begin_move,
    build_snapshot,
    commit_compute,
    end_move,
    promote_pending,
)
from .schedule import SchedulerClass
from .trace import KIND_RANK, KINDS, CycleEvent, Trace, TraceBuilder, TraceHeader

log = logging.getLogger(__name__)

_NEXT = {IDLE: "L", LOOKED: "C", COMPUTED: "MB", MOVING: "ME"}
_PLAIN = LocalFrame()
# for each class, the set of operations each operation must share a time with
_UNIT_OF = {
    cls: {k: frozenset(unit) for unit in cls.fused_units for k in unit} for cls in SchedulerClass
}


def _legal_runs(cls: SchedulerClass) -> dict[str, frozenset[tuple[str, ...]]]:
    """For each next kind, the kind sequences one robot may do in one step:
    one or more whole fused units in cycle order."""
    out = {}
    units = cls.fused_units
    for i, unit in enumerate(units):
        runs = set()
        for j in range(i, len(units)):
            runs.add(tuple(k for u in units[i : j + 1] for k in u))
        out[unit[0]] = frozenset(runs)
    return out


_LEGAL = {cls: _legal_runs(cls) for cls in SchedulerClass}


class AdversaryConstraintViolation(RuntimeError):
    def __init__(self, time: int, robot: int | None, constraint: str, detail: str = "") -> None:
        who = "" if robot is None else f" robot {robot}"
        super().__init__(f"t={time}{who}: {constraint} {detail}".rstrip())
        self.time = time
        self.robot = robot
        self.constraint = constraint


class Deadlock(RuntimeError):
    pass


class Op(NamedTuple):
    robot: int
    kind: str
    # only for Looks; the origin is replaced by the robot's position
    frame: LocalFrame | None = None


@dataclass(frozen=True)
class Step:
    ops: tuple[Op, ...]
    # robot -> fraction of its current move already travelled, as Looks see it
    transit: Mapping[int, float] = field(default_factory=dict)


def cycle_ops(robot: int, kinds: Sequence[str], frame: LocalFrame | None = None) -> list[Op]:
    return [Op(robot, k, frame if k == "L" else None) for k in kinds]


@dataclass(frozen=True)
class Action:
    """Compute outcome: destination in the robot's local frame and a partial
    light update merged into its current light."""

    dest: Point
    light: Mapping[str, Any] | None = None
    note: str | None = None


class Algorithm(Protocol):
    name: str
    model: ModelClass

    def compute(self, snapshot: Snapshot) -> Action: ...

    def initial_light(self) -> Light: ...

    def check_light(self, light: Light) -> None: ...


@dataclass(frozen=True)
class Scenario:
    positions: tuple[Point, ...]
    lights: tuple[Light, ...] | None = None
    chirality: bool = True
    rigid: bool = True

    @classmethod
    def of(cls, positions: Sequence[Sequence[float]], **kw: Any) -> "Scenario":
        return cls(tuple(Point(float(x), float(y)) for x, y in positions), **kw)

    @property
    def n(self) -> int:
        return len(self.positions)


class Adversary(Protocol):
    name: str

    def propose(self, engine: "Engine") -> Step | None: ...


def config_digest(positions: Sequence[Point], lights: Sequence[Light]) -> str:
    """Stable digest of what a Look can see: exact coordinates and lights."""
    h = hashlib.blake2b(digest_size=12)
    h.update(struct.pack(f"<{2 * len(positions)}d", *itertools.chain.from_iterable(positions)))
    for l in lights:
        h.update(l.key())
        h.update(b"|")
    return h.hexdigest()


class Engine:
    """One run.  ``light_delay=False`` is a deliberate fault: colors become
    visible at the time they are committed instead of one time later."""

    def __init__(
        self,
        scenario: Scenario,
        algorithm: Algorithm,
        scheduler: SchedulerClass,
        adversary: Adversary,
        *,
        seed: int | None = None,
        light_delay: bool = True,
    ) -> None:
        if not scenario.rigid:
            raise NotImplementedError("non-rigid movement is not supported")
        self.scenario = scenario
        self.algorithm = algorithm
        self.model = algorithm.model
        self.scheduler = scheduler
        self.adversary = adversary
        self.light_delay = light_delay
        n = scenario.n
        lights = scenario.lights or tuple(algorithm.initial_light() for _ in range(n))
        for l in lights:
            algorithm.check_light(l)
        self.config = Configuration.initial(scenario.positions, lights)
        self.time = 0
        self.header = TraceHeader(
            n=n,
            model=self.model.value,
            scheduler=scheduler.value,
            init_positions=self.config.positions,
            init_lights=tuple(lights),
            chirality=scenario.chirality,
            rigid=scenario.rigid,
            seed=seed,
            algorithm=algorithm.name,
            adversary=getattr(adversary, "name", None),
        )
        self.builder = TraceBuilder(self.header)
        self._snap: list[Snapshot | None] = [None] * n
        self._frame: list[LocalFrame | None] = [None] * n
        self._progress = [0.0] * n
        self.cycles_done = [0] * n
        self.last_look = [0] * n
        self._n = n

    @property
    def n(self) -> int:
        return self._n

    def stage(self, r: int) -> str:
        return self.config.stage[r]

    def next_kind(self, r: int) -> str:
        return _NEXT[self.config.stage[r]]

    def busy(self) -> list[int]:
        return [r for r in range(self.n) if self.config.stage[r] != IDLE]

    def trace(self) -> Trace:
        return self.builder.build()

    def run(self, horizon: int, max_events: int | None = None) -> Trace:
        """Step until ``horizon`` relevant times have elapsed, the trace holds
        ``max_events`` events, or the adversary stops with every robot idle."""
        budget = max_events if max_events is not None else 1 << 62
        while self.time < horizon and len(self.builder.events) < budget:
            step = self.adversary.propose(self)
            if step is None:
                if self.busy():
                    raise Deadlock(f"adversary stopped at t={self.time} with cycles pending: {self.busy()}")
                break
            self.apply(step)
        return self.trace()

    # -- validation -------------------------------------------------------

    def _plan(self, step: Step, t: int) -> list[Op]:
        """Validate ``step`` and return its ops in execution order."""
        if not step.ops:
            raise AdversaryConstraintViolation(t, None, "empty-step")
        n = self._n
        per: dict[int, list[str]] = {}
        for op in step.ops:
            if not 0 <= op.robot < n:
                raise AdversaryConstraintViolation(t, op.robot, "unknown-robot")
            if op.kind not in KIND_RANK:
                raise AdversaryConstraintViolation(t, op.robot, "unknown-kind", op.kind)
            if op.kind == "L" and op.frame is not None and self.scenario.chirality and op.frame.handedness != 1:
                raise AdversaryConstraintViolation(t, op.robot, "chirality", "mirrored frame")
            per.setdefault(op.robot, []).append(op.kind)
        unit_of = _UNIT_OF[self.scheduler]
        legal = _LEGAL[self.scheduler]
        stage = self.config.stage
        for r, kinds in per.items():
            kinds.sort(key=KIND_RANK.__getitem__)
            if tuple(kinds) in legal[_NEXT[stage[r]]]:
                continue
            start = KIND_RANK[_NEXT[self.config.stage[r]]]
            if kinds != list(KINDS[start : start + len(kinds)]):
                raise AdversaryConstraintViolation(t, r, "cycle-order", f"{kinds} while {self.config.stage[r]}")
            have = set(kinds)
            for k in kinds:
                unit = unit_of[k]
                if not unit <= have:
                    raise AdversaryConstraintViolation(
                        t, r, "fused:" + "+".join(sorted(unit, key=KIND_RANK.__getitem__)),
                        f"{kinds} under {self.scheduler.value}",
                    )
        cls = self.scheduler
        if cls is SchedulerClass.FSYNCH and len(per) != n:
            raise AdversaryConstraintViolation(t, None, "fsynch-round", f"only {sorted(per)} activated")
        if cls is SchedulerClass.ROUNDROBIN and set(per) != {self.time % n}:
            raise AdversaryConstraintViolation(
                t, None, "round-robin", f"expected robot {self.time % n}, got {sorted(per)}"
            )
        for r, frac in step.transit.items():
            if not cls.allows_transit_views:
                raise AdversaryConstraintViolation(t, r, "transit-view", f"not allowed under {cls.value}")
            if self.config.stage[r] != MOVING:
                raise AdversaryConstraintViolation(t, r, "transit-view", "robot is not moving")
            if not self._progress[r] <= frac <= 1.0:
                raise AdversaryConstraintViolation(t, r, "transit-view", f"progress {frac} not monotone")
        return sorted(step.ops, key=lambda o: (KIND_RANK[o.kind], o.robot))

    # -- execution --------------------------------------------------------

    def exposed_positions(self, transit: Mapping[int, float] | None = None) -> tuple[Point, ...]:
        pos = self.config.positions
        if not transit:
            return pos
        out = list(pos)
        for r, frac in transit.items():
            out[r] = lerp(pos[r], self.config.dest[r], frac)
        return tuple(out)

    def apply(self, step: Step) -> None:
        t = self.time + 1
        ops = self._plan(step, t)
        self.time = t
        config = promote_pending(self.config)
        for r, frac in step.transit.items():
            self._progress[r] = frac
        looking = {o.robot for o in ops if o.kind == "L"}
        events: list[CycleEvent] = []
        delay = self.light_delay
        if not delay:
            # computes of robots that looked earlier land before this time's Looks
            for o in ops:
                if o.kind == "C" and o.robot not in looking:
                    config = self._compute(config, o.robot, t, events, delay=False)

        if looking:
            self.config = config
            exposed = self.exposed_positions(step.transit)
            seen = tuple(sorted((r, exposed[r]) for r in step.transit))
            digest = config_digest(exposed, config.lights)
        if not delay:
            # robot by robot, so a color committed now shows to later Looks
            ops.sort(key=lambda o: (o.robot, KIND_RANK[o.kind]))
        for o in ops:
            r = o.robot
            kind = o.kind
            if kind == "L":
                if not delay:
                    digest = config_digest(exposed, config.lights)
                f = o.frame or _PLAIN
                frame = LocalFrame(config.positions[r], f.rotation, f.unit, f.handedness)
                self._snap[r] = build_snapshot(config, r, frame, self.model, exposed)
                self._frame[r] = frame
                self.last_look[r] = t
                config = begin_look(config, r)
                events.append(CycleEvent(t, r, "L", config.positions[r], frame=frame, seen=seen, snap=digest))
            elif kind == "C":
                if delay or r in looking:
                    config = self._compute(config, r, t, events, delay=delay)
            elif kind == "MB":
                config = begin_move(config, r)
                self._progress[r] = 0.0
                events.append(CycleEvent(t, r, "MB", config.positions[r], dest=config.dest[r]))
            else:
                config = end_move(config, r)
                self._progress[r] = 0.0
                self.cycles_done[r] += 1
                events.append(CycleEvent(t, r, "ME", config.positions[r]))
        self.config = config
        if not delay:
            events.sort(key=lambda e: (KIND_RANK[e.kind], e.robot))
        for e in events:
            self.builder.append(e)

    def _compute(self, config: Configuration, r: int, t: int, events: list, *, delay: bool) -> Configuration:
        snap, frame = self._snap[r], self._frame[r]
        action = self.algorithm.compute(snap)
        dest = to_global(frame, action.dest)
        if action.dest == (0.0, 0.0):
            dest = config.positions[r]  # exact null move, free of round-off
        light = config.lights[r].updated(action.light)
        self.algorithm.check_light(light)
        config = commit_compute(config, r, dest, light, delay=delay)
        self._snap[r] = None
        events.append(CycleEvent(t, r, "C", config.positions[r], light=light, dest=dest, note=action.note))
        return config


def run(
    scenario: Scenario,
    algorithm: Algorithm,
    scheduler: SchedulerClass,
    adversary: Adversary,
    horizon: int,
    *,
    max_events: int | None = None,
    seed: int | None = None,
    light_delay: bool = True,
) -> Trace:
    engine = Engine(scenario, algorithm, scheduler, adversary, seed=seed, light_delay=light_delay)
    return engine.run(horizon, max_events)


def visibility_violations(trace: Trace) -> list[str]:
    """Replay ``trace`` and check every Look saw exactly the exposed state:
    colors committed at time t appear from t+1, positions reached at t
    appear from t+1, and robots mid-move appear at their recorded points."""
    problems = []
    config = trace.header.initial_configuration()
    for t, batch in trace.by_time():
        config = promote_pending(config)
        looks = [e for e in batch if e.kind == "L"]
        if looks:
            exposed = list(config.positions)
            for r, p in looks[0].seen:
                if config.stage[r] != MOVING:
                    problems.append(f"t={t}: robot {r} shown mid-move while {config.stage[r]}")
                exposed[r] = p
            want = config_digest(exposed, config.lights)
            for e in looks:
                if e.snap != want:
                    problems.append(f"t={t}: robot {e.robot}'s Look saw a state other than the exposed one")
        for e in batch:
            if e.kind == "L":
                config = begin_look(config, e.robot)
            elif e.kind == "C":
                config = commit_compute(config, e.robot, e.dest, e.light)
            elif e.kind == "MB":
                config = begin_move(config, e.robot)
            else:
                config = end_move(config, e.robot)
    return problems
