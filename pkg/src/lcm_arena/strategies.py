"""Generic adversary strategies: random fair, round-robin, fully synchronous
and maximal move delay."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .engine import Engine, Op, Step, cycle_ops
from .geometry import LocalFrame
from .models import MOVING
from .schedule import SchedulerClass

ALL_KINDS = ("L", "C", "MB", "ME")


class UnknownKind(ValueError):
    pass


class IncompatibleClass(ValueError):
    pass


class FramePolicy:
    """Chooses each Look's frame: ``identity``, ``random`` (fresh per Look:
    uniform rotation, unit log-uniform in [2^-4, 2^4]) or ``fixed`` (drawn
    once per robot).  ``shared_unit`` pins every unit to 1."""

    def __init__(self, mode: str, rng: random.Random, *, shared_unit: bool = False) -> None:
        if mode not in ("identity", "random", "fixed"):
            raise ValueError(f"unknown frame mode {mode!r}")
        self.mode = mode
        self.rng = rng
        self.shared_unit = shared_unit
        self._pinned: dict[int, LocalFrame] = {}

    def _draw(self, chirality: bool) -> LocalFrame:
        rot = self.rng.uniform(0.0, 2 * math.pi)
        unit = 1.0 if self.shared_unit else 2.0 ** self.rng.uniform(-4.0, 4.0)
        hand = 1 if chirality else self.rng.choice((1, -1))
        return LocalFrame(rotation=rot, unit=unit, handedness=hand)

    def frame(self, robot: int, chirality: bool) -> LocalFrame | None:
        if self.mode == "identity":
            return None
        if self.mode == "fixed":
            if robot not in self._pinned:
                self._pinned[robot] = self._draw(chirality)
            return self._pinned[robot]
        return self._draw(chirality)


# class -> first kind of a fused unit -> that unit
_UNIT_FROM = {cls: {unit[0]: unit for unit in cls.fused_units} for cls in SchedulerClass}


def _next_unit(engine: Engine, r: int) -> tuple[str, ...]:
    return _UNIT_FROM[engine.scheduler][engine.next_kind(r)]


class BaseAdversary:
    name = "base"
    base_class = SchedulerClass.ASYNCH

    def supports(self, cls: SchedulerClass) -> bool:
        return cls in self.base_class.enclosing()

    def check(self, engine: Engine) -> None:
        if not self.supports(engine.scheduler):
            raise IncompatibleClass(f"{self.name} cannot drive {engine.scheduler.value}")


class RandomFair(BaseAdversary):
    """Each step activates a random nonempty set of robots, each advancing
    by the next fused unit its class allows.  A robot left out for
    ``patience`` consecutive steps is forced in, so every window of
    ``patience + 1`` steps advances every robot."""

    name = "uniform-random-fair"

    def __init__(
        self,
        seed: int = 0,
        *,
        frames: str = "random",
        activation: float = 0.5,
        patience: int | None = None,
        transit: bool = True,
    ) -> None:
        self.rng = random.Random(seed)
        self.frames = FramePolicy(frames, self.rng)
        self.activation = activation
        self.patience = patience
        self.transit = transit
        self._idle: list[int] = []

    def supports(self, cls: SchedulerClass) -> bool:
        return True

    def propose(self, engine: Engine) -> Step:
        n = engine.n
        cls = engine.scheduler
        rng = self.rng
        if len(self._idle) != n:
            self._idle = [0] * n
        patience = self.patience if self.patience is not None else 2 * n
        if cls is SchedulerClass.FSYNCH:
            chosen = list(range(n))
        elif cls is SchedulerClass.ROUNDROBIN:
            chosen = [engine.time % n]
        else:
            idle = self._idle
            chosen = [r for r in range(n) if idle[r] >= patience or rng.random() < self.activation]
            if not chosen:
                chosen = [rng.randrange(n)]
        picked = set(chosen)
        units = _UNIT_FROM[cls]
        chir = engine.scenario.chirality
        ops: list[Op] = []
        for r in range(n):
            if r not in picked:
                self._idle[r] += 1
                continue
            self._idle[r] = 0
            unit = units[engine.next_kind(r)]
            ops += cycle_ops(r, unit, self.frames.frame(r, chir) if unit[0] == "L" else None)
        transit = {}
        if self.transit and cls.allows_transit_views and any(o.kind == "L" for o in ops):
            for r in range(n):
                if engine.stage(r) == MOVING and rng.random() < 0.5:
                    lo = engine._progress[r]
                    transit[r] = lo + (1.0 - lo) * rng.random()
        return Step(tuple(ops), transit)


class RoundRobin(BaseAdversary):
    name = "round-robin"
    base_class = SchedulerClass.ROUNDROBIN

    def __init__(self, seed: int = 0, *, frames: str = "random") -> None:
        self.frames = FramePolicy(frames, random.Random(seed))

    def propose(self, engine: Engine) -> Step:
        self.check(engine)
        r = engine.time % engine.n
        return Step(tuple(cycle_ops(r, ALL_KINDS, self.frames.frame(r, engine.scenario.chirality))))


class Synchronous(BaseAdversary):
    name = "fsynch"
    base_class = SchedulerClass.FSYNCH

    def __init__(self, seed: int = 0, *, frames: str = "random") -> None:
        self.frames = FramePolicy(frames, random.Random(seed))

    def propose(self, engine: Engine) -> Step:
        self.check(engine)
        chir = engine.scenario.chirality
        ops: list[Op] = []
        for r in range(engine.n):
            ops += cycle_ops(r, ALL_KINDS, self.frames.frame(r, chir))
        return Step(tuple(ops))


class MaxDelay(BaseAdversary):
    """One robot at a time starts a move and is held mid-move while the
    others complete ``k`` cycles in turn; it is shown in transit at evenly
    spaced points, then lands.  The held robot rotates."""

    name = "max-delay"

    def __init__(self, seed: int = 0, *, k: int = 3, frames: str = "random") -> None:
        if k < 1:
            raise ValueError("k must be positive")
        self.k = k
        self.frames = FramePolicy(frames, random.Random(seed))
        self._plan: list[tuple[int, str]] = []
        self._victim = 0

    def supports(self, cls: SchedulerClass) -> bool:
        return cls in (SchedulerClass.ASYNCH, SchedulerClass.LC_ATOMIC)

    def _build(self, engine: Engine) -> None:
        n = engine.n
        v = self._victim
        self._victim = (v + 1) % n
        plan = [(v, "start")]
        others = [r for r in range(n) if r != v]
        for j in range(self.k * len(others)):
            plan.append((others[j % len(others)], f"cycle:{(j // len(others) + 1) / (self.k + 1)}"))
        plan.append((v, "land"))
        self._plan = plan

    def propose(self, engine: Engine) -> Step:
        self.check(engine)
        if not self._plan:
            self._build(engine)
        r, what = self._plan[0]
        chir = engine.scenario.chirality
        if what == "land":
            self._plan.pop(0)
            return Step((Op(r, "ME"),))
        kind = engine.next_kind(r)
        unit = _next_unit(engine, r)
        victim = self._plan[-1][0]
        if what == "start" and kind == "MB":
            self._plan.pop(0)
            return Step((Op(r, "MB"),))
        if what.startswith("cycle") and unit[-1] == "ME":
            self._plan.pop(0)
        frame = self.frames.frame(r, chir) if "L" in unit else None
        transit = {}
        if "L" in unit and engine.stage(victim) == MOVING:
            transit = {victim: float(what.split(":")[1])}
        return Step(tuple(cycle_ops(r, unit, frame)), transit)


_KINDS = {
    "uniform-random-fair": RandomFair,
    "random": RandomFair,
    "round-robin": RoundRobin,
    "fsynch": Synchronous,
    "max-delay": MaxDelay,
}


def builtin_adversaries(kind: str, seed: int = 0, **options) -> BaseAdversary:
    try:
        factory = _KINDS[kind]
    except KeyError:
        raise UnknownKind(f"unknown adversary kind {kind!r}") from None
    return factory(seed, **options)


def builtin_kinds() -> list[str]:
    return sorted(k for k in _KINDS if k != "random")
