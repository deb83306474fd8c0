"""Scripted adversaries that replay the impossibility proofs' schedules.

Each script is a generator of steps.  Once its attack is done (or it finds
the victim does not fit the proof's assumptions) it records an ``outcome``
and hands over to a random fair tail, so every robot keeps being activated.
The algorithm's response is learnt by dry-running its Compute on a
hand-built snapshot, outside the trace.
"""

from __future__ import annotations

import math
import random
from typing import Callable, Iterator

from .engine import Engine, Op, Step, cycle_ops
from .geometry import REL_TOL, LocalFrame, Point, dist, norm
from .models import Light, ModelClass, Snapshot, SnapshotEntry
from .problems import InvalidInitialShape, analyze_quadrilateral
from .schedule import SchedulerClass
from .strategies import _UNIT_FROM, BaseAdversary, FramePolicy, RandomFair

FIRED = "Fired"
NOT_APPLICABLE = "NotApplicable"
F_ZERO = "FZero"
ALL_ZERO_F = "AllZeroF"
TARGET_RESISTED = "TargetResisted"
NEVER_ATTRACTIVE = "NeverAttractive"

FULL = ("L", "C", "MB", "ME")


class UnknownScript(KeyError):
    pass


def probe(algorithm, own: Light, seen: Light, at: Point = Point(1.0, 0.0)) -> tuple[Point, Light]:
    """Dry-run one Compute: the other robot sits at ``at`` showing ``seen``
    and the observer's own light is ``own``.  Returns the local destination
    and the observer's next light."""
    model = algorithm.model
    entry = SnapshotEntry(at, frozenset({seen}) if model.sees_other_lights else None)
    snap = Snapshot(0, (entry,), own if model.sees_own_light else None)
    action = algorithm.compute(snap)
    return action.dest, own.updated(action.light)


def facing_frame(engine: Engine, r: int, other: int) -> LocalFrame:
    """Frame in which ``other`` appears at local (1, 0); a plain frame once
    the two robots share a point."""
    p, q = engine.config.positions[r], engine.config.positions[other]
    d = dist(p, q)
    if d == 0.0:
        return LocalFrame(p)
    return LocalFrame(p, math.atan2(q[1] - p[1], q[0] - p[0]), d, 1)


class ScriptedAdversary(BaseAdversary):
    """Base class: ``script`` yields steps; ``outcome`` says how it ended."""

    name = "scripted"
    target = SchedulerClass.ASYNCH
    disorientation = "variable"
    shared_unit = False
    # two-robot scripts whose every Look shows the other robot at (1, 0)
    facing = False

    def __init__(self, seed: int = 0, *, cap: int = 200, tail: bool = True) -> None:
        self.seed = seed
        # without the tail the run ends once the script has played out
        self.tail = tail
        self.rng = random.Random(seed)
        self.cap = cap
        self.outcome: str | None = None
        self.detail = ""
        self.fired_at: int | None = None
        mode = "fixed" if self.disorientation == "fixed" else "random"
        self.frames = FramePolicy(mode, self.rng, shared_unit=self.shared_unit)
        self._tail = RandomFair(seed, frames=mode)
        self._tail.frames = self.frames
        self._gen: Iterator[Step] | None = None
        self._done = False

    @property
    def base_class(self) -> SchedulerClass:  # type: ignore[override]
        return self.target

    def frame(self, engine: Engine, r: int) -> LocalFrame:
        return self.frames.frame(r, engine.scenario.chirality)

    def finish(self, outcome: str, detail: str = "", fired_at: int | None = None) -> None:
        self.outcome = outcome
        self.detail = detail
        self.fired_at = fired_at

    def script(self, engine: Engine) -> Iterator[Step]:
        raise NotImplementedError

    def propose(self, engine: Engine) -> Step:
        if self._gen is None:
            self.check(engine)
            self._gen = self.script(engine)
        if not self._done:
            try:
                return next(self._gen)
            except StopIteration:
                self._done = True
        if not self.tail:
            busy = engine.busy()
            if not busy:
                return None
            units = _UNIT_FROM[engine.scheduler]
            return Step(tuple(op for r in busy for op in cycle_ops(r, units[engine.next_kind(r)])))
        step = self._tail.propose(engine)
        if self.facing:
            ops = tuple(Op(o.robot, "L", self._face(engine, o.robot)) if o.kind == "L" else o for o in step.ops)
            step = Step(ops, step.transit)
        return step

    def _face(self, engine: Engine, r: int) -> LocalFrame:
        return facing_frame(engine, r, 1 - r)

    def report(self) -> dict:
        return {"adversary": self.name, "outcome": self.outcome, "fired_at": self.fired_at, "detail": self.detail}


def _two(engine: Engine) -> None:
    if engine.n != 2:
        raise ValueError(f"this script drives exactly 2 robots, got {engine.n}")


def _pending_length(engine: Engine, r: int) -> float:
    dest = engine.config.dest[r]
    return 0.0 if dest is None else dist(engine.config.positions[r], dest)


class MlcvOblotMAtomic(ScriptedAdversary):
    """Both robots Look at once.  Robot 0 (r) completes its cycle and keeps
    being re-activated while robot 1 (q) is held between Compute and Move,
    until the gap is shorter than q's pending move; then q moves."""

    name = "mlcv-oblot-m"
    target = SchedulerClass.M_ATOMIC
    disorientation = "fixed"
    shared_unit = True

    def script(self, engine: Engine) -> Iterator[Step]:
        _two(engine)
        r, q = 0, 1
        ops = cycle_ops(r, FULL, self.frame(engine, r)) + cycle_ops(q, ("L", "C"), self.frame(engine, q))
        yield Step(tuple(ops))
        reach = _pending_length(engine, q)
        if reach == 0.0:
            self.finish(NOT_APPLICABLE, "the stalled robot computed a null move; the algorithm does not move")
            return
        gap = dist(*engine.config.positions)
        margin = REL_TOL * dist(*engine.scenario.positions)
        for _ in range(self.cap):
            if gap < reach - margin:
                break
            yield Step(tuple(cycle_ops(r, FULL, self.frame(engine, r))))
            now = dist(*engine.config.positions)
            if now >= gap:
                self.finish(NOT_APPLICABLE, "re-activating r does not shrink the gap")
                return
            gap = now
        else:
            self.finish(TARGET_RESISTED, f"gap still {gap} after {self.cap} activations")
            return
        yield Step((Op(q, "MB"), Op(q, "ME")))
        self.finish(FIRED, f"stalled move of length {reach} released at gap {gap}", engine.time)


class MlcvFcomMAtomic(ScriptedAdversary):
    """Every Look shows the opponent at local distance 1, so a robot's move
    is F(c) times the real distance, c being the opponent's color."""

    name = "mlcv-fcom-m"
    target = SchedulerClass.M_ATOMIC
    facing = True

    def script(self, engine: Engine) -> Iterator[Step]:
        _two(engine)
        alg = engine.algorithm
        if alg.model is not ModelClass.FCOM:
            raise ValueError(f"{self.name} targets FCOM algorithms, got {alg.model.value}")
        lights = engine.config.lights
        F = {c: norm(probe(alg, c, c)[0]) for c in alg.colors()}
        self.F = F
        if all(v == 0.0 for v in F.values()):
            self.finish(F_ZERO, "every color gives F = 0: the robots never move")
            return
        r, q = 0, 1
        # wait, synchronously, until both robots show colors that make the other move
        for _ in range(self.cap):
            lights = engine.config.lights
            if F[lights[q]] > 0 and F[lights[r]] > 0:
                break
            yield self._both(engine, FULL)
        else:
            self.finish(F_ZERO, "no reachable color pair with F > 0")
            return
        f_r, f_q = F[lights[q]], F[lights[r]]
        if f_r > 0.5 and f_q > 0.5:
            yield self._both(engine, FULL)
            self.finish(FIRED, f"F = {f_r} > 1/2: simultaneous moves cross", engine.time)
            return
        # r Looks and is held before its Compute, so its color stays put
        yield Step((Op(r, "L", self._face(engine, r)),))
        d0 = dist(*engine.config.positions)
        reach = f_r * d0
        k = 1 if f_q >= 1 else math.floor(math.log(f_q) / math.log(1 - f_q)) + 1
        self.pumps = 0
        for _ in range(self.cap):
            if self.pumps >= k and dist(*engine.config.positions) < reach - REL_TOL * d0:
                break
            yield Step(tuple(cycle_ops(q, FULL, self._face(engine, q))))
            self.pumps += 1
        else:
            self.finish(TARGET_RESISTED, f"gap never dropped below {reach}")
            return
        yield Step(tuple(cycle_ops(r, ("C", "MB", "ME"))))
        self.finish(FIRED, f"{self.pumps} pumps of q, then r moved {reach}", engine.time)

    def _both(self, engine: Engine, kinds: tuple[str, ...]) -> Step:
        return Step(tuple(cycle_ops(0, kinds, self._face(engine, 0)) + cycle_ops(1, kinds, self._face(engine, 1))))


class MlcvFstaMAtomic(ScriptedAdversary):
    """FSTA robots see only their own color; with unit-distance views their
    color sequence is fixed, so it is a transient followed by a period."""

    name = "mlcv-fsta-m"
    target = SchedulerClass.M_ATOMIC
    facing = True

    def __init__(self, seed: int = 0, color_bound: int = 8, **kw) -> None:
        super().__init__(seed, **kw)
        self.color_bound = color_bound

    def _cycle(self, engine: Engine, r: int) -> list[Op]:
        return cycle_ops(r, FULL, self._face(engine, r))

    def script(self, engine: Engine) -> Iterator[Step]:
        _two(engine)
        alg = engine.algorithm
        if alg.model is not ModelClass.FSTA:
            raise ValueError(f"{self.name} targets FSTA algorithms, got {alg.model.value}")
        if len(alg.colors()) > self.color_bound:
            raise ValueError(f"algorithm has more than {self.color_bound} colors")
        lights = engine.config.lights
        if lights[0] != lights[1]:
            raise ValueError("both robots must start with the same color")
        # walk the color sequence until a pair repeats
        seq: list[Light] = []
        F: dict[Light, float] = {}
        c = lights[0]
        for _ in range(self.color_bound**2 + 1):
            if c in seq:
                break
            seq.append(c)
            dest, nxt = probe(alg, c, c)
            F[c] = norm(dest)
            c = nxt
        start = seq.index(c)
        self.transient, self.period = seq[:start], seq[start:]
        self.F = F
        for c in self.transient:
            if F[c] > 0.5:
                yield Step(tuple(self._cycle(engine, 0) + self._cycle(engine, 1)))
                self.finish(FIRED, f"F = {F[c]} > 1/2 during the transient: simultaneous moves cross", engine.time)
                return
            yield Step(tuple(self._cycle(engine, 0)))
            yield Step(tuple(self._cycle(engine, 1)))
        if all(F[c] == 0.0 for c in self.period):
            self.finish(ALL_ZERO_F, "F = 0 on the whole period: the robots stop apart")
            return
        # enter the period at a color that moves
        i = 0
        while F[self.period[i]] == 0.0:
            yield Step(tuple(self._cycle(engine, 0)))
            yield Step(tuple(self._cycle(engine, 1)))
            i += 1
        c0 = self.period[i]
        if F[c0] > 0.5:
            yield Step(tuple(self._cycle(engine, 0) + self._cycle(engine, 1)))
            self.finish(FIRED, f"F = {F[c0]} > 1/2: simultaneous moves cross", engine.time)
            return
        r, q = 0, 1
        yield Step(tuple(cycle_ops(r, ("L", "C"), self._face(engine, r)) + self._cycle(engine, q)))
        reach = _pending_length(engine, r)
        margin = REL_TOL * dist(*engine.scenario.positions)
        for _ in range(10 * self.color_bound**2):
            if dist(*engine.config.positions) < reach - margin:
                break
            yield Step(tuple(self._cycle(engine, q)))
        else:
            self.finish(TARGET_RESISTED, f"gap never dropped below {reach}")
            return
        yield Step((Op(r, "MB"), Op(r, "ME")))
        self.finish(FIRED, f"stalled move of length {reach} released", engine.time)


def tf_pi4_instance(seed: int = 0, tol: float = 1e-12) -> tuple[Point, Point, Point, Point]:
    """A convex quadrilateral (a, b, c, d) with a unique longest side cd and
    lines ab, cd at exactly pi/4, found by seeded random search and placed
    by a random rotation and translation."""
    rng = random.Random(seed)
    for _ in range(1000):
        xa, ha = rng.uniform(0.5, 4.0), rng.uniform(3.0, 7.0)
        t = rng.uniform(1.0, ha - 0.5)
        a, b = (xa, ha), (xa + t, ha - t)
        d, c = (0.0, 0.0), (10.0, 0.0)
        rot = rng.uniform(0.0, 2 * math.pi)
        shift = (rng.uniform(-5, 5), rng.uniform(-5, 5))
        co, si = math.cos(rot), math.sin(rot)
        pts = tuple(Point(co * x - si * y + shift[0], si * x + co * y + shift[1]) for x, y in (a, b, c, d))
        try:
            qa = analyze_quadrilateral(pts)
        except InvalidInitialShape:
            continue
        if qa.trapezoid or qa.labels[:2] != (0, 1) or abs(qa.alpha - math.pi / 4) > tol:
            continue
        # the view with a half way down must still be a valid instance, one
        # in which b is the mover
        half = Point(*((p + q) / 2 for p, q in zip(pts[0], qa.target())))
        try:
            mid = analyze_quadrilateral((half,) + pts[1:])
        except InvalidInitialShape:
            continue
        if mid.mover_index != 1:
            continue
        return pts  # type: ignore[return-value]
    raise RuntimeError("no instance found")


def _tf_roles(engine: Engine) -> tuple[int, int]:
    if engine.n != 4:
        raise ValueError(f"TF scripts drive exactly 4 robots, got {engine.n}")
    qa = analyze_quadrilateral(engine.config.positions)
    if qa.trapezoid or abs(qa.alpha - math.pi / 4) > 1e-9:
        raise InvalidInitialShape(f"need an instance with alpha = pi/4, got alpha = {qa.alpha}")
    ia, ib = qa.labels[:2]
    return ia, ib


class TfAsync(ScriptedAdversary):
    """a starts its move; while it is in flight b Looks and sees a half way,
    which tilts ab below pi/4 and makes b think it is the mover."""

    name = "tf-async"
    target = SchedulerClass.ASYNCH

    def __init__(self, seed: int = 0, *, fraction: float = 0.5, **kw) -> None:
        super().__init__(seed, **kw)
        self.fraction = fraction

    def script(self, engine: Engine) -> Iterator[Step]:
        a, b = _tf_roles(engine)
        yield Step((Op(a, "L", self.frame(engine, a)),))
        yield Step((Op(a, "C"),))
        if _pending_length(engine, a) == 0.0:
            self.finish(TARGET_RESISTED, "a computed a null move")
            return
        yield Step((Op(a, "MB"),))
        yield Step((Op(b, "L", self.frame(engine, b)),), {a: self.fraction})
        yield Step((Op(b, "C"),))
        if _pending_length(engine, b) == 0.0:
            self.finish(TARGET_RESISTED, "b computed a null move from the mid-move view")
            return
        yield Step((Op(b, "MB"),))
        self.finish(FIRED, "b moved after seeing a in flight", engine.time)


class TfFstaLcAtomic(ScriptedAdversary):
    """Only a is activated until it commits a move; with a held mid-move, b
    is activated up to ``state_bound`` times on that view."""

    name = "tf-fsta-lc"
    target = SchedulerClass.LC_ATOMIC

    def __init__(self, seed: int = 0, state_bound: int = 4, *, fraction: float = 0.5, **kw) -> None:
        super().__init__(seed, **kw)
        self.state_bound = state_bound
        self.fraction = fraction
        self.b_colors: list[Light] = []

    def script(self, engine: Engine) -> Iterator[Step]:
        a, b = _tf_roles(engine)
        for _ in range(self.state_bound):
            yield Step(tuple(cycle_ops(a, ("L", "C"), self.frame(engine, a))))
            if _pending_length(engine, a) > 0.0:
                break
            yield Step((Op(a, "MB"), Op(a, "ME")))
        else:
            self.finish(TARGET_RESISTED, f"a never moved in {self.state_bound} activations")
            return
        yield Step((Op(a, "MB"),))
        for k in range(1, self.state_bound + 1):
            self.b_colors.append(engine.config.lights[b])
            yield Step(tuple(cycle_ops(b, FULL, self.frame(engine, b))), {a: self.fraction})
            last = [e for e in engine.builder.events if e.robot == b and e.kind == "MB"][-1]
            if last.dest != last.pos:
                self.activations = k
                self.finish(FIRED, f"b moved on activation {k}", engine.time)
                return
        self.finish(TARGET_RESISTED, f"b stayed for {self.state_bound} activations; colors {self.b_colors}")


class GcnclFcomSsynch(ScriptedAdversary):
    """While neither robot shows a color that makes the other move, both
    are activated.  Then only a is activated, always seeing b at local
    distance 1, so every move keeps the same fraction c of the gap."""

    name = "gcncl-fcom-s"
    target = SchedulerClass.SSYNCH
    facing = True

    def script(self, engine: Engine) -> Iterator[Step]:
        _two(engine)
        alg = engine.algorithm
        if alg.model is not ModelClass.FCOM:
            raise ValueError(f"{self.name} targets FCOM algorithms, got {alg.model.value}")

        def attractive(c: Light) -> bool:
            return probe(alg, c, c)[0] != (0.0, 0.0)

        seen = set()
        while True:
            lights = engine.config.lights
            if attractive(lights[1]):
                a = 0
                break
            if attractive(lights[0]):
                a = 1
                break
            if lights in seen:
                self.finish(NEVER_ATTRACTIVE, "the color pair cycles without an attractive color")
                return
            seen.add(lights)
            yield Step(tuple(cycle_ops(0, FULL, self._face(engine, 0)) + cycle_ops(1, FULL, self._face(engine, 1))))
        b = 1 - a
        self.a = a
        d0 = dist(*engine.config.positions)
        dest, _ = probe(alg, engine.config.lights[b], engine.config.lights[b])
        self.c = dist(dest, Point(1.0, 0.0))
        if self.c == 0.0 or self.c > 1.0:
            yield Step(tuple(cycle_ops(a, FULL, self._face(engine, a))))
            self.finish(FIRED, f"a single move changes the gap by factor {self.c}", engine.time)
            return
        self.pumps = 0
        for _ in range(self.cap):
            if dist(*engine.config.positions) < d0 / 2:
                break
            yield Step(tuple(cycle_ops(a, FULL, self._face(engine, a))))
            self.pumps += 1
        else:
            self.finish(TARGET_RESISTED, f"gap stayed above {d0 / 2}")
            return
        self.finish(FIRED, f"{self.pumps} activations of a at c = {self.c}", engine.time)


_SCRIPTS: dict[str, Callable[..., ScriptedAdversary]] = {
    "mlcv-oblot-m": MlcvOblotMAtomic,
    "mlcv-fcom-m": MlcvFcomMAtomic,
    "mlcv-fsta-m": MlcvFstaMAtomic,
    "tf-async": TfAsync,
    "tf-fsta-lc": TfFstaLcAtomic,
    "gcncl-fcom-s": GcnclFcomSsynch,
}


def mlcv_oblot_mAtomic(seed: int = 0, **options) -> MlcvOblotMAtomic:
    return MlcvOblotMAtomic(seed, **options)


def mlcv_fcom_mAtomic(seed: int = 0, **options) -> MlcvFcomMAtomic:
    return MlcvFcomMAtomic(seed, **options)


def mlcv_fsta_mAtomic(seed: int = 0, color_bound: int = 8, **options) -> MlcvFstaMAtomic:
    return MlcvFstaMAtomic(seed, color_bound, **options)


def tf_async(seed: int = 0, **options) -> TfAsync:
    return TfAsync(seed, **options)


def tf_fsta_lcAtomic(seed: int = 0, state_bound: int = 4, **options) -> TfFstaLcAtomic:
    return TfFstaLcAtomic(seed, state_bound, **options)


def gcncl_fcom_ssynch(seed: int = 0, **options) -> GcnclFcomSsynch:
    return GcnclFcomSsynch(seed, **options)


def scripted_adversary(name: str, seed: int = 0, **options) -> ScriptedAdversary:
    try:
        factory = _SCRIPTS[name]
    except KeyError:
        raise UnknownScript(f"unknown scripted adversary {name!r}") from None
    return factory(seed, **options)


def scripted_names() -> list[str]:
    return sorted(_SCRIPTS)
