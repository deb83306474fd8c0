import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lcm_arena.algorithms import COLOR_CYCLER, HALF_MOVE, NEVER_MOVE
from lcm_arena.engine import (
    AdversaryConstraintViolation,
    Op,
    Scenario,
    Step,
    cycle_ops,
    run,
    visibility_violations,
)
from lcm_arena.geometry import Point
from lcm_arena.models import Light
from lcm_arena.schedule import SchedulerClass as S
from lcm_arena.schedule import validate_schedule
from lcm_arena.strategies import IncompatibleClass, builtin_adversaries
from lcm_arena.trace import CycleEvent, Trace, TraceHeader, append_event

PAIR = Scenario.of([(0, 0), (1, 0)])
TRIPLE = Scenario.of([(0, 0), (1, 0), (0, 1)])


class Scripted:
    name = "scripted"

    def __init__(self, steps):
        self.steps = list(steps)

    def propose(self, engine):
        return self.steps.pop(0) if self.steps else None


def test_fsynch_rounds_activate_everyone():
    tr = run(PAIR, HALF_MOVE, S.FSYNCH, builtin_adversaries("fsynch", frames="identity"), 3)
    for t, batch in tr.by_time():
        assert sorted((e.robot, e.kind) for e in batch) == sorted(
            (r, k) for r in range(2) for k in ("L", "C", "MB", "ME")
        )
    assert tr.last_time == 3
    # both meet in the middle after the first round
    assert tr.configs()[-1][1].positions == ((0.5, 0.0), (0.5, 0.0))


def test_m_atomic_rejects_look_during_move():
    steps = [Step(tuple(cycle_ops(1, ("L", "C", "MB")))), Step((Op(0, "L"),))]
    with pytest.raises(AdversaryConstraintViolation):
        run(PAIR, HALF_MOVE, S.M_ATOMIC, Scripted(steps), 10)


def test_same_script_is_fine_under_asynch():
    steps = [
        Step(tuple(cycle_ops(1, ("L", "C", "MB")))),
        Step((Op(0, "L"),)),
        Step((Op(1, "ME"),)),
        Step(tuple(cycle_ops(0, ("C", "MB", "ME")))),
    ]
    tr = run(PAIR, HALF_MOVE, S.ASYNCH, Scripted(steps), 10)
    assert [(e.robot, e.kind) for e in tr.events][3:5] == [(0, "L"), (1, "ME")]


def test_round_robin_one_robot_per_round():
    tr = run(TRIPLE, NEVER_MOVE, S.ROUNDROBIN, builtin_adversaries("round-robin"), 7)
    looks = [e.robot for e in tr.events if e.kind == "L"]
    assert looks == [0, 1, 2, 0, 1, 2, 0]


def _cycler_pair(first_look_of_1: int):
    early = [Op(0, "L"), Op(0, "C")]
    if first_look_of_1 == 1:
        early.append(Op(1, "L"))
    steps = [Step(tuple(early))]
    if first_look_of_1 == 2:
        steps.append(Step((Op(1, "L"),)))
    steps.append(Step(tuple(cycle_ops(1, ("C", "MB", "ME")) + cycle_ops(0, ("MB", "ME")))))
    tr = run(PAIR, COLOR_CYCLER, S.ASYNCH, Scripted(steps), 10)
    assert not visibility_violations(tr)
    return [e.light for e in tr.events if e.kind == "C"]


def test_color_committed_at_t_visible_from_t_plus_1():
    c0, c1, c2 = COLOR_CYCLER.colors()
    # a Look at the commit time still sees the old color
    assert _cycler_pair(1) == [c1, c1]
    # a Look one time later sees the new one
    assert _cycler_pair(2) == [c1, c2]


def test_fsynch_trace_valid_under_every_class():
    tr = run(TRIPLE, NEVER_MOVE, S.FSYNCH, builtin_adversaries("fsynch", 2), 6)
    for cls in S:
        if cls is S.ROUNDROBIN:
            continue
        assert validate_schedule(tr, cls) == [], cls


def _hand_trace():
    P = Point
    h = TraceHeader(2, "OBLOT", "ASYNCH", (P(0, 0), P(1, 0)), (Light(), Light()))
    tr = Trace(h, ())
    for e in (
        CycleEvent(2, 1, "L", P(1, 0)),
        CycleEvent(2, 1, "C", P(1, 0), light=Light(), dest=P(0.5, 0)),
        CycleEvent(3, 1, "MB", P(1, 0)),
        CycleEvent(4, 0, "L", P(0, 0)),
        CycleEvent(4, 0, "C", P(0, 0), light=Light(), dest=P(0, 0)),
        CycleEvent(4, 0, "MB", P(0, 0)),
        CycleEvent(4, 0, "ME", P(0, 0)),
        CycleEvent(6, 1, "ME", P(0.5, 0)),
    ):
        tr = append_event(tr, e)
    return tr


def test_look_during_move_flags():
    tr = _hand_trace()
    kinds = lambda cls: {v.constraint for v in validate_schedule(tr, cls)}  # noqa: E731
    assert "look-during-move" in kinds(S.M_ATOMIC)
    assert "look-during-CM" in kinds(S.CM_ATOMIC)
    assert validate_schedule(tr, S.SSYNCH)
    assert validate_schedule(tr, S.ASYNCH) == []
    assert "look-during-LC" not in kinds(S.LC_ATOMIC)


def test_ssynch_trace_valid_under_lc_and_cm():
    tr = run(TRIPLE, NEVER_MOVE, S.SSYNCH, builtin_adversaries("uniform-random-fair", 5), 30)
    assert validate_schedule(tr, S.LC_ATOMIC) == []
    assert validate_schedule(tr, S.CM_ATOMIC) == []


def test_random_fair_deterministic():
    a = run(TRIPLE, NEVER_MOVE, S.ASYNCH, builtin_adversaries("uniform-random-fair", 1), 50, seed=1)
    b = run(TRIPLE, NEVER_MOVE, S.ASYNCH, builtin_adversaries("uniform-random-fair", 1), 50, seed=1)
    assert a == b


def test_fsynch_adversary_allowed_in_asynch():
    tr = run(PAIR, HALF_MOVE, S.ASYNCH, builtin_adversaries("fsynch"), 3)
    assert validate_schedule(tr, S.FSYNCH) == []


def test_max_delay_refuses_m_atomic():
    with pytest.raises(IncompatibleClass):
        run(PAIR, HALF_MOVE, S.M_ATOMIC, builtin_adversaries("max-delay"), 5)


def test_transit_views_only_where_allowed():
    steps = [Step(tuple(cycle_ops(1, ("L", "C", "MB")))), Step((Op(0, "L"),), {1: 0.5})]
    with pytest.raises(AdversaryConstraintViolation):
        run(PAIR, HALF_MOVE, S.CM_ATOMIC, Scripted(steps), 10)
    tr = run(PAIR, HALF_MOVE, S.ASYNCH, Scripted(steps + [Step((Op(1, "ME"),)), Step(tuple(cycle_ops(0, "C MB ME".split())))]), 10)
    look = [e for e in tr.events if e.kind == "L" and e.robot == 0][0]
    assert look.seen == ((1, Point(0.75, 0.0)),)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([c for c in S if c is not S.ROUNDROBIN]))
def test_engine_output_valid_and_nested(seed, cls):
    tr = run(TRIPLE, COLOR_CYCLER, cls, builtin_adversaries("uniform-random-fair", seed), 25, seed=seed)
    for outer in cls.enclosing():
        assert validate_schedule(tr, outer) == [], (cls, outer)
    assert visibility_violations(tr) == []
