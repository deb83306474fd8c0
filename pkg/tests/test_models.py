import pytest

from lcm_arena.geometry import IDENTITY, LocalFrame, Point
from lcm_arena.models import (
    Configuration,
    Light,
    LightError,
    LightSpec,
    ModelClass,
    begin_look,
    build_snapshot,
    commit_compute,
    promote_pending,
)

C1, C2 = Light(c="c1"), Light(c="c2")


def pair(lights=(C2, C1)):
    return Configuration.initial([(0, 0), (1, 0)], list(lights))


def test_light_is_hashable_mapping():
    assert Light(a=1, b="x") == Light({"b": "x", "a": 1})
    assert hash(Light(a=1)) == hash(Light({"a": 1}))
    assert Light(a=1).updated({"a": 2})["a"] == 2
    assert Light(a=1).updated(None) == Light(a=1)


def test_light_spec_checks_values():
    spec = LightSpec.of(c=("A", "B"))
    assert spec.initial() == Light(c="A")
    assert spec.state_space() == 2
    spec.check(Light(c="B"))
    with pytest.raises(LightError):
        spec.check(Light(c="Z"))
    with pytest.raises(LightError):
        spec.check(Light(d="A"))


@pytest.mark.parametrize(
    "model, other, own",
    [
        (ModelClass.OBLOT, None, None),
        (ModelClass.FCOM, frozenset({C1}), None),
        (ModelClass.FSTA, None, C2),
        (ModelClass.LUMI, frozenset({C1}), C2),
    ],
)
def test_snapshot_model_filter(model, other, own):
    snap = build_snapshot(pair(), 0, IDENTITY, model)
    assert len(snap.others) == 1
    assert snap.others[0].pos == (1, 0)
    assert snap.others[0].lights == other
    assert snap.own_light == own


def test_snapshot_collapses_colocated_robots():
    cfg = Configuration.initial([(0, 0), (2, 0), (2, 0)], [C1, C1, C2])
    snap = build_snapshot(cfg, 0, IDENTITY, ModelClass.FCOM)
    assert snap.others == ((Point(2, 0), frozenset({C1, C2})),)


def test_snapshot_needs_observer_frame():
    with pytest.raises(ValueError):
        build_snapshot(pair(), 0, LocalFrame(Point(1, 1)), ModelClass.OBLOT)


def test_null_commit_changes_only_bookkeeping():
    cfg = begin_look(pair(), 0)
    after = promote_pending(commit_compute(cfg, 0, cfg.positions[0], cfg.lights[0]))
    assert after.positions == cfg.positions and after.lights == cfg.lights


def test_color_visible_one_time_later():
    cfg = commit_compute(begin_look(pair(), 0), 0, Point(0, 0), C1)
    # same time: the old color is still what a Look sees
    assert build_snapshot(cfg, 1, LocalFrame(Point(1, 0)), ModelClass.FCOM).others[0].lights == {C2}
    nxt = promote_pending(cfg)
    assert build_snapshot(nxt, 1, LocalFrame(Point(1, 0)), ModelClass.FCOM).others[0].lights == {C1}


def test_simultaneous_commits_both_exposed_next_time():
    cfg = begin_look(begin_look(pair(), 0), 1)
    cfg = commit_compute(cfg, 0, Point(0, 0), C1)
    cfg = commit_compute(cfg, 1, Point(1, 0), C2)
    assert cfg.lights == (C2, C1)
    assert promote_pending(cfg).lights == (C1, C2)


def test_configuration_needs_two_robots():
    with pytest.raises(ValueError):
        Configuration.initial([(0, 0)], [C1])
