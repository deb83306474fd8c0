import math

import pytest

from helpers import moves_trace, settle
from lcm_arena.geometry import Point
from lcm_arena.models import Light
from lcm_arena.trace import CycleEvent, TraceBuilder, TraceHeader
from lcm_arena.problems import (
    SATISFIED,
    UNDETERMINED,
    VIOLATED,
    NoUniqueLongestSide,
    NotConvex,
    WrongArity,
    analyze_quadrilateral,
    is_trapezoid,
    monitor_gcncl,
    monitor_mlcv,
    monitor_rdv,
    monitor_tf,
    samples,
)

PAIR = [(0, 0), (1, 0)]
TF_EXAMPLE = [(3, 4), (7, 2), (10, 0), (0, 0)]
STEEP = [(7, 7), (8, 5), (10, 0), (0, 0)]


def test_mlcv_meeting_in_the_middle():
    tr = moves_trace(PAIR, [(1, 0, (0.5, 0)), (1, 1, (0.5, 0))])
    assert monitor_mlcv(tr, eps=1e-9).status == SATISFIED


def test_mlcv_crossing_clause():
    tr = moves_trace(PAIR, [(1, 1, (0.25, 0)), (2, 0, (0.5, 0))])
    v = monitor_mlcv(tr)
    assert (v.status, v.time, v.clause) == (VIOLATED, 2, "crossing")


def test_mlcv_monotone_clause():
    tr = moves_trace(PAIR, [(1, 0, (0.4, 0)), (2, 0, (0.3, 0))])
    v = monitor_mlcv(tr)
    assert (v.status, v.time, v.clause) == (VIOLATED, 2, "monotone")


def test_mlcv_segment_clause():
    tr = moves_trace(PAIR, [(1, 0, (0.2, 0.1))])
    assert monitor_mlcv(tr).clause == "segment"


def test_mlcv_not_yet_close_is_undetermined():
    tr = moves_trace(PAIR, [(1, 0, (0.5, 0))])
    assert monitor_mlcv(tr, eps=1e-9).status == UNDETERMINED


def test_gcncl_quarter_points_satisfied():
    tr = moves_trace(PAIR, [(1, 0, (0.25, 0)), (1, 1, (0.75, 0))] + settle(2, (0, 1)))
    v = monitor_gcncl(tr)
    assert v.status == SATISFIED


def test_gcncl_lower_bound_clause():
    tr = moves_trace(PAIR, [(1, 0, (0.6, 0))])
    v = monitor_gcncl(tr)
    assert (v.status, v.clause) == (VIOLATED, "lower-bound")


def test_gcncl_still_moving_undetermined():
    tr = moves_trace(PAIR, [(1, 0, (0.1, 0)), (2, 0, (0.2, 0))])
    assert monitor_gcncl(tr).status == UNDETERMINED


def test_rdv():
    tr = moves_trace(PAIR, [(1, 0, (0.5, 0)), (1, 1, (0.5, 0))] + settle(2, (0, 1)))
    assert monitor_rdv(tr).status == SATISFIED
    tr = moves_trace(PAIR, [(1, 0, (0.4, 0)), (1, 1, (0.6, 0))])
    assert monitor_rdv(tr).status == UNDETERMINED
    with pytest.raises(WrongArity):
        monitor_rdv(moves_trace([(0, 0), (1, 0), (2, 1)], []))


def test_quadrilateral_example():
    qa = analyze_quadrilateral(TF_EXAMPLE)
    assert qa.cd_length == 10
    assert [qa.labels[i] for i in range(4)] == [0, 1, 2, 3]
    # the angle at A between AB and the perpendicular AA' is acos(2/sqrt(20))
    assert qa.vertex_angle == pytest.approx(math.acos(2 / math.sqrt(20)), abs=1e-12)
    assert qa.vertex_angle == pytest.approx(1.107, abs=1e-3)
    assert qa.alpha == pytest.approx(math.pi / 2 - qa.vertex_angle, abs=1e-12)
    assert not qa.trapezoid
    assert qa.height_a == pytest.approx(4) and qa.height_b == pytest.approx(2)


def test_quadrilateral_mover_and_target():
    # AB is nearer parallel to CD than steep: the line angle is below pi/4,
    # so B rises to A's height
    qa = analyze_quadrilateral(TF_EXAMPLE)
    assert qa.mover == "B"
    assert qa.target() == pytest.approx((7, 4))
    steep = analyze_quadrilateral(STEEP)
    assert steep.alpha == pytest.approx(math.atan(2), abs=1e-12)
    assert steep.mover == "A"
    assert steep.target() == pytest.approx((7, 5))


def test_quadrilateral_trapezoid_and_errors():
    assert analyze_quadrilateral([(3, 2), (7, 2), (10, 0), (0, 0)]).trapezoid
    with pytest.raises(NoUniqueLongestSide):
        analyze_quadrilateral([(0, 0), (1, 0), (1, 1), (0, 1)])
    with pytest.raises(NotConvex):
        analyze_quadrilateral([(0, 0), (10, 0), (5, 1), (5, 4)])


def test_is_trapezoid_any_opposite_pair():
    assert is_trapezoid([(3, 2), (7, 2), (10, 0), (0, 0)])
    # AD parallel to BC, neither being the longest side
    assert is_trapezoid([(0, 0), (10, 0), (9, 3), (1, 5)]) is False
    assert is_trapezoid([(0, 0), (10, 0), (8, 4), (1, 4)])
    assert is_trapezoid([(0, 0), (10, 0), (9, 2), (-1, 3)]) is False
    assert is_trapezoid([(0, 0), (10, 0), (11, 3), (1, 3)])


def test_tf_trapezoid_untouched_satisfied():
    tr = moves_trace([(3, 2), (7, 2), (10, 0), (0, 0)], settle(1, range(4)))
    assert monitor_tf(tr).status == SATISFIED


def test_tf_mover_rising_satisfied():
    tr = moves_trace(TF_EXAMPLE, [(1, 1, (7, 4))] + settle(2, range(4)))
    v = monitor_tf(tr)
    assert v.status == SATISFIED, v


def test_tf_wrong_robot_violates():
    tr = moves_trace(TF_EXAMPLE, [(1, 0, (3, 2))])
    v = monitor_tf(tr)
    assert (v.status, v.clause) == (VIOLATED, "TF2.2")
    v = monitor_tf(moves_trace(STEEP, [(1, 1, (8, 7))]))
    assert (v.status, v.clause) == (VIOLATED, "TF2.1")


def test_tf_off_perpendicular_violates():
    tr = moves_trace(TF_EXAMPLE, [(1, 1, (6.5, 4))])
    assert monitor_tf(tr).status == VIOLATED


def test_tf_needs_four():
    with pytest.raises(WrongArity):
        monitor_tf(moves_trace(PAIR, []))


def test_tf1_general_trapezoid_any_move_violates():
    # AD parallel to BC, longest side CD
    para = [(0, 0), (10, 0), (11.5, 4.5), (1, 3)]
    assert is_trapezoid(para)
    assert monitor_tf(moves_trace(para, settle(1, range(4)))).status == SATISFIED
    v = monitor_tf(moves_trace(para, [(1, 2, (11, 4))]))
    assert (v.status, v.clause) == (VIOLATED, "TF1")


def test_samples_keep_transit_point_until_move_end():
    pts = (Point(0, 0), Point(4, 0))
    b = TraceBuilder(TraceHeader(2, "OBLOT", "ASYNCH", pts, (Light(), Light())))
    b.append(CycleEvent(1, 0, "L", pts[0]))
    b.append(CycleEvent(1, 0, "C", pts[0], light=Light(), dest=Point(2, 0)))
    b.append(CycleEvent(1, 0, "MB", pts[0], dest=Point(2, 0)))
    b.append(CycleEvent(2, 1, "L", pts[1], seen=((0, Point(1, 0)),)))
    b.append(CycleEvent(3, 1, "C", pts[1], light=Light(), dest=pts[1]))
    b.append(CycleEvent(4, 0, "ME", Point(2, 0)))
    got = list(samples(b.build()))
    by_time = {}
    for t, ps in got:
        by_time.setdefault(t, []).append(ps[0])
    assert by_time[2][-1] == Point(1, 0)
    assert by_time[3] == [Point(1, 0)]
    assert by_time[4] == [Point(2, 0)]
