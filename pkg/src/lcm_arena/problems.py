"""Monitors for the temporal geometric problems: convergence without
crossing (MLCv), trapezoid formation (TF), guaranteed convergence without
collision (GCNCL) and rendezvous (RDV)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

from .geometry import REL_TOL, Point, add, circular_order, dist, dist_to_segment, dot, norm, orient, scale, sub
from .trace import Trace, null_move

SATISFIED = "Satisfied"
VIOLATED = "Violated"
UNDETERMINED = "Undetermined"


class WrongArity(ValueError):
    pass


class InvalidInitialShape(ValueError):
    pass


class NotConvex(InvalidInitialShape):
    pass


class NoUniqueLongestSide(InvalidInitialShape):
    pass


@dataclass(frozen=True)
class MonitorVerdict:
    status: str
    time: int | None = None
    clause: str | None = None
    witness: str = ""

    @property
    def violated(self) -> bool:
        return self.status == VIOLATED

    def to_json(self) -> dict:
        out: dict = {"status": self.status}
        if self.time is not None:
            out["time"] = self.time
        if self.clause is not None:
            out["clause"] = self.clause
        out["witness"] = self.witness
        return out


def _violated(t: int, clause: str, witness: str) -> MonitorVerdict:
    return MonitorVerdict(VIOLATED, t, clause, witness)


def samples(trace: Trace) -> Iterator[tuple[int, tuple[Point, ...]]]:
    """Robot positions in time order: after every relevant time, plus one
    sample per Look that caught robots mid-move (at the points seen).  A
    robot seen mid-move stays at the last point seen until its MoveEnd."""
    configs = trace.configs()
    yield 0, configs[0][1].positions
    shown: dict[int, Point] = {}
    prev = configs[0][1].positions
    for (t, config), (_, batch) in zip(configs[1:], trace.by_time()):
        seen = next((e.seen for e in batch if e.kind == "L" and e.seen), ())
        if seen:
            shown.update(seen)
            yield t, _overlay(prev, shown)
        for e in batch:
            if e.kind == "ME":
                shown.pop(e.robot, None)
        prev = config.positions
        yield t, _overlay(prev, shown)


def _overlay(positions: tuple[Point, ...], shown: dict[int, Point]) -> tuple[Point, ...]:
    if not shown:
        return positions
    out = list(positions)
    for r, p in shown.items():
        out[r] = p
    return tuple(out)


def halted(trace: Trace, robot: int, cycles: int = 2) -> bool:
    """The robot's last ``cycles`` completed cycles were all null moves."""
    done = [c for c in trace.cycles()[robot] if null_move(c) is not None]
    return len(done) >= cycles and all(null_move(c) for c in done[-cycles:])


def _pair(trace: Trace) -> tuple[Point, Point, float]:
    if trace.n != 2:
        raise WrongArity(f"monitor needs exactly 2 robots, trace has {trace.n}")
    r0, q0 = trace.header.init_positions
    return r0, q0, dist(r0, q0)


def monitor_mlcv(trace: Trace, eps: float | None = None, require_terminal: bool = False) -> MonitorVerdict:
    r0, q0, d0 = _pair(trace)
    eps = REL_TOL * d0 if eps is None else eps
    seg_tol = REL_TOL * d0
    tol = 1e-12 * d0
    prev_d = d0
    d = d0
    for t, (r, q) in samples(trace):
        for name, p in (("r", r), ("q", q)):
            off = dist_to_segment(p, r0, q0)
            if off > seg_tol:
                return _violated(t, "segment", f"{name}={tuple(p)} is {off:.3g} off the initial segment")
        if dist(r0, r) > dist(r0, q) + tol:
            return _violated(t, "crossing", f"dis(r0,r)={dist(r0, r):.6g} > dis(r0,q)={dist(r0, q):.6g}")
        if dist(q0, q) > dist(q0, r) + tol:
            return _violated(t, "crossing", f"dis(q0,q)={dist(q0, q):.6g} > dis(q0,r)={dist(q0, r):.6g}")
        d = dist(r, q)
        if d > prev_d + tol:
            return _violated(t, "monotone", f"distance rose from {prev_d:.6g} to {d:.6g}")
        prev_d = d
    if d <= eps and (not require_terminal or all(halted(trace, i) for i in range(2))):
        return MonitorVerdict(SATISFIED, witness=f"final distance {d:.3g} <= eps {eps:.3g}")
    return MonitorVerdict(UNDETERMINED, witness=f"final distance {d:.6g} > eps {eps:.3g}")


def monitor_gcncl(trace: Trace) -> MonitorVerdict:
    r0, q0, d0 = _pair(trace)
    seg_tol = REL_TOL * d0
    tol = 1e-12 * d0
    floor = d0 / 2 * (1 - REL_TOL)
    prev_d = d = d0
    for t, (r, q) in samples(trace):
        for name, p in (("r", r), ("q", q)):
            off = dist_to_segment(p, r0, q0)
            if off > seg_tol:
                return _violated(t, "segment", f"{name}={tuple(p)} is {off:.3g} off the initial segment")
        d = dist(r, q)
        if d > prev_d + tol:
            return _violated(t, "monotone", f"distance rose from {prev_d:.6g} to {d:.6g}")
        if d < floor:
            return _violated(t, "lower-bound", f"distance {d:.6g} < d0/2 = {d0 / 2:.6g}")
        prev_d = d
    if all(halted(trace, i) for i in range(2)):
        if d < d0 - tol:
            return MonitorVerdict(SATISFIED, witness=f"both halted at distance {d:.6g} in [d0/2, d0)")
        return MonitorVerdict(UNDETERMINED, witness="both halted without approaching")
    return MonitorVerdict(UNDETERMINED, witness=f"robots not halted; distance {d:.6g}")


def monitor_rdv(trace: Trace, eps: float | None = None) -> MonitorVerdict:
    _, _, d0 = _pair(trace)
    eps = REL_TOL * d0 if eps is None else eps
    r, q = trace.configs()[-1][1].positions
    d = dist(r, q)
    if d <= eps and all(halted(trace, i) for i in range(2)):
        return MonitorVerdict(SATISFIED, witness=f"both halted {d:.3g} apart")
    return MonitorVerdict(UNDETERMINED, witness=f"distance {d:.6g}, halted={[halted(trace, i) for i in range(2)]}")


# -- trapezoid formation -----------------------------------------------------


@dataclass(frozen=True)
class QuadrilateralAnalysis:
    """Labelled trapezoid-formation instance.

    ``labels`` maps A, B, C, D to input indices; CD is the unique longest
    side, A is the vertex farther from line CD and D its neighbour on CD.
    ``alpha`` is the angle between lines AB and CD (in [0, pi/2]) and decides
    who moves: A when alpha >= pi/4, else B.  ``vertex_angle`` is
    min(angle BAA', angle ABB'), which always equals pi/2 - alpha.
    """

    points: tuple[Point, ...]
    labels: tuple[int, int, int, int]
    cd_length: float
    a_foot: Point
    b_foot: Point
    height_a: float
    height_b: float
    alpha: float
    vertex_angle: float
    trapezoid: bool
    tol: float = REL_TOL

    def point(self, label: str) -> Point:
        return self.points[self.labels["ABCD".index(label)]]

    @property
    def mover(self) -> str | None:
        if self.trapezoid:
            return None
        return "A" if self.alpha >= math.pi / 4 - self.tol else "B"

    @property
    def mover_index(self) -> int | None:
        m = self.mover
        return None if m is None else self.labels["ABCD".index(m)]

    def target(self) -> Point | None:
        """Where the mover must go: on its perpendicular to CD, at the other
        vertex's height."""
        m = self.mover
        if m is None:
            return None
        if m == "A":
            foot, height = self.a_foot, self.height_b
            start = self.point("A")
        else:
            foot, height = self.b_foot, self.height_a
            start = self.point("B")
        up = sub(start, foot)
        h = norm(up)
        return add(foot, scale(up, height / h))

    def on_perpendicular(self, label: str, p: Sequence[float]) -> bool:
        c, d = self.point("C"), self.point("D")
        cd = sub(c, d)
        off = abs(dot(sub(p, self.point(label)), cd)) / self.cd_length
        return off <= self.tol * self.cd_length


def _foot(p: Point, c: Point, d: Point) -> Point:
    cd = sub(c, d)
    s = dot(sub(p, d), cd) / dot(cd, cd)
    return add(d, scale(cd, s))


def _angle(u: Sequence[float], v: Sequence[float]) -> float:
    cosv = dot(u, v) / (norm(u) * norm(v))
    return math.acos(max(-1.0, min(1.0, cosv)))


def analyze_quadrilateral(points: Sequence[Sequence[float]], tol: float = REL_TOL) -> QuadrilateralAnalysis:
    pts = tuple(Point(float(p[0]), float(p[1])) for p in points)
    if len(pts) != 4 or len(set(pts)) != 4:
        raise InvalidInitialShape("need 4 distinct points")
    order = [pts.index(p) for p in circular_order(pts).locations]
    span = max(dist(p, q) for p in pts for q in pts)
    signs = set()
    for i in range(4):
        o = orient(pts[order[i]], pts[order[(i + 1) % 4]], pts[order[(i + 2) % 4]])
        if abs(o) <= tol * span * span:
            raise NotConvex("three vertices are collinear")
        signs.add(o > 0)
    if len(signs) != 1:
        raise NotConvex("quadrilateral is not convex")
    sides = sorted(((dist(pts[order[i]], pts[order[(i + 1) % 4]]), i) for i in range(4)), reverse=True)
    if sides[1][0] >= sides[0][0] * (1 - tol):
        raise NoUniqueLongestSide(f"sides {sides[0][0]:.6g} and {sides[1][0]:.6g} tie")
    i = sides[0][1]
    ic, id_ = order[i], order[(i + 1) % 4]
    iu, iv = order[(i + 2) % 4], order[(i + 3) % 4]  # iu is adjacent to id_, iv to ic
    c, d = pts[ic], pts[id_]
    cd_len = dist(c, d)
    hu = abs(orient(d, c, pts[iu])) / cd_len
    hv = abs(orient(d, c, pts[iv])) / cd_len
    trapezoid = abs(hu - hv) <= tol * cd_len
    if trapezoid:
        ia, ib = (iu, iv) if iu < iv else (iv, iu)
    else:
        ia, ib = (iu, iv) if hu > hv else (iv, iu)
    # D is A's neighbour on the long side, C is B's
    if ia == iu:
        labels = (ia, ib, ic, id_)
    else:
        labels = (ia, ib, id_, ic)
    a, b = pts[ia], pts[ib]
    cc, dd = pts[labels[2]], pts[labels[3]]
    a_foot, b_foot = _foot(a, cc, dd), _foot(b, cc, dd)
    ab, cd = sub(b, a), sub(cc, dd)
    line_angle = _angle(ab, cd)
    line_angle = min(line_angle, math.pi - line_angle)
    if trapezoid:
        vertex = math.pi / 2
    else:
        vertex = min(_angle(sub(b, a), sub(a_foot, a)), _angle(sub(a, b), sub(b_foot, b)))
    return QuadrilateralAnalysis(
        points=pts,
        labels=labels,
        cd_length=cd_len,
        a_foot=a_foot,
        b_foot=b_foot,
        height_a=dist(a, a_foot),
        height_b=dist(b, b_foot),
        alpha=line_angle,
        vertex_angle=vertex,
        trapezoid=trapezoid,
        tol=tol,
    )


def is_trapezoid(points: Sequence[Sequence[float]], tol: float = REL_TOL) -> bool:
    """Some pair of opposite sides of the quadrilateral (taken in circular
    order) is parallel: the endpoints of one side sit at heights over the
    other's line differing by at most ``tol`` times the longer side."""
    ring = circular_order(points).locations
    if len(ring) != 4:
        return False
    for i in (0, 1):
        p0, p1, q0, q1 = ring[i], ring[i + 1], ring[i + 2], ring[(i + 3) % 4]
        u, v = sub(p1, p0), sub(q1, q0)
        lu, lv = norm(u), norm(v)
        if abs(u[0] * v[1] - u[1] * v[0]) / max(lu, lv) <= tol * max(lu, lv):
            return True
    return False


def is_trapezoid_with(analysis: QuadrilateralAnalysis, positions: Sequence[Point]) -> bool:
    """AB parallel to the original CD within tolerance, at ``positions``."""
    ia, ib, ic, id_ = analysis.labels
    c, d = analysis.point("C"), analysis.point("D")
    ha = orient(d, c, positions[ia]) / analysis.cd_length
    hb = orient(d, c, positions[ib]) / analysis.cd_length
    return abs(ha - hb) <= analysis.tol * analysis.cd_length


def monitor_tf(trace: Trace, tol: float = REL_TOL) -> MonitorVerdict:
    if trace.n != 4:
        raise WrongArity(f"TF needs 4 robots, trace has {trace.n}")
    qa = analyze_quadrilateral(trace.header.init_positions, tol)
    init = trace.header.init_positions
    mover = qa.mover_index
    mover_label = qa.mover
    if not qa.trapezoid and is_trapezoid(init, tol):
        # parallel, but not along the longest side: still a trapezoid, TF1
        return _monitor_tf1(trace)
    clause = "TF1" if qa.trapezoid else ("TF2.1" if mover_label == "A" else "TF2.2")
    for e in trace.events:
        if e.kind != "MB" or e.dest == e.pos:
            continue
        r = e.robot
        if r != mover:
            return _violated(e.time, clause, f"robot {r} left {tuple(init[r])} for {tuple(e.dest)}")
        if not qa.on_perpendicular(mover_label, e.dest):
            return _violated(e.time, clause, f"mover {r} heads to {tuple(e.dest)} off its perpendicular")
    final = trace.configs()[-1][1].positions
    if qa.trapezoid:
        return MonitorVerdict(SATISFIED, witness="initial trapezoid left unchanged")
    if halted(trace, mover) and is_trapezoid_with(qa, final):
        return MonitorVerdict(SATISFIED, witness=f"mover {mover_label}=r{mover} halted with ab parallel to CD")
    return MonitorVerdict(UNDETERMINED, witness=f"mover {mover_label}=r{mover} not settled into a trapezoid")


def _monitor_tf1(trace: Trace) -> MonitorVerdict:
    for e in trace.events:
        if e.kind == "MB" and e.dest != e.pos:
            return _violated(e.time, "TF1", f"robot {e.robot} left {tuple(e.pos)} for {tuple(e.dest)}")
    return MonitorVerdict(SATISFIED, witness="initial trapezoid left unchanged")
