"""Planar geometry for the simulator: points, local frames and ring ordering.

Points are plain ``(x, y)`` float tuples so that hot loops in the engine stay
cheap.  ``LocalFrame`` models one robot's private coordinate system at one
Look: it is centred on the robot, rotated, scaled to the robot's unit of
distance and possibly mirrored when chirality is not shared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

REL_TOL = 1e-9


class Point(NamedTuple):
    x: float
    y: float


ORIGIN = Point(0.0, 0.0)


class DegenerateRing(ValueError):
    """Fewer than two distinct locations to arrange in a ring."""


def point(x: float, y: float) -> Point:
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError(f"non-finite coordinates ({x!r}, {y!r})")
    return Point(float(x), float(y))


def sub(p: Sequence[float], q: Sequence[float]) -> Point:
    return Point(p[0] - q[0], p[1] - q[1])


def add(p: Sequence[float], q: Sequence[float]) -> Point:
    return Point(p[0] + q[0], p[1] + q[1])


def scale(p: Sequence[float], k: float) -> Point:
    return Point(p[0] * k, p[1] * k)


def dot(p: Sequence[float], q: Sequence[float]) -> float:
    return p[0] * q[0] + p[1] * q[1]


def cross(p: Sequence[float], q: Sequence[float]) -> float:
    return p[0] * q[1] - p[1] * q[0]


def norm(p: Sequence[float]) -> float:
    return math.hypot(p[0], p[1])


def dist(p: Sequence[float], q: Sequence[float]) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def lerp(p: Sequence[float], q: Sequence[float], s: float) -> Point:
    return Point(p[0] + (q[0] - p[0]) * s, p[1] + (q[1] - p[1]) * s)


def orient(a: Sequence[float], b: Sequence[float], c: Sequence[float]) -> float:
    """Twice the signed area of triangle abc (positive when counterclockwise)."""
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def dist_to_segment(p: Sequence[float], a: Sequence[float], b: Sequence[float]) -> float:
    ab = sub(b, a)
    ll = dot(ab, ab)
    if ll == 0.0:
        return dist(p, a)
    s = min(1.0, max(0.0, dot(sub(p, a), ab) / ll))
    return dist(p, lerp(a, b, s))


def dist_to_line(p: Sequence[float], a: Sequence[float], b: Sequence[float]) -> float:
    """Unsigned distance from ``p`` to the infinite line through ``a`` and ``b``."""
    return abs(orient(a, b, p)) / dist(a, b)


def centroid(points: Iterable[Sequence[float]]) -> Point:
    pts = list(points)
    return Point(sum(p[0] for p in pts) / len(pts), sum(p[1] for p in pts) / len(pts))


@dataclass(frozen=True)
class LocalFrame:
    """A robot's coordinate system: ``origin`` and ``rotation`` are global,
    ``unit`` is the length of the robot's unit in global units and
    ``handedness`` is -1 for a mirrored frame."""

    origin: Point = ORIGIN
    rotation: float = 0.0
    unit: float = 1.0
    handedness: int = 1

    def __post_init__(self) -> None:
        if not self.unit > 0 or not math.isfinite(self.unit):
            raise ValueError(f"frame unit must be positive, got {self.unit!r}")
        if self.handedness not in (1, -1):
            raise ValueError(f"handedness must be +1 or -1, got {self.handedness!r}")

    def as_list(self) -> list[float]:
        return [self.origin[0], self.origin[1], self.rotation, self.unit, self.handedness]

    @classmethod
    def from_list(cls, values: Sequence[float]) -> "LocalFrame":
        ox, oy, rot, unit, hand = values
        return cls(Point(float(ox), float(oy)), float(rot), float(unit), int(hand))


IDENTITY = LocalFrame()


def to_local(frame: LocalFrame, p: Sequence[float]) -> Point:
    return to_local_all(frame, (p,))[0]


def to_local_all(frame: LocalFrame, points: Iterable[Sequence[float]]) -> list[Point]:
    """``to_local`` over many points, sharing the trigonometry."""
    ox, oy = frame.origin
    c = math.cos(frame.rotation) / frame.unit
    s = math.sin(frame.rotation) / frame.unit
    h = -1.0 if frame.handedness < 0 else 1.0
    out = []
    for p in points:
        dx = p[0] - ox
        dy = p[1] - oy
        out.append(Point(c * dx + s * dy, h * (c * dy - s * dx)))
    return out


def to_global(frame: LocalFrame, p: Sequence[float]) -> Point:
    x = p[0] * frame.unit
    y = p[1] * frame.unit
    if frame.handedness < 0:
        y = -y
    c = math.cos(frame.rotation)
    s = math.sin(frame.rotation)
    return Point(frame.origin[0] + c * x - s * y, frame.origin[1] + s * x + c * y)


@dataclass(frozen=True)
class Ring:
    """Cyclic arrangement of distinct locations; ``suc(i) = i+1 mod m``."""

    locations: tuple[Point, ...]

    def __post_init__(self) -> None:
        if len(set(self.locations)) != len(self.locations):
            raise ValueError("ring locations must be distinct")
        if len(self.locations) < 2:
            raise DegenerateRing("a ring needs at least two locations")

    def __len__(self) -> int:
        return len(self.locations)

    def index(self, p: Sequence[float]) -> int:
        return self.locations.index(Point(p[0], p[1]))

    def suc(self, i: int) -> int:
        return (i + 1) % len(self.locations)

    def pred(self, i: int) -> int:
        return (i - 1) % len(self.locations)

    def suc_of(self, p: Sequence[float]) -> Point:
        return self.locations[self.suc(self.index(p))]

    def pred_of(self, p: Sequence[float]) -> Point:
        return self.locations[self.pred(self.index(p))]


def circular_order(locations: Iterable[Sequence[float]], handedness: int = 1) -> Ring:
    """Order locations by angle around their centroid.

    Counterclockwise for ``handedness=+1``; equal angles are broken by
    increasing radius.  A location sitting on the centroid has no angle; it is
    placed right after the location farthest from the centroid, which keeps
    the cyclic sequence invariant under rotation, translation and scaling.
    """
    pts = list(dict.fromkeys(p if type(p) is Point else Point(float(p[0]), float(p[1])) for p in locations))
    if len(pts) < 2:
        raise DegenerateRing(f"need at least 2 distinct locations, got {len(pts)}")
    m = len(pts)
    cx = sum(p[0] for p in pts) / m
    cy = sum(p[1] for p in pts) / m
    hypot, atan2 = math.hypot, math.atan2
    polar = [(atan2(p[1] - cy, p[0] - cx) * handedness, hypot(p[0] - cx, p[1] - cy), p) for p in pts]
    floor = REL_TOL * max(r for _, r, _ in polar)
    center = None
    keyed = []
    for entry in polar:
        if entry[1] <= floor:
            center = entry[2]
        else:
            keyed.append(entry)
    keyed.sort()
    ordered = [p for _, _, p in keyed]
    if center is not None:
        far = max(range(len(keyed)), key=lambda i: keyed[i][1])
        ordered.insert(far + 1, center)
    return Ring(tuple(ordered))


def signed_area(points: Sequence[Sequence[float]]) -> float:
    total = 0.0
    for i, p in enumerate(points):
        q = points[(i + 1) % len(points)]
        total += p[0] * q[1] - q[0] * p[1]
    return total / 2.0
