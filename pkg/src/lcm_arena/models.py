"""Robot capability models, lights, configurations and snapshot construction."""

from __future__ import annotations

import enum
import functools
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Any, Iterator, NamedTuple, Sequence

from .geometry import ORIGIN, LocalFrame, Point, to_local_all


class ModelClass(str, enum.Enum):
    OBLOT = "OBLOT"
    FSTA = "FSTA"
    FCOM = "FCOM"
    LUMI = "LUMI"

    @property
    def sees_own_light(self) -> bool:
        return self in (ModelClass.FSTA, ModelClass.LUMI)

    @property
    def sees_other_lights(self) -> bool:
        return self in (ModelClass.FCOM, ModelClass.LUMI)


class Light(Mapping):
    """Immutable, hashable light tuple: named sub-lights with scalar values."""

    __slots__ = ("_items", "_hash", "_map", "_key")

    def __init__(self, values: Mapping[str, Any] | None = None, **kwargs: Any) -> None:
        data = dict(values or {})
        data.update(kwargs)
        self._items = tuple(sorted(data.items()))
        self._map = dict(self._items)
        self._hash = hash(self._items)
        self._key: bytes | None = None

    def __getitem__(self, key: str) -> Any:
        return self._map[key]

    def __iter__(self) -> Iterator[str]:
        return iter(self._map)

    def __contains__(self, key: object) -> bool:
        return key in self._map

    def get(self, key: str, default: Any = None) -> Any:
        return self._map.get(key, default)

    def items(self) -> tuple[tuple[str, Any], ...]:  # type: ignore[override]
        return self._items

    def __len__(self) -> int:
        return len(self._items)

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Light):
            return self._items == other._items
        if isinstance(other, Mapping):
            return self._items == tuple(sorted(other.items()))
        return NotImplemented

    def __repr__(self) -> str:
        return "Light(" + ", ".join(f"{k}={v!r}" for k, v in self._items) + ")"

    def updated(self, changes: Mapping[str, Any] | None) -> "Light":
        if not changes:
            return self
        merged = dict(self._map)
        merged.update(changes)
        return Light(merged)

    def to_json(self) -> dict[str, Any]:
        return dict(self._items)

    def key(self) -> bytes:
        """Process-independent byte encoding, for digests."""
        if self._key is None:
            self._key = repr(self._items).encode()
        return self._key


NO_LIGHT = Light()


class LightError(ValueError):
    pass


@dataclass(frozen=True)
class LightSpec:
    """Declared sub-lights, each with a finite ordered color set; the first
    color of every set is the initial value."""

    colors: tuple[tuple[str, tuple[Any, ...]], ...] = ()

    @functools.cached_property
    def _declared(self) -> dict[str, tuple[Any, ...]]:
        return dict(self.colors)

    @classmethod
    def of(cls, **sets: Sequence[Any]) -> "LightSpec":
        return cls(tuple((name, tuple(values)) for name, values in sets.items()))

    def initial(self) -> Light:
        return Light({name: values[0] for name, values in self.colors})

    def state_space(self) -> int:
        total = 1
        for _, values in self.colors:
            total *= len(values)
        return total

    def check(self, light: Light) -> None:
        declared = self._declared
        if all(light.get(name) in values for name, values in declared.items()) and len(light) == len(declared):
            return
        if set(light) != set(declared):
            raise LightError(f"light fields {sorted(light)} != declared {sorted(declared)}")
        for name, value in light.items():
            if value not in declared[name]:
                raise LightError(f"{name}={value!r} not in {declared[name]!r}")


class SnapshotEntry(NamedTuple):
    pos: Point
    lights: frozenset[Light] | None  # None when the model hides other robots' lights


@dataclass(frozen=True)
class Snapshot:
    observer: int
    others: tuple[SnapshotEntry, ...]
    own_light: Light | None = None
    own_position: Point = ORIGIN

    @property
    def colocated(self) -> tuple[SnapshotEntry, ...]:
        return tuple(e for e in self.others if e.pos == ORIGIN)

    def positions(self) -> list[Point]:
        return [e.pos for e in self.others]


class NoOutstandingLook(RuntimeError):
    pass


IDLE, LOOKED, COMPUTED, MOVING = "idle", "looked", "computed", "moving"


def _put(values: tuple, i: int, v: Any) -> tuple:
    return values[:i] + (v,) + values[i + 1 :]


@dataclass(frozen=True)
class Configuration:
    """Robot positions and lights at one relevant time.

    ``lights`` are what Looks currently see; ``pending`` holds colors
    committed at this time, exposed from the next time on.  ``stage`` and
    ``dest`` carry each robot's cycle bookkeeping.
    """

    positions: tuple[Point, ...]
    lights: tuple[Light, ...]
    pending: tuple[Light | None, ...]
    stage: tuple[str, ...]
    dest: tuple[Point | None, ...]

    @classmethod
    def initial(cls, positions: Sequence[Sequence[float]], lights: Sequence[Light]) -> "Configuration":
        n = len(positions)
        if n < 2:
            raise ValueError("a configuration needs at least 2 robots")
        if len(lights) != n:
            raise ValueError("one light per robot required")
        return cls(
            tuple(Point(float(p[0]), float(p[1])) for p in positions),
            tuple(lights),
            (None,) * n,
            (IDLE,) * n,
            (None,) * n,
        )

    @property
    def n(self) -> int:
        return len(self.positions)

    def in_transit(self, r: int) -> bool:
        return self.stage[r] == MOVING

    def latest_light(self, r: int) -> Light:
        pending = self.pending[r]
        return self.lights[r] if pending is None else pending


def promote_pending(config: Configuration) -> Configuration:
    """Expose colors committed at the previous time."""
    if config.pending.count(None) == len(config.pending):
        return config
    lights = tuple(l if p is None else p for l, p in zip(config.lights, config.pending))
    return Configuration(config.positions, lights, (None,) * config.n, config.stage, config.dest)


def begin_look(config: Configuration, r: int) -> Configuration:
    if config.stage[r] != IDLE:
        raise NoOutstandingLook(f"robot {r} cannot Look while {config.stage[r]}")
    c = config
    return Configuration(c.positions, c.lights, c.pending, _put(c.stage, r, LOOKED), c.dest)


def commit_compute(
    config: Configuration, r: int, destination: Point, new_light: Light, *, delay: bool = True
) -> Configuration:
    """Record the Compute outcome; the new color becomes visible next time."""
    if config.stage[r] != LOOKED:
        raise NoOutstandingLook(f"robot {r} has no outstanding Look")
    if delay:
        pending = _put(config.pending, r, new_light)
        lights = config.lights
    else:
        pending = config.pending
        lights = _put(config.lights, r, new_light)
    return Configuration(
        config.positions, lights, pending, _put(config.stage, r, COMPUTED), _put(config.dest, r, destination)
    )


def begin_move(config: Configuration, r: int) -> Configuration:
    if config.stage[r] != COMPUTED:
        raise RuntimeError(f"robot {r} cannot begin a move while {config.stage[r]}")
    c = config
    return Configuration(c.positions, c.lights, c.pending, _put(c.stage, r, MOVING), c.dest)


def end_move(config: Configuration, r: int) -> Configuration:
    if config.stage[r] != MOVING:
        raise RuntimeError(f"robot {r} is not moving")
    c = config
    return Configuration(
        _put(c.positions, r, c.dest[r]), c.lights, c.pending, _put(c.stage, r, IDLE), _put(c.dest, r, None)
    )


def build_snapshot(
    config: Configuration,
    observer: int,
    frame: LocalFrame,
    model: ModelClass,
    exposed: Sequence[Point] | None = None,
) -> Snapshot:
    """Snapshot of the other robots in the observer's frame.

    ``exposed`` overrides where each robot is seen (robots caught mid-move);
    it defaults to the committed positions.  Co-located robots collapse into
    one entry carrying the set of their visible lights.
    """
    positions = config.positions if exposed is None else exposed
    if frame.origin != positions[observer]:
        raise ValueError("frame origin must be the observer's position")
    groups: dict[Point, set[Light]] = {}
    for r, p in enumerate(positions):
        if r == observer:
            continue
        groups.setdefault(p, set()).add(config.lights[r])
    show_others = model.sees_other_lights
    local = to_local_all(frame, groups)
    others = tuple(
        SnapshotEntry(q, frozenset(ls) if show_others else None) for q, ls in zip(local, groups.values())
    )
    own = config.lights[observer] if model.sees_own_light else None
    return Snapshot(observer, others, own)
