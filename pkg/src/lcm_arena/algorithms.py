"""Robot algorithms as pure snapshot -> action functions, bound to a model."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Callable

from .engine import Action
from .geometry import ORIGIN, Point, scale
from .models import Light, LightSpec, ModelClass, Snapshot
from .problems import InvalidInitialShape, analyze_quadrilateral, is_trapezoid

STAY = ORIGIN


class ArityError(ValueError):
    pass


class UnknownAlgorithm(KeyError):
    pass


@dataclass(frozen=True)
class AlgorithmBinding:
    name: str
    model: ModelClass
    lights: LightSpec
    fn: Callable[[Snapshot], Action]

    def compute(self, snapshot: Snapshot) -> Action:
        return self.fn(snapshot)

    def initial_light(self) -> Light:
        return self.lights.initial()

    def check_light(self, light: Light) -> None:
        self.lights.check(light)

    def colors(self) -> list[Light]:
        """Every light value the declaration allows."""
        names = [n for n, _ in self.lights.colors]
        sets = [vals for _, vals in self.lights.colors]
        return [Light(dict(zip(names, combo))) for combo in itertools.product(*sets)]

    def as_model(self, model: ModelClass, name: str | None = None) -> "AlgorithmBinding":
        return replace(self, model=model, name=name or f"{self.name}@{model.value}")


def _only_other(snapshot: Snapshot) -> Point:
    if len(snapshot.others) != 1:
        raise ArityError(f"expected one other robot, saw {len(snapshot.others)}")
    return snapshot.others[0].pos


def half_move(snapshot: Snapshot) -> Action:
    """Move to the midpoint between self and the other robot."""
    return Action(scale(_only_other(snapshot), 0.5))


def never_move(snapshot: Snapshot) -> Action:
    return Action(STAY)


def tf_rules(snapshot: Snapshot) -> Action:
    """Stay on a trapezoid; otherwise only the designated mover moves, along
    its perpendicular to CD until AB is parallel to CD.  Views that are not
    valid instances (not convex, tied longest sides) match no rule: stay."""
    if len(snapshot.others) != 3:
        raise ArityError(f"expected three other robots, saw {len(snapshot.others)}")
    points = [ORIGIN, *snapshot.positions()]
    if len(set(points)) == 4 and is_trapezoid(points):
        return Action(STAY)
    try:
        qa = analyze_quadrilateral(points)
    except InvalidInitialShape:
        return Action(STAY)
    if qa.mover_index != 0:
        return Action(STAY)
    return Action(qa.target())


def tf_rules_patient(k: int) -> Callable[[Snapshot], Action]:
    """tf_rules, except the mover waits out ``k`` activations first (the wait
    counter lives in its own light)."""

    def compute(snapshot: Snapshot) -> Action:
        wait = snapshot.own_light["wait"]
        step = tf_rules(snapshot)
        if step.dest == STAY:
            return Action(STAY, {"wait": 0})
        if wait < k:
            return Action(STAY, {"wait": wait + 1})
        return Action(step.dest, {"wait": 0})

    return compute


def gcncl_quarter(snapshot: Snapshot) -> Action:
    """Color c0: move a quarter of the way to the other robot and turn c1.
    Color c1: stay."""
    other = _only_other(snapshot)
    if snapshot.own_light["c"] == "c0":
        return Action(scale(other, 0.25), {"c": "c1"})
    return Action(STAY, {"c": "c1"})


def naive_fcom_quarter(snapshot: Snapshot) -> Action:
    """FCOM mover driven by the opponent's color: seeing c0 it moves a
    quarter of the distance and shows c1; seeing c1 it stays."""
    entry = snapshot.others[0] if len(snapshot.others) == 1 else None
    if entry is None:
        raise ArityError(f"expected one other robot, saw {len(snapshot.others)}")
    if any(l["c"] == "c0" for l in entry.lights):
        return Action(scale(entry.pos, 0.25), {"c": "c1"})
    return Action(STAY, {"c": "c1"})


CYCLE = ("c0", "c1", "c2")


def color_cycler(snapshot: Snapshot) -> Action:
    """Stationary: show the successor of the smallest color others show."""
    seen = [l["c"] for e in snapshot.others for l in e.lights]
    low = min(seen, key=CYCLE.index) if seen else CYCLE[0]
    return Action(STAY, {"c": CYCLE[(CYCLE.index(low) + 1) % len(CYCLE)]})


NO_LIGHTS = LightSpec()
TWO = LightSpec.of(c=("c0", "c1"))

_REGISTRY: dict[str, AlgorithmBinding] = {}


def register(binding: AlgorithmBinding) -> AlgorithmBinding:
    _REGISTRY[binding.name] = binding
    return binding


HALF_MOVE = register(AlgorithmBinding("half_move", ModelClass.OBLOT, NO_LIGHTS, half_move))
HALF_MOVE_FCOM = register(HALF_MOVE.as_model(ModelClass.FCOM, "half_move_fcom"))
HALF_MOVE_FSTA = register(HALF_MOVE.as_model(ModelClass.FSTA, "half_move_fsta"))
TF_RULES = register(AlgorithmBinding("tf_rules", ModelClass.OBLOT, NO_LIGHTS, tf_rules))
TF_RULES_FSTA = register(TF_RULES.as_model(ModelClass.FSTA, "tf_rules_fsta"))
GCNCL_QUARTER = register(AlgorithmBinding("gcncl_quarter", ModelClass.FSTA, TWO, gcncl_quarter))
NAIVE_FCOM_QUARTER = register(
    AlgorithmBinding("naive_fcom_quarter", ModelClass.FCOM, TWO, naive_fcom_quarter)
)
COLOR_CYCLER = register(
    AlgorithmBinding("color_cycler", ModelClass.FCOM, LightSpec.of(c=CYCLE), color_cycler)
)
NEVER_MOVE = register(AlgorithmBinding("never_move", ModelClass.OBLOT, NO_LIGHTS, never_move))
NEVER_MOVE_FCOM = register(NEVER_MOVE.as_model(ModelClass.FCOM, "never_move_fcom"))
NEVER_MOVE_FSTA = register(NEVER_MOVE.as_model(ModelClass.FSTA, "never_move_fsta"))


def patient_tf(k: int) -> AlgorithmBinding:
    spec = LightSpec.of(wait=tuple(range(k + 1)))
    return AlgorithmBinding(f"tf_rules_patient{k}", ModelClass.FSTA, spec, tf_rules_patient(k))


def get_algorithm(name: str) -> AlgorithmBinding:
    if name in _REGISTRY:
        return _REGISTRY[name]
    if name.startswith("tf_rules_patient"):
        suffix = name[len("tf_rules_patient") :]
        if suffix.isdigit():
            return patient_tf(int(suffix))
    raise UnknownAlgorithm(f"unknown algorithm {name!r}")


def algorithm_names() -> list[str]:
    return sorted(_REGISTRY)
