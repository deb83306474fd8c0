"""SIM(A): running an FCOM algorithm under ASYNCH so that its embedded
execution is CM-atomic, plus verifiers for traces produced that way.

Every robot's light carries the payload's own fields plus ``phase``
('1', '2', '3' or 'm'), ``state`` ('W', 'M' or 'F') and ``suc`` (the
states last seen at the successor location, as a sorted string such as
``"MW"``).  A robot cannot see its own light; it recovers its state from
what its predecessor advertises.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field

from .algorithms import STAY, AlgorithmBinding
from .engine import Action
from .geometry import ORIGIN, DegenerateRing, circular_order
from .models import Light, LightSpec, ModelClass, Snapshot, SnapshotEntry
from .trace import Trace

PHASES = ("1", "2", "3", "m")
STATES = ("W", "M", "F")
SUC_VALUES = ("W",) + tuple(
    "".join(sorted(c)) for k in (1, 2, 3) for c in itertools.combinations("FMW", k) if c != ("W",)
)
SIM_FIELDS = ("phase", "state", "suc")


class MDegenerate(DegenerateRing):
    """All robots share one location, so there is no ring to relay states."""


class MalformedSimTrace(ValueError):
    pass


def _encode(states: frozenset[str] | set[str]) -> str:
    return "".join(sorted(states))


@dataclass(frozen=True)
class SimView:
    """What one robot learns from a Look, in protocol terms."""

    others: tuple[Light, ...]
    pred_suc_state: frozenset[str]
    suc_states: frozenset[str]
    state_here: frozenset[str]
    m: int

    @functools.cached_property
    def phases(self) -> frozenset[str]:
        return frozenset(l["phase"] for l in self.others)


def build_view(snapshot: Snapshot) -> SimView:
    by_loc = {e.pos: e.lights for e in snapshot.others}
    locations = set(by_loc) | {ORIGIN}
    if len(locations) < 2:
        raise MDegenerate("every robot is at the observer's location")
    ring = circular_order(locations)
    pred = ring.pred_of(ORIGIN)
    suc = ring.suc_of(ORIGIN)
    pred_suc = frozenset("".join(l["suc"] for l in by_loc[pred]))
    suc_states = frozenset(l["state"] for l in by_loc[suc])
    here = frozenset(l["state"] for l in by_loc.get(ORIGIN, ()))
    others = tuple(l for e in snapshot.others for l in e.lights)
    return SimView(others, pred_suc, suc_states, here, len(ring))


def own_state(view: SimView) -> frozenset[str]:
    return view.pred_suc_state - view.state_here


def is_all_phases(view: SimView, p: str) -> bool:
    return view.phases == {p}


def is_phases_mixed(view: SimView, p: str, q: str) -> bool:
    # others are never empty (m >= 2), so "only p and q, not all p, not all q"
    return view.phases == {p, q}


def is_exist_m(view: SimView) -> bool:
    return any(l["state"] == "M" or "M" in l["suc"] for l in view.others)


def is_all(view: SimView, s: str) -> bool:
    return all(l["state"] == s for l in view.others) and own_state(view) == {s}


def sim_predicates(view: SimView) -> dict[str, bool]:
    out = {f"is_all_phases({p})": is_all_phases(view, p) for p in PHASES}
    for p, q in (("1", "2"), ("2", "3"), ("1", "3"), ("1", "m")):
        out[f"is_phases_mixed({p},{q})"] = is_phases_mixed(view, p, q)
    out["is_exist_M"] = is_exist_m(view)
    for s in STATES:
        out[f"is_all({s})"] = is_all(view, s)
    return out


def payload_snapshot(snapshot: Snapshot, fields: tuple[str, ...]) -> Snapshot:
    others = tuple(
        SnapshotEntry(e.pos, frozenset(Light({k: l[k] for k in fields}) for l in e.lights))
        for e in snapshot.others
    )
    return Snapshot(snapshot.observer, others, None)


def sim_compute(
    snapshot: Snapshot, payload: AlgorithmBinding, *, exist_m_guard: bool = True
) -> Action:
    """One Compute of the protocol.  ``exist_m_guard=False`` removes the
    check that sends a robot to phase 2 when someone is still executing."""
    view = build_view(snapshot)
    new: dict[str, str] = {}
    dest = STAY
    note = None

    def copy_neighbors() -> None:
        new["suc"] = _encode(view.suc_states)

    if is_all_phases(view, "1"):
        copy_neighbors()
        new["phase"] = "1"
        if is_all(view, "F"):
            new["phase"] = "m"
        elif exist_m_guard and any(l["state"] == "M" for l in view.others):
            new["phase"] = "2"
        elif own_state(view) == {"W"}:
            fields = tuple(name for name, _ in payload.lights.colors)
            inner = payload.compute(payload_snapshot(snapshot, fields))
            dest = inner.dest
            new.update(inner.light or {})
            new["state"] = "M"
            note = "A"
    elif is_all_phases(view, "2"):
        new["phase"] = "3"
        copy_neighbors()
    elif is_all_phases(view, "3"):
        copy_neighbors()
        new["phase"] = "3"
        if is_exist_m(view):
            if own_state(view) == {"M"}:
                new["state"] = "F"
            copy_neighbors()
        else:
            new["phase"] = "1"
            copy_neighbors()
    elif is_phases_mixed(view, "1", "2"):
        new["phase"] = "2"
    elif is_phases_mixed(view, "2", "3"):
        new["phase"] = "3"
        copy_neighbors()
    elif is_phases_mixed(view, "1", "3"):
        new["phase"] = "1"
        copy_neighbors()
    elif is_all_phases(view, "m"):
        new["state"] = "W"
        new["suc"] = "W"
        new["phase"] = "m" if any(l["state"] == "F" for l in view.others) else "1"
    elif is_phases_mixed(view, "1", "m") and is_all(view, "F"):
        new["phase"] = "m"
    elif is_phases_mixed(view, "1", "m") and is_all(view, "W"):
        new["phase"] = "1"
    return Action(dest, new, note)


def sim_light_spec(payload: AlgorithmBinding) -> LightSpec:
    return LightSpec(payload.lights.colors + (("phase", PHASES), ("state", STATES), ("suc", SUC_VALUES)))


def sim_wrap(payload: AlgorithmBinding, *, exist_m_guard: bool = True) -> AlgorithmBinding:
    if payload.model is not ModelClass.FCOM:
        raise ValueError(f"payload must be an FCOM algorithm, got {payload.model.value}")
    clash = set(SIM_FIELDS) & {name for name, _ in payload.lights.colors}
    if clash:
        raise ValueError(f"payload light fields {sorted(clash)} collide with the protocol's")
    suffix = "" if exist_m_guard else "-noguard"
    return AlgorithmBinding(
        f"sim({payload.name}){suffix}",
        ModelClass.FCOM,
        sim_light_spec(payload),
        lambda snap: sim_compute(snap, payload, exist_m_guard=exist_m_guard),
    )


# -- verifiers ---------------------------------------------------------------


@dataclass(frozen=True)
class Instance:
    """One embedded execution: robot, the Look it used, its Compute and the
    MoveEnd that completed it (None if the trace ends mid-move)."""

    robot: int
    look: int
    compute: int
    move_end: int | None
    snap: str | None = None


@dataclass(frozen=True)
class EmbeddedExecution:
    instances: tuple[Instance, ...]
    witnesses: tuple[tuple[Instance, Instance], ...] = ()

    @property
    def valid(self) -> bool:
        return not self.witnesses

    def to_json(self) -> dict:
        return {
            "valid": self.valid,
            "instances": len(self.instances),
            "witnesses": [
                {"look": vars(a), "inside_window_of": vars(b)} for a, b in self.witnesses[:10]
            ],
        }


def _check_flags(trace: Trace) -> None:
    for e in trace.events:
        if e.kind != "C":
            continue
        l = e.light
        try:
            ok = l["phase"] in PHASES and l["state"] in STATES and l["suc"] in SUC_VALUES
        except KeyError as exc:
            raise MalformedSimTrace(f"t={e.time} robot {e.robot}: light lacks {exc}") from None
        if not ok:
            raise MalformedSimTrace(f"t={e.time} robot {e.robot}: unreachable flags {l!r}")


def embedded_instances(trace: Trace) -> list[Instance]:
    _check_flags(trace)
    out = []
    for r, cycles in enumerate(trace.cycles()):
        for cyc in cycles:
            c = cyc.get("C")
            if c is None or c.note != "A":
                continue
            me = cyc.get("ME")
            out.append(Instance(r, cyc["L"].time, c.time, me.time if me else None, cyc["L"].snap))
    out.sort(key=lambda i: (i.compute, i.robot))
    return out


def extract_embedded_execution(trace: Trace) -> EmbeddedExecution:
    """Project the embedded executions and check the projection is
    CM-atomic: no embedded Look strictly after another instance's Compute
    and no later than its MoveEnd."""
    inst = embedded_instances(trace)
    witnesses = []
    for a in inst:
        for b in inst:
            if a.robot == b.robot:
                continue
            end = b.move_end if b.move_end is not None else 1 << 62
            if b.compute < a.look <= end:
                witnesses.append((a, b))
    return EmbeddedExecution(tuple(inst), tuple(witnesses))


def _phase_changes(trace: Trace):
    last = [l["phase"] for l in trace.header.init_lights]
    for e in trace.events:
        if e.kind == "C":
            before = last[e.robot]
            last[e.robot] = e.light["phase"]
            yield e, before, e.light["phase"]


def phase_one_batches(trace: Trace) -> list[list[Instance]]:
    """Embedded executions grouped by the phase-1 period their Look fell in.
    A period closes at the first Compute that moves some robot to phase 2."""
    closes = []
    open_ = True
    for e, before, after in _phase_changes(trace):
        if open_ and before == "1" and after == "2":
            closes.append(e.time)
            open_ = False
        elif not open_ and after == "1" and before != "1":
            open_ = True
    batches: list[list[Instance]] = [[] for _ in range(len(closes) + 1)]
    for i in embedded_instances(trace):
        k = next((j for j, t in enumerate(closes) if i.look <= t), len(closes))
        batches[k].append(i)
    return [b for b in batches if b]


def same_snapshot_violations(trace: Trace) -> list[tuple[Instance, Instance]]:
    """Pairs of embedded executions by different robots in one phase-1
    period that did not consume the same snapshot."""
    bad = []
    for batch in phase_one_batches(trace):
        for a, b in itertools.combinations(batch, 2):
            if a.robot != b.robot and (a.look != b.look or a.snap != b.snap):
                bad.append((a, b))
    return bad


@dataclass(frozen=True)
class MegaCycleReport:
    boundaries: tuple[int, ...]
    counts: tuple[tuple[int, ...], ...]
    partial: tuple[int, ...]
    batch_repeats_ok: bool = True
    notes: tuple[str, ...] = field(default=())

    @property
    def completed(self) -> int:
        return len(self.boundaries)

    @property
    def fair(self) -> bool:
        return all(min(c) >= 1 for c in self.counts)

    def to_json(self) -> dict:
        return {
            "boundaries": list(self.boundaries),
            "counts": [list(c) for c in self.counts],
            "partial": list(self.partial),
            "fair": self.fair,
            "batch_repeats_ok": self.batch_repeats_ok,
        }


def mega_cycle_report(trace: Trace) -> MegaCycleReport:
    """Mega-cycle boundaries are the first entry into phase m of each cycle;
    counts are embedded executions per robot between boundaries."""
    _check_flags(trace)
    n = trace.n
    boundaries = []
    in_m = False
    for e, before, after in _phase_changes(trace):
        if not in_m and before != "m" and after == "m":
            boundaries.append(e.time)
            in_m = True
        elif in_m and before == "m" and after == "1":
            in_m = False
    counts = [[0] * n for _ in range(len(boundaries) + 1)]
    for i in embedded_instances(trace):
        k = next((j for j, t in enumerate(boundaries) if i.compute <= t), len(boundaries))
        counts[k][i.robot] += 1
    repeats_ok = True
    notes = []
    for batch in phase_one_batches(trace):
        per = [0] * n
        for i in batch:
            per[i.robot] += 1
        if sum(1 for c in per if c > 1) > 1:
            repeats_ok = False
            notes.append(f"several robots repeated in the batch starting t={batch[0].look}")
    return MegaCycleReport(
        tuple(boundaries),
        tuple(tuple(c) for c in counts[:-1]),
        tuple(counts[-1]),
        repeats_ok,
        tuple(notes),
    )


ALLOWED_PHASE_SETS = ({"1", "2"}, {"2", "3"}, {"3", "1"}, {"1", "m"})


def phase_set_violations(trace: Trace) -> list[tuple[int, frozenset[str]]]:
    """Times at which the robots' committed phases do not fit one of the
    protocol's phase pairs."""
    bad = []
    for t, config in trace.configs():
        phases = {config.latest_light(r)["phase"] for r in range(trace.n)}
        if not any(phases <= allowed for allowed in ALLOWED_PHASE_SETS):
            bad.append((t, frozenset(phases)))
    return bad
