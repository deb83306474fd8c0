"""Bundled scenarios and experiment runners shared by the CLI and tests."""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field
from typing import Callable

from .adversaries import FIRED, scripted_adversary, scripted_names, tf_pi4_instance
from .algorithms import get_algorithm
from .engine import Scenario, run
from .geometry import Point
from .problems import (
    SATISFIED,
    VIOLATED,
    InvalidInitialShape,
    MonitorVerdict,
    analyze_quadrilateral,
    is_trapezoid,
    monitor_gcncl,
    monitor_mlcv,
    monitor_rdv,
    monitor_tf,
)
from .schedule import SchedulerClass, validate_schedule
from .sim import extract_embedded_execution, mega_cycle_report, same_snapshot_violations, sim_wrap
from .strategies import builtin_adversaries, builtin_kinds

PAIR = ((0.0, 0.0), (1.0, 0.0))
TF_EXAMPLE = ((3.0, 4.0), (7.0, 2.0), (10.0, 0.0), (0.0, 0.0))

MONITORS: dict[str, Callable[..., MonitorVerdict]] = {
    "mlcv": monitor_mlcv,
    "gcncl": monitor_gcncl,
    "tf": monitor_tf,
    "rdv": monitor_rdv,
}


class UnknownAdversary(KeyError):
    pass


def make_adversary(name: str, seed: int, **options):
    if name in scripted_names():
        return scripted_adversary(name, seed, **options)
    if name in builtin_kinds() or name == "random":
        return builtin_adversaries(name, seed, **options)
    raise UnknownAdversary(f"unknown adversary {name!r}")


def adversary_names() -> list[str]:
    return builtin_kinds() + scripted_names()


def random_points(n: int, seed: int) -> list[Point]:
    rng = random.Random(seed)
    return [Point(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(n)]


def random_tf_instance(seed: int, margin: float = 1e-3) -> tuple[Point, ...]:
    """A random convex quadrilateral with a unique longest side, not a
    trapezoid and with alpha at least ``margin`` away from pi/4."""
    rng = random.Random(seed)
    while True:
        pts = tuple(Point(rng.uniform(0, 10), rng.uniform(0, 10)) for _ in range(4))
        try:
            qa = analyze_quadrilateral(pts, tol=margin)
        except InvalidInitialShape:
            continue
        if is_trapezoid(pts, margin) or abs(qa.alpha - math.pi / 4) < margin:
            continue
        return pts


def named_scenario(name: str, seed: int = 0) -> tuple[Point, ...] | None:
    if name == "pair":
        return tuple(Point(*p) for p in PAIR)
    if name == "tf-example":
        return tuple(Point(*p) for p in TF_EXAMPLE)
    if name == "tf-pi4":
        return tf_pi4_instance(seed)
    if name == "tf-random":
        return random_tf_instance(seed)
    if name.startswith("random") and name[6:].isdigit():
        return tuple(random_points(int(name[6:]), seed))
    return None


SCENARIO_NAMES = ("pair", "tf-example", "tf-pi4", "tf-random", "random<n>")


# -- SIM runs ------------------------------------------------------------------


@dataclass
class SimOutcome:
    n: int
    seed: int
    scheduler: str
    valid: bool
    mega_cycles: int
    fair: bool
    same_snapshot: int | None
    witnesses: int

    @property
    def ok(self) -> bool:
        return self.valid and self.mega_cycles >= 2 and self.fair and not self.same_snapshot


def sim_run(
    n: int,
    seed: int,
    scheduler: SchedulerClass = SchedulerClass.ASYNCH,
    *,
    events: int = 5000,
    payload: str = "color_cycler",
    light_delay: bool = True,
    exist_m_guard: bool = True,
) -> SimOutcome:
    alg = sim_wrap(get_algorithm(payload), exist_m_guard=exist_m_guard)
    trace = run(
        Scenario.of(random_points(n, seed)),
        alg,
        scheduler,
        builtin_adversaries("uniform-random-fair", seed),
        1 << 62,
        max_events=events,
        seed=seed,
        light_delay=light_delay,
    )
    emb = extract_embedded_execution(trace)
    rep = mega_cycle_report(trace)
    same = len(same_snapshot_violations(trace)) if scheduler is SchedulerClass.LC_ATOMIC else None
    return SimOutcome(n, seed, scheduler.value, emb.valid, rep.completed, rep.fair, same, len(emb.witnesses))


# -- landscape -----------------------------------------------------------------


@dataclass
class Cell:
    claim: str
    side: str
    expect: str
    results: list[bool] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.results) and all(self.results)


def _verdict_cell(
    algo: str, cls: SchedulerClass, adversary: str, scenario: Callable[[int], tuple], monitor: str, want: str
) -> Callable[[int], bool]:
    def check(seed: int) -> bool:
        adv = make_adversary(adversary, seed)
        alg = get_algorithm(algo)
        trace = run(Scenario.of(scenario(seed)), alg, cls, adv, 400, seed=seed)
        if validate_schedule(trace, cls):
            return False
        verdict = MONITORS[monitor](trace)
        if want == VIOLATED:
            return verdict.status == VIOLATED and getattr(adv, "outcome", FIRED) == FIRED
        return verdict.status == SATISFIED

    return check


def landscape_cells(
    sim_events: int = 2000, light_delay: bool = True, exist_m_guard: bool = True
) -> list[tuple[Cell, Callable[[int], bool]]]:
    S = SchedulerClass
    pair = lambda seed: PAIR  # noqa: E731
    quad = random_tf_instance
    pi4 = tf_pi4_instance

    def sim_cell(cls: SchedulerClass) -> Callable[[int], bool]:
        def check(seed: int) -> bool:
            return sim_run(
                3 + seed % 3, seed, cls, events=sim_events, light_delay=light_delay, exist_m_guard=exist_m_guard
            ).ok

        return check

    def cell(claim: str, side: str, expect: str, fn: Callable[[int], bool]) -> tuple[Cell, Callable[[int], bool]]:
        return Cell(claim, side, expect), fn

    return [
        cell("OBLOT S > A_M", "MLCv half_move SSYNCH", SATISFIED,
             _verdict_cell("half_move", S.SSYNCH, "uniform-random-fair", pair, "mlcv", SATISFIED)),
        cell("OBLOT S > A_M", "MLCv half_move M_ATOMIC vs mlcv-oblot-m", VIOLATED,
             _verdict_cell("half_move", S.M_ATOMIC, "mlcv-oblot-m", pair, "mlcv", VIOLATED)),
        cell("OBLOT A_M > A", "TF tf_rules M_ATOMIC", SATISFIED,
             _verdict_cell("tf_rules", S.M_ATOMIC, "uniform-random-fair", quad, "tf", SATISFIED)),
        cell("OBLOT A_M > A", "TF tf_rules ASYNCH vs tf-async", VIOLATED,
             _verdict_cell("tf_rules", S.ASYNCH, "tf-async", pi4, "tf", VIOLATED)),
        cell("FCOM S > A", "MLCv half_move_fcom SSYNCH", SATISFIED,
             _verdict_cell("half_move_fcom", S.SSYNCH, "uniform-random-fair", pair, "mlcv", SATISFIED)),
        cell("FCOM S > A", "MLCv half_move_fcom M_ATOMIC vs mlcv-fcom-m", VIOLATED,
             _verdict_cell("half_move_fcom", S.M_ATOMIC, "mlcv-fcom-m", pair, "mlcv", VIOLATED)),
        cell("FCOM A_CM = A", "SIM(color_cycler) ASYNCH projection", "verifier evidence", sim_cell(S.ASYNCH)),
        cell("FCOM A_LC = S", "SIM(color_cycler) LC_ATOMIC batches", "verifier evidence", sim_cell(S.LC_ATOMIC)),
        cell("FSTA S > A_M", "MLCv half_move_fsta SSYNCH", SATISFIED,
             _verdict_cell("half_move_fsta", S.SSYNCH, "uniform-random-fair", pair, "mlcv", SATISFIED)),
        cell("FSTA S > A_M", "MLCv half_move_fsta M_ATOMIC vs mlcv-fsta-m", VIOLATED,
             _verdict_cell("half_move_fsta", S.M_ATOMIC, "mlcv-fsta-m", pair, "mlcv", VIOLATED)),
        cell("FSTA A_M > A", "TF tf_rules_fsta M_ATOMIC", SATISFIED,
             _verdict_cell("tf_rules_fsta", S.M_ATOMIC, "uniform-random-fair", quad, "tf", SATISFIED)),
        cell("FSTA A_M > A", "TF tf_rules_fsta LC_ATOMIC vs tf-fsta-lc", VIOLATED,
             _verdict_cell("tf_rules_fsta", S.LC_ATOMIC, "tf-fsta-lc", pi4, "tf", VIOLATED)),
        cell("FSTA vs FCOM", "GCNCL gcncl_quarter ASYNCH", SATISFIED,
             _verdict_cell("gcncl_quarter", S.ASYNCH, "uniform-random-fair", pair, "gcncl", SATISFIED)),
        cell("FSTA vs FCOM", "GCNCL naive_fcom_quarter SSYNCH vs gcncl-fcom-s", VIOLATED,
             _verdict_cell("naive_fcom_quarter", S.SSYNCH, "gcncl-fcom-s", pair, "gcncl", VIOLATED)),
    ]


def landscape(seeds: int = 20, **options) -> list[Cell]:
    if seeds < 1:
        raise ValueError("seeds must be at least 1")
    cells = []
    for c, check in landscape_cells(**options):
        start = time.perf_counter()
        c.results = [check(seed) for seed in range(seeds)]
        c.seconds = time.perf_counter() - start
        cells.append(c)
    return cells


def format_landscape(cells: list[Cell]) -> str:
    rows = [("claim", "run", "expected", "seeds", "result")]
    for c in cells:
        rows.append((c.claim, c.side, c.expect, f"{sum(c.results)}/{len(c.results)}", "PASS" if c.passed else "FAIL"))
    widths = [max(len(r[i]) for r in rows) for i in range(5)]
    lines = ["  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip() for r in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)
