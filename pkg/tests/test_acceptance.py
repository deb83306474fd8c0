"""Acceptance criteria 1-10.  Every check records one PASS/FAIL line, printed
in the terminal summary (see conftest.py)."""

import math
import random
import time
from fractions import Fraction

import pytest

from lcm_arena.adversaries import (
    FIRED,
    gcncl_fcom_ssynch,
    mlcv_fcom_mAtomic,
    mlcv_fsta_mAtomic,
    mlcv_oblot_mAtomic,
    tf_async,
    tf_fsta_lcAtomic,
    tf_pi4_instance,
)
from lcm_arena.algorithms import (
    COLOR_CYCLER,
    GCNCL_QUARTER,
    HALF_MOVE,
    HALF_MOVE_FCOM,
    HALF_MOVE_FSTA,
    NAIVE_FCOM_QUARTER,
    TF_RULES,
    TF_RULES_FSTA,
)
from lcm_arena.engine import Scenario, run, visibility_violations
from lcm_arena.experiments import random_points, random_tf_instance, sim_run
from lcm_arena.geometry import dist
from lcm_arena.problems import (
    SATISFIED,
    VIOLATED,
    analyze_quadrilateral,
    is_trapezoid_with,
    monitor_gcncl,
    monitor_mlcv,
    monitor_tf,
)
from lcm_arena.schedule import SchedulerClass as S
from lcm_arena.schedule import validate_schedule
from lcm_arena.strategies import builtin_adversaries

PAIR = Scenario.of([(0, 0), (1, 0)])
RESULTS: dict[int, str] = {}


def record(n, ok, detail):
    RESULTS[n] = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    assert ok, RESULTS[n]


# -- 1 -----------------------------------------------------------------------


def _rational_replay(trace):
    """Exact positions per round from the activation sets alone."""
    pos = [Fraction(0), Fraction(1)]
    out = []
    for _, batch in trace.by_time():
        active = {e.robot for e in batch if e.kind == "L"}
        new = list(pos)
        for r in active:
            new[r] = (pos[0] + pos[1]) / 2
        pos = new
        out.append(tuple(pos))
    return out


def test_criterion_1_half_move_ssynch():
    start = time.perf_counter()
    bad = []
    for seed in range(100):
        tr = run(PAIR, HALF_MOVE, S.SSYNCH, builtin_adversaries("uniform-random-fair", seed), 40, seed=seed)
        v = monitor_mlcv(tr, eps=1e-9)
        if v.status != SATISFIED or validate_schedule(tr, S.SSYNCH):
            bad.append((seed, v.status))
    exact_bad = []
    for seed in range(10):
        adv = builtin_adversaries("uniform-random-fair", seed, frames="identity")
        tr = run(PAIR, HALF_MOVE, S.SSYNCH, adv, 40, seed=seed)
        replay = _rational_replay(tr)
        configs = [c for _, c in tr.configs()[1:]]
        for k, (exact, cfg) in enumerate(zip(replay, configs), start=1):
            xs = tuple(Fraction(p[0]) for p in cfg.positions)
            if xs != exact or abs(exact[1] - exact[0]) > Fraction(1, 2**k):
                exact_bad.append((seed, k))
                break
    elapsed = time.perf_counter() - start
    ok = not bad and not exact_bad and elapsed < 5.0
    record(1, ok, f"100/100 Satisfied={not bad}, exact 2^-k bound on 10 schedules={not exact_bad}, {elapsed:.2f}s")


# -- 2, 3 ----------------------------------------------------------------------


def test_criterion_2_oblot_mlcv_separation():
    worst = 0
    problems = []
    for seed in range(20):
        adv = mlcv_oblot_mAtomic(seed)
        tr = run(PAIR, HALF_MOVE, S.M_ATOMIC, adv, 40, seed=seed)
        v = monitor_mlcv(tr)
        if v.status != VIOLATED or adv.outcome != FIRED or validate_schedule(tr, S.M_ATOMIC):
            problems.append(seed)
            continue
        worst = max(worst, v.time)
    record(2, not problems and worst <= 12, f"20 seeds violated, latest at t={worst} (bound 12), traces M_ATOMIC-valid")


def _fcom_looks_at_unit(tr):
    configs = tr.configs()
    prev = {}
    last = configs[0][1]
    for t, cfg in configs[1:]:
        prev[t] = last
        last = cfg
    worst = 0.0
    for e in tr.events:
        if e.kind != "L":
            continue
        before = prev[e.time]
        other = before.positions[1 - e.robot]
        seen = dict(e.seen).get(1 - e.robot, other)
        worst = max(worst, abs(dist(e.pos, seen) / e.frame.unit - 1))
    return worst


def test_criterion_3_fcom_fsta_mlcv_separation():
    worst_t = 0
    worst_d = 0.0
    problems = []
    for seed in range(20):
        for make, alg in ((mlcv_fcom_mAtomic, HALF_MOVE_FCOM), (mlcv_fsta_mAtomic, HALF_MOVE_FSTA)):
            # the attack alone: the run ends once the script has played out
            adv = make(seed, tail=False)
            tr = run(PAIR, alg, S.M_ATOMIC, adv, 40, seed=seed)
            v = monitor_mlcv(tr)
            if v.status != VIOLATED or adv.outcome != FIRED or validate_schedule(tr, S.M_ATOMIC):
                problems.append((adv.name, seed))
                continue
            worst_t = max(worst_t, v.time)
            if make is mlcv_fcom_mAtomic:
                worst_d = max(worst_d, _fcom_looks_at_unit(tr))
    ok = not problems and worst_t <= 20 and worst_d <= 1e-12
    record(3, ok, f"FCOM+FSTA violated on 20 seeds, latest t={worst_t} (bound 20), max |d_local-1|={worst_d:.1e}")


# -- 4, 5 ----------------------------------------------------------------------


def test_criterion_4_tf_m_atomic():
    problems = []
    for seed in range(100):
        pts = random_tf_instance(seed)
        tr = run(Scenario.of(pts), TF_RULES, S.M_ATOMIC, builtin_adversaries("uniform-random-fair", seed), 200, seed=seed)
        v = monitor_tf(tr)
        final = tr.configs()[-1][1].positions
        qa = analyze_quadrilateral(pts)
        if v.status != SATISFIED or not is_trapezoid_with(qa, final) or validate_schedule(tr, S.M_ATOMIC):
            problems.append((seed, v.status, v.clause))
    record(4, not problems, f"{100 - len(problems)}/100 Satisfied with AB parallel to CD at the end {problems[:3]}")


def test_criterion_5_tf_separations():
    pts = tf_pi4_instance(0)
    adv = tf_async(0)
    tr = run(Scenario.of(pts), TF_RULES, S.ASYNCH, adv, 40, seed=0)
    v = monitor_tf(tr)
    async_ok = v.status == VIOLATED and v.clause == "TF2.1" and v.time <= 10 and adv.outcome == FIRED
    lc = tf_fsta_lcAtomic(0)
    tr2 = run(Scenario.of(pts), TF_RULES_FSTA, S.LC_ATOMIC, lc, 40, seed=0)
    v2 = monitor_tf(tr2)
    events = sum(1 for e in tr2.events if e.time <= (v2.time or 0))
    bound = 4 * lc.state_bound
    lc_ok = v2.status == VIOLATED and events <= bound and not validate_schedule(tr2, S.LC_ATOMIC)
    record(
        5,
        async_ok and lc_ok,
        f"tf-async {v.clause} at t={v.time} (bound 10); tf-fsta-lc violated after {events} events (bound {bound})",
    )


# -- 6, 7 ----------------------------------------------------------------------


def test_criterion_6_gcncl_asynch():
    """Identity frames keep every distance dyadic, so [0.5, 1) is checked
    exactly; random frames add rotation roundoff, checked to 1e-12."""
    problems = []
    lo, hi = 1.0, 0.0
    for frames, slack in (("identity", 0.0), ("random", 1e-12)):
        for seed in range(500):
            adv = builtin_adversaries("uniform-random-fair", seed, frames=frames)
            tr = run(PAIR, GCNCL_QUARTER, S.ASYNCH, adv, 60, seed=seed)
            v = monitor_gcncl(tr)
            d = dist(*tr.configs()[-1][1].positions)
            if frames == "identity":
                lo, hi = min(lo, d), max(hi, d)
            if v.status != SATISFIED or not 0.5 - slack <= d < 1:
                problems.append((frames, seed))
    ident = dict(frames="identity")
    sim = run(PAIR, GCNCL_QUARTER, S.FSYNCH, builtin_adversaries("fsynch", **ident), 6)
    seq = run(PAIR, GCNCL_QUARTER, S.ROUNDROBIN, builtin_adversaries("round-robin", **ident), 6)
    d_sim = dist(*sim.configs()[-1][1].positions)
    d_seq = dist(*seq.configs()[-1][1].positions)
    ok = not problems and d_sim == 0.5 and d_seq == 9 / 16
    record(
        6,
        ok,
        f"2x500 runs Satisfied, exact range [{lo}, {hi}] {problems[:3]}; simultaneous {d_sim}, sequential {d_seq}",
    )


def test_criterion_7_gcncl_fcom_pumping():
    adv = gcncl_fcom_ssynch(0)
    tr = run(PAIR, NAIVE_FCOM_QUARTER, S.SSYNCH, adv, 40, seed=0)
    v = monitor_gcncl(tr)
    ok = v.status == VIOLATED and adv.outcome == FIRED and adv.pumps <= 6 and not validate_schedule(tr, S.SSYNCH)
    record(7, ok, f"{v.clause} after {adv.pumps} pumps at c={adv.c} ((3/4)^3={0.75**3:.4f} < 1/2)")


# -- 8, 10 ---------------------------------------------------------------------

LC_RUNS = 9


def _sim_batch(**mutation):
    """Criterion-8 runs: 200 ASYNCH runs (n = 3, 4, 5 in turn) and a smaller
    LC_ATOMIC batch for the same-snapshot check."""
    runs = [(3 + i % 3, i, S.ASYNCH) for i in range(200)]
    runs += [(3 + i % 3, i, S.LC_ATOMIC) for i in range(LC_RUNS)]
    for n, seed, cls in runs:
        yield sim_run(n, seed, cls, events=5000, **mutation)


def test_criterion_8_sim_correctness():
    start = time.perf_counter()
    outs = list(_sim_batch())
    elapsed = time.perf_counter() - start
    bad = [(o.scheduler, o.n, o.seed) for o in outs if not o.ok]
    fewest = min(o.mega_cycles for o in outs)
    ok = not bad and elapsed < 60
    record(
        8,
        ok,
        f"{len(outs) - LC_RUNS} ASYNCH + {LC_RUNS} LC_ATOMIC runs valid, min {fewest} mega-cycles, "
        f"{elapsed:.1f}s {bad[:3]}",
    )


def _first_failure(**mutation):
    for o in _sim_batch(**mutation):
        if not o.ok:
            return o
    return None


def test_criterion_10_mutation_sensitivity():
    guard = _first_failure(exist_m_guard=False)
    delay = _first_failure(light_delay=False)
    desc = lambda o: "undetected" if o is None else f"caught ({o.scheduler} n={o.n} seed={o.seed})"  # noqa: E731
    record(10, guard is not None and delay is not None, f"no-guard {desc(guard)}; no-delay {desc(delay)}")


# -- 9 -------------------------------------------------------------------------


def _fuzz_kind(cls, rng):
    kinds = ["uniform-random-fair"]
    if cls in (S.ASYNCH, S.LC_ATOMIC):
        kinds.append("max-delay")
    if cls is S.ROUNDROBIN:
        kinds = ["round-robin"]
    if cls is S.FSYNCH:
        kinds = ["fsynch", "uniform-random-fair"]
    return rng.choice(kinds)


@pytest.mark.parametrize("cls", list(S), ids=lambda c: c.value)
def test_criterion_9_engine_soundness(cls):
    problems = []
    for i in range(500):
        rng = random.Random(i)
        n = 2 + i % 3
        alg = HALF_MOVE if n == 2 and i % 2 else COLOR_CYCLER
        adv = builtin_adversaries(_fuzz_kind(cls, rng), i)
        tr = run(Scenario.of(random_points(n, i)), alg, cls, adv, 30, seed=i)
        for outer in cls.enclosing():
            if validate_schedule(tr, outer):
                problems.append((i, outer.value))
        if visibility_violations(tr):
            problems.append((i, "delay"))
    RESULTS.setdefault(9, "")
    _nine[cls] = problems
    if len(_nine) == len(S):
        total = sum(len(p) for p in _nine.values())
        record(9, total == 0, f"500 fuzzed runs x {len(S)} classes; nesting and delay invariants, {total} problems")
    assert not problems, problems[:5]


_nine: dict = {}


def test_sanity_nesting_lattice():
    assert S.SSYNCH in S.FSYNCH.enclosing() and S.ASYNCH in S.M_ATOMIC.enclosing()
    assert math.isclose(0.75**3, 0.421875)
