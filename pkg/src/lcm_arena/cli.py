"""Command-line entry point: run experiments, verify traces, print the landscape table."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from .algorithms import UnknownAlgorithm, algorithm_names, get_algorithm
from .engine import AdversaryConstraintViolation, Scenario, run
from .experiments import (
    MONITORS,
    SCENARIO_NAMES,
    UnknownAdversary,
    adversary_names,
    format_landscape,
    landscape,
    make_adversary,
    named_scenario,
    random_points,
)
from .models import Light, ModelClass
from .problems import SATISFIED, UNDETERMINED, VIOLATED, MonitorVerdict
from .schedule import SchedulerClass, validate_schedule
from .sim import extract_embedded_execution, mega_cycle_report, same_snapshot_violations, sim_wrap
from .strategies import builtin_adversaries
from .trace import Trace, TraceError, deserialize, fairness_windows, serialize

EXIT_OK, EXIT_ERROR, EXIT_VIOLATED, EXIT_UNDETERMINED = 0, 1, 2, 3
EXIT_CODES = {SATISFIED: EXIT_OK, VIOLATED: EXIT_VIOLATED, UNDETERMINED: EXIT_UNDETERMINED}


class ConfigError(ValueError):
    """Bad command-line input; reported as a message with exit code 1."""


@dataclass
class ExperimentSpec:
    scenario: str
    algorithm: str
    scheduler: str
    adversary: str
    seed: int
    horizon: int
    monitor: str | None = None
    model: str | None = None
    monitor_params: dict[str, Any] = field(default_factory=dict)


def default_seed() -> int:
    raw = os.environ.get("LCM_ARENA_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"LCM_ARENA_SEED must be an integer, got {raw!r}") from None


def _guess_monitor(algo: str) -> str | None:
    if algo.startswith("tf_"):
        return "tf"
    if algo.startswith(("gcncl", "naive_fcom")):
        return "gcncl"
    if algo.startswith(("half_move", "never_move")):
        return "mlcv"
    return None


def load_scenario(name: str, seed: int, monitor: str | None) -> Scenario:
    """A bundled scenario name or a JSON file ``{"positions": [[x, y], ...]}``
    with optional ``chirality`` and ``lights``."""
    if name == "auto":
        name = "tf-example" if monitor == "tf" else "pair"
    points = named_scenario(name, seed)
    if points is not None:
        return Scenario.of(points)
    path = Path(name)
    if not path.is_file():
        raise ConfigError(f"unknown scenario {name!r} (bundled: {', '.join(SCENARIO_NAMES)}, or a JSON file)")
    try:
        data = json.loads(path.read_text())
        positions = [(float(x), float(y)) for x, y in data["positions"]]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"bad scenario file {name}: {exc}") from None
    lights = data.get("lights")
    return Scenario.of(
        positions,
        chirality=bool(data.get("chirality", True)),
        lights=tuple(Light(l) for l in lights) if lights is not None else None,
    )


def bind_algorithm(name: str, model: str | None):
    try:
        alg = get_algorithm(name)
    except UnknownAlgorithm:
        raise ConfigError(f"unknown algorithm {name!r} (known: {', '.join(algorithm_names())})") from None
    if model is None or model.upper() == alg.model.value:
        return alg
    try:
        target = ModelClass(model.upper())
    except ValueError:
        raise ConfigError(f"unknown model {model!r}") from None
    if alg.lights.state_space() > 1:
        raise ConfigError(f"{alg.name} uses lights; it cannot be rebound from {alg.model.value} to {target.value}")
    return alg.as_model(target)


def parse_class(name: str) -> SchedulerClass:
    try:
        return SchedulerClass.parse(name)
    except (KeyError, ValueError):
        names = ", ".join(c.value for c in SchedulerClass)
        raise ConfigError(f"unknown scheduler class {name!r} (known: {names})") from None


def apply_monitor(name: str, trace: Trace, params: dict[str, Any]) -> MonitorVerdict:
    fn = MONITORS[name]
    if name in ("mlcv", "rdv"):
        return fn(trace, eps=params.get("eps"))
    if name == "tf" and params.get("eps") is not None:
        return fn(trace, tol=params["eps"])
    return fn(trace)


def execute(spec: ExperimentSpec) -> tuple[Trace, MonitorVerdict | None, Any]:
    cls = parse_class(spec.scheduler)
    if spec.horizon < 0:
        raise ConfigError("horizon must be non-negative")
    alg = bind_algorithm(spec.algorithm, spec.model)
    monitor = spec.monitor or _guess_monitor(spec.algorithm)
    if monitor is not None and monitor not in MONITORS:
        raise ConfigError(f"unknown monitor {monitor!r} (known: {', '.join(MONITORS)})")
    scenario = load_scenario(spec.scenario, spec.seed, monitor)
    try:
        adv = make_adversary(spec.adversary, spec.seed)
    except (UnknownAdversary, ValueError) as exc:
        raise ConfigError(f"unknown adversary {spec.adversary!r} (known: {', '.join(adversary_names())})") from exc
    if not adv.supports(cls):
        raise ConfigError(f"adversary {spec.adversary} cannot drive {cls.value}")
    try:
        trace = run(scenario, alg, cls, adv, spec.horizon, seed=spec.seed)
    except AdversaryConstraintViolation as exc:
        raise ConfigError(f"adversary broke the {cls.value} rules: {exc}") from None
    if monitor is None:
        return trace, None, adv
    try:
        return trace, apply_monitor(monitor, trace, spec.monitor_params), adv
    except ValueError as exc:
        raise ConfigError(f"monitor {monitor}: {exc}") from None


def _emit(payload: dict, as_json: bool, text: str) -> None:
    print(json.dumps(payload, sort_keys=True) if as_json else text)


def cmd_run(args: argparse.Namespace) -> int:
    spec = ExperimentSpec(
        scenario=args.scenario,
        algorithm=args.algo,
        scheduler=args.scheduler,
        adversary=args.adversary,
        seed=default_seed() if args.seed is None else args.seed,
        horizon=args.horizon,
        monitor=args.monitor,
        model=args.model,
        monitor_params={"eps": args.eps},
    )
    trace, verdict, adv = execute(spec)
    if args.trace_out:
        Path(args.trace_out).write_bytes(serialize(trace))
    status = verdict.status if verdict else UNDETERMINED
    report = {
        "algorithm": trace.header.algorithm,
        "adversary": trace.header.adversary,
        "scheduler": trace.header.scheduler,
        "seed": spec.seed,
        "events": len(trace.events),
        "last_time": trace.last_time,
        "verdict": verdict.to_json() if verdict else {"status": UNDETERMINED, "witness": "no monitor"},
    }
    if hasattr(adv, "report"):
        report["adversary_report"] = adv.report()
    text = f"{status}"
    if verdict and verdict.time is not None:
        text += f" at t={verdict.time} ({verdict.clause})"
    if verdict and verdict.witness:
        text += f": {verdict.witness}"
    _emit(report, args.json, text)
    return EXIT_CODES[status]


def read_trace(path: str) -> Trace:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return deserialize(data)


def verify_report(trace: Trace, cls: SchedulerClass, sim: bool) -> dict:
    violations = validate_schedule(trace, cls)
    fairness = fairness_windows(trace)
    report: dict[str, Any] = {
        "class": cls.value,
        "events": len(trace.events),
        "schedule": {"valid": not violations, "violations": [v.to_json() for v in violations[:20]]},
        "fairness": {"window": fairness.window, "fair": fairness.fair, "flagged": len(fairness.flagged)},
    }
    if sim:
        emb = extract_embedded_execution(trace)
        mega = mega_cycle_report(trace)
        report["atomicity"] = emb.to_json()
        report["mega_cycles"] = mega.to_json()
        if cls is SchedulerClass.LC_ATOMIC:
            report["same_snapshot_violations"] = len(same_snapshot_violations(trace))
    return report


def _verify_ok(report: dict) -> bool:
    ok = report["schedule"]["valid"]
    if "atomicity" in report:
        ok = ok and report["atomicity"]["valid"] and report["mega_cycles"]["fair"]
        ok = ok and not report.get("same_snapshot_violations")
    return ok


def cmd_verify(args: argparse.Namespace, sim: bool | None = None) -> int:
    trace = read_trace(args.trace)
    cls = parse_class(args.cls or trace.header.scheduler)
    report = verify_report(trace, cls, args.sim if sim is None else sim)
    print(json.dumps(report, sort_keys=True, indent=None if args.compact else 2))
    return EXIT_OK if _verify_ok(report) else EXIT_VIOLATED


def cmd_landscape(args: argparse.Namespace) -> int:
    if args.seeds < 1:
        raise ConfigError("--seeds must be at least 1")
    options = {"light_delay": args.mutate != "no-delay", "exist_m_guard": args.mutate != "no-guard"}
    cells = landscape(args.seeds, **options)
    print(format_landscape(cells))
    return EXIT_OK if all(c.passed for c in cells) else EXIT_VIOLATED


def cmd_simulate_wrap(args: argparse.Namespace) -> int:
    cls = parse_class(args.scheduler)
    seed = default_seed() if args.seed is None else args.seed
    try:
        payload = get_algorithm(args.payload)
    except UnknownAlgorithm:
        raise ConfigError(f"unknown algorithm {args.payload!r}") from None
    alg = sim_wrap(payload)
    adv = builtin_adversaries(args.adversary, seed)
    if not adv.supports(cls):
        raise ConfigError(f"adversary {args.adversary} cannot drive {cls.value}")
    trace = run(
        Scenario.of(random_points(args.n, seed)), alg, cls, adv, 1 << 62, max_events=args.events, seed=seed
    )
    if args.trace_out:
        Path(args.trace_out).write_bytes(serialize(trace))
    report = verify_report(trace, cls, True)
    print(json.dumps(report, sort_keys=True, indent=2))
    return EXIT_OK if _verify_ok(report) else EXIT_VIOLATED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lcm-arena", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one experiment and check it with a monitor")
    r.add_argument("--scenario", default="auto", help=f"{', '.join(SCENARIO_NAMES)} or a JSON file")
    r.add_argument("--algo", required=True)
    r.add_argument("--model", help="rebind a light-free algorithm to another model")
    r.add_argument("--scheduler", default="ASYNCH")
    r.add_argument("--adversary", default="uniform-random-fair")
    r.add_argument("--seed", type=int, help="defaults to $LCM_ARENA_SEED or 0")
    r.add_argument("--horizon", type=int, default=400)
    r.add_argument("--monitor", help="mlcv, gcncl, tf or rdv (guessed from --algo)")
    r.add_argument("--eps", type=float, help="monitor tolerance")
    r.add_argument("--trace-out")
    r.add_argument("--json", action="store_true", help="print the verdict as JSON")
    r.set_defaults(func=cmd_run)

    for name, sim in (("verify", None), ("verify-sim", True)):
        v = sub.add_parser(name, help="check a trace file against a scheduler class")
        v.add_argument("trace")
        v.add_argument("--class", dest="cls", help="defaults to the class in the trace header")
        if sim is None:
            v.add_argument("--sim", action="store_true", help="also run the SIM verifiers")
        v.add_argument("--compact", action="store_true")
        v.set_defaults(func=cmd_verify if sim is None else (lambda a: cmd_verify(a, True)))

    ls = sub.add_parser("landscape", help="run the separation matrix and print a pass/fail table")
    ls.add_argument("--seeds", type=int, default=20)
    ls.add_argument("--mutate", choices=("none", "no-delay", "no-guard"), default="none")
    ls.set_defaults(func=cmd_landscape)

    s = sub.add_parser("simulate-wrap", help="run SIM(payload) and verify the result")
    s.add_argument("--payload", default="color_cycler")
    s.add_argument("--n", type=int, default=3)
    s.add_argument("--scheduler", default="ASYNCH")
    s.add_argument("--adversary", default="uniform-random-fair")
    s.add_argument("--seed", type=int)
    s.add_argument("--events", type=int, default=5000)
    s.add_argument("--trace-out")
    s.set_defaults(func=cmd_simulate_wrap)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, TraceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
