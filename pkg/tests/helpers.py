"""Hand-built traces for monitor tests."""

from lcm_arena.geometry import Point
from lcm_arena.models import Light
from lcm_arena.trace import CycleEvent, Trace, TraceBuilder, TraceHeader


def moves_trace(init, moves, lights=None):
    """Each move ``(t, robot, dest)`` is a whole cycle at time ``t``;
    ``dest=None`` is a null move."""
    pts = tuple(Point(*p) for p in init)
    lights = lights or (Light(),) * len(pts)
    b = TraceBuilder(TraceHeader(len(pts), "OBLOT", "ASYNCH", pts, tuple(lights)))
    pos = list(pts)
    by_time: dict[int, list] = {}
    for t, r, dest in moves:
        by_time.setdefault(t, []).append((r, dest))
    for t in sorted(by_time):
        batch = sorted(by_time[t], key=lambda m: m[0])
        dests = {}
        for r, dest in batch:
            dests[r] = pos[r] if dest is None else Point(*dest)
        for kind in ("L", "C", "MB", "ME"):
            for r, _ in batch:
                here, to = pos[r], dests[r]
                if kind == "C":
                    b.append(CycleEvent(t, r, kind, here, light=lights[r], dest=to))
                elif kind == "MB":
                    b.append(CycleEvent(t, r, kind, here, dest=to))
                else:
                    b.append(CycleEvent(t, r, kind, to if kind == "ME" else here))
        for r, _ in batch:
            pos[r] = dests[r]
    return b.build()






def settle(t, robots):
    """Two null cycles per robot starting at time ``t``."""
    return [(t + k, r, None) for k in range(2) for r in robots]
