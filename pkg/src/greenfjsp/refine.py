"""Greedy time-shift refinement of a decoded schedule.

Machine assignment and the order of operations on each machine stay fixed;
only start times move, inside windows bounded by the job neighbours, the
machine neighbours and the parent's makespan.  One child chases energy cost,
the other emissions.
"""

from __future__ import annotations

import numpy as np

from .decode import Schedule, ScheduledOp
from .model import EnrichedInstance


def refine_queue(s: Schedule, e: EnrichedInstance) -> list[int]:
    """Operation indices by energy use, largest first; ties by (job, op)."""
    return sorted(range(len(s.ops)),
                  key=lambda i: (-e.energy_kwh(s.ops[i].job, s.ops[i].end - s.ops[i].start),
                                 s.ops[i].job, s.ops[i].op))


def _neighbours(s: Schedule) -> tuple[list[int | None], list[int | None]]:
    """Machine predecessor and successor (as op indices) in s's machine order."""
    pred: list[int | None] = [None] * len(s.ops)
    succ: list[int | None] = [None] * len(s.ops)
    lanes: dict[int, list[int]] = {}
    for idx, o in enumerate(s.ops):
        lanes.setdefault(o.machine, []).append(idx)
    for lane in lanes.values():
        lane.sort(key=lambda i: s.ops[i].start)
        for a, b in zip(lane, lane[1:]):
            succ[a], pred[b] = b, a
    return pred, succ


def _window(ops, idx, pred, succ, limit) -> tuple[int, int]:
    o = ops[idx]
    tau = o.end - o.start
    lo = 0
    hi = limit
    if o.op > 1:
        lo = max(lo, ops[idx - 1].end)
    if idx + 1 < len(ops) and ops[idx + 1].job == o.job:
        hi = min(hi, ops[idx + 1].start)
    if pred[idx] is not None:
        lo = max(lo, ops[pred[idx]].end)
    if succ[idx] is not None:
        hi = min(hi, ops[succ[idx]].start)
    return lo, hi - tau


def feasible_window(s: Schedule, op: tuple[int, int], e: EnrichedInstance) -> tuple[int, int]:
    """Range (l, u) of starts for ``op`` that keep ``s`` valid with its structure frozen."""
    idx = e.instance.op_index(*op)
    pred, succ = _neighbours(s)
    return _window(s.ops, idx, pred, succ, s.makespan)


def _sum_arrays(e: EnrichedInstance, tau: int):
    return e.cached(("refine", tau), lambda: tuple(np.asarray(v, dtype=float)
                                                    for v in e.window_sums(tau)))


def _refined(parent: Schedule, e: EnrichedInstance, queue, which: int) -> Schedule:
    n = e.horizon
    ops = list(parent.ops)
    pred, succ = _neighbours(parent)
    limit = parent.makespan
    for idx in queue:
        o = ops[idx]
        tau = o.end - o.start
        lo, hi = _window(ops, idx, pred, succ, limit)
        table = _sum_arrays(e, tau)[which]
        kwh = e.step_kwh(o.job)
        sums = table[np.arange(lo, hi + 1) % n]
        # same arithmetic as evaluate(), so comparisons are exact
        values = sums * kwh / 1000.0 if which == 0 else sums * kwh
        t = lo + int(np.argmin(values))
        ops[idx] = ScheduledOp(o.job, o.op, o.machine, t, t + tau)
    return Schedule(tuple(ops), parent.horizon_used)


def local_refine(parent: Schedule, e: EnrichedInstance) -> tuple[Schedule, Schedule]:
    """Return (cheapest-energy child, lowest-emission child) of ``parent``.

    Operations are visited once, in :func:`refine_queue` order; each moves to
    the best start of its current window (earliest on ties), and later
    windows see the moved operation.
    """
    queue = refine_queue(parent, e)
    return _refined(parent, e, queue, 0), _refined(parent, e, queue, 1)
