"""Genotype encoding and the cap-threshold decoder.

A genotype holds four strings of equal length (one gene per operation):

* ``sequence``  - job indices; the n-th occurrence of job i places operation (i, n),
* ``machine``   - option index into the eligible machines of each operation,
* ``price_cap`` - tolerated price (EUR/MWh) per operation,
* ``emission_cap`` - tolerated emission factor (gCO2eq/kWh) per operation.

The last three are indexed by the flat (job, position) order of
:attr:`Instance.operations`.

An operation is admitted at start step t when the caps are at least the
window "needs" at t: under ``cap_rule="mean"`` (default) the average price and
emission factor over the occupied steps, under ``cap_rule="max"`` the largest
per-step value.  The mean rule makes :func:`encode` exact: decoding the
encoding of any schedule yields a schedule that is no worse in all three
objectives.
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ParameterError, ScheduleError
from .model import EnrichedInstance, Instance

EXTEND = "extend-horizon"
RELAX = "relax-caps"
RELAX_MODES = (EXTEND, RELAX)
CAP_RULES = ("mean", "max")


class ObjectiveVector(NamedTuple):
    makespan: int
    energy_cost: float
    emissions: float


class ScheduledOp(NamedTuple):
    job: int
    op: int
    machine: int
    start: int
    end: int


@dataclass(frozen=True)
class Genotype:
    sequence: tuple[int, ...]
    machine: tuple[int, ...]
    price_cap: tuple[float, ...]
    emission_cap: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.sequence)

    def problems(self, instance: Instance) -> list[str]:
        out = []
        n = instance.operation_count
        for name in ("sequence", "machine", "price_cap", "emission_cap"):
            if len(getattr(self, name)) != n:
                out.append(f"{name} has length {len(getattr(self, name))}, expected {n}")
        if out:
            return out
        counts = [0] * instance.job_count
        for job in self.sequence:
            if not 1 <= job <= instance.job_count:
                out.append(f"sequence mentions unknown job {job}")
            else:
                counts[job - 1] += 1
        for i, (have, want) in enumerate(zip(counts, instance.op_counts), start=1):
            if have != want:
                out.append(f"job {i} occurs {have} times in sequence, expected {want}")
        for idx, (gene, op) in enumerate(zip(self.machine, instance.operations)):
            if not 0 <= gene < len(op.options):
                out.append(f"machine gene {idx} = {gene} has no option")
        return out

    def is_valid(self, instance: Instance) -> bool:
        return not self.problems(instance)


@dataclass(frozen=True)
class Schedule:
    ops: tuple[ScheduledOp, ...]   # in (job, op) order
    horizon_used: int

    @property
    def makespan(self) -> int:
        return max((o.end for o in self.ops), default=0)

    def by_machine(self) -> dict[int, list[ScheduledOp]]:
        lanes: dict[int, list[ScheduledOp]] = {}
        for o in self.ops:
            lanes.setdefault(o.machine, []).append(o)
        for lane in lanes.values():
            lane.sort(key=lambda o: o.start)
        return lanes


def cap_grid(e: EnrichedInstance, which: int, cap_rule: str = "mean") -> np.ndarray:
    """Sorted distinct window needs (0 price, 1 emission) over every duration in the instance.

    Decoding depends on a cap only through which of these values it reaches.
    """
    def build():
        taus = sorted({tau for op in e.instance.operations for _, tau in op.options})
        vals = np.concatenate([np.asarray(e.window_needs(tau, cap_rule)[which]) for tau in taus])
        return np.unique(vals)
    return e.cached(("grid", which, cap_rule), build)


def draw_cap(e: EnrichedInstance, rng, which: int, cap_rule: str = "mean") -> float:
    """Uniform draw over the series range, plus an atom at its maximum.

    Slots whose need equals the series maximum are admitted only by a cap at
    that maximum, which a continuous draw never produces.  The atom gets the
    share of one threshold class of :func:`cap_grid`.
    """
    lo, hi = e.price_range if which == 0 else e.emission_range
    if rng.random() * len(cap_grid(e, which, cap_rule)) < 1.0:
        return hi
    return rng.uniform(lo, hi)


def random_genotype(e: EnrichedInstance, rng, cap_rule: str = "mean") -> Genotype:
    """Uniform random genotype; ``rng`` is a :class:`random.Random`."""
    inst = e.instance
    sequence = [op.job for op in inst.operations]
    rng.shuffle(sequence)
    machine = tuple(rng.randrange(len(op.options)) for op in inst.operations)
    n = inst.operation_count
    price_cap = tuple(draw_cap(e, rng, 0, cap_rule) for _ in range(n))
    emission_cap = tuple(draw_cap(e, rng, 1, cap_rule) for _ in range(n))
    return Genotype(tuple(sequence), machine, price_cap, emission_cap)


# ---------------------------------------------------------------------------
# decoding

def _tables(e: EnrichedInstance, tau: int, rule: str):
    """Phase-indexed price and emission need arrays for duration ``tau``."""
    def build():
        need_p, need_e = (np.asarray(v, dtype=float) for v in e.window_needs(tau, rule))
        return need_p, need_e
    return e.cached(("decode", rule, tau), build)


def _earliest_phase(lo: int, hi: int, admitted: np.ndarray, n: int) -> int | None:
    """Earliest t in [lo, hi] whose phase t % n is in the sorted array ``admitted``."""
    if lo > hi or len(admitted) == 0:
        return None
    ph = lo % n
    i = int(np.searchsorted(admitted, ph))
    t = lo - ph + (int(admitted[i]) if i < len(admitted) else n + int(admitted[0]))
    return t if t <= hi else None


def _gaps(busy, ready, lo_t, hi_t, tau):
    """Start ranges [a, b] within [max(ready, lo_t), hi_t] where the machine is idle long enough."""
    lo_t = max(lo_t, ready)
    # intervals are disjoint and sorted, so ends are sorted too
    first = bisect.bisect_right(busy, lo_t, key=lambda iv: iv[1])
    prev_end = busy[first - 1][1] if first else 0
    for a, b in itertools.islice(busy, first, None):
        start, stop = max(prev_end, lo_t), min(a - tau, hi_t)
        if start <= stop:
            yield start, stop
        if a > hi_t:
            return
        prev_end = max(prev_end, b)
    start = max(prev_end, lo_t)
    if start <= hi_t:
        yield start, hi_t


def _first_admitted(busy, ready, lo_t, hi_t, tau, n, admitted):
    for a, b in _gaps(busy, ready, lo_t, hi_t, tau):
        t = _earliest_phase(a, b, admitted, n)
        if t is not None:
            return t
    return None


def _relaxed_start(busy, ready, hi_t, tau, n, need_p, need_e, cap_p, cap_e):
    """Latest machine-idle start not weakly dominated by an earlier one in cap-clipped needs.

    Raising the caps to that start's needs admits it first.  None if the
    machine has no room before ``hi_t``.
    """
    stair_p: list[float] = []        # prefix Pareto staircase, p ascending, e descending
    stair_e: list[float] = []
    best = None
    for a, b in _gaps(busy, ready, 0, hi_t, tau):
        ts = np.arange(a, min(b, a + n - 1) + 1)     # a repeated phase is dominated by its first copy
        ps = np.maximum(need_p[ts % n], cap_p).tolist()
        es = np.maximum(need_e[ts % n], cap_e).tolist()
        for t, p, q in zip(ts.tolist(), ps, es):
            i = bisect.bisect_right(stair_p, p)
            if i and stair_e[i - 1] <= q:
                continue
            j = bisect.bisect_left(stair_p, p)
            k = j
            while k < len(stair_e) and stair_e[k] >= q:
                k += 1
            stair_p[j:k] = [p]
            stair_e[j:k] = [q]
            best = t
    return best
def _insert(busy, interval):
    lo, hi = 0, len(busy)
    while lo < hi:
        mid = (lo + hi) // 2
        if busy[mid][0] < interval[0]:
            lo = mid + 1
        else:
            hi = mid
    busy.insert(lo, interval)


def decode(
    g: Genotype,
    e: EnrichedInstance,
    relax_mode: str = EXTEND,
    cap_rule: str = "mean",
) -> Schedule:
    """Place operations in sequence-string order at their earliest admitted start.

    A start t is admitted when t >= end of the job predecessor, the chosen
    machine is idle for the whole duration (gaps between already placed
    operations may be used) and the window needs at t do not exceed the caps.

    When nothing inside the current horizon is admitted:

    * ``extend-horizon`` grows the horizon in 25% increments of the profile
      length, the profile repeating cyclically.  If the caps cannot be met at
      any phase of the profile, the operation goes one full profile cycle
      after the point from which its machine is idle for good, with its caps
      raised to what that slot needs.
    * ``relax-caps`` raises the violated caps just enough to admit a
      machine-feasible start inside the horizon.  With needs clipped from
      below at the caps, it takes the latest start that no earlier start
      matches or beats on both needs; that start is then the first one the
      raised caps admit.  With one violated cap this is the cheapest slot on
      that axis, earliest on ties.  The horizon only grows if the machine
      has no room at all.

    Raising a cap never delays the operation: in either mode the chosen
    start can only move earlier as the caps go up.
    """
    if relax_mode not in RELAX_MODES:
        raise ParameterError(f"unknown relax mode {relax_mode!r}")
    if cap_rule not in CAP_RULES:
        raise ParameterError(f"unknown cap rule {cap_rule!r}")
    inst = e.instance
    n = e.horizon
    step = max(1, -(-n // 4))
    horizon = n
    next_pos = [0] * inst.job_count
    ready = [0] * inst.job_count
    busy: dict[int, list[tuple[int, int]]] = {}
    placed: dict[int, ScheduledOp] = {}

    for job in g.sequence:
        pos = next_pos[job - 1]
        next_pos[job - 1] = pos + 1
        idx = inst.op_offsets[job - 1] + pos
        k, tau = inst.operations[idx].options[g.machine[idx]]
        need_p, need_e = _tables(e, tau, cap_rule)
        cap_p, cap_e = g.price_cap[idx], g.emission_cap[idx]
        admitted = np.flatnonzero((need_p <= cap_p) & (need_e <= cap_e))
        lane = busy.setdefault(k, [])
        r = ready[job - 1]

        t = _first_admitted(lane, r, 0, horizon - tau, tau, n, admitted)
        if t is None and relax_mode == EXTEND:
            if len(admitted):
                while t is None:
                    lo_t = horizon - tau + 1
                    horizon += step
                    t = _first_admitted(lane, r, lo_t, horizon - tau, tau, n, admitted)
            else:
                t = max(r, lane[-1][1] if lane else 0) + n - 1
                while horizon < t + tau:
                    horizon += step
        elif t is None:
            t = _relaxed_start(lane, r, horizon - tau, tau, n, need_p, need_e, cap_p, cap_e)
            while t is None:
                horizon += step
                t = _relaxed_start(lane, r, horizon - tau, tau, n, need_p, need_e, cap_p, cap_e)

        _insert(lane, (t, t + tau))
        ready[job - 1] = t + tau
        placed[idx] = ScheduledOp(job, pos + 1, k, t, t + tau)

    ops = tuple(placed[i] for i in range(len(placed)))
    return Schedule(ops, horizon)


# ---------------------------------------------------------------------------
# evaluation

def schedule_problems(s: Schedule, e: EnrichedInstance) -> list[str]:
    """Everything that makes ``s`` an invalid schedule for ``e`` (empty when valid)."""
    inst = e.instance
    out = []
    if len(s.ops) != inst.operation_count:
        return [f"schedule has {len(s.ops)} operations, instance has {inst.operation_count}"]
    for o, spec in zip(s.ops, inst.operations):
        if (o.job, o.op) != (spec.job, spec.position):
            out.append(f"entry ({o.job},{o.op}) out of order, expected ({spec.job},{spec.position})")
            continue
        taus = dict(spec.options)
        if o.machine not in taus:
            out.append(f"({o.job},{o.op}) on ineligible machine {o.machine}")
            continue
        if o.start < 0:
            out.append(f"({o.job},{o.op}) starts before 0")
        if o.end != o.start + taus[o.machine]:
            out.append(f"({o.job},{o.op}) end {o.end} != start {o.start} + duration {taus[o.machine]}")
        if o.end > s.horizon_used:
            out.append(f"({o.job},{o.op}) ends after horizon {s.horizon_used}")
        if o.op > 1:
            pred = s.ops[inst.op_index(o.job, o.op - 1)]
            if o.start < pred.end:
                out.append(f"({o.job},{o.op}) starts before ({pred.job},{pred.op}) ends")
    if s.horizon_used < e.horizon:
        out.append(f"horizon_used {s.horizon_used} shorter than profile {e.horizon}")
    if out:
        return out
    for k, lane in s.by_machine().items():
        for a, b in zip(lane, lane[1:]):
            if b.start < a.end:
                out.append(f"({a.job},{a.op}) and ({b.job},{b.op}) overlap on machine {k}")
    return out


def evaluate(s: Schedule, e: EnrichedInstance) -> ObjectiveVector:
    """Makespan, total energy cost (EUR) and total emissions (gCO2eq).

    Per-operation values equal :func:`op_cost` on the profile tiled to
    ``s.horizon_used``.
    """
    problems = schedule_problems(s, e)
    if problems:
        raise ScheduleError(problems)
    return _objectives(s, e)


def _objectives(s: Schedule, e: EnrichedInstance) -> ObjectiveVector:
    n = e.horizon
    costs, emissions = [], []
    for o in s.ops:
        sp, se = e.window_sums(o.end - o.start)
        kwh = e.step_kwh(o.job)
        costs.append(sp[o.start % n] * kwh / 1000.0)
        emissions.append(se[o.start % n] * kwh)
    return ObjectiveVector(s.makespan, math.fsum(costs), math.fsum(emissions))


def op_breakdown(s: Schedule, e: EnrichedInstance) -> list[tuple[float, float]]:
    """(cost, emissions) of each scheduled operation, in schedule order."""
    n = e.horizon
    out = []
    for o in s.ops:
        sp, se = e.window_sums(o.end - o.start)
        kwh = e.step_kwh(o.job)
        out.append((sp[o.start % n] * kwh / 1000.0, se[o.start % n] * kwh))
    return out


def encode(s: Schedule, e: EnrichedInstance, cap_rule: str = "mean") -> Genotype:
    """Genotype whose decoding reproduces ``s`` or something at least as good.

    Sequence lists jobs by start time (ties: machine, then job); caps are set
    to exactly what each operation's slot needs.
    """
    inst = e.instance
    n = e.horizon
    order = sorted(s.ops, key=lambda o: (o.start, o.machine, o.job))
    sequence = tuple(o.job for o in order)
    machine, price_cap, emission_cap = [], [], []
    for o, spec in zip(s.ops, inst.operations):
        machine.append([k for k, _ in spec.options].index(o.machine))
        need_p, need_e = e.window_needs(o.end - o.start, cap_rule)
        price_cap.append(need_p[o.start % n])
        emission_cap.append(need_e[o.start % n])
    return Genotype(sequence, tuple(machine), tuple(price_cap), tuple(emission_cap))


def schedule_record(s: Schedule, e: EnrichedInstance) -> dict:
    """JSON-ready export of a schedule with per-operation cost and emissions."""
    obj = evaluate(s, e)
    rows = []
    for o, (cost, em) in zip(s.ops, op_breakdown(s, e)):
        rows.append({"job": o.job, "op": o.op, "machine": o.machine, "start": o.start,
                     "end": o.end, "cost_eur": cost, "emissions_g": em})
    return {
        "objectives": {"makespan": obj.makespan, "energy_cost_eur": obj.energy_cost,
                       "emissions_g": obj.emissions},
        "horizon_used": s.horizon_used,
        "operations": rows,
    }


def schedule_from_record(record: dict) -> Schedule:
    ops = tuple(ScheduledOp(r["job"], r["op"], r["machine"], r["start"], r["end"])
                for r in record["operations"])
    return Schedule(ops, record["horizon_used"])
