"""Exact reference machinery for tiny instances.

* :func:`dominates` and :class:`ParetoFront`,
* :func:`brute_force_pareto`, an exhaustive label-setting enumeration of every
  schedule that fits inside the profile horizon,
* :func:`emit_milp`, a writer for the time-indexed MILP in LP-file format,
  scalarised by epsilon constraints, for checking with an external solver.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .decode import Genotype, ObjectiveVector, Schedule, ScheduledOp, evaluate
from .errors import LimitError, ParameterError
from .model import EnrichedInstance, op_cost


def dominates(a, b) -> bool:
    """Minimisation dominance: a <= b everywhere and a < b somewhere."""
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


@dataclass(frozen=True)
class FrontMember:
    objectives: ObjectiveVector
    schedule: Schedule
    genotype: Genotype | None = field(default=None, compare=False)


@dataclass(frozen=True)
class ParetoFront:
    members: tuple[FrontMember, ...]

    @classmethod
    def from_candidates(cls, candidates: Iterable[FrontMember]) -> "ParetoFront":
        """Non-dominated, objective-unique subset in canonical order.

        Among members with equal objectives the one whose schedule sorts first
        is kept, so the result does not depend on the input order.
        """
        pool = sorted(candidates, key=lambda m: (tuple(m.objectives), m.schedule.ops,
                                                 m.schedule.horizon_used))
        kept: list[FrontMember] = []
        for m in pool:
            if kept and tuple(kept[-1].objectives) == tuple(m.objectives):
                continue
            if any(dominates(k.objectives, m.objectives) for k in kept):
                continue
            kept.append(m)
        return cls(tuple(kept))

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def objective_set(self) -> list[ObjectiveVector]:
        return [m.objectives for m in self.members]


# ---------------------------------------------------------------------------
# brute force

def brute_force_pareto(e: EnrichedInstance, max_ops: int = 6, max_horizon: int = 24) -> ParetoFront:
    """Exact Pareto front over all schedules ending within the profile horizon.

    Operations are added in non-decreasing start order (ties by flat operation
    index), which reaches every schedule exactly once.  A state fixes what the
    remaining operations can do; partial labels (makespan, exact cost, exact
    emissions) that are dominated within a state are dropped.  Costs are
    accumulated as exact fractions of the per-operation floats, so pruning
    never depends on summation order.
    """
    inst = e.instance
    n_ops, horizon = inst.operation_count, e.horizon
    if n_ops > max_ops:
        raise LimitError(f"{n_ops} operations exceed the brute-force limit of {max_ops}")
    if horizon > max_horizon:
        raise LimitError(f"horizon {horizon} exceeds the brute-force limit of {max_horizon}")
    if n_ops == 0:
        empty = Schedule((), horizon)
        return ParetoFront((FrontMember(evaluate(empty, e), empty),))

    machines = sorted({k for op in inst.operations for k, _ in op.options})
    m_slot = {k: i for i, k in enumerate(machines)}
    unit: dict[tuple[int, int, int], tuple[float, float]] = {}

    def unit_cost(idx, k, t):
        key = (idx, k, t)
        if key not in unit:
            op = inst.operations[idx]
            unit[key] = op_cost(e, op.job, op.position, k, t)
        return unit[key]

    counts = inst.op_counts
    offsets = inst.op_offsets
    start_state = (tuple([0] * inst.job_count), tuple([0] * inst.job_count),
                   tuple([0] * len(machines)), 0, -1)
    layer = {start_state: [(0, Fraction(0), Fraction(0), ())]}
    for _ in range(n_ops):
        nxt: dict[tuple, list] = {}
        for (pos, ready, free, t_cur, last), labels in layer.items():
            for j in range(inst.job_count):
                if pos[j] == counts[j]:
                    continue
                idx = offsets[j] + pos[j]
                for k, tau in inst.operations[idx].options:
                    mi = m_slot[k]
                    lo = max(t_cur, ready[j], free[mi])
                    if lo == t_cur and idx < last:
                        lo += 1
                    for t in range(lo, horizon - tau + 1):
                        cost, em = unit_cost(idx, k, t)
                        fc, fe = Fraction(cost), Fraction(em)
                        end = t + tau
                        new_pos = pos[:j] + (pos[j] + 1,) + pos[j + 1:]
                        # canonical form: finished jobs 0, others never below t
                        new_ready = tuple(0 if new_pos[q] == counts[q] else max(r, t)
                                          for q, r in enumerate(ready[:j] + (end,) + ready[j + 1:]))
                        new_free = tuple(max(f, t) for f in free[:mi] + (end,) + free[mi + 1:])
                        key = (new_pos, new_ready, new_free, t, idx)
                        bucket = nxt.setdefault(key, [])
                        for cm, c, m, placed in labels:
                            _add_label(bucket, (max(cm, end), c + fc, m + fe,
                                                placed + ((idx, k, t),)))
        layer = nxt

    candidates = []
    for labels in layer.values():
        for _, _, _, placed in labels:
            ops = [None] * n_ops
            for idx, k, t in placed:
                op = inst.operations[idx]
                ops[idx] = ScheduledOp(op.job, op.position, k, t, t + op.duration_on(k))
            sched = Schedule(tuple(ops), horizon)
            candidates.append(FrontMember(evaluate(sched, e), sched))
    return ParetoFront.from_candidates(candidates)


def _add_label(bucket: list, label) -> None:
    key = label[:3]
    for other in bucket:
        if all(x <= y for x, y in zip(other[:3], key)):
            return
    bucket[:] = [o for o in bucket if not all(x <= y for x, y in zip(key, o[:3]))]
    bucket.append(label)


# ---------------------------------------------------------------------------
# MILP emission

OBJECTIVES = ("makespan", "cost", "emissions")
_OBJ_VAR = {"makespan": "cmax", "cost": "psum", "emissions": "esum"}


@dataclass(frozen=True)
class MilpEmission:
    objective: str = "makespan"
    eps_makespan: float | None = None
    eps_cost: float | None = None
    eps_emissions: float | None = None
    big_l: float | None = None          # None means 2 * horizon
    max_variables: int = 200_000

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ParameterError(f"unknown objective {self.objective!r}")


@dataclass(frozen=True)
class MilpCounts:
    x: int
    p: int
    y: int
    rows: dict[str, int]


def milp_counts(n_ops: int, n_machines: int, horizon: int, n_jobs: int,
                n_eps: int = 0) -> MilpCounts:
    """Closed-form variable and row counts of the emitted model."""
    om = n_ops * n_machines
    pairs = n_machines * n_ops * (n_ops - 1) // 2
    rows = {
        "makespan": om, "cost": 1, "emissions": 1, "assign": n_ops,
        "alloc": om, "duration": om, "precedence": n_ops - n_jobs,
        "disj_a": pairs, "disj_b": pairs, "link": om,
        "link_lo": om * horizon, "link_hi": om * horizon, "eps": n_eps,
    }
    return MilpCounts(om, om * horizon, pairs, rows)


def _num(v: float) -> str:
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def _row(name: str, terms: list[tuple[float, str]], sense: str, rhs: float) -> list[str]:
    parts = []
    for coef, var in terms:
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        parts.append(f"{sign} {var}" if mag == 1 else f"{sign} {_num(mag)} {var}")
    if not parts:
        parts = ["0 cmax"]
    lines, cur = [], f" {name}:"
    for p in parts:
        if len(cur) + len(p) + 1 > 200:
            lines.append(cur)
            cur = "  "
        cur += " " + p
    cur += f" {sense} {_num(rhs)}"
    lines.append(cur)
    return lines


def emit_milp(e: EnrichedInstance, m: MilpEmission = MilpEmission()) -> str:
    """LP-file text of the time-indexed model for ``e``.

    Every operation gets x, s, c on every machine and p on every (machine,
    step); ineligible machines and starts that would overrun the horizon are
    fixed to zero in the Bounds section, and s, c and cmax are bounded by
    the horizon.  Epsilon rows are emitted only for
    the bounds that are set.
    """
    inst = e.instance
    T = e.horizon
    M = inst.machine_count
    ops = inst.operations
    O = len(ops)
    L = m.big_l if m.big_l is not None else 2 * T
    if L < 2 * T:
        raise ParameterError(f"big_L {L} is below 2*|T| = {2 * T}")
    counts = milp_counts(O, M, T, inst.job_count)
    total = counts.x + counts.p + counts.y + 2 * O * M + 3
    if total > m.max_variables:
        raise LimitError(f"model would have {total} variables (x={counts.x}, p={counts.p}, "
                         f"y={counts.y}), cap is {m.max_variables}")

    machines = range(1, M + 1)

    def tag(op, k):
        return f"{op.job}_{op.position}_{k}"

    out = ["\\ time-indexed energy-aware FJSP", "Minimize", f" obj: {_OBJ_VAR[m.objective]}",
           "Subject To"]
    fixed_zero = []
    eta_terms, zeta_terms = [], []
    for op in ops:
        taus = dict(op.options)
        for k in machines:
            for t in range(T):
                if k in taus and t + taus[k] <= T:
                    cost, em = op_cost(e, op.job, op.position, k, t)
                    if cost != 0:
                        eta_terms.append((-cost, f"p_{tag(op, k)}_{t}"))
                    if em != 0:
                        zeta_terms.append((-em, f"p_{tag(op, k)}_{t}"))
                else:
                    fixed_zero.append(f"p_{tag(op, k)}_{t}")
            if k not in taus:
                fixed_zero.append(f"x_{tag(op, k)}")

    for op in ops:
        for k in machines:
            out += _row(f"ms_{tag(op, k)}", [(1, "cmax"), (-1, f"c_{tag(op, k)}")], ">=", 0)
    out += _row("cost", [(1, "psum")] + eta_terms, "=", 0)
    out += _row("emis", [(1, "esum")] + zeta_terms, "=", 0)
    for op in ops:
        out += _row(f"assign_{op.job}_{op.position}",
                    [(1, f"x_{tag(op, k)}") for k in machines], "=", 1)
    for op in ops:
        for k in machines:
            out += _row(f"alloc_{tag(op, k)}",
                        [(1, f"s_{tag(op, k)}"), (1, f"c_{tag(op, k)}"), (-L, f"x_{tag(op, k)}")],
                        "<=", 0)
    for op in ops:
        taus = dict(op.options)
        for k in machines:
            # c - s - L x >= tau - L
            out += _row(f"dur_{tag(op, k)}",
                        [(1, f"c_{tag(op, k)}"), (-1, f"s_{tag(op, k)}"), (-L, f"x_{tag(op, k)}")],
                        ">=", taus.get(k, 0) - L)
    for op in ops:
        if op.position == 1:
            continue
        prev = inst.operation(op.job, op.position - 1)
        out += _row(f"prec_{op.job}_{op.position}",
                    [(1, f"s_{tag(op, k)}") for k in machines]
                    + [(-1, f"c_{tag(prev, k)}") for k in machines], ">=", 0)
    pairs = list(itertools.combinations(ops, 2))
    y_names = []
    for k in machines:
        for a, b in pairs:
            y = f"y_{a.job}_{a.position}_{b.job}_{b.position}_{k}"
            y_names.append(y)
            # s_a >= c_b - L y   and   s_b >= c_a - L (1 - y)
            out += _row(f"da_{a.job}_{a.position}_{b.job}_{b.position}_{k}",
                        [(1, f"s_{tag(a, k)}"), (-1, f"c_{tag(b, k)}"), (L, y)], ">=", 0)
            out += _row(f"db_{a.job}_{a.position}_{b.job}_{b.position}_{k}",
                        [(1, f"s_{tag(b, k)}"), (-1, f"c_{tag(a, k)}"), (-L, y)], ">=", -L)
    for op in ops:
        for k in machines:
            out += _row(f"link_{tag(op, k)}",
                        [(1, f"x_{tag(op, k)}")] + [(-1, f"p_{tag(op, k)}_{t}") for t in range(T)],
                        "=", 0)
    for op in ops:
        for k in machines:
            for t in range(T):
                # s - t >= -(1 - p) L  ->  s - L p >= t - L
                out += _row(f"llo_{tag(op, k)}_{t}",
                            [(1, f"s_{tag(op, k)}"), (-L, f"p_{tag(op, k)}_{t}")], ">=", t - L)
    for op in ops:
        for k in machines:
            for t in range(T):
                # s - t <= (1 - p) L  ->  s + L p <= t + L
                out += _row(f"lhi_{tag(op, k)}_{t}",
                            [(1, f"s_{tag(op, k)}"), (L, f"p_{tag(op, k)}_{t}")], "<=", t + L)
    for name, var, bound in (("eps_ms", "cmax", m.eps_makespan), ("eps_ec", "psum", m.eps_cost),
                             ("eps_em", "esum", m.eps_emissions)):
        if bound is not None and var != _OBJ_VAR[m.objective]:
            out += _row(name, [(1, var)], "<=", bound)

    out.append("Bounds")
    out.append(" psum free")
    out.append(" esum free")
    out.append(f" 0 <= cmax <= {T}")
    for op in ops:
        for k in machines:
            out.append(f" 0 <= s_{tag(op, k)} <= {T}")
            out.append(f" 0 <= c_{tag(op, k)} <= {T}")
    for v in fixed_zero:
        out.append(f" {v} = 0")
    out.append("Binary")
    binaries = [f"x_{tag(op, k)}" for op in ops for k in machines]
    binaries += y_names
    binaries += [f"p_{tag(op, k)}_{t}" for op in ops for k in machines for t in range(T)]
    for i in range(0, len(binaries), 8):
        out.append(" " + " ".join(binaries[i:i + 8]))
    out.append("End")
    return "\n".join(out) + "\n"


def schedule_from_solution(e: EnrichedInstance, values: dict[str, float]) -> Schedule:
    """Rebuild a schedule from solver values of the p variables."""
    inst = e.instance
    ops = []
    for op in inst.operations:
        hit = None
        for k, tau in op.options:
            for t in range(e.horizon):
                if values.get(f"p_{op.job}_{op.position}_{k}_{t}", 0.0) > 0.5:
                    hit = ScheduledOp(op.job, op.position, k, t, t + tau)
        if hit is None:
            raise ParameterError(f"solution assigns no start to ({op.job},{op.position})")
        ops.append(hit)
    return Schedule(tuple(ops), e.horizon)
