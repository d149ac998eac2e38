"""Trade-off tables, front and Gantt exports, run manifests."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable

import numpy as np

from .decode import ObjectiveVector, Schedule, schedule_record
from .errors import ReportError
from .exact import ParetoFront
from .model import EnrichedInstance

DEFAULT_DELTAS = (5.0, 20.0, 50.0, 75.0)
AXES = {"ms": 0, "makespan": 0, "ec": 1, "cost": 1, "energy_cost": 1,
        "em": 2, "emissions": 2}
AXIS_LABEL = ("makespan", "energy_cost_eur", "emissions_g")
CSV_HEADER = ("makespan", "energy_cost_eur", "emissions_g", "emissions_t")


def _axis(name: str) -> int:
    try:
        return AXES[name]
    except KeyError:
        raise ReportError(f"unknown axis {name!r}; use ms, ec or em") from None


def _triples(front) -> list[tuple]:
    if isinstance(front, ParetoFront):
        return [tuple(m.objectives) for m in front]
    return [tuple(t) for t in front]


@dataclass(frozen=True)
class TradeoffRow:
    delta: float
    threshold: float
    best_b: float
    savings: float


@dataclass(frozen=True)
class TradeoffReport:
    axis_a: str
    axis_b: str
    baseline_a: float
    baseline_b: float
    rows: tuple[TradeoffRow, ...]

    def to_dict(self) -> dict:
        return {"axis_a": self.axis_a, "axis_b": self.axis_b, "baseline_a": self.baseline_a,
                "baseline_b": self.baseline_b, "rows": [asdict(r) for r in self.rows]}

    def to_text(self) -> str:
        head = f"{self.axis_a} -> {self.axis_b}: baseline {self.axis_a}={self.baseline_a:g} " \
               f"{self.axis_b}={self.baseline_b:g}"
        lines = [head, "delta%  threshold  best  savings%"]
        for r in self.rows:
            lines.append(f"{r.delta:g}  {r.threshold:g}  {r.best_b:g}  {r.savings:.1f}")
        return "\n".join(lines)


def tradeoff_table(front, axis_a: str, axis_b: str,
                   deltas: Iterable[float] = DEFAULT_DELTAS) -> TradeoffReport:
    """Savings in ``axis_b`` obtainable by letting ``axis_a`` grow by delta percent.

    The threshold is ``base_a + |base_a| * delta / 100``; savings are relative
    to ``|base_b|``.  Only front members at or under the threshold count.
    """
    a, b = _axis(axis_a), _axis(axis_b)
    pts = _triples(front)
    if not pts:
        raise ReportError("trade-off table needs a non-empty front")
    base_a = min(p[a] for p in pts)
    base_b = min(p[b] for p in pts if p[a] == base_a)
    rows = []
    for d in deltas:
        thr = base_a + abs(base_a) * d / 100.0
        best = min(p[b] for p in pts if p[a] <= thr)
        if base_b != 0:
            sav = (base_b - best) / abs(base_b) * 100.0
        else:
            sav = 0.0 if best == base_b else math.copysign(math.inf, base_b - best)
        rows.append(TradeoffRow(float(d), thr, best, sav))
    return TradeoffReport(axis_a, axis_b, base_a, base_b, tuple(rows))


STANDARD_ANALYSES = (("ms", "ec"), ("ms", "em"), ("ec", "em"))


def standard_reports(front, deltas=DEFAULT_DELTAS) -> list[TradeoffReport]:
    return [tradeoff_table(front, a, b, deltas) for a, b in STANDARD_ANALYSES]


# ---------------------------------------------------------------------------
# exports

def _fmt(x: float, trim: str) -> str:
    return np.format_float_positional(float(x), trim=trim)


def front_csv(front) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for ms, ec, em in sorted(_triples(front)):
        w.writerow([str(int(ms)), _fmt(ec, "0"), _fmt(em, "-"), _fmt(em / 1e6, "-")])
    return buf.getvalue()


def front_json(front: ParetoFront, e: EnrichedInstance) -> str:
    members = [schedule_record(m.schedule, e) for m in front]
    return json.dumps({"members": members}, indent=1) + "\n"


def export_front(front: ParetoFront, fmt: str = "csv", e: EnrichedInstance | None = None) -> str:
    if fmt == "csv":
        return front_csv(front)
    if fmt == "json":
        if e is None:
            raise ReportError("JSON export needs the enriched instance for per-operation values")
        return front_json(front, e)
    raise ReportError(f"unknown export format {fmt!r}")


def parse_front(text: str, fmt: str | None = None) -> list[ObjectiveVector]:
    """Objective triples from a CSV or JSON front export."""
    if fmt is None:
        fmt = "json" if text.lstrip().startswith("{") else "csv"
    if fmt == "json":
        try:
            doc = json.loads(text)
            return [ObjectiveVector(int(m["objectives"]["makespan"]),
                                    float(m["objectives"]["energy_cost_eur"]),
                                    float(m["objectives"]["emissions_g"]))
                    for m in doc["members"]]
        except (ValueError, KeyError, TypeError) as exc:
            raise ReportError(f"malformed front JSON: {exc}") from None
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ReportError(f"front CSV must start with header {','.join(CSV_HEADER)}")
    out = []
    for n, row in enumerate(rows[1:], start=2):
        try:
            out.append(ObjectiveVector(int(row[0]), float(row[1]), float(row[2])))
        except (ValueError, IndexError):
            raise ReportError(f"line {n}: malformed front row {row!r}") from None
    return out


def export_gantt(s: Schedule, e: EnrichedInstance) -> dict:
    """Machine lanes with operation bars plus the price and emission series under them."""
    lanes = [{"machine": k, "bars": [{"job": o.job, "op": o.op, "start": o.start, "end": o.end}
                                     for o in lane]}
             for k, lane in sorted(s.by_machine().items())]
    ext = e.extended(s.horizon_used)
    return {
        "step_minutes": e.profile.step_minutes,
        "horizon": s.horizon_used,
        "makespan": s.makespan,
        "lanes": lanes,
        "series": {
            "price": {"unit": "EUR/MWh", "style": "dashed", "values": list(ext.profile.price)},
            "emission": {"unit": "gCO2eq/kWh", "style": "dotted",
                         "values": list(ext.profile.emission)},
        },
    }


# ---------------------------------------------------------------------------
# manifests

@dataclass
class RunManifest:
    instance: str
    instance_sha256: str
    market: str | None
    market_sha256: str | None
    synth: dict | None
    config: dict
    seed: int
    generations_completed: int
    front_size: int
    timings: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    base_demand_kw: float = 500.0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        try:
            return cls(**json.loads(text))
        except (ValueError, TypeError) as exc:
            raise ReportError(f"malformed manifest: {exc}") from None
