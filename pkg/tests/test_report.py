import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import tiny_instance
from test_decode import three_job_example
from greenfjsp.decode import EXTEND, Genotype, Schedule, decode, random_genotype
from greenfjsp.errors import ReportError
from greenfjsp.exact import FrontMember, ParetoFront, brute_force_pareto
from greenfjsp.model import EnergyProfile, enrich, parse_instance
from greenfjsp.report import (CSV_HEADER, RunManifest, export_front, export_gantt, front_csv,
                              parse_front, standard_reports, tradeoff_table)

INF = float("inf")


def savings_of(front, a="ms", b="ec", deltas=(5, 20, 50, 75)):
    return [r.savings for r in tradeoff_table(front, a, b, deltas).rows]


def test_two_point_front_hand_computation():
    rep = tradeoff_table([(42, 3965.0, 1.0), (44, 3885.7, 1.0)], "ms", "ec", [5])
    row = rep.rows[0]
    assert (rep.baseline_a, rep.baseline_b) == (42, 3965.0)
    assert row.threshold == pytest.approx(44.1)
    assert row.best_b == 3885.7
    assert row.savings == (3965.0 - 3885.7) / 3965.0 * 100.0
    assert round(row.savings, 1) == 2.0


def test_single_point_front_saves_nothing():
    assert savings_of([(10, 5.0, 7.0)]) == [0.0] * 4


def test_negative_baseline_uses_absolute_value():
    rep = tradeoff_table([(10, 0.0, -2.0), (11, 0.0, -2.3)], "ms", "em", [20])
    assert rep.rows[0].savings == pytest.approx(15.0)


def test_baseline_b_is_best_among_fastest():
    rep = tradeoff_table([(5, 9.0, 0.0), (5, 7.0, 1.0), (6, 1.0, 0.0)], "ms", "ec", [5])
    assert rep.baseline_b == 7.0 and rep.rows[0].savings == 0.0


def test_empty_front_and_bad_axis_refused():
    with pytest.raises(ReportError):
        tradeoff_table([], "ms", "ec")
    with pytest.raises(ReportError):
        tradeoff_table([(1, 1.0, 1.0)], "ms", "speed")


def random_front(rng: random.Random) -> list[tuple]:
    pts = [(rng.randint(1, 60), rng.uniform(-50, 500), rng.uniform(0, 1e5))
           for _ in range(rng.randint(1, 30))]
    return pts


def monotonicity_violations(trials: int, seed0: int = 0) -> int:
    bad = 0
    for k in range(trials):
        front = random_front(random.Random(seed0 + k))
        deltas = sorted(random.Random(k).uniform(0, 200) for _ in range(6))
        for a, b in (("ms", "ec"), ("ms", "em"), ("ec", "em")):
            s = savings_of(front, a, b, deltas)
            bad += any(y < x for x, y in zip(s, s[1:]))
    return bad


def test_savings_monotone_in_delta():
    assert monotonicity_violations(100) == 0


def test_standard_reports_cover_three_analyses():
    reps = standard_reports([(3, 2.0, 1.0), (4, 1.0, 2.0)])
    assert [(r.axis_a, r.axis_b) for r in reps] == [("ms", "ec"), ("ms", "em"), ("ec", "em")]
    assert "savings" in reps[0].to_text()
    assert json.loads(json.dumps(reps[0].to_dict()))["rows"][0]["delta"] == 5.0


# -- exports ------------------------------------------------------------------

def test_empty_front_is_header_only():
    assert front_csv(ParetoFront(())) == ",".join(CSV_HEADER) + "\n"


def test_csv_row_and_tons():
    assert front_csv([(2, 25.0, 1000.0)]).splitlines()[1] == "2,25.0,1000,0.001"
    assert front_csv([(2, 25.0, 1.0)]).splitlines()[1] == "2,25.0,1,0.000001"


@given(st.lists(st.tuples(st.integers(0, 10_000), st.floats(-1e6, 1e6), st.floats(0, 1e9)),
                max_size=20))
@settings(max_examples=200)
def test_csv_round_trip_is_exact(pts):
    back = parse_front(front_csv(pts))
    assert [tuple(p) for p in back] == sorted(pts)


def test_json_round_trip_on_enumerated_fronts():
    for seed in range(20):
        e = tiny_instance(seed)
        front = brute_force_pareto(e, max_horizon=16)
        back = parse_front(export_front(front, "json", e))
        assert back == front.objective_set()
        assert parse_front(export_front(front, "csv")) == front.objective_set()


def test_export_errors():
    front = ParetoFront(())
    with pytest.raises(ReportError):
        export_front(front, "xml")
    with pytest.raises(ReportError):
        export_front(front, "json")
    with pytest.raises(ReportError):
        parse_front("a,b\n1,2\n", "csv")
    with pytest.raises(ReportError):
        parse_front("{\"members\": [{}]}")


def test_gantt_empty_schedule():
    e = enrich(parse_instance("0 2\n"), EnergyProfile((1.0, 2.0), (3.0, 4.0)))
    doc = export_gantt(Schedule((), 2), e)
    assert doc["lanes"] == []
    assert doc["series"]["price"]["values"] == [1.0, 2.0]
    assert doc["series"]["price"]["style"] == "dashed" and doc["series"]["emission"]["style"] == "dotted"


def test_gantt_worked_example_bar():
    e = three_job_example()
    g = Genotype((1, 2, 3, 1), (1, 0, 0, 0), (1.0, INF, INF, INF), (4.0, INF, INF, INF))
    doc = export_gantt(decode(g, e, EXTEND), e)
    lane2 = next(lane for lane in doc["lanes"] if lane["machine"] == 2)
    assert {"job": 1, "op": 1, "start": 4, "end": 6} in lane2["bars"]


def test_gantt_bar_count_equals_operations():
    for seed in range(50):
        e = tiny_instance(seed, jobs=(1, 4), ops=(1, 4), machines=(1, 3))
        s = decode(random_genotype(e, random.Random(seed)), e)
        doc = export_gantt(s, e)
        assert sum(len(lane["bars"]) for lane in doc["lanes"]) == e.instance.operation_count
        assert len(doc["series"]["emission"]["values"]) == s.horizon_used


def test_manifest_round_trip():
    m = RunManifest("mk01", "standin:mk01", None, None, {"seed": 1, "hours": 48, "correlation": 0.72},
                    {"seed": 3}, 3, 12, 4, {"solve_seconds": 1.5}, {"front_csv": "front.csv"})
    assert RunManifest.from_json(m.to_json()) == m
    with pytest.raises(ReportError):
        RunManifest.from_json("{\"instance\": 1}")


def test_front_member_canonical_order():
    s = Schedule((), 1)
    front = ParetoFront.from_candidates([FrontMember((3, 1.0, 1.0), s), FrontMember((2, 2.0, 2.0), s),
                                         FrontMember((2, 2.0, 2.0), s), FrontMember((4, 3.0, 3.0), s)])
    assert front.objective_set() == [(2, 2.0, 2.0), (3, 1.0, 1.0)]
