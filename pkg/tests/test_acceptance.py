"""The ten acceptance criteria, one test each.

Every test records a PASS/FAIL line that pytest prints in an
"acceptance criteria" section at the end of the run.
"""

import math
import os
import random
import time

import numpy as np
import pytest

from oracles import tiny_instance
from test_decode import cap_monotonicity_violations, three_job_example
from test_evolve import sort_mismatches
from test_exact import emitter_mismatches, epsilon_sweep
from test_model import _random_case, hourly_csv
from test_refine import refinement_violations
from test_report import monotonicity_violations
from greenfjsp.decode import CAP_RULES, EXTEND, Genotype, decode
from greenfjsp.evolve import EvolveConfig, das_dennis, first_front, run
from greenfjsp.exact import brute_force_pareto, dominates
from greenfjsp.model import (EnergyProfile, brandimarte_standin, enrich, generate_synthetic_profile,
                             load_energy_profile, op_cost, parse_instance, price_emission_correlation)
from greenfjsp.report import export_front, front_csv, standard_reports, tradeoff_table

pytestmark = pytest.mark.slow


@pytest.fixture
def verdict(request):
    def record(n: int, ok: bool, detail: str) -> None:
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        request.config.acceptance_lines.append(line)
        print(line)
    return record


def mk01():
    return enrich(brandimarte_standin("mk01"), generate_synthetic_profile(1, 48))


# -- 1 ------------------------------------------------------------------------

def well_posed(e):
    """Front on |T| steps equals the front on the profile tiled to 2|T|.

    The decoder may wrap an operation into the next profile cycle; on these
    instances doing so never pays, so the |T|-step enumeration is the whole truth.
    """
    front = brute_force_pareto(e).objective_set()
    twice = enrich(e.instance, e.profile.tiled(2 * e.horizon))
    return front == brute_force_pareto(twice, max_horizon=64).objective_set(), front


def test_c1_oracle_equivalence(verdict):
    t0 = time.monotonic()
    cases, seed = [], 0
    while len(cases) < 20:
        e = tiny_instance(seed, jobs=(1, 2), machines=(1, 2), ops=(1, 3), horizon=(6, 16))
        seed += 1
        ok, front = well_posed(e)
        if ok:
            cases.append((e, front))
    t_filter = time.monotonic() - t0
    hits, worst = 0, 0
    for e, target in cases:
        for s in range(10):
            reached = []

            def stop(gen, pop):
                if first_front(pop).objective_set() == target:
                    reached.append(gen)
                    return True
                return False

            got = run(e, EvolveConfig(population_size=40, mutation_rate=1.0, generation_limit=200,
                                      seed=s), callback=stop)
            if got.objective_set() == target:
                hits += 1
                worst = max(worst, reached[0] if reached else 200)
    total = time.monotonic() - t0
    ok = hits >= 180 and total < 300
    verdict(1, ok, f"{hits}/200 exact fronts (need 180), slowest hit at generation {worst}, "
                   f"{total:.1f}s total incl. {t_filter:.1f}s instance screening ({seed} drawn)")
    assert ok


# -- 2 ------------------------------------------------------------------------

def test_c2_sorting(verdict):
    bad = sort_mismatches(1000, size=200)
    verdict(2, bad == 0, f"{bad} mismatches against the chain-rank oracle on 1000 sets of 200")
    assert bad == 0


# -- 3 ------------------------------------------------------------------------

def test_c3_engine_invariants(verdict):
    e = mk01()
    cfg = EvolveConfig(generation_limit=50, seed=11)
    problems = []

    def check(gen, pop):
        if len(pop) != cfg.population_size:
            problems.append(f"gen {gen}: |P|={len(pop)}")
        problems.extend(f"gen {gen}: invalid genotype" for ind in pop
                        if not ind.genotype.is_valid(e.instance))
        return False

    a = run(e, cfg, callback=check)
    b = run(e, cfg)
    objs = [m.objectives for m in a]
    mutual = not any(dominates(x, y) for x in objs for y in objs)
    same = (export_front(a, "csv") == export_front(b, "csv")
            and export_front(a, "json", e) == export_front(b, "json", e))
    ok = not problems and mutual and same
    verdict(3, ok, f"50 generations N={cfg.population_size}: {len(problems)} population problems, "
                   f"F1 of {len(a)} mutually non-dominating={mutual}, byte-identical rerun={same}")
    assert ok


# -- 4 ------------------------------------------------------------------------

def test_c4_refinement_contract(verdict):
    bad = refinement_violations(500)
    verdict(4, bad == 0, f"{bad} violations on 500 parents over mk01-mk04")
    assert bad == 0


# -- 5 ------------------------------------------------------------------------

def test_c5_decoder_semantics(verdict):
    e = three_job_example()
    g = Genotype((1, 2, 3, 1), (1, 0, 0, 0), (1.0, math.inf, math.inf, math.inf),
                 (4.0, math.inf, math.inf, math.inf))
    placed = {rule: decode(g, e, EXTEND, rule).ops[0] for rule in CAP_RULES}
    example = all((o.machine, o.start) == (2, 4) for o in placed.values())
    bad = cap_monotonicity_violations(1000)
    ok = example and bad == 0
    verdict(5, ok, f"worked example (1,1) on machine 2 at step 4: {example}; "
                   f"{bad} cap-monotonicity violations in 1000 perturbations")
    assert ok


# -- 6 ------------------------------------------------------------------------

def test_c6_unit_arithmetic(verdict):
    e = enrich(parse_instance("1 1\n1 1 1 2\n"), EnergyProfile((100.0,) * 4, (0.0,) * 4))
    flat = math.isclose(op_cost(e, 1, 1, 1, 0)[0], 25.0, rel_tol=1e-9)
    e5 = enrich(parse_instance("5 1\n" + "1 1 1 2\n" * 5), EnergyProfile((-10.0, 40.0), (0.0, 0.0)))
    neg = math.isclose(op_cost(e5, 2, 1, 1, 0)[0], 1.5, rel_tol=1e-9)
    bad = 0
    for seed in range(1000):
        rng, tau, horizon, prof, inst = _random_case(seed)
        job, t, split = rng.randint(1, inst.job_count), rng.randint(0, horizon - tau), rng.randint(1, tau - 1)
        whole = op_cost(enrich(inst, prof), job, 1, 1, t)
        head = parse_instance(f"{inst.job_count} 1\n" + f"1 1 1 {split}\n" * inst.job_count)
        tail = parse_instance(f"{inst.job_count} 1\n" + f"1 1 1 {tau - split}\n" * inst.job_count)
        a = op_cost(enrich(head, prof), job, 1, 1, t)
        b = op_cost(enrich(tail, prof), job, 1, 1, t + split)
        doubled = op_cost(enrich(inst, prof, 1000.0), job, 1, 1, t)
        bad += not all(math.isclose(x, y + z, rel_tol=1e-9, abs_tol=1e-9) for x, y, z in zip(whole, a, b))
        bad += not all(math.isclose(d, 2 * w, rel_tol=1e-9) for d, w in zip(doubled, whole))
    ok = flat and neg and bad == 0
    verdict(6, ok, f"25 EUR case {flat}, 1.5 EUR case {neg}, "
                   f"{bad} additivity/linearity failures in 1000 cases")
    assert ok


# -- 7 ------------------------------------------------------------------------

def test_c7_das_dennis(verdict):
    bad = []
    for p in range(1, 16):
        refs = das_dennis(p)
        if len(refs) != math.comb(p + 2, 2) or np.any(np.abs(refs.points.sum(axis=1) - 1) > 1e-12):
            bad.append(p)
    verdict(7, not bad, f"p=1..15 counts C(p+2,2) and unit sums; failing p: {bad or 'none'}")
    assert not bad


# -- 8 ------------------------------------------------------------------------

def test_c8_milp_emitter(verdict):
    problems = emitter_mismatches(10)
    try:
        import highspy  # noqa: F401
        solver = True
    except ImportError:
        solver = False
    sweep = "skipped (highspy not installed)"
    sweep_ok = True
    if solver:
        seeds = (3, 5, 7, 11)
        sweep_ok = all(epsilon_sweep(e) == brute_force_pareto(e).objective_set()
                       for e in (tiny_instance(s, jobs=(1, 2), ops=(1, 2), horizon=(4, 6)) for s in seeds))
        sweep = f"epsilon sweep equals brute force on {len(seeds)} instances: {sweep_ok}"
    ok = not problems and sweep_ok
    verdict(8, ok, f"{len(problems)} count/declaration mismatches on 10 instances; {sweep}")
    assert ok


# -- 9 ------------------------------------------------------------------------

def test_c9_tradeoff_analysis(verdict):
    row = tradeoff_table([(42, 3965.0, 0.0), (44, 3885.7, 0.0)], "ms", "ec", [5]).rows[0]
    hand = round(row.savings, 1) == 2.0 and row.savings == (3965.0 - 3885.7) / 3965.0 * 100
    mono = monotonicity_violations(100)
    e = mk01()
    t0 = time.monotonic()
    front = run(e, EvolveConfig(generation_limit=None, runtime_limit_seconds=60.0, seed=0))
    elapsed = time.monotonic() - t0
    reports = standard_reports(front)
    savings = {f"{r.axis_a}->{r.axis_b}": [round(x.savings, 1) for x in r.rows] for r in reports}
    nonneg = all(x.savings >= 0 for r in reports for x in r.rows)
    ok = hand and mono == 0 and nonneg and elapsed >= 60.0
    verdict(9, ok, f"2.0% example {hand}; {mono} monotonicity violations on 100 fronts; "
                   f"mk01 {elapsed:.0f}s front of {len(front)}: savings at 5/20/50/75% {savings}")
    assert ok


# -- 10 -----------------------------------------------------------------------

def test_c10_ingestion(verdict):
    bad = 0
    for k in range(100):
        rng = random.Random(k)
        rows = [(round(rng.uniform(-100, 400), 2), round(rng.uniform(0, 900), 1))
                for _ in range(rng.randint(1, 60))]
        prof = load_energy_profile(hourly_csv([p for p, _ in rows], [q for _, q in rows]))
        expect_p = tuple(float(p) for p, _ in rows for _ in range(4))
        expect_e = tuple(float(q) for _, q in rows for _ in range(4))
        bad += (prof.price, prof.emission) != (expect_p, expect_e)
    smard = os.environ.get("FJSP_SMARD_CSV")
    if smard:
        with open(smard, encoding="utf-8") as f:
            r = price_emission_correlation(load_energy_profile(f.read()))
        smard_ok = abs(r - 0.72) <= 0.01
        note = f"SMARD correlation {r:.3f} (target 0.72 +- 0.01): {smard_ok}"
    else:
        smard_ok = True
        note = "SMARD sub-check skipped (FJSP_SMARD_CSV not set)"
    ok = bad == 0 and smard_ok
    verdict(10, ok, f"{bad} replication failures on 100 CSVs; {note}")
    assert ok
