"""Memetic NSGA-III over the four-string genotype."""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .decode import (EXTEND, RELAX, Genotype, ObjectiveVector, Schedule, decode, draw_cap,
                     encode, evaluate, random_genotype)
from .errors import ParameterError, SelectionError
from .exact import FrontMember, ParetoFront
from .model import EnrichedInstance, Instance
from .refine import local_refine

ASF_EPS = 1e-6


@dataclass(frozen=True)
class EvolveConfig:
    population_size: int = 92
    divisions: int = 12
    crossover_rate: float = 0.9
    mutation_rate: float = 0.1
    generation_limit: int | None = 100
    runtime_limit_seconds: float | None = None
    seed: int = 0
    cap_rule: str = "mean"

    def __post_init__(self):
        if self.population_size <= 0 or self.population_size % 4:
            raise ParameterError("population_size must be a positive multiple of 4")
        if self.divisions < 1:
            raise ParameterError("divisions must be >= 1")
        for name in ("crossover_rate", "mutation_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ParameterError(f"{name} must lie in [0, 1]")
        if self.generation_limit is not None and self.generation_limit < 0:
            raise ParameterError("generation_limit must be >= 0")
        if self.runtime_limit_seconds is not None and self.runtime_limit_seconds < 0:
            raise ParameterError("runtime_limit_seconds must be >= 0")
        if self.generation_limit is None and self.runtime_limit_seconds is None:
            raise ParameterError("set a generation limit, a runtime limit, or both")


@dataclass
class Individual:
    genotype: Genotype
    objectives: ObjectiveVector
    schedule: Schedule
    rank: int | None = None
    normalized: tuple[float, float, float] | None = None
    niche: int | None = None
    distance: float | None = None


@dataclass(frozen=True)
class ReferencePointSet:
    points: np.ndarray
    divisions: int

    def __len__(self) -> int:
        return len(self.points)


def relax_mode_for(generation: int) -> str:
    return EXTEND if generation % 2 == 0 else RELAX


# ---------------------------------------------------------------------------
# variation

def repair_sequence(seq, instance: Instance) -> list[int]:
    """Keep the first nu_i occurrences of each job; refill surplus slots with missing jobs."""
    need = list(instance.op_counts)
    seen = [0] * len(need)
    out = list(seq)
    surplus = []
    for pos, job in enumerate(out):
        if 1 <= job <= len(need) and seen[job - 1] < need[job - 1]:
            seen[job - 1] += 1
        else:
            surplus.append(pos)
    missing = 0
    for pos in surplus:
        while seen[missing] >= need[missing]:
            missing += 1
        out[pos] = missing + 1
        seen[missing] += 1
    return out


def two_point_crossover(a: Genotype, b: Genotype, rng: random.Random, instance: Instance,
                        cuts: tuple[int, int] | None = None) -> tuple[Genotype, Genotype]:
    """Swap the same middle segment of all four strings, then repair the sequences."""
    n = len(a)
    lo, hi = cuts if cuts is not None else sorted(rng.sample(range(n + 1), 2))

    def mix(x, y):
        return x[:lo] + y[lo:hi] + x[hi:]

    c1 = Genotype(tuple(repair_sequence(mix(a.sequence, b.sequence), instance)),
                  mix(a.machine, b.machine), mix(a.price_cap, b.price_cap),
                  mix(a.emission_cap, b.emission_cap))
    c2 = Genotype(tuple(repair_sequence(mix(b.sequence, a.sequence), instance)),
                  mix(b.machine, a.machine), mix(b.price_cap, a.price_cap),
                  mix(b.emission_cap, a.emission_cap))
    return c1, c2


def mutate(g: Genotype, rng: random.Random, rate: float, e: EnrichedInstance,
           cap_rule: str = "mean") -> Genotype:
    """With probability ``rate`` apply one move: sequence swap, machine reassignment or cap resample."""
    if rng.random() >= rate or len(g) == 0:
        return g
    move = rng.randrange(3)
    n = len(g)
    if move == 0:
        if n < 2:
            return g
        i, j = rng.sample(range(n), 2)
        seq = list(g.sequence)
        seq[i], seq[j] = seq[j], seq[i]
        return Genotype(tuple(seq), g.machine, g.price_cap, g.emission_cap)
    if move == 1:
        i = rng.randrange(n)
        machine = list(g.machine)
        machine[i] = rng.randrange(len(e.instance.operations[i].options))
        return Genotype(g.sequence, tuple(machine), g.price_cap, g.emission_cap)
    i = rng.randrange(n)
    if rng.random() < 0.5:
        caps = list(g.price_cap)
        caps[i] = draw_cap(e, rng, 0, cap_rule)
        return Genotype(g.sequence, g.machine, tuple(caps), g.emission_cap)
    caps = list(g.emission_cap)
    caps[i] = draw_cap(e, rng, 1, cap_rule)
    return Genotype(g.sequence, g.machine, g.price_cap, tuple(caps))


# ---------------------------------------------------------------------------
# selection machinery

def fast_nondominated_sort(objs) -> list[list[int]]:
    """Partition indices into successive non-dominated fronts (minimisation)."""
    a = np.asarray(objs, dtype=float)
    n = len(a)
    if n == 0:
        return []
    le = np.all(a[:, None, :] <= a[None, :, :], axis=2)
    lt = np.any(a[:, None, :] < a[None, :, :], axis=2)
    dom = le & lt                      # dom[i, j]: i dominates j
    count = dom.sum(axis=0)
    remaining = np.ones(n, dtype=bool)
    fronts = []
    while remaining.any():
        front = np.flatnonzero(remaining & (count == 0))
        fronts.append(front.tolist())
        remaining[front] = False
        count = count - dom[front].sum(axis=0)
    return fronts


def das_dennis(p: int) -> ReferencePointSet:
    """All points (a, b, c) / p with a + b + c = p."""
    if p < 1:
        raise ParameterError("divisions must be >= 1")
    pts = [(a / p, b / p, (p - a - b) / p) for a in range(p, -1, -1) for b in range(p - a, -1, -1)]
    return ReferencePointSet(np.array(pts, dtype=float), p)


def normalize(objs) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (normalised objectives, intercepts, ideal point).

    Extreme points minimise the achievement scalarising function along each
    axis; when the hyperplane through them is degenerate, the intercepts fall
    back to the per-axis maxima of the translated pool (1 where that is 0).
    """
    a = np.asarray(objs, dtype=float)
    if len(a) == 0:
        raise SelectionError("cannot normalise an empty pool")
    ideal = a.min(axis=0)
    shifted = a - ideal
    m = a.shape[1]
    extremes = np.empty((m, m))
    for axis in range(m):
        w = np.full(m, ASF_EPS)
        w[axis] = 1.0
        asf = np.max(shifted / w, axis=1)
        extremes[axis] = shifted[int(np.argmin(asf))]
    intercepts = None
    try:
        b = np.linalg.solve(extremes, np.ones(m))
        with np.errstate(divide="ignore"):
            cand = 1.0 / b
        if np.all(np.isfinite(cand)) and np.all(cand > 1e-12):
            intercepts = cand
    except np.linalg.LinAlgError:
        pass
    if intercepts is None:
        intercepts = shifted.max(axis=0)
        intercepts = np.where(intercepts > 0, intercepts, 1.0)
    return shifted / intercepts, intercepts, ideal


def associate(normalized, refs: ReferencePointSet) -> tuple[np.ndarray, np.ndarray]:
    """Nearest reference line (lowest index on ties) and perpendicular distance."""
    x = np.asarray(normalized, dtype=float)
    w = refs.points
    wn = w / np.linalg.norm(w, axis=1)[:, None]
    proj = x @ wn.T                                     # (n, r)
    sq = np.einsum("ij,ij->i", x, x)[:, None] - proj ** 2
    dist = np.sqrt(np.maximum(sq, 0.0))
    niche = np.argmin(dist, axis=1)
    return niche, dist[np.arange(len(x)), niche]


def niche(last_front: list[int], k: int, counts: dict[int, int] | np.ndarray,
          niche_of, distance_of, rng: random.Random) -> list[int]:
    """Choose k members of ``last_front`` from the least crowded reference directions."""
    if k > len(last_front):
        raise SelectionError(f"cannot pick {k} from a front of {len(last_front)}")
    counts = {int(r): int(c) for r, c in (counts.items() if isinstance(counts, dict)
                                          else enumerate(counts))}
    pool: dict[int, list[int]] = {}
    for idx in last_front:
        pool.setdefault(int(niche_of[idx]), []).append(idx)
    for r in pool:
        counts.setdefault(r, 0)
    active = set(counts)
    chosen = []
    while len(chosen) < k:
        low = min(counts[r] for r in active)
        tied = sorted(r for r in active if counts[r] == low)
        r = tied[rng.randrange(len(tied))] if len(tied) > 1 else tied[0]
        cands = pool.get(r)
        if not cands:
            active.discard(r)
            continue
        if counts[r] == 0:
            pick = min(cands, key=lambda i: (distance_of[i], i))
        else:
            pick = cands[rng.randrange(len(cands))]
        cands.remove(pick)
        chosen.append(pick)
        counts[r] += 1
    return chosen


def environmental_selection(objs, n: int, refs: ReferencePointSet, rng: random.Random):
    """Pick n indices of ``objs``; return (indices, rank, niche, distance) of the chosen."""
    fronts = fast_nondominated_sort(objs)
    rank = {}
    for r, f in enumerate(fronts):
        for i in f:
            rank[i] = r
    chosen: list[int] = []
    last: list[int] = []
    for f in fronts:
        if len(chosen) + len(f) <= n:
            chosen.extend(f)
            if len(chosen) == n:
                break
        else:
            last = f
            break
    pool = chosen + last
    normed, _, _ = normalize([objs[i] for i in pool])
    niche_ids, dists = associate(normed, refs)
    niche_of = {i: int(niche_ids[p]) for p, i in enumerate(pool)}
    dist_of = {i: float(dists[p]) for p, i in enumerate(pool)}
    norm_of = {i: tuple(float(v) for v in normed[p]) for p, i in enumerate(pool)}
    if len(chosen) < n:
        # per-objective best values survive the split, so the population never loses its ideal point
        keep = []
        for axis in range(len(objs[0])):
            best = min(objs[i][axis] for i in pool)
            if len(chosen) + len(keep) < n and not any(objs[i][axis] == best for i in chosen + keep):
                hits = [i for i in last if objs[i][axis] == best]
                if hits:
                    keep.append(min(hits, key=lambda i: (tuple(objs[i]), i)))
        chosen = chosen + keep
        counts = np.zeros(len(refs), dtype=int)
        for i in chosen:
            counts[niche_of[i]] += 1
        rest = [i for i in last if i not in keep]
        chosen = chosen + niche(rest, n - len(chosen), counts, niche_of, dist_of, rng)
    return chosen, rank, niche_of, dist_of, norm_of


# ---------------------------------------------------------------------------
# main loop

class _Evaluator:
    def __init__(self, e: EnrichedInstance, cap_rule: str, limit: int = 200_000):
        self.e = e
        self.cap_rule = cap_rule
        self.limit = limit
        self.cache: dict[tuple[Genotype, str], tuple[Schedule, ObjectiveVector]] = {}

    def __call__(self, g: Genotype, mode: str) -> Individual:
        key = (g, mode)
        hit = self.cache.get(key)
        if hit is None:
            s = decode(g, self.e, mode, self.cap_rule)
            hit = (s, evaluate(s, self.e))
            if len(self.cache) >= self.limit:
                self.cache.clear()
            self.cache[key] = hit
        return Individual(g, hit[1], hit[0])


def _tournament(pop: list[Individual], rng: random.Random) -> Individual:
    a, b = pop[rng.randrange(len(pop))], pop[rng.randrange(len(pop))]
    return a if (a.rank, a.distance) <= (b.rank, b.distance) else b


def _select(cands: list[Individual], n: int, refs, rng) -> list[Individual]:
    # each objective vector competes once; repeats (distinct genotypes first)
    # only fill a pool that would otherwise be short
    seen_obj, seen_gen = set(), set()
    unique, alt, dups = [], [], []
    for ind in cands:
        if ind.objectives not in seen_obj:
            unique.append(ind)
        elif ind.genotype not in seen_gen:
            alt.append(ind)
        else:
            dups.append(ind)
        seen_obj.add(ind.objectives)
        seen_gen.add(ind.genotype)
    pool = (unique + alt + dups)[:max(n, len(unique))]
    objs = [ind.objectives for ind in pool]
    idx, rank, niche_of, dist_of, norm_of = environmental_selection(objs, n, refs, rng)
    out = []
    for i in idx:
        ind = pool[i]
        out.append(Individual(ind.genotype, ind.objectives, ind.schedule, rank[i],
                              norm_of[i], niche_of[i], dist_of[i]))
    return out


def first_front(pop: list[Individual]) -> ParetoFront:
    front = fast_nondominated_sort([ind.objectives for ind in pop])[0] if pop else []
    return ParetoFront.from_candidates(
        FrontMember(pop[i].objectives, pop[i].schedule, pop[i].genotype) for i in front)


Refiner = Callable[[Schedule, EnrichedInstance], tuple[Schedule, Schedule]]


def run(e: EnrichedInstance, cfg: EvolveConfig, refiner: Refiner | None = local_refine,
        callback: Callable[[int, list[Individual]], bool] | None = None) -> ParetoFront:
    """Evolve a population and return the first front of the final one.

    ``callback(generation, population)`` is called after initialisation
    (generation 0) and after every generation; returning True stops the run.
    """
    rng = random.Random(cfg.seed)
    refs = das_dennis(cfg.divisions)
    ev = _Evaluator(e, cfg.cap_rule)
    inst = e.instance
    n = cfg.population_size
    started = time.monotonic()

    def out_of_time():
        return (cfg.runtime_limit_seconds is not None
                and time.monotonic() - started >= cfg.runtime_limit_seconds)

    pop = [ev(random_genotype(e, rng, cfg.cap_rule), relax_mode_for(0)) for _ in range(n)]
    pop = _select(pop, n, refs, rng)
    gen = 0
    if callback is not None and callback(gen, pop):
        return first_front(pop)
    limit = cfg.generation_limit if cfg.generation_limit is not None else math.inf
    while gen < limit and not out_of_time():
        mode = relax_mode_for(gen)
        parents = [ev(ind.genotype, mode) for ind in pop]
        for old, new in zip(pop, parents):
            new.rank, new.distance = old.rank, old.distance
        offspring: list[Genotype] = []
        while len(offspring) < n:
            a, b = _tournament(parents, rng).genotype, _tournament(parents, rng).genotype
            if rng.random() < cfg.crossover_rate:
                a, b = two_point_crossover(a, b, rng, inst)
            offspring.append(mutate(a, rng, cfg.mutation_rate, e, cfg.cap_rule))
            offspring.append(mutate(b, rng, cfg.mutation_rate, e, cfg.cap_rule))
        children = [ev(g, mode) for g in offspring]
        refined = []
        if refiner is not None:
            for child in children:
                for s in refiner(child.schedule, e):
                    refined.append(ev(encode(s, e, cfg.cap_rule), mode))
        pop = _select(parents + children + refined, n, refs, rng)
        gen += 1
        if callback is not None and callback(gen, pop):
            break
    return first_front(pop)
