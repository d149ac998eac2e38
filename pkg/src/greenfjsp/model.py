"""Problem data: FJSP instances, energy-market profiles and their combination.

Units used throughout:

* time is measured in integer steps of ``step_minutes`` (15 by default),
* prices are EUR/MWh, emission factors gCO2eq/kWh,
* demands are kW and are a property of the job, not of the machine.
"""

from __future__ import annotations

import csv
import io
import math
import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from functools import cached_property

import numpy as np

from .errors import CorrelationError, HorizonError, IngestError, ParameterError, ParseError

MARKET_HEADER = ("timestamp", "price_eur_mwh", "emission_g_per_kwh")


@dataclass(frozen=True)
class OperationSpec:
    job: int
    position: int
    options: tuple[tuple[int, int], ...]  # (machine, duration), machine 1-based

    def duration_on(self, machine: int) -> int:
        for k, tau in self.options:
            if k == machine:
                return tau
        raise ParameterError(f"machine {machine} is not eligible for operation ({self.job},{self.position})")


@dataclass(frozen=True)
class Job:
    index: int
    operations: tuple[OperationSpec, ...]


@dataclass(frozen=True)
class Instance:
    jobs: tuple[Job, ...]
    machine_count: int

    def __post_init__(self):
        if self.machine_count < 1:
            raise ParameterError("machine_count must be positive")
        for pos, job in enumerate(self.jobs, start=1):
            if job.index != pos:
                raise ParameterError(f"job indices must be 1..n in order, got {job.index} at {pos}")
            if not job.operations:
                raise ParameterError(f"job {job.index} has no operations")
            for j, op in enumerate(job.operations, start=1):
                if op.job != job.index or op.position != j:
                    raise ParameterError(f"operation ({op.job},{op.position}) misplaced in job {job.index}")
                if not op.options:
                    raise ParameterError(f"operation ({op.job},{op.position}) has no eligible machine")
                seen = set()
                for k, tau in op.options:
                    if not 1 <= k <= self.machine_count:
                        raise ParameterError(f"operation ({op.job},{op.position}): machine {k} out of range")
                    if tau < 1:
                        raise ParameterError(f"operation ({op.job},{op.position}): duration must be positive")
                    if k in seen:
                        raise ParameterError(f"operation ({op.job},{op.position}): duplicate machine {k}")
                    seen.add(k)

    @property
    def job_count(self) -> int:
        return len(self.jobs)

    @cached_property
    def op_counts(self) -> tuple[int, ...]:
        return tuple(len(job.operations) for job in self.jobs)

    @cached_property
    def operations(self) -> tuple[OperationSpec, ...]:
        """All operations in (job, position) order; the flat index used by genotypes."""
        return tuple(op for job in self.jobs for op in job.operations)

    @property
    def operation_count(self) -> int:
        return len(self.operations)

    @cached_property
    def op_offsets(self) -> tuple[int, ...]:
        offsets, acc = [], 0
        for n in self.op_counts:
            offsets.append(acc)
            acc += n
        return tuple(offsets)

    def op_index(self, job: int, position: int) -> int:
        return self.op_offsets[job - 1] + position - 1

    def operation(self, job: int, position: int) -> OperationSpec:
        return self.jobs[job - 1].operations[position - 1]


# ---------------------------------------------------------------------------
# instance files

def parse_instance(text: str) -> Instance:
    """Parse the Brandimarte/Hurink text layout.

    Line 1 holds ``<jobs> <machines> [<avg machines per op>]``; each following
    non-blank line describes one job as
    ``<#ops> { <#options> { <machine> <duration> } }``.
    """
    lines = [(no, line.split()) for no, line in enumerate(text.splitlines(), start=1)]
    lines = [(no, toks) for no, toks in lines if toks]
    if not lines:
        raise ParseError("empty instance file", 1)

    head_no, head = lines[0]
    if len(head) not in (2, 3):
        raise ParseError(f"header needs 2 or 3 fields, got {len(head)}", head_no)
    try:
        n_jobs, n_machines = int(head[0]), int(head[1])
        if len(head) == 3:
            float(head[2])
    except ValueError:
        raise ParseError("non-numeric header field", head_no) from None
    if n_jobs < 0 or n_machines < 1:
        raise ParseError("job count must be >= 0 and machine count >= 1", head_no)

    body = lines[1:]
    if len(body) < n_jobs:
        missing_at = body[-1][0] + 1 if body else head_no + 1
        raise ParseError(f"expected {n_jobs} job lines, found {len(body)}", missing_at)
    if len(body) > n_jobs:
        raise ParseError(f"unexpected content after {n_jobs} job lines", body[n_jobs][0])

    jobs = []
    for i, (no, toks) in enumerate(body, start=1):
        try:
            nums = [int(t) for t in toks]
        except ValueError:
            raise ParseError("non-integer token in job line", no) from None
        pos = 0

        def take() -> int:
            nonlocal pos
            if pos >= len(nums):
                raise ParseError(f"job {i}: line ends early", no)
            pos += 1
            return nums[pos - 1]

        n_ops = take()
        if n_ops < 1:
            raise ParseError(f"job {i}: needs at least one operation", no)
        ops = []
        for j in range(1, n_ops + 1):
            n_opts = take()
            if n_opts < 1:
                raise ParseError(f"operation ({i},{j}): needs at least one machine", no)
            opts, seen = [], set()
            for _ in range(n_opts):
                k, tau = take(), take()
                if not 1 <= k <= n_machines:
                    raise ParseError(f"operation ({i},{j}): machine {k} outside 1..{n_machines}", no)
                if tau < 1:
                    raise ParseError(f"operation ({i},{j}): duration must be positive", no)
                if k in seen:
                    raise ParseError(f"operation ({i},{j}): machine {k} listed twice", no)
                seen.add(k)
                opts.append((k, tau))
            ops.append(OperationSpec(i, j, tuple(opts)))
        if pos != len(nums):
            raise ParseError(f"job {i}: {len(nums) - pos} trailing tokens", no)
        jobs.append(Job(i, tuple(ops)))
    return Instance(tuple(jobs), n_machines)


def format_instance(instance: Instance) -> str:
    """Write an instance back in the text layout (debug writer)."""
    avg = sum(len(op.options) for op in instance.operations) / max(1, instance.operation_count)
    out = [f"{instance.job_count} {instance.machine_count} {avg:g}"]
    for job in instance.jobs:
        toks = [str(len(job.operations))]
        for op in job.operations:
            toks.append(str(len(op.options)))
            for k, tau in op.options:
                toks += [str(k), str(tau)]
        out.append(" ".join(toks))
    return "\n".join(out) + "\n"


# Table of the public benchmark's dimensions:
# jobs, machines, ops per job (lo, hi), total ops, duration range (lo, hi).
BRANDIMARTE_DIMENSIONS = {
    "mk01": (10, 6, (5, 7), 55, (1, 7)),
    "mk02": (10, 6, (5, 7), 58, (1, 7)),
    "mk03": (15, 8, (10, 10), 150, (1, 20)),
    "mk04": (15, 8, (3, 10), 90, (1, 10)),
    "mk05": (15, 4, (5, 10), 106, (5, 10)),
    "mk06": (10, 10, (15, 15), 150, (1, 10)),
    "mk07": (20, 5, (5, 5), 100, (1, 20)),
    "mk08": (20, 10, (5, 10), 225, (5, 20)),
    "mk09": (20, 10, (10, 15), 240, (5, 20)),
    "mk10": (20, 15, (10, 15), 240, (5, 20)),
    "mk11": (30, 5, (5, 8), 179, (10, 30)),
    "mk12": (30, 10, (5, 10), 193, (10, 30)),
    "mk13": (30, 10, (5, 10), 231, (10, 30)),
    "mk14": (30, 15, (8, 12), 277, (10, 30)),
    "mk15": (30, 15, (8, 12), 284, (10, 30)),
}


def generate_instance(
    jobs: int,
    machines: int,
    ops_per_job: tuple[int, int],
    durations: tuple[int, int],
    seed: int,
    total_ops: int | None = None,
    max_options: int = 3,
) -> Instance:
    """Random FJSP instance with the given dimensions.

    When ``total_ops`` is given the per-job operation counts are drawn so they
    add up to it exactly; the upper bound is widened if it cannot be reached.
    """
    if jobs < 1 or machines < 1:
        raise ParameterError("jobs and machines must be positive")
    lo, hi = ops_per_job
    if not 1 <= lo <= hi:
        raise ParameterError("ops_per_job must satisfy 1 <= lo <= hi")
    rng = random.Random(seed)
    if total_ops is None:
        counts = [rng.randint(lo, hi) for _ in range(jobs)]
    else:
        if total_ops < lo * jobs:
            raise ParameterError("total_ops below jobs * min ops per job")
        hi = max(hi, -(-total_ops // jobs))
        counts = [lo] * jobs
        for _ in range(total_ops - lo * jobs):
            counts[rng.choice([i for i in range(jobs) if counts[i] < hi])] += 1
    d_lo, d_hi = durations
    result = []
    for i, n_ops in enumerate(counts, start=1):
        ops = []
        for j in range(1, n_ops + 1):
            n_opts = rng.randint(1, min(max_options, machines))
            ks = sorted(rng.sample(range(1, machines + 1), n_opts))
            ops.append(OperationSpec(i, j, tuple((k, rng.randint(d_lo, d_hi)) for k in ks)))
        result.append(Job(i, tuple(ops)))
    return Instance(tuple(result), machines)


def brandimarte_standin(name: str, seed: int = 0) -> Instance:
    """Synthetic instance with the published dimensions of benchmark ``name``.

    Only a structural stand-in for when the real mk files are not available.
    """
    try:
        jobs, machines, ops, total, durations = BRANDIMARTE_DIMENSIONS[name]
    except KeyError:
        raise ParameterError(f"unknown benchmark {name!r}") from None
    return generate_instance(jobs, machines, ops, durations, seed=seed, total_ops=total)


# ---------------------------------------------------------------------------
# energy profiles

@dataclass(frozen=True, eq=False)
class EnergyProfile:
    price: tuple[float, ...]      # EUR/MWh per step
    emission: tuple[float, ...]   # gCO2eq/kWh per step
    step_minutes: int = 15

    def __post_init__(self):
        if self.step_minutes < 1:
            raise ParameterError("step_minutes must be positive")
        if len(self.price) != len(self.emission):
            raise ParameterError("price and emission series differ in length")
        if any(v < 0 for v in self.emission):
            raise ParameterError("emission factors must be non-negative")

    @property
    def horizon(self) -> int:
        return len(self.price)

    def __len__(self) -> int:
        return len(self.price)

    def __eq__(self, other):
        if not isinstance(other, EnergyProfile):
            return NotImplemented
        return (self.step_minutes, self.price, self.emission) == (
            other.step_minutes, other.price, other.emission)

    __hash__ = object.__hash__

    def tiled(self, horizon: int) -> "EnergyProfile":
        """Repeat the series cyclically up to ``horizon`` steps."""
        n = len(self.price)
        if horizon <= n:
            return self
        return EnergyProfile(
            tuple(self.price[s % n] for s in range(horizon)),
            tuple(self.emission[s % n] for s in range(horizon)),
            self.step_minutes,
        )


def _parse_timestamp(value: str) -> datetime:
    value = value.strip()
    if value.endswith("Z"):
        value = value[:-1] + "+00:00"
    ts = datetime.fromisoformat(value)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts


def read_market_rows(text: str) -> list[tuple[datetime, float, float]]:
    """Validate a market CSV and return its hourly rows."""
    reader = csv.reader(io.StringIO(text.lstrip("﻿")))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise IngestError("empty market file", 1) from None
    missing = [c for c in MARKET_HEADER if c not in header]
    if missing:
        raise IngestError(f"missing column(s): {', '.join(missing)}", 1)
    cols = [header.index(c) for c in MARKET_HEADER]

    rows = []
    prev = None
    for row_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < len(header):
            raise IngestError(f"expected {len(header)} cells, got {len(row)}", row_no)
        raw_ts, raw_p, raw_e = (row[c] for c in cols)
        try:
            ts = _parse_timestamp(raw_ts)
        except ValueError:
            raise IngestError(f"bad timestamp {raw_ts!r}", row_no) from None
        try:
            price, emission = float(raw_p), float(raw_e)
        except ValueError:
            raise IngestError("non-numeric price or emission cell", row_no) from None
        if not (math.isfinite(price) and math.isfinite(emission)):
            raise IngestError("non-finite value", row_no)
        if emission < 0:
            raise IngestError("negative emission factor", row_no)
        if prev is not None:
            if ts <= prev:
                raise IngestError("timestamps not strictly increasing", row_no)
            if ts - prev != timedelta(hours=1):
                raise IngestError(f"gap of {ts - prev} between consecutive rows", row_no)
        prev = ts
        rows.append((ts, price, emission))
    if not rows:
        raise IngestError("no data rows", 2)
    return rows


def load_energy_profile(text: str, step_minutes: int = 15) -> EnergyProfile:
    """Read hourly market data and expand it to ``step_minutes`` resolution.

    Each hourly value is repeated ``60 // step_minutes`` times (piecewise
    constant, no interpolation).
    """
    if step_minutes < 1 or 60 % step_minutes:
        raise ParameterError("step_minutes must divide 60")
    reps = 60 // step_minutes
    rows = read_market_rows(text)
    price = tuple(p for _, p, _ in rows for _ in range(reps))
    emission = tuple(e for _, _, e in rows for _ in range(reps))
    return EnergyProfile(price, emission, step_minutes)


def synthetic_market(
    seed: int,
    hours: int,
    price_mean: float = 150.0,
    price_sd: float = 80.0,
    emission_mean: float = 450.0,
    emission_sd: float = 100.0,
    correlation: float = 0.72,
    persistence: float = 0.5,
    start: str = "2022-02-01T00:00:00+00:00",
) -> list[tuple[datetime, float, float]]:
    """Hourly (timestamp, price, emission) rows from correlated AR(1) processes.

    Both latent processes are stationary with unit variance and share the
    lag-one coefficient ``persistence``; their innovations have correlation
    ``correlation``, so the two series do too. Emissions are clamped at 0.
    """
    if hours < 1:
        raise ParameterError("hours must be >= 1")
    if price_sd < 0 or emission_sd < 0:
        raise ParameterError("standard deviations must be >= 0")
    if not -1.0 <= correlation <= 1.0:
        raise ParameterError("correlation must lie in [-1, 1]")
    if not 0.0 <= persistence < 1.0:
        raise ParameterError("persistence must lie in [0, 1)")

    rng = np.random.default_rng(seed)
    eps = rng.standard_normal((hours, 2))
    shocks_p = eps[:, 0]
    shocks_e = correlation * eps[:, 0] + math.sqrt(1.0 - correlation**2) * eps[:, 1]
    scale = math.sqrt(1.0 - persistence**2)
    zp = np.empty(hours)
    ze = np.empty(hours)
    zp[0], ze[0] = shocks_p[0], shocks_e[0]
    for h in range(1, hours):
        zp[h] = persistence * zp[h - 1] + scale * shocks_p[h]
        ze[h] = persistence * ze[h - 1] + scale * shocks_e[h]

    t0 = _parse_timestamp(start)
    price = price_mean + price_sd * zp
    emission = np.maximum(0.0, emission_mean + emission_sd * ze)
    return [
        (t0 + timedelta(hours=h), float(price[h]), float(emission[h]))
        for h in range(hours)
    ]


def market_csv(rows) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(MARKET_HEADER)
    for ts, price, emission in rows:
        writer.writerow([ts.isoformat(), repr(float(price)), repr(float(emission))])
    return out.getvalue()


def generate_synthetic_profile(
    seed: int,
    hours: int,
    price_mean: float = 150.0,
    price_sd: float = 80.0,
    emission_mean: float = 450.0,
    emission_sd: float = 100.0,
    correlation: float = 0.72,
    step_minutes: int = 15,
    persistence: float = 0.5,
) -> EnergyProfile:
    """Stand-in for real market data; identical to loading ``market_csv`` of the same rows."""
    rows = synthetic_market(seed, hours, price_mean, price_sd, emission_mean,
                            emission_sd, correlation, persistence)
    return load_energy_profile(market_csv(rows), step_minutes)


def price_emission_correlation(profile: EnergyProfile) -> float:
    if len(profile) < 2:
        raise CorrelationError("need at least two time steps")
    p = np.asarray(profile.price, dtype=float)
    e = np.asarray(profile.emission, dtype=float)
    if p.std() == 0 or e.std() == 0:
        raise CorrelationError("correlation undefined for a constant series")
    r = float(np.corrcoef(p, e)[0, 1])
    return max(-1.0, min(1.0, r))


# ---------------------------------------------------------------------------
# enrichment and per-operation energy

@dataclass(frozen=True, eq=False)
class EnrichedInstance:
    instance: Instance
    profile: EnergyProfile
    demand_kw: tuple[float, ...]
    base_demand_kw: float = 500.0
    _tables: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def horizon(self) -> int:
        return self.profile.horizon

    def step_kwh(self, job: int) -> float:
        """Energy drawn by one step of any operation of ``job``."""
        return self.demand_kw[job - 1] * self.profile.step_minutes / 60.0

    def energy_kwh(self, job: int, duration: int) -> float:
        return self.step_kwh(job) * duration

    @cached_property
    def price_range(self) -> tuple[float, float]:
        return min(self.profile.price), max(self.profile.price)

    @cached_property
    def emission_range(self) -> tuple[float, float]:
        return min(self.profile.emission), max(self.profile.emission)

    def window_sums(self, duration: int) -> tuple[list[float], list[float]]:
        """Exact (fsum) price and emission sums of every cyclic window of ``duration`` steps.

        Indexed by phase ``t % horizon``; entry ``t`` covers steps t..t+duration-1.
        """
        key = ("sum", duration)
        hit = self._tables.get(key)
        if hit is None:
            hit = (_cyclic_window(self.profile.price, duration, math.fsum),
                   _cyclic_window(self.profile.emission, duration, math.fsum))
            self._tables[key] = hit
        return hit

    def window_needs(self, duration: int, rule: str) -> tuple[list[float], list[float]]:
        """Smallest (price, emission) caps that admit a start at each phase.

        ``rule="mean"`` compares caps with the average over the occupied steps,
        ``rule="max"`` with every occupied step.
        """
        key = (rule, duration)
        hit = self._tables.get(key)
        if hit is None:
            if rule == "mean":
                sp, se = self.window_sums(duration)
                hit = ([v / duration for v in sp], [v / duration for v in se])
            elif rule == "max":
                hit = (_cyclic_window(self.profile.price, duration, max),
                       _cyclic_window(self.profile.emission, duration, max))
            else:
                raise ParameterError(f"unknown cap rule {rule!r}")
            self._tables[key] = hit
        return hit

    def cached(self, key, build):
        """Memoise a derived table under ``key`` for the lifetime of this instance."""
        hit = self._tables.get(key)
        if hit is None:
            hit = build()
            self._tables[key] = hit
        return hit

    def extended(self, horizon: int) -> "EnrichedInstance":
        """Same instance on a profile tiled cyclically to ``horizon`` steps."""
        if horizon <= self.horizon:
            return self
        key = ("ext", horizon)
        hit = self._tables.get(key)
        if hit is None:
            hit = EnrichedInstance(self.instance, self.profile.tiled(horizon),
                                   self.demand_kw, self.base_demand_kw)
            self._tables[key] = hit
        return hit


def _cyclic_window(series, width, reducer) -> list[float]:
    n = len(series)
    if n == 0:
        return []
    doubled = list(series) * (width // n + 2)
    return [reducer(doubled[t:t + width]) for t in range(n)]


def enrich(instance: Instance, profile: EnergyProfile, base_demand_kw: float = 500.0) -> EnrichedInstance:
    """Attach a profile and the per-job demand ``base * i / |J|`` kW."""
    if base_demand_kw <= 0:
        raise ParameterError("base_demand_kw must be positive")
    if len(profile) == 0:
        raise ParameterError("energy profile is empty")
    n = instance.job_count
    demand = tuple(base_demand_kw * i / n for i in range(1, n + 1))
    return EnrichedInstance(instance, profile, demand, base_demand_kw)


def op_cost(e: EnrichedInstance, i: int, j: int, k: int, t: int) -> tuple[float, float]:
    """Energy cost (EUR) and emissions (gCO2eq) of operation (i, j) on machine k from step t."""
    tau = e.instance.operation(i, j).duration_on(k)
    if t < 0 or t + tau > e.horizon:
        raise HorizonError(f"operation ({i},{j}) on machine {k} at step {t} overruns horizon {e.horizon}")
    kwh = e.step_kwh(i)
    cost = math.fsum(e.profile.price[t:t + tau]) * kwh / 1000.0
    emissions = math.fsum(e.profile.emission[t:t + tau]) * kwh
    return cost, emissions
