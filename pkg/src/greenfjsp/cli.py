"""Command-line entry point.

Exit codes: 0 success, 2 invalid input, 3 refused because a size limit was hit.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import hashlib
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .decode import CAP_RULES
from .errors import FJSPError, LimitError, ValidationError
from .evolve import EvolveConfig, run
from .exact import MilpEmission, brute_force_pareto, emit_milp
from .model import (BRANDIMARTE_DIMENSIONS, brandimarte_standin, enrich, generate_synthetic_profile,
                    load_energy_profile, market_csv, parse_instance, synthetic_market)
from .report import (DEFAULT_DELTAS, RunManifest, STANDARD_ANALYSES, export_gantt, front_csv,
                     front_json, parse_front, tradeoff_table)

_CONFIG_TYPES = {f.name: f.type for f in dataclasses.fields(EvolveConfig)}
_FLAG_TO_FIELD = {"population_size": "population_size", "divisions": "divisions",
                  "crossover_rate": "crossover_rate", "mutation_rate": "mutation_rate",
                  "generations": "generation_limit", "time_limit": "runtime_limit_seconds",
                  "seed": "seed", "cap_rule": "cap_rule"}


def _sha(data: str) -> str:
    return hashlib.sha256(data.encode()).hexdigest()


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None


def load_instance(spec: str):
    """Instance from a file path, or a benchmark name (real file if available, else a stand-in)."""
    if Path(spec).is_file():
        text = _read(spec)
        return parse_instance(text), _sha(text)
    if spec in BRANDIMARTE_DIMENSIONS:
        bench = os.environ.get("FJSP_BENCHMARK_DIR")
        if bench:
            for name in (f"{spec}.fjs", f"{spec}.txt", spec, spec.capitalize() + ".fjs"):
                p = Path(bench) / name
                if p.is_file():
                    text = p.read_text(encoding="utf-8")
                    return parse_instance(text), _sha(text)
        return brandimarte_standin(spec), f"standin:{spec}"
    raise ValidationError(f"no instance file or benchmark named {spec!r}")


def _parse_config_file(path: str) -> dict:
    text = _read(path)
    if not text.lstrip().startswith("["):
        text = "[evolve]\n" + text
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ValidationError(f"bad config file {path}: {exc}") from None
    out = {}
    for section in cp.sections():
        for key, raw in cp.items(section):
            key = key.replace("-", "_")
            key = _FLAG_TO_FIELD.get(key, key)
            if key not in _CONFIG_TYPES:
                raise ValidationError(f"unknown config key {key!r} in {path}")
            out[key] = _coerce(key, raw)
    return out


def _coerce(key: str, raw: str):
    if key == "cap_rule":
        return raw.strip()
    if raw.strip().lower() in ("", "none"):
        return None
    try:
        if key in ("population_size", "divisions", "generation_limit", "seed"):
            return int(raw)
        return float(raw)
    except ValueError:
        raise ValidationError(f"config value {key}={raw!r} is not a number") from None


def build_config(args) -> EvolveConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(_parse_config_file(args.config))
    for flag, fld in _FLAG_TO_FIELD.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[fld] = v
    return EvolveConfig(**values)


def _add_market_args(p):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--market", help="hourly market CSV")
    g.add_argument("--synth-seed", type=int, help="use a synthetic market with this seed")
    p.add_argument("--synth-hours", type=int, default=336)
    p.add_argument("--synth-correlation", type=float, default=0.72)
    p.add_argument("--base-demand", type=float, default=500.0, help="kW drawn by the last job")


def _market(args):
    if args.market:
        text = _read(args.market)
        return load_energy_profile(text), args.market, _sha(text), None
    synth = {"seed": args.synth_seed, "hours": args.synth_hours,
             "correlation": args.synth_correlation}
    return generate_synthetic_profile(**synth), None, None, synth


def _enriched(args):
    inst, inst_sha = load_instance(args.instance)
    profile, market, market_sha, synth = _market(args)
    return enrich(inst, profile, args.base_demand), inst_sha, market, market_sha, synth


def _write(out: Path, name: str, text: str) -> str:
    (out / name).write_text(text, encoding="utf-8")
    return name


def _solve(e, cfg: EvolveConfig, out: Path) -> tuple[dict, int, dict]:
    gens = [0]

    def track(gen, _pop):
        gens[0] = gen
        return False

    t0 = time.monotonic()
    front = run(e, cfg, callback=track)
    elapsed = time.monotonic() - t0
    out.mkdir(parents=True, exist_ok=True)
    files = {"front_csv": _write(out, "front.csv", front_csv(front)),
             "front_json": _write(out, "front.json", front_json(front, e))}
    reports = [tradeoff_table(front, a, b).to_dict() for a, b in STANDARD_ANALYSES]
    files["tradeoffs"] = _write(out, "tradeoffs.json", json.dumps(reports, indent=1) + "\n")
    fastest = front.members[0].schedule
    files["gantt"] = _write(out, "gantt.json", json.dumps(export_gantt(fastest, e), indent=1) + "\n")
    return files, gens[0], {"solve_seconds": round(elapsed, 3), "front_size": len(front)}


def cmd_solve(args) -> int:
    cfg = build_config(args)
    e, inst_sha, market, market_sha, synth = _enriched(args)
    out = Path(args.out)
    files, gens, stats = _solve(e, cfg, out)
    manifest = RunManifest(
        instance=args.instance, instance_sha256=inst_sha, market=market, market_sha256=market_sha,
        synth=synth, config=dataclasses.asdict(cfg), seed=cfg.seed, generations_completed=gens,
        front_size=stats["front_size"], timings={"solve_seconds": stats["solve_seconds"]},
        outputs=files, base_demand_kw=args.base_demand)
    _write(out, "manifest.json", manifest.to_json())
    print(f"front of {stats['front_size']} points after {gens} generations -> {out}")
    return 0


def cmd_replay(args) -> int:
    m = RunManifest.from_json(_read(args.manifest))
    inst, inst_sha = load_instance(m.instance)
    if inst_sha != m.instance_sha256:
        raise ValidationError(f"instance {m.instance} changed since the run")
    if m.market is not None:
        text = _read(m.market)
        if _sha(text) != m.market_sha256:
            raise ValidationError(f"market file {m.market} changed since the run")
        profile = load_energy_profile(text)
    else:
        profile = generate_synthetic_profile(**m.synth)
    cfg = dict(m.config)
    # replay the generations the original run completed, without a clock
    cfg["generation_limit"] = m.generations_completed
    cfg["runtime_limit_seconds"] = None
    files, gens, stats = _solve(enrich(inst, profile, m.base_demand_kw), EvolveConfig(**cfg),
                                Path(args.out))
    print(f"replayed {gens} generations, front of {stats['front_size']} points -> {args.out}")
    return 0


def cmd_analyze(args) -> int:
    points = parse_front(_read(args.front))
    deltas = [float(d) for d in args.deltas.split(",")] if args.deltas else DEFAULT_DELTAS
    rep = tradeoff_table(points, args.axis_a, args.axis_b, deltas)
    print(json.dumps(rep.to_dict(), indent=1) if args.json else rep.to_text())
    return 0


def cmd_oracle(args) -> int:
    e, *_ = _enriched(args)
    front = brute_force_pareto(e, max_ops=args.max_ops, max_horizon=args.max_horizon)
    sys.stdout.write(front_csv(front))
    return 0


def cmd_emit_milp(args) -> int:
    e, *_ = _enriched(args)
    names = {"ms": "makespan", "ec": "cost", "em": "emissions"}
    m = MilpEmission(objective=names[args.objective], eps_makespan=args.eps_ms,
                     eps_cost=args.eps_ec, eps_emissions=args.eps_em,
                     max_variables=args.max_variables)
    text = emit_milp(e, m)
    if args.out:
        Path(args.out).write_text(text, encoding="ascii")
    else:
        sys.stdout.write(text)
    return 0


def cmd_gen_market(args) -> int:
    rows = synthetic_market(args.seed, args.hours, correlation=args.correlation)
    text = market_csv(rows)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="greenfjsp",
                                 description="Energy-aware flexible job shop scheduling")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run the memetic NSGA-III on an instance")
    p.add_argument("instance", help="instance file or benchmark name (mk01..mk15)")
    _add_market_args(p)
    p.add_argument("--config", help="key = value file with EvolveConfig fields")
    p.add_argument("--seed", type=int)
    p.add_argument("--generations", type=int)
    p.add_argument("--time-limit", type=float)
    p.add_argument("--population-size", type=int)
    p.add_argument("--divisions", type=int)
    p.add_argument("--crossover-rate", type=float)
    p.add_argument("--mutation-rate", type=float)
    p.add_argument("--cap-rule", choices=CAP_RULES)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("replay", help="re-run a solve from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("analyze", help="trade-off savings table of a front export")
    p.add_argument("front", help="front.csv or front.json")
    p.add_argument("--axis-a", default="ms", choices=("ms", "ec", "em"))
    p.add_argument("--axis-b", default="ec", choices=("ms", "ec", "em"))
    p.add_argument("--deltas", help="comma separated percentages (default 5,20,50,75)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("oracle", help="exact Pareto front by enumeration (tiny instances)")
    p.add_argument("instance")
    _add_market_args(p)
    p.add_argument("--max-ops", type=int, default=6)
    p.add_argument("--max-horizon", type=int, default=24)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("emit-milp", help="write the time-indexed MILP in LP format")
    p.add_argument("instance")
    _add_market_args(p)
    p.add_argument("--objective", choices=("ms", "ec", "em"), default="ms")
    p.add_argument("--eps-ms", type=float)
    p.add_argument("--eps-ec", type=float)
    p.add_argument("--eps-em", type=float)
    p.add_argument("--max-variables", type=int, default=200_000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_emit_milp)

    p = sub.add_parser("gen-market", help="write a synthetic hourly market CSV")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--hours", type=int, required=True)
    p.add_argument("--correlation", type=float, default=0.72)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_market)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except LimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValidationError, FJSPError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
