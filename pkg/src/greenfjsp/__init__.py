"""Energy-aware multi-objective flexible job shop scheduling."""

__version__ = "0.1.0"

from .decode import Genotype, ObjectiveVector, Schedule, ScheduledOp, decode, encode, evaluate
from .errors import FJSPError, LimitError, ValidationError
from .evolve import EvolveConfig, run
from .exact import ParetoFront, brute_force_pareto, dominates, emit_milp
from .model import EnergyProfile, EnrichedInstance, Instance, enrich, op_cost, parse_instance
from .refine import local_refine

__all__ = [
    "EnergyProfile", "EnrichedInstance", "EvolveConfig", "FJSPError", "Genotype", "Instance",
    "LimitError", "ObjectiveVector", "ParetoFront", "Schedule", "ScheduledOp", "ValidationError",
    "brute_force_pareto", "decode", "dominates", "emit_milp", "encode", "enrich", "evaluate",
    "local_refine", "op_cost", "parse_instance", "run",
]
