"""Planning for co-safe temporal-logic tasks on probabilistic semantic maps."""

from .dfa import StateExplosionError, TotalDfa, accepts, compile_formula
from .executor import EpisodeTrace, RunConfig, check_word, information_norm, run_episode
from .formula import FormulaError, parse, progress, to_string
from .model import Belief, Environment, PlDmdp, grid_world, sense, update_map
from .planner import ConvergenceError, Plan, PlannerConfig, is_satisfying, value_iteration
from .product import ProductAutomaton, build, feasibility_check, refresh_edges

__all__ = [
    "Belief",
    "ConvergenceError",
    "Environment",
    "EpisodeTrace",
    "FormulaError",
    "Plan",
    "PlannerConfig",
    "PlDmdp",
    "ProductAutomaton",
    "RunConfig",
    "StateExplosionError",
    "TotalDfa",
    "accepts",
    "build",
    "check_word",
    "compile_formula",
    "feasibility_check",
    "grid_world",
    "information_norm",
    "is_satisfying",
    "parse",
    "progress",
    "refresh_edges",
    "run_episode",
    "sense",
    "to_string",
    "update_map",
    "value_iteration",
]
