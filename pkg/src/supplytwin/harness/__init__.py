"""Environment, worlds, simulator and attack library."""

from .scenario import Scenario, ScenarioError, Step, shipped, shipped_names
from .transcript import Divergence, canonical, first_divergence, normalize
from .worlds import IdealWorld, RealWorld, Verdict, assert_equivalence, compare, run_ideal, run_real

__all__ = [
    "Divergence", "IdealWorld", "RealWorld", "Scenario", "ScenarioError", "Step", "Verdict",
    "assert_equivalence", "canonical", "compare", "first_divergence", "normalize", "run_ideal",
    "run_real", "shipped", "shipped_names",
]
