"""Socially-aware mixed-strategy game decision making for unprotected
left-turn / straight conflicts at unsignalized intersections.

The pipeline: quantify the observed driver's interaction orientation from
environment state and trajectory features, pick calibrated payoff
coefficients from a per-tendency expert library, build the proceed/yield
bimatrix with a discounted future-state rollout, and solve the mixed
Nash equilibrium for the decision.
"""

__version__ = "0.1.0"

from .events import LabeledEvent, load_events, save_events
from .expert import (
    ExpertLibrary,
    ExpertParams,
    GAConfig,
    evaluate_loss,
    ga_optimize,
    learn_library,
    load_library,
    lookup,
    save_library,
)
from .game import AgentState, PayoffParams, build_payoff_matrix, decide
from .geometry import IntersectionConfig, IntersectionGeometry, conflict_point, load_geometry
from .kinematics import VehicleState, step_kinematics
from .nash import Bimatrix, MixedProfile, lemke_howson, solve_mixed_nash
from .orientation import (
    InteractionSnapshot,
    OrientationConfig,
    TendencyCategory,
    classify_tendency,
    interaction_orientation,
    io_series,
)
from .simulator import Metrics, SimConfig, Simulation, run_batch, run_episode

__all__ = [
    "__version__",
    "LabeledEvent", "load_events", "save_events",
    "ExpertLibrary", "ExpertParams", "GAConfig",
    "evaluate_loss", "ga_optimize", "learn_library",
    "load_library", "lookup", "save_library",
    "AgentState", "PayoffParams", "build_payoff_matrix", "decide",
    "IntersectionConfig", "IntersectionGeometry", "conflict_point", "load_geometry",
    "VehicleState", "step_kinematics",
    "Bimatrix", "MixedProfile", "lemke_howson", "solve_mixed_nash",
    "InteractionSnapshot", "OrientationConfig", "TendencyCategory",
    "classify_tendency", "interaction_orientation", "io_series",
    "Metrics", "SimConfig", "Simulation", "run_batch", "run_episode",
]
