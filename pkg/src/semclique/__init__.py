"""Semantics-aware interaction cliques, baseline forecasters and forecast metrics."""

from .cliques import CriteriaConfig, cliques_over_time, form_cliques, pairwise_alpha
from .kinematics import closest_future_distance, direction_relevant, distance_weight, propagate_cv
from .metrics import ade, best_of_n, collision_rate, evaluate, fde, mac
from .predictors import PredictionSet, TrajectoryMode, get_predictor
from .scene import (
    Agent,
    AgentKind,
    AgentState,
    AgentType,
    Clique,
    PolylineKind,
    Scene,
    SceneGraph,
    SemanticMap,
    TokenPolyline,
    TrajectoryHistory,
    validate_scene,
)
from .sceneio import load_scene, save_scene
from .synth import gen_scenario

__version__ = "0.1.0"
