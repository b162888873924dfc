"""Deterministic real-time link-quality emulator for V2X validation.

Feeds on a vehicle trace and a building map; per step it classifies each
ego link as LOS / NLOSb / NLOSv using range-culled geometry, applies an
urban path-loss model with correlated shadowing, filters messages against
receiver sensitivity, corrupts the survivors' positions with a correlated
GNSS error, and reports how long each step took.
"""
from .channel import (
    BlockerGeometry,
    LinkBudget,
    RadioConfig,
    ShadowingTracker,
    assess_link,
    budget_from_states,
    knife_edge_loss,
    nlosv_extra_loss,
    path_loss_los,
    path_loss_nlosb,
)
from .config import ConfigError, EmulatorConfig, config_from_dict, load_config
from .geometry import (
    ClassificationResult,
    ClassifiedLink,
    CullingRanges,
    LinkClassifier,
    LinkCondition,
    SpatialIndex,
    bbox_diagonal,
    classify_step,
    is_between,
    orthogonal_distance,
    segment_intersects_building,
)
from .gnss import GnssConfig, GnssErrorState, GnssTracker, apply_error, stationary_rms, update_error
from .pipeline import Emulator, ReceivedMessage, StepMetrics, run, run_steps, sweep
from .rng import substream
from .scenario import (
    Building,
    Position,
    ScenarioConfig,
    ScenarioStep,
    VehicleState,
    load_buildings,
    load_trace,
)
from .synth import SynthConfig, generate_synthetic_scenario

__version__ = "0.1.0"

__all__ = [
    "BlockerGeometry",
    "Building",
    "ClassificationResult",
    "ClassifiedLink",
    "ConfigError",
    "CullingRanges",
    "Emulator",
    "EmulatorConfig",
    "GnssConfig",
    "GnssErrorState",
    "GnssTracker",
    "LinkBudget",
    "LinkClassifier",
    "LinkCondition",
    "Position",
    "RadioConfig",
    "ReceivedMessage",
    "ScenarioConfig",
    "ScenarioStep",
    "ShadowingTracker",
    "SpatialIndex",
    "StepMetrics",
    "SynthConfig",
    "VehicleState",
    "apply_error",
    "assess_link",
    "bbox_diagonal",
    "budget_from_states",
    "classify_step",
    "config_from_dict",
    "generate_synthetic_scenario",
    "is_between",
    "knife_edge_loss",
    "load_buildings",
    "load_config",
    "load_trace",
    "nlosv_extra_loss",
    "orthogonal_distance",
    "path_loss_los",
    "path_loss_nlosb",
    "run",
    "run_steps",
    "segment_intersects_building",
    "stationary_rms",
    "substream",
    "sweep",
    "update_error",
]
