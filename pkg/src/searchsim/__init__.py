"""Deterministic closed-loop simulator and planners for autonomous target search.

The package covers the full pipeline: inspection-aware voxel mapping,
simulated range/camera sensing, surface clustering, scored viewpoint
generation, visibility-based viewpoint clustering, history-aware global
route planning, a local refinement stage and a closed-loop simulator
with a command line front end.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND
from .errors import (
    SearchSimError, GridBoundsError, InvalidPoseError, UnreachableError,
    NoViewpointError, DegenerateDirectionError, ScenarioError, StallError,
)
from .geometry import Pose, wrap_angle, yaw_to_dir
from .grid import (
    UNKNOWN, FREE, OCCUPIED, MapConfig, VoxelGrid, raycast,
    integrate_range_scan, integrate_camera_frame, detect_targets,
    uninspected_set, is_search_complete, save_snapshot, load_snapshot,
)
from .sensors import (
    GroundTruthWorld, RangeScan, lidar_directions, simulate_lidar,
    compute_reachable_mask,
)
from .surface import ClusterKind, SurfaceCluster, build_clusters, pca_split
from .viewpoints import (
    ScoreWeights, ViewpointCandidate, sample_viewpoints, score_candidates,
    select_best,
)
from .vpclusters import ViewpointCluster, cluster_viewpoints
from .routing import (
    TourMode, MatrixMode, CostMatrix, Tour, GridGraph, astar,
    build_cost_matrix, solve_atsp, brute_force_atsp, EVALS,
)
from .localplan import MotionModel, AgentState, Waypoint, LocalPlan, plan_local, time_aligned
from .globalplan import GlobalRoute, HistoryState, plan_global, count_route_inversions
from .scenario import Scenario, load_scenario, parse_scenario, build_world, validate_scenario
from .config import SimConfig, parse_config, load_config, serialize_config
from .sim import CycleRecord, SearchMetrics, run, run_ablation

__all__ = [
    "KERNEL_BACKEND", "__version__",
    "SearchSimError", "GridBoundsError", "InvalidPoseError",
    "UnreachableError", "NoViewpointError", "DegenerateDirectionError",
    "ScenarioError", "StallError",
    "Pose", "wrap_angle", "yaw_to_dir",
    "UNKNOWN", "FREE", "OCCUPIED", "MapConfig", "VoxelGrid", "raycast",
    "integrate_range_scan", "integrate_camera_frame", "detect_targets",
    "uninspected_set", "is_search_complete", "save_snapshot", "load_snapshot",
    "GroundTruthWorld", "RangeScan", "lidar_directions", "simulate_lidar",
    "compute_reachable_mask",
    "ClusterKind", "SurfaceCluster", "build_clusters", "pca_split",
    "ScoreWeights", "ViewpointCandidate", "sample_viewpoints",
    "score_candidates", "select_best",
    "ViewpointCluster", "cluster_viewpoints",
    "TourMode", "MatrixMode", "CostMatrix", "Tour", "GridGraph", "astar",
    "build_cost_matrix", "solve_atsp", "brute_force_atsp", "EVALS",
    "MotionModel", "AgentState", "Waypoint", "LocalPlan", "plan_local",
    "time_aligned",
    "GlobalRoute", "HistoryState", "plan_global", "count_route_inversions",
    "Scenario", "load_scenario", "parse_scenario", "build_world",
    "validate_scenario",
    "SimConfig", "parse_config", "load_config", "serialize_config",
    "CycleRecord", "SearchMetrics", "run", "run_ablation",
]
