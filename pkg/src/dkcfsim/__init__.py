"""Deterministic multi-robot multi-object tracking with consensus fusion.

The package simulates a small team of mobile robots observing moving
cylindrical objects with planar lidars, tracks the objects per robot with
constant-velocity Kalman filters and global-nearest-neighbor association,
and fuses the per-robot tracks over a simulated lossy network using a
distributed Kalman-consensus update with optional adaptive uncertainty
weighting. A CLEAR-MOT evaluation layer scores every run.
"""

from .assignment import hungarian, solve_assignment
from .config import ExperimentConfig, config_from_dict, load_config
from .consensus import (
    ConsensusEngine,
    ConsensusParams,
    FrameTransform,
    InformationPair,
    TrackMessage,
    adaptive_weights,
    aggregate_information,
    dkcf_update_adaptive,
    dkcf_update_standard,
    estimate_frame_alignment,
    information_gain,
    information_pair,
    match_cross_robot_tracks,
    mistrack_filter,
)
from .dbscan import NOISE, DbscanParams, dbscan
from .detection import Detection, ScanPoint, detect, extract_detections
from .errors import (
    ConfigValidationError,
    DegenerateGeometryError,
    DkcfSimError,
    NumericalDegeneracyError,
    UndefinedMetricError,
)
from .evaluation import FrameScore, MotScorer, RunReport, aggregate_runs, mota, score_frame
from .geometry import Pose2D
from .lidar import NO_RETURN, LidarSpec, cast_scan
from .netsim import Envelope, LinkSpec, Network
from .pipeline import run_experiment
from .sweep import compare_aggregates, run_sweep
from .tracker import (
    ModelParams,
    StateEstimate,
    Track,
    Tracker,
    associate,
    kf_predict,
    kf_update,
    mahalanobis_sq,
    track_lifecycle_step,
)
from .world import (
    DriftSpec,
    Rect,
    RobotSpec,
    TargetSpec,
    World,
    WorldConfig,
    WorldSnapshot,
)

__version__ = "0.1.0"
