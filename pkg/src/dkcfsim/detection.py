"""Turn raw scans into candidate moving-object detections.

Pipeline: drop no-return beams, convert polar to Cartesian in the sensor
frame, place the points into the robot's believed global frame, cluster
with DBSCAN, reject oversized clusters (walls and other large static
structure), and report each surviving cluster's centroid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dbscan import NOISE, DbscanParams, dbscan, sq_dist_matrix
from .geometry import Pose2D

__all__ = [
    "ScanPoint",
    "DbscanParams",
    "Detection",
    "polar_to_cartesian",
    "transform_to_global",
    "dbscan",
    "extract_detections",
    "detect",
]


@dataclass
class ScanPoint:
    """One finite-range beam return."""

    range: float
    bearing: float
    cartesian: tuple

    @classmethod
    def from_polar(cls, r: float, bearing: float) -> "ScanPoint":
        return cls(r, bearing, (r * math.cos(bearing), r * math.sin(bearing)))


@dataclass
class Detection:
    """Centroid of one candidate object cluster, in the believed global frame."""

    centroid: np.ndarray
    frame: str  # robot id whose believed frame the centroid lives in
    tick: int
    support: int


def polar_to_cartesian(scan) -> list:
    """Convert (range, bearing) pairs to sensor-frame scan points.

    The caller must have filtered out no-return beams; ranges here are
    finite.
    """
    return [ScanPoint.from_polar(float(r), float(th)) for r, th in scan]


def transform_to_global(points, believed_pose: Pose2D) -> np.ndarray:
    """Rotate and translate sensor-frame points into the believed frame.

    Accepts a list of ScanPoint or an (N, 2) array; returns an (N, 2) array.
    """
    if len(points) == 0:
        return np.empty((0, 2))
    if isinstance(points[0], ScanPoint):
        xy = np.array([p.cartesian for p in points])
    else:
        xy = np.asarray(points, dtype=float).reshape(-1, 2)
    return believed_pose.transform_points(xy)


def _cluster_diameter(member_points: np.ndarray) -> float:
    if len(member_points) < 2:
        return 0.0
    return float(np.sqrt(sq_dist_matrix(member_points).max()))


def extract_detections(
    labels: np.ndarray,
    points: np.ndarray,
    params: DbscanParams,
    tick: int,
    robot_id: str,
) -> list:
    """Centroids of clusters whose diameter stays under the extent cap.

    Noise points and oversized clusters contribute nothing.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    detections = []
    for label in np.unique(labels):
        if label == NOISE:
            continue
        members = pts[labels == label]
        if _cluster_diameter(members) > params.max_cluster_extent:
            continue
        detections.append(
            Detection(
                centroid=members.mean(axis=0),
                frame=robot_id,
                tick=tick,
                support=int(len(members)),
            )
        )
    return detections


def detect(
    scan: np.ndarray,
    believed_pose: Pose2D,
    params: DbscanParams,
    tick: int,
    robot_id: str,
) -> list:
    """Full scan-to-detections pipeline for one robot at one tick."""
    finite = scan[np.isfinite(scan[:, 0])]
    if len(finite) == 0:
        return []
    # Vectorized polar-to-Cartesian conversion plus frame change; same math
    # as polar_to_cartesian followed by transform_to_global.
    r, bearing = finite[:, 0], finite[:, 1]
    local_xy = np.column_stack([r * np.cos(bearing), r * np.sin(bearing)])
    global_pts = believed_pose.transform_points(local_xy)
    labels = dbscan(global_pts, params)
    return extract_detections(labels, global_pts, params, tick, robot_id)
