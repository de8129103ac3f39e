"""Planar rigid-body helpers: angles, rotations, SE(2) poses."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def wrap_angle(theta: float) -> float:
    """Normalize an angle into (-pi, pi]."""
    w = math.remainder(theta, math.tau)
    return math.pi if w <= -math.pi else w


def rot2(theta: float) -> np.ndarray:
    """2x2 rotation matrix."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def state_rotation(theta: float) -> np.ndarray:
    """4x4 rotation acting on a [x, vx, y, vy] state vector.

    Rotates the position pair and the velocity pair by the same angle.
    """
    c, s = math.cos(theta), math.sin(theta)
    return np.array(
        [
            [c, 0.0, -s, 0.0],
            [0.0, c, 0.0, -s],
            [s, 0.0, c, 0.0],
            [0.0, s, 0.0, c],
        ]
    )


@dataclass
class Pose2D:
    """SE(2) pose: position in meters, heading in radians in (-pi, pi]."""

    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self):
        self.x = float(self.x)
        self.y = float(self.y)
        self.heading = wrap_angle(float(self.heading))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def transform_points(self, points: np.ndarray) -> np.ndarray:
        """Map points from this pose's local frame into the parent frame."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return pts @ rot2(self.heading).T + self.position

    def inverse_transform_points(self, points: np.ndarray) -> np.ndarray:
        """Map points from the parent frame into this pose's local frame."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return (pts - self.position) @ rot2(self.heading)

    def copy(self) -> "Pose2D":
        return Pose2D(self.x, self.y, self.heading)
