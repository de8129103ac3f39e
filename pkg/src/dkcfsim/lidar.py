"""Planar range-bearing sensor simulation via ray casting.

Obstacles are circles (tracked objects) and line segments (arena walls).
Beams that hit nothing within range report the ``NO_RETURN`` sentinel,
which is infinity and therefore always distinct from ``max_range``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Pose2D

NO_RETURN = math.inf

_T_EPS = 1e-9  # minimum ray parameter counted as "in front of" the sensor


@dataclass
class LidarSpec:
    """Beam layout and noise model of the simulated scanner."""

    num_beams: int
    fov: float
    max_range: float
    range_noise_std: float = 0.0


def beam_bearings(spec: LidarSpec) -> np.ndarray:
    """Bearing of each beam relative to the sensor heading.

    Beams span [-fov/2, +fov/2] inclusive; a single beam points straight
    ahead.
    """
    if spec.num_beams == 1:
        return np.zeros(1)
    k = np.arange(spec.num_beams)
    return -spec.fov / 2.0 + k * spec.fov / (spec.num_beams - 1)


def ray_circle_distances(
    origin: np.ndarray, dirs: np.ndarray, circles: np.ndarray
) -> np.ndarray:
    """Distance from origin to the first hit on each circle per ray.

    dirs: (B, 2) unit vectors; circles: (C, 3) rows of [cx, cy, radius].
    Returns (B, C) with inf where a ray misses the circle.
    """
    out = np.full((dirs.shape[0], circles.shape[0]), np.inf)
    if circles.shape[0] == 0:
        return out
    delta = circles[:, :2] - origin  # (C, 2)
    b = dirs @ delta.T  # (B, C)
    cc = np.einsum("ij,ij->i", delta, delta) - circles[:, 2] ** 2  # (C,)
    disc = b * b - cc
    valid = disc >= 0.0
    sq = np.sqrt(np.where(valid, disc, 0.0))
    t_near = b - sq
    t_far = b + sq
    t = np.where(t_near > _T_EPS, t_near, np.where(t_far > _T_EPS, t_far, np.inf))
    out[valid] = t[valid]
    return out


def ray_segment_distances(
    origin: np.ndarray, dirs: np.ndarray, segments: np.ndarray
) -> np.ndarray:
    """Distance from origin to each segment per ray.

    segments: (S, 4) rows of [ax, ay, bx, by]. Returns (B, S) with inf
    for misses.
    """
    if segments.shape[0] == 0:
        return np.full((dirs.shape[0], 0), np.inf)
    a = segments[:, 0:2]
    e = segments[:, 2:4] - a  # (S, 2)
    rel = a - origin  # (S, 2)
    # Solve origin + t*d = a + s*e for each (ray, segment) pair:
    # t = (rel x e) / (d x e), s = (rel x d) / (d x e).
    denom = dirs[:, 0:1] * e[:, 1] - dirs[:, 1:2] * e[:, 0]  # (B, S)
    cross_rel_e = rel[:, 0] * e[:, 1] - rel[:, 1] * e[:, 0]  # (S,)
    cross_rel_d = np.outer(dirs[:, 1], rel[:, 0]) - np.outer(dirs[:, 0], rel[:, 1])
    with np.errstate(divide="ignore", invalid="ignore"):
        t = cross_rel_e / denom
        s = cross_rel_d / denom
    ok = (np.abs(denom) > 1e-15) & (t > _T_EPS) & (s >= 0.0) & (s <= 1.0)
    return np.where(ok, t, np.inf)


def cast_scan(
    pose: Pose2D,
    spec: LidarSpec,
    circles: np.ndarray,
    segments: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Simulate one scan. Returns (num_beams, 2) columns [range, bearing].

    Range is the distance to the nearest obstacle plus Gaussian noise,
    clamped to [0, max_range]. Obstacles beyond max_range (or no obstacle
    at all) yield NO_RETURN. The noise vector is drawn for every beam
    regardless of hits so the stream consumption per tick is fixed.
    """
    bearings = beam_bearings(spec)
    angles = pose.heading + bearings
    dirs = np.column_stack([np.cos(angles), np.sin(angles)])
    origin = pose.position

    d_circ = ray_circle_distances(origin, dirs, np.asarray(circles, dtype=float))
    d_seg = ray_segment_distances(origin, dirs, np.asarray(segments, dtype=float))
    nearest = np.minimum(
        d_circ.min(axis=1) if d_circ.shape[1] else np.full(len(dirs), np.inf),
        d_seg.min(axis=1) if d_seg.shape[1] else np.full(len(dirs), np.inf),
    )

    noise = rng.normal(0.0, spec.range_noise_std, size=spec.num_beams)
    hit = nearest <= spec.max_range
    ranges = np.where(
        hit, np.clip(nearest + noise, 0.0, spec.max_range), NO_RETURN
    )
    return np.column_stack([ranges, bearings])
