"""Deterministic ground-truth world.

Targets shuttle along straight segments with elastic reflection at the
endpoints. Robots follow waypoint loops at constant speed. Each robot's
believed pose is its true pose composed with a slowly random-walking
localization bias, which models the drift a real mapping stack would
accumulate. All randomness comes from named streams derived from the
configured seed, so a (config, seed) pair reproduces bit-identical runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose2D, wrap_angle
from .lidar import LidarSpec, cast_scan
from .seeds import derive_rng


@dataclass
class Rect:
    """Axis-aligned rectangle."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def contains(self, p, margin: float = 0.0) -> bool:
        x, y = float(p[0]), float(p[1])
        return (
            self.x_min + margin <= x <= self.x_max - margin
            and self.y_min + margin <= y <= self.y_max - margin
        )

    def wall_segments(self) -> np.ndarray:
        """The four boundary walls as (4, 4) rows of [ax, ay, bx, by]."""
        x0, x1, y0, y1 = self.x_min, self.x_max, self.y_min, self.y_max
        return np.array(
            [
                [x0, y0, x1, y0],
                [x1, y0, x1, y1],
                [x1, y1, x0, y1],
                [x0, y1, x0, y0],
            ]
        )


@dataclass
class TargetSpec:
    """A cylindrical object shuttling along a straight path segment."""

    radius: float
    start: tuple
    heading: tuple
    speed: float
    path: tuple  # two endpoints ((x0, y0), (x1, y1))


@dataclass
class DriftSpec:
    """Random-walk localization bias parameters for one robot."""

    bias_walk_std: float = 0.0  # m per sqrt(tick), per axis
    heading_walk_std: float = 0.0  # rad per sqrt(tick)
    initial_bias: tuple = (0.0, 0.0)


@dataclass
class RobotSpec:
    """A mobile sensing platform following a waypoint loop."""

    waypoints: tuple
    speed: float
    lidar: LidarSpec
    drift: DriftSpec = field(default_factory=DriftSpec)
    id: str | None = None


@dataclass
class WorldConfig:
    arena_bounds: Rect
    targets: list
    robots: list
    tick_period: float
    duration: float
    rng_seed: int

    @property
    def num_ticks(self) -> int:
        return int(round(self.duration / self.tick_period))

    def robot_ids(self) -> list:
        return [
            spec.id if spec.id is not None else f"r{i}"
            for i, spec in enumerate(self.robots)
        ]


@dataclass
class WorldSnapshot:
    """Everything observable about the world at one tick."""

    tick: int
    true_target_positions: list  # per target, np.ndarray (2,)
    true_robot_poses: list  # per robot, Pose2D
    believed_robot_poses: list  # per robot, Pose2D (true pose + drift bias)
    scans: list  # per robot, np.ndarray (num_beams, 2) [range, bearing]


class _TargetState:
    __slots__ = ("arc", "direction", "unit", "anchor", "length")

    def __init__(self, spec: TargetSpec):
        a = np.asarray(spec.path[0], dtype=float)
        b = np.asarray(spec.path[1], dtype=float)
        self.anchor = a
        seg = b - a
        self.length = float(np.linalg.norm(seg))
        self.unit = seg / self.length if self.length > 0 else np.array([1.0, 0.0])
        start = np.asarray(spec.start, dtype=float)
        self.arc = float(np.dot(start - a, self.unit))
        h = np.asarray(spec.heading, dtype=float)
        self.direction = 1.0 if float(np.dot(h, self.unit)) >= 0.0 else -1.0

    def advance(self, dist: float):
        """Move dist along the segment, reflecting at both endpoints."""
        u = self.arc + self.direction * dist
        if self.length == 0:
            return
        # Fold the overshoot back into [0, length]; each fold reverses.
        while u < 0.0 or u > self.length:
            if u < 0.0:
                u = -u
            else:
                u = 2.0 * self.length - u
            self.direction = -self.direction
        self.arc = u

    def position(self) -> np.ndarray:
        return self.anchor + self.arc * self.unit

    def heading_vector(self) -> np.ndarray:
        return self.direction * self.unit


class _RobotState:
    __slots__ = ("position", "wp_index", "heading", "bias", "heading_bias", "walk_steps")

    def __init__(self, spec: RobotSpec):
        wps = [np.asarray(w, dtype=float) for w in spec.waypoints]
        self.position = wps[0].copy()
        self.wp_index = 1 % len(wps) if len(wps) > 1 else 0
        self.heading = 0.0
        if len(wps) > 1:
            d = wps[self.wp_index] - self.position
            if np.linalg.norm(d) > 0:
                self.heading = math.atan2(d[1], d[0])
        self.bias = np.asarray(spec.drift.initial_bias, dtype=float).copy()
        self.heading_bias = 0.0
        self.walk_steps = 0


class World:
    """Steppable ground-truth simulation state."""

    def __init__(self, config: WorldConfig):
        self.config = config
        self.tick = 0
        self._targets = [_TargetState(t) for t in config.targets]
        self._robots = [_RobotState(r) for r in config.robots]
        ids = config.robot_ids()
        self._drift_rngs = [
            derive_rng(config.rng_seed, "drift", rid) for rid in ids
        ]
        self._lidar_rngs = [
            derive_rng(config.rng_seed, "lidar", rid) for rid in ids
        ]
        self._walls = config.arena_bounds.wall_segments()

    def _advance_robot(self, state: _RobotState, spec: RobotSpec):
        wps = [np.asarray(w, dtype=float) for w in spec.waypoints]
        if len(wps) < 2 or spec.speed <= 0.0:
            return
        remaining = spec.speed * self.config.tick_period
        guard = 0
        while remaining > 1e-12 and guard < 4 * len(wps):
            target = wps[state.wp_index]
            delta = target - state.position
            dist = float(np.linalg.norm(delta))
            if dist <= remaining:
                state.position = target.copy()
                remaining -= dist
                state.wp_index = (state.wp_index + 1) % len(wps)
                guard += 1
            else:
                state.position = state.position + delta * (remaining / dist)
                remaining = 0.0
            nxt = wps[state.wp_index] - state.position
            if np.linalg.norm(nxt) > 1e-12:
                state.heading = math.atan2(nxt[1], nxt[0])

    def target_heading_angle(self, target_index: int) -> float:
        v = self._targets[target_index].heading_vector()
        return wrap_angle(math.atan2(v[1], v[0]))

    def reported_loc_std(self, robot_index: int) -> float:
        """Localization std a robot would honestly report at the current tick.

        The accumulated random walk after k steps has per-axis std
        bias_walk_std * sqrt(k).
        """
        spec = self.config.robots[robot_index]
        steps = self._robots[robot_index].walk_steps
        return spec.drift.bias_walk_std * math.sqrt(steps)

    def step(self) -> WorldSnapshot:
        """Advance every entity by one tick period and return the snapshot."""
        cfg = self.config
        dt = cfg.tick_period
        for state, spec in zip(self._targets, cfg.targets):
            state.advance(spec.speed * dt)
        for state, spec, rng in zip(self._robots, cfg.robots, self._drift_rngs):
            self._advance_robot(state, spec)
            state.bias = state.bias + rng.normal(
                0.0, spec.drift.bias_walk_std, size=2
            )
            state.heading_bias += float(rng.normal(0.0, spec.drift.heading_walk_std))
            state.walk_steps += 1

        target_positions = [t.position() for t in self._targets]
        circles = np.array(
            [[p[0], p[1], spec.radius] for p, spec in zip(target_positions, cfg.targets)]
        )

        true_poses = []
        believed_poses = []
        scans = []
        for state, spec, rng in zip(self._robots, cfg.robots, self._lidar_rngs):
            true_pose = Pose2D(state.position[0], state.position[1], state.heading)
            believed = Pose2D(
                state.position[0] + state.bias[0],
                state.position[1] + state.bias[1],
                wrap_angle(state.heading + state.heading_bias),
            )
            true_poses.append(true_pose)
            believed_poses.append(believed)
            scans.append(cast_scan(true_pose, spec.lidar, circles, self._walls, rng))

        snap = WorldSnapshot(
            tick=self.tick,
            true_target_positions=target_positions,
            true_robot_poses=true_poses,
            believed_robot_poses=believed_poses,
            scans=scans,
        )
        self.tick += 1
        return snap
