import math

import numpy as np
import pytest

from dkcfsim.geometry import Pose2D
from dkcfsim.lidar import (
    NO_RETURN,
    LidarSpec,
    beam_bearings,
    cast_scan,
    ray_circle_distances,
)

NO_OBSTACLES = (np.empty((0, 3)), np.empty((0, 4)))


def make_rng():
    return np.random.default_rng(0)


def test_central_beam_hits_circle_ahead():
    # Circle of radius 0.5 centered 2 m straight ahead: range 1.5.
    spec = LidarSpec(num_beams=9, fov=math.pi / 2, max_range=10.0, range_noise_std=0.0)
    circles = np.array([[2.0, 0.0, 0.5]])
    scan = cast_scan(Pose2D(0, 0, 0), spec, circles, np.empty((0, 4)), make_rng())
    center = spec.num_beams // 2
    assert scan[center, 1] == pytest.approx(0.0)
    assert scan[center, 0] == pytest.approx(1.5, abs=1e-12)


def test_empty_world_all_no_return():
    spec = LidarSpec(num_beams=16, fov=2 * math.pi, max_range=5.0)
    scan = cast_scan(Pose2D(0, 0, 0), spec, *NO_OBSTACLES, make_rng())
    assert np.all(np.isinf(scan[:, 0]))
    assert np.all(scan[:, 0] == NO_RETURN)


def test_circle_behind_robot_with_front_fov_never_hit():
    # Derived check: enumerate all beam-circle intersections analytically.
    spec = LidarSpec(num_beams=31, fov=math.pi, max_range=20.0)
    circles = np.array([[-3.0, 0.0, 0.8]])
    pose = Pose2D(0, 0, 0)
    scan = cast_scan(pose, spec, circles, np.empty((0, 4)), make_rng())
    assert np.all(np.isinf(scan[:, 0]))
    # Oracle: solve the quadratic per beam; no beam in [-pi/2, pi/2] may
    # have a positive root.
    for bearing in beam_bearings(spec):
        d = np.array([math.cos(bearing), math.sin(bearing)])
        delta = circles[0, :2]
        b = float(d @ delta)
        disc = b * b - (float(delta @ delta) - 0.8**2)
        assert disc < 0 or (b - math.sqrt(disc)) <= 0


def test_beam_bearing_layout():
    spec = LidarSpec(num_beams=5, fov=math.pi, max_range=1.0)
    bearings = beam_bearings(spec)
    assert np.allclose(
        bearings, [-math.pi / 2, -math.pi / 4, 0.0, math.pi / 4, math.pi / 2]
    )
    single = LidarSpec(num_beams=1, fov=math.pi, max_range=1.0)
    assert np.allclose(beam_bearings(single), [0.0])


def test_hit_beyond_max_range_is_no_return():
    spec = LidarSpec(num_beams=1, fov=math.pi, max_range=3.0)
    circles = np.array([[5.0, 0.0, 0.5]])  # nearest hit at 4.5 > 3.0
    scan = cast_scan(Pose2D(0, 0, 0), spec, circles, np.empty((0, 4)), make_rng())
    assert scan[0, 0] == NO_RETURN


def test_noise_added_and_clamped():
    # Box walls within 1.5*sqrt(2) of the sensor, comfortably inside range.
    spec = LidarSpec(num_beams=64, fov=2 * math.pi, max_range=3.0, range_noise_std=0.5)
    walls = np.array(
        [
            [-1.5, -1.5, 1.5, -1.5],
            [1.5, -1.5, 1.5, 1.5],
            [1.5, 1.5, -1.5, 1.5],
            [-1.5, 1.5, -1.5, -1.5],
        ]
    )
    scan = cast_scan(Pose2D(0, 0, 0.3), spec, np.empty((0, 3)), walls, make_rng())
    assert np.all(np.isfinite(scan[:, 0]))
    assert np.all(scan[:, 0] >= 0.0)
    assert np.all(scan[:, 0] <= spec.max_range)


def test_zero_noise_range_never_exceeds_true_distance():
    spec = LidarSpec(num_beams=90, fov=2 * math.pi, max_range=50.0)
    rng = np.random.default_rng(7)
    circles = np.array([[2.0, 1.0, 0.4], [-3.0, 2.0, 0.6], [1.0, -4.0, 0.3]])
    pose = Pose2D(0.2, -0.1, 0.5)
    scan = cast_scan(pose, spec, circles, np.empty((0, 4)), rng)
    finite = np.isfinite(scan[:, 0])
    # Each finite return must not exceed the farthest obstacle distance.
    farthest = max(np.linalg.norm(c[:2] - pose.position) + c[2] for c in circles)
    assert np.all(scan[finite, 0] <= farthest + 1e-9)


def test_occlusion_nearest_hit_wins():
    spec = LidarSpec(num_beams=1, fov=math.pi, max_range=20.0)
    circles = np.array([[4.0, 0.0, 0.5], [8.0, 0.0, 0.5]])
    scan = cast_scan(Pose2D(0, 0, 0), spec, circles, np.empty((0, 4)), make_rng())
    assert scan[0, 0] == pytest.approx(3.5)


def test_ray_circle_from_inside():
    # Sensor inside the circle: the exit point is the hit.
    dists = ray_circle_distances(
        np.zeros(2), np.array([[1.0, 0.0]]), np.array([[0.0, 0.0, 2.0]])
    )
    assert dists[0, 0] == pytest.approx(2.0)
