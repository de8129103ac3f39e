"""Per-robot multi-object tracker.

Constant-velocity Kalman filtering over [x, vx, y, vy] states, gated
global-nearest-neighbor association solved as a min-cost assignment, and
hit/miss track lifecycle management.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .assignment import solve_assignment
from .errors import NumericalDegeneracyError

TENTATIVE = "tentative"
CONFIRMED = "confirmed"
DEAD = "dead"

_COND_LIMIT = 1e12


def cv_transition(tick_period: float) -> np.ndarray:
    """Constant-velocity state transition matrix for one tick."""
    t = tick_period
    return np.array(
        [
            [1.0, t, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, t],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def position_measurement_matrix() -> np.ndarray:
    """Maps [x, vx, y, vy] to the measured position [x, y]."""
    return np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
        ]
    )


def white_accel_process_noise(tick_period: float, intensity: float) -> np.ndarray:
    """Discrete white-noise-acceleration covariance, one block per axis."""
    t = tick_period
    block = intensity * np.array(
        [
            [t**4 / 4.0, t**3 / 2.0],
            [t**3 / 2.0, t**2],
        ]
    )
    q = np.zeros((4, 4))
    q[0:2, 0:2] = block
    q[2:4, 2:4] = block
    return q


@dataclass
class StateEstimate:
    """State vector [x, vx, y, vy] with its 4x4 covariance."""

    x: np.ndarray
    P: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).reshape(4)
        self.P = np.asarray(self.P, dtype=float).reshape(4, 4)

    @property
    def position(self) -> np.ndarray:
        return self.x[[0, 2]]

    @property
    def velocity(self) -> np.ndarray:
        return self.x[[1, 3]]

    def position_cov(self) -> np.ndarray:
        return self.P[np.ix_([0, 2], [0, 2])]

    def copy(self) -> "StateEstimate":
        return StateEstimate(self.x.copy(), self.P.copy())


@dataclass
class ModelParams:
    """Filter matrices plus association and lifecycle thresholds."""

    F: np.ndarray
    H: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    gate_threshold: float = 9.21  # chi-square, 2 dof, 99%
    init_pos_var: float = 1.0
    init_vel_var: float = 1.0
    max_misses: int = 5
    confirm_hits: int = 3

    @classmethod
    def from_scalars(
        cls,
        tick_period: float,
        process_noise_intensity: float,
        measurement_noise_std: float,
        **kwargs,
    ) -> "ModelParams":
        return cls(
            F=cv_transition(tick_period),
            H=position_measurement_matrix(),
            Q=white_accel_process_noise(tick_period, process_noise_intensity),
            R=measurement_noise_std**2 * np.eye(2),
            **kwargs,
        )

    def gate_sentinel(self) -> float:
        return 1e6 * self.gate_threshold


@dataclass
class Track:
    """One persistent object hypothesis."""

    id: str
    estimate: StateEstimate
    hits: int = 1
    consecutive_misses: int = 0
    status: str = TENTATIVE
    last_update_tick: int = -1
    last_measurement: np.ndarray | None = field(default=None)


def _symmetrize(P: np.ndarray) -> np.ndarray:
    return (P + P.T) / 2.0


def _innovation_cov(P: np.ndarray, model: ModelParams) -> np.ndarray:
    return model.H @ P @ model.H.T + model.R


def inv_psd_2x2(S: np.ndarray, what: str) -> np.ndarray:
    """Closed-form inverse of a symmetric PSD 2x2 matrix, with a health check.

    Raises when the matrix is singular or its condition number exceeds
    1e12, carrying the condition number in the error.
    """
    a = float(S[0, 0])
    b = 0.5 * float(S[0, 1] + S[1, 0])
    d = float(S[1, 1])
    half_gap = math.sqrt(max(0.25 * (a - d) ** 2 + b * b, 0.0))
    lam_max = 0.5 * (a + d) + half_gap
    lam_min = 0.5 * (a + d) - half_gap
    if lam_min <= 0.0 or lam_max > _COND_LIMIT * lam_min:
        cond = float("inf") if lam_min <= 0 else lam_max / lam_min
        raise NumericalDegeneracyError(
            f"{what} is singular or near-singular", condition_number=cond
        )
    det = a * d - b * b
    return np.array([[d, -b], [-b, a]]) / det


def kf_predict(est: StateEstimate, model: ModelParams) -> StateEstimate:
    """Propagate one tick through the constant-velocity model."""
    x = model.F @ est.x
    P = _symmetrize(model.F @ est.P @ model.F.T + model.Q)
    return StateEstimate(x, P)


def kf_update(est: StateEstimate, z, model: ModelParams) -> StateEstimate:
    """Fuse a position measurement (Joseph-form covariance update)."""
    z = np.asarray(z, dtype=float).reshape(2)
    S = _innovation_cov(est.P, model)
    S_inv = inv_psd_2x2(S, "innovation covariance")
    K = est.P @ model.H.T @ S_inv
    x = est.x + K @ (z - model.H @ est.x)
    ImKH = np.eye(4) - K @ model.H
    P = _symmetrize(ImKH @ est.P @ ImKH.T + K @ model.R @ K.T)
    return StateEstimate(x, P)


def mahalanobis_sq(track: Track, z, model: ModelParams) -> float:
    """Squared innovation distance of a measurement from a predicted track."""
    z = np.asarray(z, dtype=float).reshape(2)
    S = _innovation_cov(track.estimate.P, model)
    S_inv = inv_psd_2x2(S, "innovation covariance")
    r = z - model.H @ track.estimate.x
    return float(r @ S_inv @ r)


def associate(tracks: list, detections: list, model: ModelParams):
    """Gated global-nearest-neighbor association.

    Returns (matches, unmatched_track_indices, unmatched_detection_indices)
    where matches is a list of (track_index, detection_index). Pairs whose
    gating distance exceeds the threshold can never be matched.
    """
    n, m = len(tracks), len(detections)
    if n == 0 or m == 0:
        return [], list(range(n)), list(range(m))

    sentinel = model.gate_sentinel()
    cost = np.full((n, m), sentinel)
    z_all = np.array([np.asarray(d.centroid, dtype=float) for d in detections])
    for i, track in enumerate(tracks):
        S = _innovation_cov(track.estimate.P, model)
        S_inv = inv_psd_2x2(S, "innovation covariance")
        residuals = z_all - (model.H @ track.estimate.x)
        d2 = ((residuals @ S_inv) * residuals).sum(axis=1)
        inside = d2 <= model.gate_threshold
        cost[i, inside] = d2[inside]

    matches = []
    matched_tracks = set()
    matched_dets = set()
    for i, j in solve_assignment(cost):
        if cost[i, j] >= sentinel:
            continue  # gated-out pairing, demote both sides
        matches.append((i, j))
        matched_tracks.add(i)
        matched_dets.add(j)
    unmatched_tracks = [i for i in range(n) if i not in matched_tracks]
    unmatched_dets = [j for j in range(m) if j not in matched_dets]
    return matches, unmatched_tracks, unmatched_dets


def spawn_track(detection, model: ModelParams, track_id: str, tick: int) -> Track:
    """Start a tentative track at a detection with zero initial velocity."""
    z = np.asarray(detection.centroid, dtype=float)
    x = np.array([z[0], 0.0, z[1], 0.0])
    P = np.diag(
        [model.init_pos_var, model.init_vel_var, model.init_pos_var, model.init_vel_var]
    )
    track = Track(
        id=track_id,
        estimate=StateEstimate(x, P),
        hits=1,
        consecutive_misses=0,
        status=TENTATIVE,
        last_update_tick=tick,
        last_measurement=z.copy(),
    )
    if model.confirm_hits <= 1:
        track.status = CONFIRMED
    return track


def track_lifecycle_step(
    tracks: list,
    matches: list,
    unmatched_tracks: list,
    unmatched_detections: list,
    detections: list,
    model: ModelParams,
    tick: int,
    id_prefix: str,
    next_local_id: int,
):
    """Apply one tick of updates, misses, births, confirmations and deaths.

    Returns (updated_tracks, next_local_id). Dead tracks stay in the list
    with status ``dead`` so callers can log them before pruning.
    """
    for ti, di in matches:
        track = tracks[ti]
        z = np.asarray(detections[di].centroid, dtype=float)
        track.estimate = kf_update(track.estimate, z, model)
        track.hits += 1
        track.consecutive_misses = 0
        track.last_update_tick = tick
        track.last_measurement = z.copy()
        if track.status == TENTATIVE and track.hits >= model.confirm_hits:
            track.status = CONFIRMED

    for ti in unmatched_tracks:
        track = tracks[ti]
        track.consecutive_misses += 1
        track.last_measurement = None
        if track.consecutive_misses > model.max_misses:
            track.status = DEAD

    out = list(tracks)
    for di in unmatched_detections:
        track_id = f"{id_prefix}:{next_local_id}"
        next_local_id += 1
        out.append(spawn_track(detections[di], model, track_id, tick))
    return out, next_local_id


class Tracker:
    """Stateful per-robot tracker wrapping the pure operations above."""

    def __init__(self, robot_id: str, model: ModelParams):
        self.robot_id = robot_id
        self.model = model
        self.tracks: list = []
        self._next_id = 0

    def confirmed(self) -> list:
        return [t for t in self.tracks if t.status == CONFIRMED]

    def step(self, detections: list, tick: int) -> list:
        """Predict, associate, update and manage lifecycle for one tick.

        Returns the tracks that died this tick.
        """
        for track in self.tracks:
            track.estimate = kf_predict(track.estimate, self.model)
        matches, um_tracks, um_dets = associate(self.tracks, detections, self.model)
        self.tracks, self._next_id = track_lifecycle_step(
            self.tracks,
            matches,
            um_tracks,
            um_dets,
            detections,
            self.model,
            tick,
            self.robot_id,
            self._next_id,
        )
        dead = [t for t in self.tracks if t.status == DEAD]
        self.tracks = [t for t in self.tracks if t.status != DEAD]
        return dead
