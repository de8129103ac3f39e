"""Distributed Kalman-consensus fusion between robots.

Each robot periodically receives neighbor track messages, aligns them into
its own believed frame, matches them against its local tracks, and then
fuses matched pairs in two stages: an information-form correction built
from transported measurements, plus a consensus term that nudges the state
toward the neighbors' estimates. The consensus term comes in two flavors:

  * standard: all neighbors weighted equally, with the gain normalized by
    the information-gain matrix norm;
  * adaptive: each agent weighted inversely to its reported position
    uncertainty, so poorly localized neighbors lose influence.

Tracks whose post-fusion state keeps jumping away from their pre-fusion
state are flagged as mistracks and removed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .assignment import solve_assignment
from .errors import DegenerateGeometryError, NumericalDegeneracyError
from .geometry import rot2, state_rotation, wrap_angle
from .tracker import CONFIRMED, DEAD, StateEstimate, inv_psd_2x2

_SIGMA_FLOOR = 1e-9  # clamp for near-zero reported stds
_SPEED_FLOOR = 0.05  # m/s below which velocity direction is meaningless


@dataclass
class TrackMessage:
    """Wire unit one robot broadcasts per confirmed track per tick."""

    sender: str
    track_id: str
    state: np.ndarray  # [x, vx, y, vy] in the sender's believed frame
    covariance: np.ndarray  # 4x4
    measurement: np.ndarray | None  # latest associated detection, sender frame
    measurement_noise: np.ndarray  # 2x2
    loc_std: float  # sender's reported position localization std
    sent_tick: int


@dataclass
class InformationPair:
    """Additive measurement contribution: vector u and matrix U."""

    u: np.ndarray
    U: np.ndarray

    @classmethod
    def zero(cls) -> "InformationPair":
        return cls(np.zeros(4), np.zeros((4, 4)))


@dataclass
class FrameTransform:
    """Rigid SE(2) map from one robot's believed frame into another's."""

    rotation: float
    translation: np.ndarray
    source_frame: str
    target_frame: str
    residual_rms: float = 0.0

    def __post_init__(self):
        self.translation = np.asarray(self.translation, dtype=float).reshape(2)

    @classmethod
    def identity(cls, source_frame: str, target_frame: str) -> "FrameTransform":
        return cls(0.0, np.zeros(2), source_frame, target_frame)

    def apply_points(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return pts @ rot2(self.rotation).T + self.translation

    def apply_state(self, state: np.ndarray) -> np.ndarray:
        """Rotate position and velocity, translate position."""
        out = state_rotation(self.rotation) @ np.asarray(state, dtype=float)
        out[0] += self.translation[0]
        out[2] += self.translation[1]
        return out

    def apply_state_cov(self, P: np.ndarray) -> np.ndarray:
        G = state_rotation(self.rotation)
        return G @ P @ G.T

    def apply_meas_noise(self, R: np.ndarray) -> np.ndarray:
        G = rot2(self.rotation)
        return G @ R @ G.T

    def inverse(self) -> "FrameTransform":
        rot = -self.rotation
        return FrameTransform(
            rot,
            -(rot2(rot) @ self.translation),
            source_frame=self.target_frame,
            target_frame=self.source_frame,
            residual_rms=self.residual_rms,
        )


@dataclass
class ConsensusParams:
    """Fusion mode, matrices, and track-management thresholds."""

    mode: str  # "standard" | "adaptive"
    A: np.ndarray  # state propagation used in the covariance refresh
    Q: np.ndarray
    match_dist_threshold: float = 1.5
    mistrack_residual_threshold: float = 1.0
    mistrack_patience: int = 5
    min_landmarks: int = 2
    alignment_window: int = 20
    norm_kind: str = "frobenius"  # or "spectral"
    vel_angle_threshold: float = math.pi / 2
    vel_mag_threshold: float = 1.0


def _matrix_norm(M: np.ndarray, kind: str) -> float:
    if kind == "spectral":
        return float(np.linalg.norm(M, 2))
    return float(np.linalg.norm(M, "fro"))


def information_pair(z, R, H) -> InformationPair:
    """Information contribution of one position measurement."""
    z = np.asarray(z, dtype=float).reshape(2)
    R = np.asarray(R, dtype=float).reshape(2, 2)
    R_inv = inv_psd_2x2(R, "measurement noise")
    return InformationPair(u=H.T @ R_inv @ z, U=H.T @ R_inv @ H)


def aggregate_information(local, neighbors) -> InformationPair:
    """Sum the local and neighbor information contributions.

    ``local`` may be None when the robot has no fresh measurement of its
    own this tick.
    """
    total = InformationPair.zero()
    parts = ([] if local is None else [local]) + list(neighbors)
    for pair in parts:
        total.u = total.u + pair.u
        total.U = total.U + pair.U
    return total


def information_gain(P_plus: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Fused covariance (P_plus^-1 + Y)^-1, always symmetric."""
    eigvals = np.linalg.eigvalsh(P_plus)
    if eigvals.min() <= 1e-12:
        cond = float("inf") if eigvals.min() <= 0 else float(eigvals.max() / eigvals.min())
        raise NumericalDegeneracyError(
            "track covariance is not invertible", condition_number=cond
        )
    M = np.linalg.inv(np.linalg.inv(P_plus) + Y)
    return (M + M.T) / 2.0


def _consensus_sum(est: StateEstimate, neighbor_states, weights=None) -> np.ndarray:
    total = np.zeros(4)
    for idx, xj in enumerate(neighbor_states):
        diff = np.asarray(xj, dtype=float) - est.x
        total += diff if weights is None else weights[idx] * diff
    return total


def _refresh_covariance(M: np.ndarray, params: ConsensusParams) -> np.ndarray:
    P = params.A @ M @ params.A.T + params.Q
    return (P + P.T) / 2.0


def dkcf_update_standard(
    est: StateEstimate,
    y: np.ndarray,
    Y: np.ndarray,
    neighbor_states: list,
    params: ConsensusParams,
) -> StateEstimate:
    """Equal-weight consensus update.

    The consensus gain is the information-gain matrix shrunk by
    1 / (1 + ||M||) so the nudge stays bounded as uncertainty grows.
    """
    M = information_gain(est.P, Y)
    x = est.x + M @ (y - Y @ est.x)
    gain = M / (1.0 + _matrix_norm(M, params.norm_kind))
    x = x + gain @ _consensus_sum(est, neighbor_states)
    return StateEstimate(x, _refresh_covariance(M, params))


def adaptive_weights(sigmas) -> np.ndarray:
    """Normalized inverse-uncertainty weights; sums to one.

    Stds at or below zero are rejected; merely tiny ones are clamped to a
    floor so a perfectly confident agent cannot monopolize the consensus.
    """
    sig = np.asarray(sigmas, dtype=float)
    if sig.size == 0:
        raise ValueError("need at least one std")
    if (sig <= 0).any():
        raise ValueError("stds must be positive")
    inv = 1.0 / np.maximum(sig, _SIGMA_FLOOR)
    return inv / inv.sum()


def dkcf_update_adaptive(
    est: StateEstimate,
    y: np.ndarray,
    Y: np.ndarray,
    neighbor_states: list,
    weights,
    params: ConsensusParams,
) -> StateEstimate:
    """Uncertainty-weighted consensus update.

    ``weights`` covers self plus neighbors in order [w_self, w_1, ..., w_N]
    and should sum to one; only the neighbor entries enter the consensus
    sum.
    """
    weights = np.asarray(weights, dtype=float)
    if len(weights) != len(neighbor_states) + 1:
        raise ValueError("need one weight for self plus one per neighbor")
    M = information_gain(est.P, Y)
    x = est.x + M @ (y - Y @ est.x)
    x = x + M @ _consensus_sum(est, neighbor_states, weights[1:])
    return StateEstimate(x, _refresh_covariance(M, params))


def combined_position_std(loc_std: float, P: np.ndarray) -> float:
    """Reported agent uncertainty: localization std plus track position spread."""
    pos_trace = float(P[0, 0] + P[2, 2])
    return math.sqrt(max(loc_std, 0.0) ** 2 + pos_trace / 2.0)


def estimate_frame_alignment(
    correspondences, source_frame: str = "", target_frame: str = ""
) -> FrameTransform:
    """Least-squares rigid transform from co-observed landmark pairs.

    ``correspondences`` is a list of (point_in_target_frame,
    point_in_source_frame) pairs; the result maps source-frame points onto
    their target-frame mates. Closed form: rotate about the centroids by
    the angle maximizing the correlation, then translate.
    """
    pairs = list(correspondences)
    if len(pairs) < 2:
        raise DegenerateGeometryError(
            "need at least 2 correspondences to observe rotation"
        )
    p_tgt = np.array([np.asarray(a, dtype=float) for a, _ in pairs])
    p_src = np.array([np.asarray(b, dtype=float) for _, b in pairs])
    c_tgt = p_tgt.mean(axis=0)
    c_src = p_src.mean(axis=0)
    q_tgt = p_tgt - c_tgt
    q_src = p_src - c_src
    if (q_tgt**2).sum() < 1e-20 or (q_src**2).sum() < 1e-20:
        raise DegenerateGeometryError(
            "coincident correspondences leave rotation unobservable"
        )
    s = float(np.sum(q_src[:, 0] * q_tgt[:, 1] - q_src[:, 1] * q_tgt[:, 0]))
    c = float(np.sum(q_src[:, 0] * q_tgt[:, 0] + q_src[:, 1] * q_tgt[:, 1]))
    theta = math.atan2(s, c)
    translation = c_tgt - rot2(theta) @ c_src
    mapped = p_src @ rot2(theta).T + translation
    residual_rms = float(np.sqrt(np.mean(np.sum((mapped - p_tgt) ** 2, axis=1))))
    return FrameTransform(
        rotation=wrap_angle(theta),
        translation=translation,
        source_frame=source_frame,
        target_frame=target_frame,
        residual_rms=residual_rms,
    )


def match_cross_robot_tracks(
    local_tracks: list, neighbor_msgs: list, params: ConsensusParams
) -> list:
    """Pair local tracks with frame-aligned neighbor messages.

    Assignment minimizes Euclidean position distance, gated at the match
    threshold; pairs with inconsistent velocities (speed difference or,
    when both move meaningfully, direction difference too large) are
    rejected even when spatially close. Returns (local_track_id,
    remote_track_id) pairs.
    """
    if not local_tracks or not neighbor_msgs:
        return []
    p_local = np.array([t.estimate.position for t in local_tracks])
    v_local = np.array([t.estimate.velocity for t in local_tracks])
    p_remote = np.array([m.state[[0, 2]] for m in neighbor_msgs])
    v_remote = np.array([m.state[[1, 3]] for m in neighbor_msgs])

    diff = p_local[:, None, :] - p_remote[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2))
    ok = dist <= params.match_dist_threshold

    speed_local = np.linalg.norm(v_local, axis=1)
    speed_remote = np.linalg.norm(v_remote, axis=1)
    ok &= (
        np.abs(speed_local[:, None] - speed_remote[None, :])
        <= params.vel_mag_threshold
    )
    both_moving = (speed_local[:, None] > _SPEED_FLOOR) & (
        speed_remote[None, :] > _SPEED_FLOOR
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        cos_angle = (v_local @ v_remote.T) / (
            speed_local[:, None] * speed_remote[None, :]
        )
    cos_limit = math.cos(min(params.vel_angle_threshold, math.pi))
    ok &= ~both_moving | (cos_angle >= cos_limit)

    sentinel = 1e6 * max(params.match_dist_threshold, 1.0)
    cost = np.where(ok, dist, sentinel)
    pairs = []
    for i, j in solve_assignment(cost):
        if cost[i, j] >= sentinel:
            continue
        pairs.append((local_tracks[i].id, neighbor_msgs[j].track_id))
    return pairs


def mistrack_filter(
    tracks: list, consensus_residuals: dict, strikes: dict, params: ConsensusParams
):
    """Kill tracks whose fusion residual stays above threshold too long.

    ``consensus_residuals`` maps track id to this tick's pre/post fusion
    position jump; tracks without an entry reset their strike counter.
    Returns the updated strike map; killed tracks get status ``dead``.
    """
    new_strikes = {}
    for track in tracks:
        residual = consensus_residuals.get(track.id)
        if residual is None or residual <= params.mistrack_residual_threshold:
            continue
        count = strikes.get(track.id, 0) + 1
        if count >= params.mistrack_patience:
            track.status = DEAD
        else:
            new_strikes[track.id] = count
    return new_strikes


@dataclass
class FusionEvent:
    """Log record of one track's fusion at one tick."""

    tick: int
    robot_id: str
    track_id: str
    mode: str
    residual: float
    n_neighbors: int
    weight_self: float
    weight_neighbors: list


class ConsensusEngine:
    """Per-robot fusion state: frame transforms, landmark buffers, strikes."""

    def __init__(
        self, robot_id: str, params: ConsensusParams, H: np.ndarray, R: np.ndarray
    ):
        self.robot_id = robot_id
        self.params = params
        self.H = H
        self.R = R  # the local filter's measurement noise
        self.transforms: dict = {}  # sender id -> FrameTransform
        self.landmarks: dict = {}  # sender id -> list of (tick, p_local, p_remote)
        self.strikes: dict = {}

    def transform_for(self, sender: str) -> FrameTransform:
        return self.transforms.get(
            sender, FrameTransform.identity(sender, self.robot_id)
        )

    def _update_alignment(self, sender: str, tick: int):
        window = self.params.alignment_window
        buf = [rec for rec in self.landmarks.get(sender, []) if tick - rec[0] < window]
        self.landmarks[sender] = buf
        if len(buf) < max(2, self.params.min_landmarks):
            return
        try:
            self.transforms[sender] = estimate_frame_alignment(
                [(p_local, p_remote) for _, p_local, p_remote in buf],
                source_frame=sender,
                target_frame=self.robot_id,
            )
        except DegenerateGeometryError:
            pass  # hold the previous transform

    def fuse(
        self,
        tracks: list,
        inbox: list,
        own_loc_std: float,
        tick: int,
        audit=None,
    ) -> list:
        """Run one tick of alignment, matching, and consensus updates.

        Mutates matched tracks in place and returns the fusion events.
        Tracks flagged as mistracks get status ``dead``; the caller prunes
        them.
        """
        params = self.params
        confirmed = [t for t in tracks if t.status == CONFIRMED]
        by_sender: dict = {}
        for msg in inbox:
            by_sender.setdefault(msg.sender, {})[msg.track_id] = msg  # latest wins

        # Match per sender, in sender order for determinism.
        fusion_inputs: dict = {t.id: [] for t in confirmed}
        for sender in sorted(by_sender):
            self._update_alignment(sender, tick)
            tf = self.transform_for(sender)
            msgs = [by_sender[sender][k] for k in sorted(by_sender[sender])]
            aligned = []
            for msg in msgs:
                aligned.append(
                    TrackMessage(
                        sender=msg.sender,
                        track_id=msg.track_id,
                        state=tf.apply_state(msg.state),
                        covariance=tf.apply_state_cov(msg.covariance),
                        measurement=(
                            None
                            if msg.measurement is None
                            else tf.apply_points(msg.measurement)[0]
                        ),
                        measurement_noise=tf.apply_meas_noise(msg.measurement_noise),
                        loc_std=msg.loc_std,
                        sent_tick=msg.sent_tick,
                    )
                )
            track_by_id = {t.id: t for t in confirmed}
            raw_by_id = {m.track_id: m for m in msgs}
            aligned_by_id = {m.track_id: m for m in aligned}
            for local_id, remote_id in match_cross_robot_tracks(
                confirmed, aligned, params
            ):
                fusion_inputs[local_id].append(aligned_by_id[remote_id])
                self.landmarks.setdefault(sender, []).append(
                    (
                        tick,
                        track_by_id[local_id].estimate.position.copy(),
                        raw_by_id[remote_id].state[[0, 2]].copy(),
                    )
                )

        events = []
        residuals: dict = {}
        for track in confirmed:
            msgs = fusion_inputs.get(track.id, [])
            if not msgs:
                continue
            own_pair = None
            if track.last_update_tick == tick and track.last_measurement is not None:
                own_pair = information_pair(track.last_measurement, self.R, self.H)
            neighbor_pairs = [
                information_pair(m.measurement, m.measurement_noise, self.H)
                for m in msgs
                if m.measurement is not None
            ]
            agg = aggregate_information(own_pair, neighbor_pairs)
            neighbor_states = [m.state for m in msgs]
            before = track.estimate.position.copy()
            if params.mode == "adaptive":
                sigmas = [combined_position_std(own_loc_std, track.estimate.P)]
                sigmas += [
                    combined_position_std(m.loc_std, m.covariance) for m in msgs
                ]
                weights = adaptive_weights(sigmas)
                track.estimate = dkcf_update_adaptive(
                    track.estimate, agg.u, agg.U, neighbor_states, weights, params
                )
                w_self = float(weights[0])
                w_neighbors = [float(w) for w in weights[1:]]
            else:
                track.estimate = dkcf_update_standard(
                    track.estimate, agg.u, agg.U, neighbor_states, params
                )
                w_self = 1.0
                w_neighbors = [1.0] * len(msgs)
            if audit is not None:
                audit("consensus", track.estimate.P)
            residual = float(np.linalg.norm(track.estimate.position - before))
            residuals[track.id] = residual
            events.append(
                FusionEvent(
                    tick=tick,
                    robot_id=self.robot_id,
                    track_id=track.id,
                    mode=params.mode,
                    residual=residual,
                    n_neighbors=len(msgs),
                    weight_self=w_self,
                    weight_neighbors=w_neighbors,
                )
            )

        self.strikes = mistrack_filter(tracks, residuals, self.strikes, params)
        return events
