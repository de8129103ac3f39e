"""CLEAR-MOT style scoring and Monte Carlo aggregation.

Per-frame matching is a gated min-cost assignment on Euclidean distance
with persistence: a ground-truth object keeps its previously matched track
as long as both exist and stay within the match radius. An identity switch
is counted whenever a ground-truth object's matched track id differs from
the one it matched most recently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .assignment import solve_assignment
from .errors import UndefinedMetricError


@dataclass
class FrameScore:
    tick: int
    matches: int
    false_positives: int
    misses: int
    id_switches: int
    gt_count: int
    sum_match_dist: float


def score_frame(
    gt_positions: dict,
    track_positions: dict,
    match_radius: float,
    prev_assignment: dict | None = None,
    tick: int = 0,
):
    """Score one frame.

    ``prev_assignment`` maps gt id to the track id it matched most
    recently (may span frames where the object went unmatched). Returns
    (FrameScore, assignment, match_distances) where assignment is the
    updated most-recent map and match_distances maps gt id to this frame's
    matched distance.
    """
    prev_assignment = dict(prev_assignment or {})
    gt_ids = sorted(gt_positions)
    track_ids = sorted(track_positions)

    matched: dict = {}
    dists: dict = {}

    # Persistence pass: keep still-valid previous pairs.
    used_tracks = set()
    for gid in gt_ids:
        tid = prev_assignment.get(gid)
        if tid is None or tid not in track_positions or tid in used_tracks:
            continue
        d = _dist(gt_positions[gid], track_positions[tid])
        if d <= match_radius:
            matched[gid] = tid
            dists[gid] = d
            used_tracks.add(tid)

    # Assignment pass on the remainder.
    rem_gt = [g for g in gt_ids if g not in matched]
    rem_tr = [t for t in track_ids if t not in used_tracks]
    if rem_gt and rem_tr:
        sentinel = 1e6 * max(match_radius, 1.0)
        cost = np.full((len(rem_gt), len(rem_tr)), sentinel)
        for i, gid in enumerate(rem_gt):
            for j, tid in enumerate(rem_tr):
                d = _dist(gt_positions[gid], track_positions[tid])
                if d <= match_radius:
                    cost[i, j] = d
        for i, j in solve_assignment(cost):
            if cost[i, j] >= sentinel:
                continue
            gid, tid = rem_gt[i], rem_tr[j]
            matched[gid] = tid
            dists[gid] = float(cost[i, j])
            used_tracks.add(tid)

    id_switches = 0
    for gid, tid in matched.items():
        last = prev_assignment.get(gid)
        if last is not None and last != tid:
            id_switches += 1

    assignment = dict(prev_assignment)
    assignment.update(matched)

    n_match = len(matched)
    score = FrameScore(
        tick=tick,
        matches=n_match,
        false_positives=len(track_ids) - n_match,
        misses=len(gt_ids) - n_match,
        id_switches=id_switches,
        gt_count=len(gt_ids),
        sum_match_dist=float(sum(dists.values())),
    )
    return score, assignment, dists


def _dist(a, b) -> float:
    return math.hypot(float(a[0]) - float(b[0]), float(a[1]) - float(b[1]))


def mota(frames: list) -> float:
    """1 - (misses + false positives + id switches) / ground-truth count."""
    gt_total = sum(f.gt_count for f in frames)
    if gt_total == 0:
        raise UndefinedMetricError("MOTA undefined: no ground truth present")
    errors = sum(f.misses + f.false_positives + f.id_switches for f in frames)
    return 1.0 - errors / gt_total


class MotScorer:
    """Streaming frame scorer holding the persistence state."""

    def __init__(self, match_radius: float):
        self.match_radius = match_radius
        self.frames: list = []
        self._assignment: dict = {}
        self.match_records: list = []  # (tick, gt_id, dist)

    def add_frame(self, tick: int, gt_positions: dict, track_positions: dict):
        score, self._assignment, dists = score_frame(
            gt_positions,
            track_positions,
            self.match_radius,
            self._assignment,
            tick=tick,
        )
        self.frames.append(score)
        for gid in sorted(dists):
            self.match_records.append((tick, gid, dists[gid]))
        return score

    def mota(self) -> float | None:
        if not self.frames or sum(f.gt_count for f in self.frames) == 0:
            return None
        return mota(self.frames)

    def totals(self) -> dict:
        return {
            "gt": sum(f.gt_count for f in self.frames),
            "matches": sum(f.matches for f in self.frames),
            "false_positives": sum(f.false_positives for f in self.frames),
            "misses": sum(f.misses for f in self.frames),
            "id_switches": sum(f.id_switches for f in self.frames),
        }


@dataclass
class RunReport:
    """Everything the evaluation layer records about a single run."""

    mode: str
    seed: int
    num_ticks: int
    robots: dict  # robot id -> {"local": {...}, "global": {...}}
    network: dict
    overrides: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "num_ticks": self.num_ticks,
            "robots": self.robots,
            "network": self.network,
            "overrides": self.overrides,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        return cls(
            mode=d["mode"],
            seed=d["seed"],
            num_ticks=d["num_ticks"],
            robots=d["robots"],
            network=d["network"],
            overrides=d.get("overrides", {}),
        )

    def mota_of(self, robot_id: str, scope: str):
        return self.robots[robot_id][scope]["mota"]


def summary_stats(values: list) -> dict:
    """Mean, median, population std, and range of a sample."""
    arr = np.asarray([v for v in values if v is not None], dtype=float)
    if arr.size == 0:
        return {"mean": None, "median": None, "std": None, "range": [None, None]}
    return {
        "mean": float(arr.mean()),
        "median": float(np.median(arr)),
        "std": float(arr.std()),  # population convention
        "range": [float(arr.min()), float(arr.max())],
    }


def aggregate_runs(reports: list) -> dict:
    """Per-robot, per-scope MOTA statistics across a set of runs.

    The reports are treated as replicates (typically one per seed).
    """
    if not reports:
        raise ValueError("need at least one report")
    robot_ids = sorted(reports[0].robots)
    cells = {}
    for rid in robot_ids:
        cells[rid] = {}
        for scope in ("local", "global"):
            values = [r.mota_of(rid, scope) for r in reports]
            cells[rid][scope] = summary_stats(values)
    messages = {
        "delivered": sum(
            sum(link["delivered"] for link in r.network["links"].values())
            for r in reports
        ),
        "dropped": sum(
            sum(link["dropped"] for link in r.network["links"].values())
            for r in reports
        ),
    }
    return {"cells": cells, "num_runs": len(reports), "messages": messages}
