"""Single-run engine: world stepping, per-robot tracking, fusion, logging.

One call to ``run_experiment`` executes the whole tick loop for one
(config, seed, mode) combination, optionally writing every log to a run
directory, and returns the run report. Everything is single-threaded and
free of wall-clock reads, so identical inputs give byte-identical outputs.
"""

from __future__ import annotations

import csv
import json
import os

from .config import ExperimentConfig
from .consensus import ConsensusEngine, TrackMessage
from .detection import detect
from .evaluation import MotScorer, RunReport
from .netsim import Network
from .tracker import DEAD, Tracker
from .world import World


def _f(x) -> str:
    """Shortest-roundtrip float formatting, stable across runs."""
    return repr(float(x))


class _CsvLog:
    def __init__(self, path, header):
        self._fh = open(path, "w", newline="", encoding="utf-8")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(header)

    def row(self, values):
        self._writer.writerow(values)

    def close(self):
        self._fh.close()


class _NullLog:
    def row(self, values):
        pass

    def close(self):
        pass


def _open_logs(output_dir):
    if output_dir is None:
        return {
            name: _NullLog()
            for name in ("gt", "detections", "tracks", "consensus", "err_local",
                         "err_global")
        }
    os.makedirs(output_dir, exist_ok=True)
    return {
        "gt": _CsvLog(
            os.path.join(output_dir, "ground_truth.csv"),
            ["tick", "entity_kind", "entity_id", "x", "y", "heading"],
        ),
        "detections": _CsvLog(
            os.path.join(output_dir, "detections.csv"),
            ["tick", "robot_id", "det_index", "x", "y", "support"],
        ),
        "tracks": _CsvLog(
            os.path.join(output_dir, "tracks.csv"),
            ["tick", "robot_id", "track_id", "status", "x", "vx", "y", "vy",
             "trace_P_pos"],
        ),
        "consensus": _CsvLog(
            os.path.join(output_dir, "consensus_log.csv"),
            ["tick", "robot_id", "track_id", "mode", "residual", "n_neighbors",
             "weight_self", "weight_neighbors"],
        ),
        "err_local": _CsvLog(
            os.path.join(output_dir, "errors_local.csv"),
            ["tick", "robot_id", "gt_id", "err_m"],
        ),
        "err_global": _CsvLog(
            os.path.join(output_dir, "errors_global.csv"),
            ["tick", "robot_id", "gt_id", "err_m"],
        ),
    }


def run_experiment(
    config: ExperimentConfig,
    output_dir: str | None = None,
    audit=None,
) -> RunReport:
    """Execute one full simulation run.

    ``audit``, when given, is called as audit(stage, P) with every
    covariance the tracking and fusion layers emit; tests use it to check
    numerical health.
    """
    world = World(config.world)
    robot_ids = config.world.robot_ids()
    mode = config.consensus.mode

    trackers = {rid: Tracker(rid, config.model) for rid in robot_ids}
    engines = {
        rid: ConsensusEngine(rid, config.consensus, config.model.H, config.model.R)
        for rid in robot_ids
    }
    network = Network(config.links, config.world.rng_seed)

    local_scorers = {rid: MotScorer(config.match_radius) for rid in robot_ids}
    global_scorers = {rid: MotScorer(config.match_radius) for rid in robot_ids}

    logs = _open_logs(output_dir)
    if output_dir is not None:
        with open(
            os.path.join(output_dir, "config_snapshot.yaml"), "w", encoding="utf-8"
        ) as fh:
            fh.write(config.snapshot_yaml())

    num_ticks = config.world.num_ticks
    for tick in range(num_ticks):
        snap = world.step()
        gt_positions = {
            str(i): tuple(p) for i, p in enumerate(snap.true_target_positions)
        }

        for i, p in enumerate(snap.true_target_positions):
            heading = world.target_heading_angle(i)
            logs["gt"].row([tick, "target", str(i), _f(p[0]), _f(p[1]), _f(heading)])
        for rid, pose in zip(robot_ids, snap.true_robot_poses):
            logs["gt"].row(
                [tick, "robot_true", rid, _f(pose.x), _f(pose.y), _f(pose.heading)]
            )
        for rid, pose in zip(robot_ids, snap.believed_robot_poses):
            logs["gt"].row(
                [tick, "robot_believed", rid, _f(pose.x), _f(pose.y), _f(pose.heading)]
            )

        # Local perception and tracking.
        for r_idx, rid in enumerate(robot_ids):
            detections = detect(
                snap.scans[r_idx],
                snap.believed_robot_poses[r_idx],
                config.detection,
                tick,
                rid,
            )
            for d_idx, det in enumerate(detections):
                logs["detections"].row(
                    [tick, rid, d_idx, _f(det.centroid[0]), _f(det.centroid[1]),
                     det.support]
                )
            trackers[rid].step(detections, tick)
            for track in trackers[rid].tracks:
                if audit is not None:
                    audit("tracker", track.estimate.P)
                est = track.estimate
                logs["tracks"].row(
                    [tick, rid, track.id, track.status, _f(est.x[0]), _f(est.x[1]),
                     _f(est.x[2]), _f(est.x[3]),
                     _f(est.P[0, 0] + est.P[2, 2])]
                )

        # Score and log the pre-fusion (local) picture.
        for rid in robot_ids:
            confirmed = {
                t.id: tuple(t.estimate.position) for t in trackers[rid].confirmed()
            }
            local_scorers[rid].add_frame(tick, gt_positions, confirmed)

        # Broadcast confirmed tracks.
        for r_idx, rid in enumerate(robot_ids):
            out_links = network.links_from(rid)
            if not out_links:
                continue
            loc_std = world.reported_loc_std(r_idx)
            for track in trackers[rid].confirmed():
                msg = TrackMessage(
                    sender=rid,
                    track_id=track.id,
                    state=track.estimate.x.copy(),
                    covariance=track.estimate.P.copy(),
                    measurement=(
                        track.last_measurement.copy()
                        if track.last_update_tick == tick
                        and track.last_measurement is not None
                        else None
                    ),
                    measurement_noise=config.model.R.copy(),
                    loc_std=loc_std,
                    sent_tick=tick,
                )
                for link in out_links:
                    network.send(link, msg, tick)

        # Receive, align, fuse.
        for r_idx, rid in enumerate(robot_ids):
            inbox = network.poll(rid, tick)
            events = engines[rid].fuse(
                trackers[rid].tracks,
                inbox,
                world.reported_loc_std(r_idx),
                tick,
                audit=audit,
            )
            for ev in events:
                logs["consensus"].row(
                    [ev.tick, ev.robot_id, ev.track_id, ev.mode, _f(ev.residual),
                     ev.n_neighbors, _f(ev.weight_self),
                     ";".join(_f(w) for w in ev.weight_neighbors)]
                )
            trackers[rid].tracks = [
                t for t in trackers[rid].tracks if t.status != DEAD
            ]

        # Score and log the post-fusion (global) picture.
        for rid in robot_ids:
            confirmed = {
                t.id: tuple(t.estimate.position) for t in trackers[rid].confirmed()
            }
            global_scorers[rid].add_frame(tick, gt_positions, confirmed)

    for rid in robot_ids:
        for tick_, gid, dist in local_scorers[rid].match_records:
            logs["err_local"].row([tick_, rid, gid, _f(dist)])
        for tick_, gid, dist in global_scorers[rid].match_records:
            logs["err_global"].row([tick_, rid, gid, _f(dist)])
    for log in logs.values():
        log.close()

    robots_report = {}
    for rid in robot_ids:
        robots_report[rid] = {
            "local": {
                "mota": local_scorers[rid].mota(),
                "counts": local_scorers[rid].totals(),
            },
            "global": {
                "mota": global_scorers[rid].mota(),
                "counts": global_scorers[rid].totals(),
            },
        }

    report = RunReport(
        mode=mode,
        seed=config.world.rng_seed,
        num_ticks=num_ticks,
        robots=robots_report,
        network={"links": network.stats(), "pending": network.pending_count()},
    )

    if output_dir is not None:
        write_report(report, output_dir)
    return report


def write_report(report: RunReport, output_dir: str):
    os.makedirs(output_dir, exist_ok=True)
    with open(os.path.join(output_dir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(output_dir, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(format_run_report(report))


def format_run_report(report: RunReport) -> str:
    lines = []
    lines.append(f"mode: {report.mode}   seed: {report.seed}   "
                 f"ticks: {report.num_ticks}")
    lines.append("")
    lines.append(f"{'robot':<12}{'scope':<9}{'MOTA':>8}  "
                 f"{'miss':>6}{'fp':>6}{'idsw':>6}{'gt':>7}")
    for rid in sorted(report.robots):
        for scope in ("local", "global"):
            cell = report.robots[rid][scope]
            m = cell["mota"]
            mota_txt = "n/a" if m is None else f"{m:.3f}"
            c = cell["counts"]
            lines.append(
                f"{rid:<12}{scope:<9}{mota_txt:>8}  "
                f"{c['misses']:>6}{c['false_positives']:>6}"
                f"{c['id_switches']:>6}{c['gt']:>7}"
            )
    lines.append("")
    lines.append("links:")
    for key in sorted(report.network["links"]):
        st = report.network["links"][key]
        lines.append(
            f"  {key}: sent {st['sent']}, delivered {st['delivered']}, "
            f"dropped {st['dropped']}"
        )
    lines.append(f"  pending at end: {report.network['pending']}")
    lines.append("")
    return "\n".join(lines)
