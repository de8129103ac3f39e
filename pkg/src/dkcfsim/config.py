"""Experiment configuration: YAML schema, strict validation, snapshots.

Unknown keys anywhere in the file are hard errors so that a typo in a
sweep grid cannot silently fall back to a default. Validation walks the
whole document and reports every violation at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import yaml

from .consensus import ConsensusParams
from .detection import DbscanParams
from .errors import ConfigValidationError
from .lidar import LidarSpec
from .netsim import LinkSpec
from .tracker import ModelParams
from .world import DriftSpec, Rect, RobotSpec, TargetSpec, WorldConfig

_MODEL_DEFAULTS = {
    "process_noise_intensity": 0.5,
    "measurement_noise_std": 0.05,
    "gate_threshold": 9.21,
    "init_pos_var": 0.5,
    "init_vel_var": 1.0,
    "max_misses": 5,
    "confirm_hits": 3,
}

_CONSENSUS_DEFAULTS = {
    "mode": "standard",
    "match_dist_threshold": 1.5,
    "mistrack_residual_threshold": 1.0,
    "mistrack_patience": 5,
    "min_landmarks": 2,
    "alignment_window": 20,
    "norm_kind": "frobenius",
    "vel_angle_threshold": math.pi / 2,
    "vel_mag_threshold": 1.0,
}

_DETECTION_DEFAULTS = {
    "epsilon": 0.35,
    "min_pts": 3,
    "max_cluster_extent": 0.9,
}

_LINK_DEFAULTS = {"base_latency": 0, "jitter_std": 0.0, "drop_prob": 0.0}

_EVAL_DEFAULTS = {"match_radius": 1.0}


@dataclass
class SweepSpec:
    modes: list
    seeds: list
    latencies: list | None = None
    drift_scales: list | None = None


@dataclass
class ExperimentConfig:
    world: WorldConfig
    detection: DbscanParams
    model: ModelParams
    consensus: ConsensusParams
    links: list
    match_radius: float
    sweep: SweepSpec | None
    output_dir: str | None
    resolved: dict  # defaults-filled document, for the run-dir snapshot

    def snapshot_yaml(self) -> str:
        doc = {k: v for k, v in self.resolved.items() if k != "output_dir"}
        return yaml.safe_dump(doc, sort_keys=True)


class _Checker:
    def __init__(self):
        self.violations = []

    def add(self, msg: str):
        self.violations.append(msg)

    def keys(self, d: dict, path: str, required: tuple, optional: tuple = ()):
        ok = True
        for key in d:
            if key not in required and key not in optional:
                self.add(f"{path}: unknown key '{key}'")
                ok = False
        for key in required:
            if key not in d:
                self.add(f"{path}: missing required key '{key}'")
                ok = False
        return ok

    def number(self, d: dict, path: str, key: str, default=None):
        if key not in d:
            return default
        value = d[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.add(f"{path}.{key}: must be a number (got {value!r})")
            return default
        return float(value)

    def integer(self, d: dict, path: str, key: str, default=None):
        if key not in d:
            return default
        value = d[key]
        if isinstance(value, bool) or not isinstance(value, int):
            self.add(f"{path}.{key}: must be an integer (got {value!r})")
            return default
        return int(value)

    def point(self, d: dict, path: str, key: str, default=None):
        if key not in d:
            return default
        value = d[key]
        if (
            not isinstance(value, (list, tuple))
            or len(value) != 2
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value)
        ):
            self.add(f"{path}.{key}: must be a [x, y] pair (got {value!r})")
            return default
        return (float(value[0]), float(value[1]))


def _parse_arena(chk: _Checker, d, path: str):
    if not isinstance(d, dict):
        chk.add(f"{path}: must be a mapping with x_min/x_max/y_min/y_max")
        return None
    chk.keys(d, path, ("x_min", "x_max", "y_min", "y_max"))
    vals = {k: chk.number(d, path, k) for k in ("x_min", "x_max", "y_min", "y_max")}
    if any(v is None for v in vals.values()):
        return None
    rect = Rect(**vals)
    if rect.x_max <= rect.x_min or rect.y_max <= rect.y_min:
        chk.add(f"{path}: arena must have positive area")
        return None
    return rect


def _parse_target(chk: _Checker, d, path: str, arena):
    if not isinstance(d, dict):
        chk.add(f"{path}: must be a mapping")
        return None
    chk.keys(d, path, ("radius", "start", "heading", "speed", "path"))
    radius = chk.number(d, path, "radius")
    speed = chk.number(d, path, "speed")
    start = chk.point(d, path, "start")
    heading = chk.point(d, path, "heading")
    path_val = d.get("path")
    endpoints = None
    if (
        isinstance(path_val, (list, tuple))
        and len(path_val) == 2
        and all(isinstance(p, (list, tuple)) and len(p) == 2 for p in path_val)
    ):
        endpoints = tuple((float(p[0]), float(p[1])) for p in path_val)
    elif "path" in d:
        chk.add(f"{path}.path: must be two [x, y] endpoints")

    if radius is not None and radius <= 0:
        chk.add(f"{path}.radius: must be > 0")
    if speed is not None and speed < 0:
        chk.add(f"{path}.speed: must be >= 0")
    if heading is not None:
        norm = math.hypot(*heading)
        if abs(norm - 1.0) > 1e-6:
            chk.add(f"{path}.heading: must be a unit vector (norm {norm:.6f})")
    if endpoints is not None and arena is not None:
        for i, p in enumerate(endpoints):
            if not arena.contains(p):
                chk.add(f"{path}.path[{i}]: endpoint outside arena")
    if endpoints is not None and start is not None:
        a = np.array(endpoints[0])
        b = np.array(endpoints[1])
        seg = b - a
        seg_len = np.linalg.norm(seg)
        if seg_len <= 0:
            chk.add(f"{path}.path: endpoints must be distinct")
        else:
            unit = seg / seg_len
            s = np.array(start)
            arc = float(np.dot(s - a, unit))
            off = np.linalg.norm(s - (a + arc * unit))
            if off > 1e-6 or arc < -1e-9 or arc > seg_len + 1e-9:
                chk.add(f"{path}.start: must lie on the path segment")
            if heading is not None:
                cross = abs(heading[0] * unit[1] - heading[1] * unit[0])
                if cross > 1e-6:
                    chk.add(f"{path}.heading: must point along the path")
    if arena is not None and start is not None and not arena.contains(start):
        chk.add(f"{path}.start: outside arena")
    if None in (radius, speed, start, heading) or endpoints is None:
        return None
    return TargetSpec(
        radius=radius, start=start, heading=heading, speed=speed, path=endpoints
    )


def _parse_lidar(chk: _Checker, d, path: str):
    if not isinstance(d, dict):
        chk.add(f"{path}: must be a mapping")
        return None
    chk.keys(d, path, ("num_beams", "fov", "max_range"), ("range_noise_std",))
    num_beams = chk.integer(d, path, "num_beams")
    fov = chk.number(d, path, "fov")
    max_range = chk.number(d, path, "max_range")
    noise = chk.number(d, path, "range_noise_std", 0.0)
    if num_beams is not None and num_beams < 1:
        chk.add(f"{path}.num_beams: must be >= 1")
    if fov is not None and not (0.0 < fov <= 2 * math.pi + 1e-12):
        chk.add(f"{path}.fov: must be in (0, 2*pi]")
    if max_range is not None and max_range <= 0:
        chk.add(f"{path}.max_range: must be > 0")
    if noise is not None and noise < 0:
        chk.add(f"{path}.range_noise_std: must be >= 0")
    if None in (num_beams, fov, max_range, noise):
        return None
    return LidarSpec(
        num_beams=num_beams, fov=fov, max_range=max_range, range_noise_std=noise
    )


def _parse_drift(chk: _Checker, d, path: str):
    if d is None:
        return DriftSpec()
    if not isinstance(d, dict):
        chk.add(f"{path}: must be a mapping")
        return None
    chk.keys(d, path, (), ("bias_walk_std", "heading_walk_std", "initial_bias"))
    bias = chk.number(d, path, "bias_walk_std", 0.0)
    heading = chk.number(d, path, "heading_walk_std", 0.0)
    initial = chk.point(d, path, "initial_bias", (0.0, 0.0))
    if bias is not None and bias < 0:
        chk.add(f"{path}.bias_walk_std: must be >= 0")
    if heading is not None and heading < 0:
        chk.add(f"{path}.heading_walk_std: must be >= 0")
    if None in (bias, heading) or initial is None:
        return None
    return DriftSpec(bias_walk_std=bias, heading_walk_std=heading, initial_bias=initial)


def _parse_robot(chk: _Checker, d, path: str, arena):
    if not isinstance(d, dict):
        chk.add(f"{path}: must be a mapping")
        return None
    chk.keys(d, path, ("waypoints", "speed", "lidar"), ("drift", "id"))
    speed = chk.number(d, path, "speed")
    rid = d.get("id")
    if rid is not None and not isinstance(rid, str):
        chk.add(f"{path}.id: must be a string")
        rid = None
    waypoints = None
    wp_val = d.get("waypoints")
    if (
        isinstance(wp_val, (list, tuple))
        and len(wp_val) >= 1
        and all(isinstance(p, (list, tuple)) and len(p) == 2 for p in wp_val)
    ):
        waypoints = tuple((float(p[0]), float(p[1])) for p in wp_val)
        if arena is not None:
            for i, p in enumerate(waypoints):
                if not arena.contains(p):
                    chk.add(f"{path}.waypoints[{i}]: outside arena")
    elif "waypoints" in d:
        chk.add(f"{path}.waypoints: must be a list of [x, y] points")
    if speed is not None and speed < 0:
        chk.add(f"{path}.speed: must be >= 0")
    lidar = _parse_lidar(chk, d.get("lidar"), f"{path}.lidar") if "lidar" in d else None
    drift = _parse_drift(chk, d.get("drift"), f"{path}.drift")
    if None in (speed, lidar, drift) or waypoints is None:
        return None
    return RobotSpec(waypoints=waypoints, speed=speed, lidar=lidar, drift=drift, id=rid)


def _parse_world(chk: _Checker, d, path: str):
    if not isinstance(d, dict):
        chk.add(f"{path}: must be a mapping")
        return None
    chk.keys(
        d,
        path,
        ("arena_bounds", "targets", "robots", "tick_period", "duration", "rng_seed"),
    )
    arena = _parse_arena(chk, d.get("arena_bounds"), f"{path}.arena_bounds")
    tick_period = chk.number(d, path, "tick_period")
    duration = chk.number(d, path, "duration")
    rng_seed = chk.integer(d, path, "rng_seed")
    if tick_period is not None and tick_period <= 0:
        chk.add(f"{path}.tick_period: must be > 0")
    if duration is not None and duration < 0:
        chk.add(f"{path}.duration: must be >= 0")
    if rng_seed is not None and rng_seed < 0:
        chk.add(f"{path}.rng_seed: must be >= 0")

    targets = []
    if isinstance(d.get("targets"), list):
        for i, td in enumerate(d["targets"]):
            t = _parse_target(chk, td, f"{path}.targets[{i}]", arena)
            if t is not None:
                targets.append(t)
    elif "targets" in d:
        chk.add(f"{path}.targets: must be a list")

    robots = []
    if isinstance(d.get("robots"), list):
        for i, rd in enumerate(d["robots"]):
            r = _parse_robot(chk, rd, f"{path}.robots[{i}]", arena)
            if r is not None:
                robots.append(r)
        if len(d["robots"]) == 0:
            chk.add(f"{path}.robots: need at least one robot")
    elif "robots" in d:
        chk.add(f"{path}.robots: must be a list")

    if arena is None or None in (tick_period, duration, rng_seed):
        return None
    if chk.violations:
        return None
    world = WorldConfig(
        arena_bounds=arena,
        targets=targets,
        robots=robots,
        tick_period=tick_period,
        duration=duration,
        rng_seed=rng_seed,
    )
    ids = world.robot_ids()
    if len(set(ids)) != len(ids):
        chk.add(f"{path}.robots: duplicate robot ids {ids}")
        return None
    return world


def _parse_model(chk: _Checker, d, path: str, tick_period: float | None):
    d = d or {}
    if not isinstance(d, dict):
        chk.add(f"{path}: must be a mapping")
        return None, {}
    chk.keys(d, path, (), tuple(_MODEL_DEFAULTS))
    vals = dict(_MODEL_DEFAULTS)
    for key in ("process_noise_intensity", "measurement_noise_std", "gate_threshold",
                "init_pos_var", "init_vel_var"):
        got = chk.number(d, path, key, vals[key])
        if got is not None:
            vals[key] = got
    for key in ("max_misses", "confirm_hits"):
        got = chk.integer(d, path, key, vals[key])
        if got is not None:
            vals[key] = got
    if vals["process_noise_intensity"] < 0:
        chk.add(f"{path}.process_noise_intensity: must be >= 0")
    if vals["measurement_noise_std"] <= 0:
        chk.add(f"{path}.measurement_noise_std: must be > 0")
    if vals["gate_threshold"] <= 0:
        chk.add(f"{path}.gate_threshold: must be > 0")
    if vals["init_pos_var"] <= 0 or vals["init_vel_var"] <= 0:
        chk.add(f"{path}: init variances must be > 0")
    if vals["max_misses"] < 0:
        chk.add(f"{path}.max_misses: must be >= 0")
    if vals["confirm_hits"] < 1:
        chk.add(f"{path}.confirm_hits: must be >= 1")
    if chk.violations or tick_period is None:
        return None, vals
    model = ModelParams.from_scalars(
        tick_period=tick_period,
        process_noise_intensity=vals["process_noise_intensity"],
        measurement_noise_std=vals["measurement_noise_std"],
        gate_threshold=vals["gate_threshold"],
        init_pos_var=vals["init_pos_var"],
        init_vel_var=vals["init_vel_var"],
        max_misses=vals["max_misses"],
        confirm_hits=vals["confirm_hits"],
    )
    return model, vals


def _parse_detection(chk: _Checker, d, path: str):
    d = d or {}
    if not isinstance(d, dict):
        chk.add(f"{path}: must be a mapping")
        return None, {}
    chk.keys(d, path, (), tuple(_DETECTION_DEFAULTS))
    vals = dict(_DETECTION_DEFAULTS)
    for key in ("epsilon", "max_cluster_extent"):
        got = chk.number(d, path, key, vals[key])
        if got is not None:
            vals[key] = got
        if vals[key] <= 0:
            chk.add(f"{path}.{key}: must be > 0")
    got = chk.integer(d, path, "min_pts", vals["min_pts"])
    if got is not None:
        vals["min_pts"] = got
    if vals["min_pts"] < 1:
        chk.add(f"{path}.min_pts: must be >= 1")
    return (
        DbscanParams(
            epsilon=vals["epsilon"],
            min_pts=vals["min_pts"],
            max_cluster_extent=vals["max_cluster_extent"],
        ),
        vals,
    )


def _parse_consensus(chk: _Checker, d, path: str, model: ModelParams | None):
    d = d or {}
    if not isinstance(d, dict):
        chk.add(f"{path}: must be a mapping")
        return None, {}
    chk.keys(d, path, (), tuple(_CONSENSUS_DEFAULTS))
    vals = dict(_CONSENSUS_DEFAULTS)
    mode = d.get("mode", vals["mode"])
    if mode not in ("standard", "adaptive"):
        chk.add(f"{path}.mode: must be 'standard' or 'adaptive' (got {mode!r})")
    else:
        vals["mode"] = mode
    norm_kind = d.get("norm_kind", vals["norm_kind"])
    if norm_kind not in ("frobenius", "spectral"):
        chk.add(f"{path}.norm_kind: must be 'frobenius' or 'spectral'")
    else:
        vals["norm_kind"] = norm_kind
    for key in ("match_dist_threshold", "mistrack_residual_threshold",
                "vel_angle_threshold", "vel_mag_threshold"):
        got = chk.number(d, path, key, vals[key])
        if got is not None:
            vals[key] = got
        if vals[key] <= 0:
            chk.add(f"{path}.{key}: must be > 0")
    for key, lo in (("mistrack_patience", 1), ("min_landmarks", 2),
                    ("alignment_window", 1)):
        got = chk.integer(d, path, key, vals[key])
        if got is not None:
            vals[key] = got
        if vals[key] < lo:
            chk.add(f"{path}.{key}: must be >= {lo}")
    if chk.violations or model is None:
        return None, vals
    params = ConsensusParams(
        mode=vals["mode"],
        A=model.F.copy(),
        Q=model.Q.copy(),
        match_dist_threshold=vals["match_dist_threshold"],
        mistrack_residual_threshold=vals["mistrack_residual_threshold"],
        mistrack_patience=vals["mistrack_patience"],
        min_landmarks=vals["min_landmarks"],
        alignment_window=vals["alignment_window"],
        norm_kind=vals["norm_kind"],
        vel_angle_threshold=vals["vel_angle_threshold"],
        vel_mag_threshold=vals["vel_mag_threshold"],
    )
    return params, vals


def _parse_links(chk: _Checker, d, path: str, robot_ids: list):
    if d is None:
        return [], []
    if not isinstance(d, list):
        chk.add(f"{path}: must be a list")
        return None, []
    links = []
    resolved = []
    for i, ld in enumerate(d):
        lp = f"{path}[{i}]"
        if not isinstance(ld, dict):
            chk.add(f"{lp}: must be a mapping")
            continue
        chk.keys(ld, lp, ("from", "to"), tuple(_LINK_DEFAULTS))
        src = ld.get("from")
        dst = ld.get("to")
        for name, val in (("from", src), ("to", dst)):
            if val is not None and robot_ids and val not in robot_ids:
                chk.add(f"{lp}.{name}: unknown robot id {val!r}")
        base = chk.integer(ld, lp, "base_latency", _LINK_DEFAULTS["base_latency"])
        jitter = chk.number(ld, lp, "jitter_std", _LINK_DEFAULTS["jitter_std"])
        drop = chk.number(ld, lp, "drop_prob", _LINK_DEFAULTS["drop_prob"])
        if base is not None and base < 0:
            chk.add(f"{lp}.base_latency: must be >= 0")
        if jitter is not None and jitter < 0:
            chk.add(f"{lp}.jitter_std: must be >= 0")
        if drop is not None and not (0.0 <= drop <= 1.0):
            chk.add(f"{lp}.drop_prob: must be in [0, 1]")
        if None in (src, dst, base, jitter, drop):
            continue
        links.append(
            LinkSpec(
                from_robot=src,
                to_robot=dst,
                base_latency=base,
                jitter_std=jitter,
                drop_prob=drop,
            )
        )
        resolved.append(
            {"from": src, "to": dst, "base_latency": base,
             "jitter_std": jitter, "drop_prob": drop}
        )
    return links, resolved


def _parse_sweep(chk: _Checker, d, path: str, base_seed: int | None):
    if d is None:
        return None, None
    if not isinstance(d, dict):
        chk.add(f"{path}: must be a mapping")
        return None, None
    chk.keys(d, path, (), ("modes", "seeds", "latencies", "drift_scales"))
    modes = d.get("modes")
    if modes is not None:
        if not isinstance(modes, list) or not modes or any(
            m not in ("standard", "adaptive") for m in modes
        ):
            chk.add(f"{path}.modes: must be a non-empty list of modes")
            modes = None
    seeds = d.get("seeds")
    if isinstance(seeds, int) and not isinstance(seeds, bool):
        if seeds < 1:
            chk.add(f"{path}.seeds: count must be >= 1")
            seeds = None
        elif base_seed is not None:
            seeds = [base_seed + i for i in range(seeds)]
    elif seeds is not None:
        if not isinstance(seeds, list) or not seeds or any(
            isinstance(s, bool) or not isinstance(s, int) for s in seeds
        ):
            chk.add(f"{path}.seeds: must be a count or non-empty list of ints")
            seeds = None
    for key in ("latencies", "drift_scales"):
        val = d.get(key)
        if val is not None and (
            not isinstance(val, list)
            or not val
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in val)
        ):
            chk.add(f"{path}.{key}: must be a non-empty list of numbers")
            d = {k: v for k, v in d.items() if k != key}
    if chk.violations:
        return None, None
    spec = SweepSpec(
        modes=modes or ["standard"],
        seeds=seeds if seeds else ([base_seed] if base_seed is not None else [0]),
        latencies=d.get("latencies"),
        drift_scales=d.get("drift_scales"),
    )
    resolved = {
        "modes": spec.modes,
        "seeds": spec.seeds,
    }
    if spec.latencies is not None:
        resolved["latencies"] = spec.latencies
    if spec.drift_scales is not None:
        resolved["drift_scales"] = spec.drift_scales
    return spec, resolved


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Build and validate an ExperimentConfig from a parsed YAML document."""
    chk = _Checker()
    if not isinstance(doc, dict):
        raise ConfigValidationError(["top level: must be a mapping"])
    chk.keys(
        doc,
        "top level",
        ("world",),
        ("detection", "model", "consensus", "links", "evaluation", "sweep",
         "output_dir"),
    )
    world = _parse_world(chk, doc.get("world"), "world")
    tick_period = world.tick_period if world else None
    detection, det_vals = _parse_detection(chk, doc.get("detection"), "detection")
    model, model_vals = _parse_model(chk, doc.get("model"), "model", tick_period)
    cons, cons_vals = _parse_consensus(chk, doc.get("consensus"), "consensus", model)

    eval_doc = doc.get("evaluation") or {}
    match_radius = _EVAL_DEFAULTS["match_radius"]
    if not isinstance(eval_doc, dict):
        chk.add("evaluation: must be a mapping")
    else:
        chk.keys(eval_doc, "evaluation", (), ("match_radius",))
        got = chk.number(eval_doc, "evaluation", "match_radius", match_radius)
        if got is not None:
            match_radius = got
        if match_radius <= 0:
            chk.add("evaluation.match_radius: must be > 0")

    robot_ids = world.robot_ids() if world else []
    links, links_resolved = _parse_links(chk, doc.get("links"), "links", robot_ids)
    base_seed = world.rng_seed if world else None
    sweep, sweep_resolved = _parse_sweep(chk, doc.get("sweep"), "sweep", base_seed)

    output_dir = doc.get("output_dir")
    if output_dir is not None and not isinstance(output_dir, str):
        chk.add("output_dir: must be a string path")

    if chk.violations:
        raise ConfigValidationError(chk.violations)

    resolved = {
        "world": _world_to_dict(world),
        "detection": det_vals,
        "model": model_vals,
        "consensus": cons_vals,
        "links": links_resolved,
        "evaluation": {"match_radius": match_radius},
    }
    if sweep_resolved is not None:
        resolved["sweep"] = sweep_resolved

    return ExperimentConfig(
        world=world,
        detection=detection,
        model=model,
        consensus=cons,
        links=links,
        match_radius=match_radius,
        sweep=sweep,
        output_dir=output_dir,
        resolved=resolved,
    )


def _world_to_dict(world: WorldConfig) -> dict:
    return {
        "arena_bounds": {
            "x_min": world.arena_bounds.x_min,
            "x_max": world.arena_bounds.x_max,
            "y_min": world.arena_bounds.y_min,
            "y_max": world.arena_bounds.y_max,
        },
        "tick_period": world.tick_period,
        "duration": world.duration,
        "rng_seed": world.rng_seed,
        "targets": [
            {
                "radius": t.radius,
                "start": list(t.start),
                "heading": list(t.heading),
                "speed": t.speed,
                "path": [list(p) for p in t.path],
            }
            for t in world.targets
        ],
        "robots": [
            {
                "id": rid,
                "waypoints": [list(p) for p in r.waypoints],
                "speed": r.speed,
                "lidar": {
                    "num_beams": r.lidar.num_beams,
                    "fov": r.lidar.fov,
                    "max_range": r.lidar.max_range,
                    "range_noise_std": r.lidar.range_noise_std,
                },
                "drift": {
                    "bias_walk_std": r.drift.bias_walk_std,
                    "heading_walk_std": r.drift.heading_walk_std,
                    "initial_bias": list(r.drift.initial_bias),
                },
            }
            for rid, r in zip(world.robot_ids(), world.robots)
        ],
    }


def load_config(path: str) -> ExperimentConfig:
    """Load and validate a YAML experiment config from disk."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    return config_from_dict(doc)
