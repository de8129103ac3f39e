"""Monte Carlo sweeps over (mode, seed, latency, drift) grids.

Each grid cell spawns one independent run; runs share no state, so the
sweep can execute in a process pool. Aggregation groups runs by
everything except the seed and reports mean / median / std / range per
robot and scope, mirroring how the run statistics tables are usually laid
out.
"""

from __future__ import annotations

import copy
import json
import os
from concurrent.futures import ProcessPoolExecutor

from .config import ExperimentConfig, config_from_dict
from .evaluation import RunReport, aggregate_runs
from .pipeline import run_experiment


def _cell_label(mode, latency, drift_scale) -> str:
    parts = [mode]
    if latency is not None:
        parts.append(f"lat{latency}")
    if drift_scale is not None:
        parts.append(f"drift{drift_scale:g}")
    return "_".join(parts)


def expand_grid(config: ExperimentConfig) -> list:
    """All (mode, seed, latency, drift_scale) combinations of the sweep."""
    sweep = config.sweep
    if sweep is None:
        return [(config.consensus.mode, config.world.rng_seed, None, None)]
    latencies = sweep.latencies if sweep.latencies is not None else [None]
    drifts = sweep.drift_scales if sweep.drift_scales is not None else [None]
    combos = []
    for mode in sweep.modes:
        for latency in latencies:
            for drift in drifts:
                for seed in sweep.seeds:
                    combos.append((mode, seed, latency, drift))
    return combos


def derive_run_config(
    config: ExperimentConfig,
    mode: str,
    seed: int,
    latency=None,
    drift_scale=None,
) -> ExperimentConfig:
    """Rebuild the config with one grid cell's overrides applied."""
    doc = copy.deepcopy(config.resolved)
    doc.pop("sweep", None)
    doc["consensus"]["mode"] = mode
    doc["world"]["rng_seed"] = int(seed)
    if latency is not None:
        for link in doc["links"]:
            link["base_latency"] = int(latency)
    if drift_scale is not None:
        for robot in doc["world"]["robots"]:
            robot["drift"]["bias_walk_std"] *= float(drift_scale)
            robot["drift"]["heading_walk_std"] *= float(drift_scale)
    return config_from_dict(doc)


def _run_one(args):
    doc, output_dir = args
    report = run_experiment(config_from_dict(doc), output_dir=output_dir)
    return report.to_dict()


def run_sweep(
    config: ExperimentConfig,
    output_dir: str | None = None,
    workers: int = 1,
) -> dict:
    """Execute the whole grid and write per-run directories plus a summary.

    Returns the aggregate document: per-cell statistics over seeds, plus
    the individual run reports.
    """
    combos = expand_grid(config)
    jobs = []
    for mode, seed, latency, drift in combos:
        run_cfg = derive_run_config(config, mode, seed, latency, drift)
        run_dir = None
        if output_dir is not None:
            run_dir = os.path.join(
                output_dir, f"run_{_cell_label(mode, latency, drift)}_seed{seed}"
            )
        jobs.append((run_cfg.resolved, run_dir))

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            report_dicts = list(pool.map(_run_one, jobs))
    else:
        report_dicts = [_run_one(job) for job in jobs]

    reports = [RunReport.from_dict(d) for d in report_dicts]
    for report, (mode, seed, latency, drift) in zip(reports, combos):
        report.overrides = {
            "mode": mode,
            "latency": latency,
            "drift_scale": drift,
        }

    cells = {}
    for report, (mode, seed, latency, drift) in zip(reports, combos):
        cells.setdefault(_cell_label(mode, latency, drift), []).append(report)

    aggregate = {
        "cells": {
            label: aggregate_runs(group) for label, group in sorted(cells.items())
        },
        "runs": [r.to_dict() for r in reports],
    }
    if output_dir is not None:
        os.makedirs(output_dir, exist_ok=True)
        with open(
            os.path.join(output_dir, "aggregate_report.json"), "w", encoding="utf-8"
        ) as fh:
            json.dump(aggregate, fh, indent=2, sort_keys=True)
            fh.write("\n")
        with open(
            os.path.join(output_dir, "aggregate_table.txt"), "w", encoding="utf-8"
        ) as fh:
            fh.write(format_aggregate_table(aggregate))
    return aggregate


def format_aggregate_table(aggregate: dict) -> str:
    """Aligned-column text table of the per-cell MOTA statistics."""
    lines = []
    header = (
        f"{'cell':<28}{'robot':<12}{'scope':<9}"
        f"{'mean':>8}{'median':>9}{'std':>8}{'range':>16}{'runs':>6}"
    )
    lines.append(header)
    lines.append("-" * len(header))
    for label in sorted(aggregate["cells"]):
        cell = aggregate["cells"][label]
        for rid in sorted(cell["cells"]):
            for scope in ("local", "global"):
                st = cell["cells"][rid][scope]
                if st["mean"] is None:
                    row = (
                        f"{label:<28}{rid:<12}{scope:<9}"
                        f"{'n/a':>8}{'n/a':>9}{'n/a':>8}{'n/a':>16}"
                        f"{cell['num_runs']:>6}"
                    )
                else:
                    rng = f"[{st['range'][0]:.2f}, {st['range'][1]:.2f}]"
                    row = (
                        f"{label:<28}{rid:<12}{scope:<9}"
                        f"{st['mean']:>8.3f}{st['median']:>9.3f}{st['std']:>8.3f}"
                        f"{rng:>16}{cell['num_runs']:>6}"
                    )
                lines.append(row)
    lines.append("")
    return "\n".join(lines)


def compare_aggregates(report_a: dict, report_b: dict) -> dict:
    """Per-cell difference of mean MOTA: report_b minus report_a.

    Both documents must cover the same cells, robots and scopes.
    """
    cells_a = report_a["cells"]
    cells_b = report_b["cells"]
    if sorted(cells_a) != sorted(cells_b):
        raise ValueError(
            f"cell mismatch: {sorted(cells_a)} vs {sorted(cells_b)}"
        )
    deltas = {}
    for label in sorted(cells_a):
        a = cells_a[label]["cells"]
        b = cells_b[label]["cells"]
        if sorted(a) != sorted(b):
            raise ValueError(f"robot mismatch in cell {label!r}")
        deltas[label] = {}
        for rid in sorted(a):
            deltas[label][rid] = {}
            for scope in ("local", "global"):
                ma = a[rid][scope]["mean"]
                mb = b[rid][scope]["mean"]
                deltas[label][rid][scope] = (
                    None if ma is None or mb is None else mb - ma
                )
    return deltas


def format_compare_table(deltas: dict) -> str:
    lines = [f"{'cell':<28}{'robot':<12}{'scope':<9}{'delta mean':>12}"]
    lines.append("-" * len(lines[0]))
    for label in sorted(deltas):
        for rid in sorted(deltas[label]):
            for scope in ("local", "global"):
                d = deltas[label][rid][scope]
                txt = "n/a" if d is None else f"{d:+.3f}"
                lines.append(f"{label:<28}{rid:<12}{scope:<9}{txt:>12}")
    lines.append("")
    return "\n".join(lines)
