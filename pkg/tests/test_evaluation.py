import numpy as np
import pytest

from dkcfsim.errors import UndefinedMetricError
from dkcfsim.evaluation import (
    FrameScore,
    MotScorer,
    RunReport,
    aggregate_runs,
    mota,
    score_frame,
    summary_stats,
)


def frame(tick=0, matches=0, fp=0, misses=0, idsw=0, gt=0, dist=0.0):
    return FrameScore(tick, matches, fp, misses, idsw, gt, dist)


def test_perfect_overlay():
    gt = {"g0": (0.0, 0.0), "g1": (3.0, 3.0)}
    tracks = {"t0": (0.0, 0.1), "t1": (3.0, 2.95)}
    score, assignment, dists = score_frame(gt, tracks, 1.0)
    assert score.matches == 2
    assert score.false_positives == 0
    assert score.misses == 0
    assert score.id_switches == 0
    assert score.gt_count == 2
    assert assignment == {"g0": "t0", "g1": "t1"}
    assert score.sum_match_dist == pytest.approx(0.1 + 0.05)


def test_no_tracks_all_missed():
    gt = {"g0": (0.0, 0.0), "g1": (1.0, 1.0)}
    score, _, _ = score_frame(gt, {}, 1.0)
    assert score.misses == 2
    assert score.matches == 0


def test_swap_counts_two_id_switches():
    gt_a = {"g0": (0.0, 0.0), "g1": (5.0, 0.0)}
    tracks_1 = {"t0": (0.0, 0.0), "t1": (5.0, 0.0)}
    _, assignment, _ = score_frame(gt_a, tracks_1, 1.0)
    # Tracks swap places at the next frame.
    tracks_2 = {"t0": (5.0, 0.0), "t1": (0.0, 0.0)}
    score, assignment, _ = score_frame(gt_a, tracks_2, 1.0, assignment)
    assert score.id_switches == 2
    assert assignment == {"g0": "t1", "g1": "t0"}


def test_persistence_prefers_previous_pair():
    gt = {"g0": (0.0, 0.0)}
    tracks = {"t_old": (0.4, 0.0), "t_new": (0.1, 0.0)}
    # Without history the closer track wins.
    score, assignment, _ = score_frame(gt, tracks, 1.0)
    assert assignment["g0"] == "t_new"
    # With history, the previous match is kept while it stays in radius.
    score, assignment, _ = score_frame(gt, tracks, 1.0, {"g0": "t_old"})
    assert assignment["g0"] == "t_old"
    assert score.id_switches == 0


def test_zero_radius_requires_exact_coincidence():
    gt = {"g0": (1.0, 1.0), "g1": (2.0, 2.0)}
    tracks = {"t0": (1.0, 1.0), "t1": (2.0, 2.0000001)}
    score, _, _ = score_frame(gt, tracks, 0.0)
    assert score.matches == 1
    assert score.misses == 1
    assert score.false_positives == 1


def test_mota_examples():
    assert mota([frame(matches=4, gt=4)]) == 1.0
    assert mota([frame(misses=4, gt=4)]) == 0.0
    frames = [frame(gt=50, misses=10, fp=5, idsw=2), frame(gt=50, misses=10, fp=5, idsw=3)]
    assert mota(frames) == pytest.approx(0.65)


def test_mota_undefined_without_gt():
    with pytest.raises(UndefinedMetricError):
        mota([frame(gt=0)])


def test_mota_invariant_under_reordering(rng):
    frames = [
        frame(
            tick=i,
            gt=int(rng.integers(1, 5)),
            misses=int(rng.integers(0, 3)),
            fp=int(rng.integers(0, 3)),
            idsw=int(rng.integers(0, 2)),
        )
        for i in range(30)
    ]
    shuffled = list(frames)
    rng.shuffle(shuffled)
    assert mota(frames) == pytest.approx(mota(shuffled))


def test_pure_false_positive_strictly_decreases_mota():
    gt = {"g0": (0.0, 0.0)}
    scorer_a = MotScorer(1.0)
    scorer_b = MotScorer(1.0)
    for tick in range(10):
        scorer_a.add_frame(tick, gt, {"t0": (0.0, 0.0)})
        scorer_b.add_frame(tick, gt, {"t0": (0.0, 0.0), "ghost": (9.0, 9.0)})
    assert scorer_b.mota() < scorer_a.mota()


def test_summary_stats_examples():
    single = summary_stats([0.7])
    assert single["mean"] == single["median"] == 0.7
    assert single["std"] == 0.0
    assert single["range"] == [0.7, 0.7]

    both = summary_stats([0.0, 1.0])
    assert both["mean"] == 0.5
    assert both["range"] == [0.0, 1.0]

    three = summary_stats([0.25, 0.5, 1.0])
    assert three["median"] == 0.5
    assert three["mean"] == pytest.approx(7.0 / 12.0)


def test_population_std_convention():
    st = summary_stats([0.0, 1.0])
    assert st["std"] == pytest.approx(0.5)  # population n, not n-1


def make_report(seed, mota_r0_local, mota_r0_global):
    return RunReport(
        mode="standard",
        seed=seed,
        num_ticks=100,
        robots={
            "r0": {
                "local": {"mota": mota_r0_local, "counts": {}},
                "global": {"mota": mota_r0_global, "counts": {}},
            }
        },
        network={"links": {"a->b": {"sent": 1, "delivered": 1, "dropped": 0}},
                 "pending": 0},
    )


def test_aggregate_runs():
    reports = [make_report(s, v, v + 0.1) for s, v in enumerate([0.25, 0.5, 1.0])]
    agg = aggregate_runs(reports)
    cell = agg["cells"]["r0"]["local"]
    assert cell["mean"] == pytest.approx(7.0 / 12.0)
    assert cell["median"] == 0.5
    assert agg["num_runs"] == 3
    assert agg["messages"]["delivered"] == 3


def test_aggregate_requires_reports():
    with pytest.raises(ValueError):
        aggregate_runs([])


def test_report_roundtrip():
    report = make_report(3, 0.5, 0.6)
    again = RunReport.from_dict(report.to_dict())
    assert again.to_dict() == report.to_dict()
