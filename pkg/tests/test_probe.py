import pytest

from kac_lab.common.seeding import path_seed
from kac_lab.exceptions import GeometryError
from kac_lab.geometry import Exhaustion, make_ball, make_box, minus_segment, whole_space
from kac_lab.paths import penetration_time, sample_path
from kac_lab.probe import (
    CONSISTENT,
    INCONCLUSIVE,
    IRREGULAR,
    REPORT_COLUMNS,
    RegularityReport,
    exhaustion_consistency,
    regularity_battery,
)

slit_plane = minus_segment((-1, 0), (1, 0))


def _row(probe, level, gap, stderr, h=1e-2, error=""):
    return {
        "region_id": "test",
        "probe": probe,
        "x": "(0)",
        "t": 1.0,
        "level": level,
        "h": h / (1, 2, 4)[level],
        "N": 1000,
        "gap": gap,
        "stderr": stderr,
        "error": error,
    }


def test_whole_space_is_consistent():
    report = regularity_battery(whole_space(2), [(0.0, 0.0)], [0.5], 500, 1e-2, seed=1)
    assert report.verdict == CONSISTENT
    assert report.refinement_trend == {0: [0.0, 0.0, 0.0]}


def test_segment_is_irregular():
    report = regularity_battery(slit_plane, [(0.0, 0.5)], [1.0], 2000, 1e-2, seed=2)
    assert report.verdict == IRREGULAR
    assert all(gap > 0.2 for gap in report.refinement_trend[0])


def test_disk_is_consistent():
    report = regularity_battery(make_ball((0, 0), 1), [(0.0, 0.0), (0.5, 0.0)], [0.2], 500, 1e-2, seed=3)
    assert report.verdict == CONSISTENT
    assert len(report.probes) == 6


def test_failed_probe_is_inconclusive():
    report = regularity_battery(slit_plane, [(0.0, 0.0), (0.0, 0.5)], [1.0], 200, 1e-2, seed=4)
    assert report.verdict == INCONCLUSIVE
    assert len(report.errors) == 3
    assert report.errors[0]["error"].startswith("geometry:")
    assert "3 errors" in report.summary()


def test_probe_seeds_are_independent_of_order():
    alone = regularity_battery(slit_plane, [(0.0, 0.5)], [1.0], 200, 1e-2, seed=5)
    paired = regularity_battery(slit_plane, [(0.0, 0.5), (0.3, 0.3)], [1.0], 200, 1e-2, seed=5)
    assert alone.refinement_trend[0] == paired.refinement_trend[0]


def test_verdict_rules():
    persistent = RegularityReport("test", [_row(0, level, 0.3, 0.01) for level in range(3)])
    assert persistent.verdict == IRREGULAR

    # significant at h but gone at h/4
    shrinking = RegularityReport("test", [_row(0, 0, 0.3, 0.01), _row(0, 1, 0.1, 0.01), _row(0, 2, 0.0, 0.01)])
    assert shrinking.verdict == CONSISTENT

    growing = RegularityReport("test", [_row(0, 0, 0.0, 0.01), _row(0, 1, 0.01, 0.001), _row(0, 2, 0.05, 0.001)])
    assert growing.verdict == INCONCLUSIVE

    failed = RegularityReport("test", [_row(0, level, 0.0, 0.0, error="geometry: outside") for level in range(3)])
    assert failed.verdict == INCONCLUSIVE
    assert RegularityReport("empty").verdict == INCONCLUSIVE


def test_report_frame_and_summary():
    report = RegularityReport("slit", [_row(0, level, 0.3, 0.01) for level in range(3)])
    frame = report.to_frame()
    assert list(frame.columns) == REPORT_COLUMNS
    assert len(frame) == 3
    summary = report.summary()
    assert summary.startswith("slit: irregular")
    assert "max gap 0.3" in summary


def test_exhaustion_whole_space():
    check = exhaustion_consistency(whole_space(2), 6, 3, (0.0, 0.0), n_paths=100, t_max=0.5, h=1e-2)
    assert check.passed
    assert check.n_levels == 3


def test_exhaustion_slit_plane():
    check = exhaustion_consistency(slit_plane, 7, 4, (0.0, 0.5), n_paths=100, t_max=0.5, h=1e-2, scale=0.75)
    assert check.passed, check.violations[:3]


def test_exhaustion_penetration_ignores_slit():
    slit_levels = Exhaustion(slit_plane, "boxes")
    plain_levels = Exhaustion(whole_space(2), "boxes")
    for j in range(50):
        seed = path_seed(8, j)
        path = sample_path((0.0, 0.5), 0.5, 1e-2, seed)
        for n in (1, 2):
            assert penetration_time(path, slit_levels.level(n)) == penetration_time(path, plain_levels.level(n))


def test_exhaustion_start_outside():
    with pytest.raises(GeometryError):
        exhaustion_consistency(slit_plane, 9, 2, (5.0, 5.0), n_paths=10)


@pytest.mark.slow
def test_exhaustion_acceptance():
    check = exhaustion_consistency(slit_plane, 10, 8, (0.0, 0.5), n_paths=1000, t_max=1.0, h=1e-3, scale=0.5)
    assert check.passed


@pytest.mark.slow
def test_lipschitz_domains_acceptance():
    points = [(0.5, 0.5), (0.9, 0.5)]
    square = regularity_battery(make_box((0, 0), (1, 1)), points, [0.05], 100_000, 1e-4, seed=11)
    disk = regularity_battery(make_ball((0, 0), 1), [(0.0, 0.0), (0.9, 0.0)], [0.1], 100_000, 1e-4, seed=12)
    assert square.verdict == CONSISTENT
    assert disk.verdict == CONSISTENT


@pytest.mark.slow
def test_segment_gap_is_stable_under_refinement():
    report = regularity_battery(slit_plane, [(0.0, 0.5)], [1.0], 100_000, 1e-3, seed=13)
    gaps = report.refinement_trend[0]
    assert report.verdict == IRREGULAR
    assert max(gaps) - min(gaps) <= 0.01
