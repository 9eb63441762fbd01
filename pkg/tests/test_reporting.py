import pytest

from src.analysis.stats import wilson_interval
from src.common.models import HorizonCalibration, ReplicaClass, TrichotomyEstimate, Verdict
from src.reporting.generator import ReportGenerator, format_interval


def _estimate(right, left, rec, n=100, band_ok=None, tag="constant(p=2,q=1)"):
    return TrichotomyEstimate(
        model_tag=tag, horizon=200.0, level=20, replicas=n,
        p_right=wilson_interval(right, n), p_left=wilson_interval(left, n), p_rec=wilson_interval(rec, n),
        p_unclassified=wilson_interval(n - right - left - rec, n),
        verdict=Verdict.TRANSIENT_RIGHT if right == n else Verdict.INCONCLUSIVE, band_ok=band_ok,
    )


def _calibration(requested, horizon):
    return HorizonCalibration(
        model_tag="constant(p=2,q=1)", baseline_tag="constant(p=2,q=1)", expected=ReplicaClass.TRANSIENT_RIGHT,
        level=20, requested_horizon=requested, horizon=horizon, agreement=wilson_interval(400, 400),
        classified=wilson_interval(400, 400), target=0.99, rounds=1 if requested == horizon else 3, passed=True,
    )


def test_interval_filter():
    assert format_interval({"estimate": 0.5, "lower": 0.25, "upper": 0.75}) == "0.5000 [0.2500, 0.7500]"


def test_classify_report_shows_verdict_and_pilot():
    report = ReportGenerator().trichotomy_report("classify", [_estimate(100, 0, 0)], "ab" * 8, 7,
                                                 calibrations=[_calibration(200.0, 200.0)])
    assert report.startswith("# Classification report")
    assert "`abababababababab`" in report
    assert "**transient_right**" in report
    assert "classified 1.0000" in report
    assert "T raised" not in report
    assert "Zero-one band" not in report


def test_rescaled_pilot_is_reported():
    report = ReportGenerator().trichotomy_report("classify", [_estimate(100, 0, 0)], "0" * 16, 1,
                                                 calibrations=[_calibration(50.0, 200.0)])
    assert "T raised from 50.0 to 200.0" in report


def test_sweep_report_flags_points_outside_the_band():
    estimates = [_estimate(100, 0, 0, band_ok=True), _estimate(60, 30, 5, band_ok=False, tag="constant(p=1.2,q=1)")]
    report = ReportGenerator().trichotomy_report("sweep", estimates, "0" * 16, 3,
                                                 overrides=[{"p": 2.0}, {"p": 1.2}])
    assert report.startswith("# Zero-one sweep report")
    assert "| Point |" in report
    assert "- point 1: constant(p=1.2,q=1) (p=1.2)" in report
    assert "- point 0" not in report


def test_unknown_report_kind():
    generator = ReportGenerator()
    with pytest.raises(ValueError):
        generator.generate_report("summary", {})
    with pytest.raises(ValueError):
        generator.trichotomy_report("classify", [], "0" * 16, 1)
