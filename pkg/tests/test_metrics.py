import json
import math

import numpy as np
import pytest

from mcpd.errors import ContractViolation
from mcpd.metrics import (
    DetectionEvent,
    detect,
    evaluate,
    events_to_dicts,
    report_to_dict,
    write_events_json,
    write_report_json,
)


def test_detect_paper_style_drop():
    # run length climbs to 59 then collapses to 30: one event, change at 120
    path = np.r_[np.zeros(90, dtype=int), np.arange(60), [30]]
    events = detect(path, drop=20)
    assert len(events) == 1
    e = events[0]
    assert (e.detected_at, e.runlength_at_detection, e.inferred_cp) == (150, 30, 120)


def test_detect_monotone_path_has_no_events():
    assert detect(np.arange(500), drop=20) == []


def test_detect_boundary_is_strict():
    assert detect([50, 30], drop=20) == []  # drop of exactly 20: no event
    assert len(detect([50, 29], drop=20)) == 1


def test_detect_inf_drop_disables():
    path = np.r_[np.arange(100), [0]]
    assert detect(path, drop=math.inf) == []


def test_detect_validation():
    with pytest.raises(ContractViolation):
        detect([], drop=20)
    with pytest.raises(ContractViolation):
        detect([1, 2], drop=0.5)


def ev(detected_at, r):
    return DetectionEvent(detected_at, r, detected_at - r)


def test_evaluate_perfect_detections():
    cps = [100, 200, 300, 400, 500]
    events = [ev(c + 5, 5) for c in cps]
    report = evaluate(events, cps, horizon=600)
    assert report.detection_rate == 1.0
    assert report.delays == [5] * 5
    assert report.false_detections == 0
    assert report.delay_mean == 5.0 and report.delay_std == 0.0


def test_evaluate_no_events_gives_infinite_delay():
    report = evaluate([], [100, 200], horizon=300)
    assert report.detection_rate == 0.0
    assert report.delays == []
    assert math.isinf(report.delay_mean) and math.isinf(report.delay_std)


def test_evaluate_offset_inferred_cp_matches():
    # inferred location 118 sits inside the window of the true change at 100
    report = evaluate([ev(150, 32)], [100], horizon=600)
    assert report.detection_rate == 1.0
    assert report.delays == [50]


def test_evaluate_slack_window():
    assert evaluate([ev(120, 25)], [100], horizon=600).detection_rate == 1.0  # inferred 95
    assert evaluate([ev(120, 35)], [100], horizon=600).detection_rate == 0.0  # inferred 85


def test_evaluate_requires_detection_after_the_change():
    report = evaluate([ev(97, 2)], [100], horizon=600)  # inferred 95, fired at 97
    assert report.detection_rate == 0.0
    assert report.false_detections == 1


def test_evaluate_window_ends_at_next_boundary():
    # inferred 205 cannot match the change at 100 once 200 is a boundary
    report = evaluate([ev(240, 35)], [100, 200], horizon=600)
    assert report.delays == [40]
    assert report.detection_rate == 0.5


def test_evaluate_each_side_matched_once():
    cps = [100]
    events = [ev(110, 8), ev(130, 28)]
    report = evaluate(events, cps, horizon=600)
    assert report.detection_rate == 1.0
    assert report.false_detections == 1
    assert events[0].matched_true_cp == 100 and events[0].delay == 10
    assert events[1].matched_true_cp is None


def test_evaluate_delay_from_inferred_flag():
    report = evaluate([ev(150, 32)], [100], horizon=600, delay_from_inferred=True)
    assert report.delays == [32]


def test_event_and_report_serialisation(tmp_path):
    events = [ev(110, 8)]
    report = evaluate(events, [100], horizon=600)
    write_events_json(tmp_path / "e.json", events)
    write_report_json(tmp_path / "r.json", report)
    edoc = json.loads((tmp_path / "e.json").read_text())
    assert edoc[0]["matched_true_cp"] == 100 and edoc[0]["inferred_cp"] == 102

    empty = evaluate([], [100], horizon=600)
    rdoc = report_to_dict(empty)
    assert rdoc["delay_mean"] == "inf" and rdoc["delay_std"] == "inf"
    assert events_to_dicts([])  == []
