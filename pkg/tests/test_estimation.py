"""Prediction gate, step-function forecasts, and report classification."""
from __future__ import annotations

import math

from tddsim.estimation import (
    BASIS_PREDICTION,
    BASIS_RECONSTRUCTION,
    GateThresholds,
    IRREGULAR,
    REGULAR,
    classify_bsr,
    evaluate_gate,
    infer_ul_buffer,
    predict_dl_buffer,
    step_count,
)
from tddsim.measurement import BurstStats


def _stats(n=10, size_mean=100.0, size_cv=0.0, interval_mean=4.0,
           interval_cv=0.0, last=20):
    return BurstStats(sample_count=n, size_mean=size_mean, size_cv=size_cv,
                      interval_mean=interval_mean, interval_cv=interval_cv,
                      last_burst_slot=last)


def test_gate_opens_only_on_stable_pattern():
    thr = GateThresholds()
    assert evaluate_gate(_stats(), thr).enabled
    assert evaluate_gate(_stats(), thr).reason == "stable_pattern"


def test_gate_blocks_too_few_samples():
    g = evaluate_gate(_stats(n=2), GateThresholds(min_samples=3))
    assert not g.enabled and g.reason == "too_few_bursts"


def test_gate_blocks_interval_deviation():
    g = evaluate_gate(_stats(interval_cv=0.2), GateThresholds(cv_interval_max=0.15))
    assert not g.enabled and g.reason == "interval_deviation"


def test_gate_blocks_size_deviation():
    g = evaluate_gate(_stats(size_cv=0.5), GateThresholds(cv_size_max=0.10))
    assert not g.enabled and g.reason == "size_deviation"


def test_gate_threshold_boundaries_are_inclusive():
    thr = GateThresholds(cv_interval_max=0.15, cv_size_max=0.10, min_samples=3)
    assert evaluate_gate(_stats(n=3, size_cv=0.10, interval_cv=0.15), thr).enabled


def test_step_count_integer_interval():
    # anchor 0, period 2: bursts at 2,4,6,8,10 inside (0, 10]
    assert step_count(0, 0, 10, 2.0) == 5
    # single-slot spans pick up exactly the on-period slots
    assert step_count(0, 3, 4, 2.0) == 1
    assert step_count(0, 4, 5, 2.0) == 0


def test_step_count_fractional_interval():
    # anchor 0, period 2.5: bursts land by floor(t/2.5): at t=3 (1), t=5 (2)
    assert step_count(0, 0, 5, 2.5) == 2
    total = sum(step_count(0, t, t + 1, 2.5) for t in range(0, 25))
    assert total == step_count(0, 0, 25, 2.5) == 10


def test_step_count_degenerate_interval():
    assert step_count(0, 0, 10, math.inf) == 0
    assert step_count(0, 0, 10, 0.0) == 0
    assert step_count(5, 7, 3, 4.0) == 0   # empty span


def test_infer_ul_buffer():
    s = _stats(size_mean=99.6, interval_mean=4.0)
    assert infer_ul_buffer(s, 0) == 0
    assert infer_ul_buffer(s, 3) == 0
    assert infer_ul_buffer(s, 4) == 100
    assert infer_ul_buffer(s, 13) == 300
    assert infer_ul_buffer(BurstStats(), 50) == 0


def test_predict_dl_gate_closed_rolls_forward_known_level():
    gate = evaluate_gate(BurstStats(), GateThresholds())
    est = predict_dl_buffer("f", 500, 10, 14, BurstStats(), gate,
                            planned_drain={11: 200, 13: 400})
    assert est.basis == BASIS_RECONSTRUCTION
    # 500 - 200 = 300, then -400 floors at 0
    assert est.q_bytes == 0
    est2 = predict_dl_buffer("f", 500, 10, 14, BurstStats(), gate,
                             planned_drain={11: 200})
    assert est2.q_bytes == 300


def test_predict_dl_gate_open_adds_step_bursts():
    s = _stats(size_mean=100.0, interval_mean=4.0, last=20)
    gate = evaluate_gate(s, GateThresholds())
    assert gate.enabled
    # anchored at 20: next bursts at 24, 28; horizon 22 sees none
    assert predict_dl_buffer("f", 0, 20, 22, s, gate).q_bytes == 0
    assert predict_dl_buffer("f", 0, 20, 24, s, gate).q_bytes == 100
    assert predict_dl_buffer("f", 0, 20, 28, s, gate).q_bytes == 200
    est = predict_dl_buffer("f", 0, 20, 28, s, gate, planned_drain={25: 60})
    assert est.q_bytes == 140
    assert est.basis == BASIS_PREDICTION


def test_predict_drains_apply_before_next_burst():
    s = _stats(size_mean=100.0, interval_mean=4.0, last=20)
    gate = evaluate_gate(s, GateThresholds())
    # drain at 24 removes that slot's own burst; drain at 23 hits nothing
    assert predict_dl_buffer("f", 0, 20, 24, s, gate,
                             planned_drain={24: 100}).q_bytes == 0
    assert predict_dl_buffer("f", 0, 20, 24, s, gate,
                             planned_drain={23: 100}).q_bytes == 100


def test_classify_bsr_regular_within_tolerance():
    s = _stats(interval_mean=8.0)
    gate = evaluate_gate(s, GateThresholds())
    # tolerance is max(1, 2.0) = 2 slots around the 8-slot period
    assert classify_bsr(s, gate, 8) == REGULAR
    assert classify_bsr(s, gate, 6) == REGULAR
    assert classify_bsr(s, gate, 10) == REGULAR
    assert classify_bsr(s, gate, 5) == IRREGULAR
    assert classify_bsr(s, gate, 11) == IRREGULAR


def test_classify_bsr_irregular_when_gate_closed():
    s = _stats(n=1)
    gate = evaluate_gate(s, GateThresholds())
    assert not gate.enabled
    assert classify_bsr(s, gate, 8) == IRREGULAR
