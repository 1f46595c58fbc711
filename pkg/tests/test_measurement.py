"""Buffer reconstruction, ingress attribution, and burst statistics."""
from __future__ import annotations

import math
import random
import statistics

from hypothesis import given, settings
from hypothesis import strategies as st

from tddsim.measurement import (
    BurstTracker,
    FlowBufferHistory,
    burst_stats,
    compute_ingress,
    reconstruct_buffer,
)


def test_reconstruct_buffer_examples():
    assert reconstruct_buffer(100, 30) == 70
    assert reconstruct_buffer(30, 100) == 0
    assert reconstruct_buffer(0, 0) == 0
    assert reconstruct_buffer(50, 50) == 0


def test_compute_ingress_examples():
    # nothing allocated: ingress is the raw level change
    assert compute_ingress(40, 100, 0) == 60
    # allocation fully used: the drain is added back before differencing
    assert compute_ingress(100, 70, 30) == 0
    # allocation exceeded the buffer: only the drainable part counts
    assert compute_ingress(20, 55, 90) == 55
    # level dropped by exactly the allocation plus some never-seen data
    assert compute_ingress(100, 95, 30) == 25


def test_ingress_round_trip():
    rng = random.Random(5)
    for _ in range(2000):
        q_prev = rng.randrange(0, 500)
        a_prev = rng.randrange(0, 500)
        true_ingress = rng.randrange(0, 300)
        q_now = reconstruct_buffer(q_prev, a_prev) + true_ingress
        assert compute_ingress(q_prev, q_now, a_prev) == true_ingress


def test_history_reconstructs_between_observations():
    h = FlowBufferHistory(16)
    h.record_slot(0, observed_q=90, allocated=30)
    assert h.record_slot(1) == 0          # reconstruction adds no ingress
    assert h.q_at(1) == 60
    h.set_allocated(1, 60)
    assert h.record_slot(2) == 0
    assert h.q_at(2) == 0
    assert h.record_slot(3, observed_q=120) == 120


def test_history_rejects_out_of_order_slots():
    h = FlowBufferHistory(8)
    h.record_slot(0, observed_q=5)
    try:
        h.record_slot(2)
    except ValueError:
        pass
    else:
        raise AssertionError("expected record_slot(2) after 0 to raise")


def test_backlog_bsr_rewrites_report_slot_and_rolls_forward():
    h = FlowBufferHistory(32)
    h.record_slot(0, observed_q=0)
    for t in range(1, 6):
        h.record_slot(t)                  # believed empty the whole time
    # a report from slot 3 reveals 200 bytes were already waiting there
    bursts = h.backlog_bsr(3, 200)
    assert bursts == [(3, 200)]
    assert h.q_at(3) == 200
    # the unobserved tail re-reconstructs from the corrected level
    assert h.q_at(4) == 200 and h.q_at(5) == 200
    # a second report for the same slot replaces, not accumulates
    bursts = h.backlog_bsr(3, 150)
    assert bursts == [(3, 150)]
    assert h.q_at(5) == 150


def test_backlog_bsr_never_touches_observed_slots():
    h = FlowBufferHistory(32)
    h.record_slot(0, observed_q=0)
    h.record_slot(1)
    h.record_slot(2, observed_q=40)
    h.record_slot(3)
    h.backlog_bsr(1, 99)
    assert h.q_at(2) == 40                # direct observation wins
    assert h.q_at(3) == reconstruct_buffer(40, 0)


def test_burst_stats_hand_values():
    h = FlowBufferHistory(64)
    h.record_slot(0, observed_q=0)
    level = 0
    for t in range(1, 31):
        if t % 10 == 0:
            level += 100
            h.record_slot(t, observed_q=level)
        else:
            h.record_slot(t, observed_q=level)
    s = burst_stats(h)
    assert s.sample_count == 3
    assert s.size_mean == 100.0
    assert s.size_cv == 0.0
    assert s.interval_mean == 10.0
    assert s.interval_cv == 0.0
    assert s.last_burst_slot == 30


def test_burst_stats_empty_window():
    h = FlowBufferHistory(16)
    h.record_slot(0, observed_q=0)
    s = burst_stats(h)
    assert s.sample_count == 0
    assert math.isinf(s.interval_mean)
    assert math.isinf(s.size_cv)


def _reference_stats(events: list[tuple[int, int]], window: int, now: int):
    kept = [(s, z) for s, z in events if s >= now - window + 1]
    sizes = [z for _, z in kept]
    slots = [s for s, _ in kept]
    if not kept:
        return None
    out = {
        "n": len(kept),
        "size_mean": statistics.fmean(sizes),
        "last": slots[-1],
    }
    if len(sizes) >= 2:
        out["size_cv"] = (statistics.stdev(sizes) / out["size_mean"]
                          if out["size_mean"] else math.inf)
        gaps = [b - a for a, b in zip(slots, slots[1:])]
        out["interval_mean"] = statistics.fmean(gaps)
        if len(gaps) >= 2:
            out["interval_cv"] = statistics.stdev(gaps) / out["interval_mean"]
    return out


@settings(max_examples=200, deadline=None)
@given(
    steps=st.lists(
        st.tuples(st.integers(min_value=1, max_value=40),
                  st.integers(min_value=1, max_value=5000)),
        min_size=1, max_size=60,
    ),
    window=st.integers(min_value=8, max_value=64),
)
def test_tracker_matches_reference_scan(steps, window):
    """The O(1) tracker agrees with a from-scratch statistics pass."""
    tracker = BurstTracker(window)
    events: list[tuple[int, int]] = []
    slot = 0
    for gap, size in steps:
        slot += gap
        tracker.add(slot, size)
        events.append((slot, size))
    ref = _reference_stats(events, window, slot)
    got = tracker.stats()
    assert got.sample_count == ref["n"]
    assert got.last_burst_slot == ref["last"]
    assert math.isclose(got.size_mean, ref["size_mean"], rel_tol=1e-9)
    if "size_cv" in ref:
        assert math.isclose(got.size_cv, ref["size_cv"],
                            rel_tol=1e-9, abs_tol=1e-9)
        assert math.isclose(got.interval_mean, ref["interval_mean"], rel_tol=1e-9)
    if "interval_cv" in ref:
        assert math.isclose(got.interval_cv, ref["interval_cv"],
                            rel_tol=1e-9, abs_tol=1e-9)


def test_tracker_same_slot_replacement():
    tracker = BurstTracker(32)
    tracker.add(4, 100)
    tracker.add(8, 100)
    tracker.add(8, 250)                    # corrected observation for slot 8
    s = tracker.stats()
    assert s.sample_count == 2
    assert s.size_mean == 175.0
    assert s.last_burst_slot == 8


def test_tracker_eviction_drops_old_bursts():
    tracker = BurstTracker(10)
    tracker.add(0, 50)
    tracker.add(5, 60)
    tracker.add(14, 70)                    # slot 0 falls outside [5, 14]
    s = tracker.stats()
    assert s.sample_count == 2
    assert s.size_mean == 65.0
    assert s.interval_mean == 9.0
