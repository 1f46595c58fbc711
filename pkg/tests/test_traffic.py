"""Arrival streams and the built-in scenario presets."""
from __future__ import annotations

import random

import pytest

from tddsim.core import Direction
from tddsim.traffic import (
    SCENARIO_DEFAULTS,
    ArrivalProcess,
    build_scenario,
    next_arrival,
)


def test_next_arrival_deterministic_without_jitter():
    rng = random.Random(0)
    assert next_arrival(1000, 500, 0.0, rng) == 1500


def test_next_arrival_jitter_bounds():
    rng = random.Random(42)
    for _ in range(500):
        step = next_arrival(0, 1000, 0.25, rng)
        assert 750 <= step <= 1250


def test_arrival_phase_lands_inside_first_interval():
    from tddsim.core import FlowSpec, qos_for
    spec = FlowSpec("f", "u", Direction.UL, qos_for(82), 50, 25_000,
                    start_us=5_000)
    for seed in range(20):
        p = ArrivalProcess(spec, seed)
        assert 5_000 <= p.next_us < 30_000


def test_pop_due_is_monotone_and_seed_deterministic():
    from tddsim.core import FlowSpec, qos_for
    spec = FlowSpec("f", "u", Direction.UL, qos_for(82), 145, 25_000,
                    jitter_frac=0.25)
    a = ArrivalProcess(spec, 7)
    b = ArrivalProcess(spec, 7)
    seen_a, seen_b = [], []
    for now in range(0, 500_000, 10_000):
        due = a.pop_due(now)
        assert all(t <= now for t in due)
        seen_a.extend(due)
        seen_b.extend(b.pop_due(now))
    assert seen_a == sorted(seen_a)
    assert seen_a == seen_b
    c = ArrivalProcess(spec, 8)
    seen_c = c.pop_due(500_000)
    assert seen_c != seen_a[: len(seen_c)]  # a different seed shifts the stream


def test_scenario_one_shape():
    flows = build_scenario(1, 5)
    assert len(flows) == 10
    assert {f.direction for f in flows} == {Direction.UL, Direction.DL}
    for f in flows:
        assert f.payload_bytes == 50
        assert f.wire_bytes == 70
        assert f.interval_us == 500
        assert f.jitter_frac == 0.0
        assert f.qos.five_qi == 82
    assert len({f.ue_id for f in flows}) == 5
    with pytest.raises(ValueError):
        build_scenario(1, 0)
    with pytest.raises(ValueError):
        build_scenario(1, 21)


def test_scenario_two_shape():
    flows = build_scenario(2, 3)
    assert len(flows) == 6
    for f in flows:
        assert f.payload_bytes == 145
        assert f.interval_us == 25_000
        assert f.jitter_frac == 0.25
        assert f.qos.five_qi == 82
    with pytest.raises(ValueError):
        build_scenario(2, 81)


def test_scenario_three_cast():
    flows = build_scenario(3, 0)
    ul = [f for f in flows if f.direction is Direction.UL]
    dl = [f for f in flows if f.direction is Direction.DL]
    assert len(ul) == 4 and len(dl) == 4
    assert all(f.qos.five_qi == 83 for f in ul)
    assert all(f.qos.five_qi == 82 for f in dl)
    assert all(f.interval_us == 50 and f.payload_bytes == 50 for f in flows)
    late = sorted(f.start_us for f in dl)
    assert late == [0, 0, 5_000_000, 5_000_000]
    # one UE per flow: no queue sharing between directions in this mix
    assert len({f.ue_id for f in flows}) == 8


def test_scenario_defaults_cover_all_presets():
    assert set(SCENARIO_DEFAULTS) == {1, 2, 3}
    assert SCENARIO_DEFAULTS[1].duration_us == 1_000_000
    assert SCENARIO_DEFAULTS[2].duration_us == 5_000_000
    assert SCENARIO_DEFAULTS[3].duration_us == 10_000_000
    with pytest.raises(ValueError):
        build_scenario(4, 1)
