"""Traffic-pattern gating and buffer-state estimation.

A flow's measured burst pattern (size B every T slots) is only trusted when
both coefficients of variation sit under their thresholds; otherwise the
scheduler falls back to plain reconstruction and the full BSR round-trip.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .measurement import BurstStats


@dataclass(frozen=True)
class GateThresholds:
    cv_interval_max: float = 0.15
    cv_size_max: float = 0.10
    min_samples: int = 3


@dataclass(slots=True)
class PredictionGate:
    enabled: bool
    reason: str
    cv_interval: float = math.inf
    cv_size: float = math.inf
    sample_count: int = 0


def evaluate_gate(stats: BurstStats, thresholds: GateThresholds) -> PredictionGate:
    if stats.sample_count < thresholds.min_samples:
        return PredictionGate(False, "too_few_bursts", stats.interval_cv, stats.size_cv,
                              stats.sample_count)
    if stats.interval_cv > thresholds.cv_interval_max:
        return PredictionGate(False, "interval_deviation", stats.interval_cv, stats.size_cv,
                              stats.sample_count)
    if stats.size_cv > thresholds.cv_size_max:
        return PredictionGate(False, "size_deviation", stats.interval_cv, stats.size_cv,
                              stats.sample_count)
    return PredictionGate(True, "stable_pattern", stats.interval_cv, stats.size_cv,
                          stats.sample_count)


BASIS_PREDICTION = "step_function_prediction"
BASIS_RECONSTRUCTION = "reconstruction_only"


@dataclass(slots=True)
class BufferEstimate:
    flow_id: str
    target_slot: int
    q_bytes: int
    basis: str


def step_count(anchor_slot: int, from_slot: int, to_slot: int, interval: float) -> int:
    """Bursts the step function places in (from_slot, to_slot].

    The cumulative step count since the anchor is floor(elapsed / T); the
    difference of two cumulative counts gives the steps inside a span.
    """
    if not math.isfinite(interval) or interval <= 0:
        return 0
    hi = math.floor((to_slot - anchor_slot) / interval)
    lo = math.floor((from_slot - anchor_slot) / interval)
    return max(hi - lo, 0)


def infer_ul_buffer(stats: BurstStats, slots_since_last_burst: int) -> int:
    """Bytes presumed to have entered the UE buffer since its last known burst."""
    if not math.isfinite(stats.interval_mean) or stats.interval_mean <= 0:
        return 0
    steps = math.floor(slots_since_last_burst / stats.interval_mean)
    return round(stats.size_mean) * max(steps, 0)


def predict_dl_buffer(
    flow_id: str,
    q_now: int,
    now_slot: int,
    target_slot: int,
    stats: BurstStats,
    gate: PredictionGate,
    planned_drain: dict[int, int] | None = None,
) -> BufferEstimate:
    """Expected DL buffer at target_slot.

    With the gate open, a burst of the mean size is added at every step-function
    slot between now and the target (anchored at the last observed burst);
    already-planned allocations drain the estimate slot by slot. With the gate
    closed only the known level and planned drains are rolled forward.
    """
    drains = planned_drain or {}
    if not drains:
        if not gate.enabled:
            return BufferEstimate(flow_id, target_slot, q_now, BASIS_RECONSTRUCTION)
        # No intermediate drains means the clamp never bites and the per-slot
        # step counts telescope into one span.
        steps = step_count(stats.last_burst_slot, now_slot, target_slot, stats.interval_mean)
        q = q_now + round(stats.size_mean) * steps
        return BufferEstimate(flow_id, target_slot, q, BASIS_PREDICTION)
    q = q_now
    interval = stats.interval_mean
    add_bursts = (gate.enabled and math.isfinite(interval) and interval > 0)
    if add_bursts:
        # chained per-slot step counts: each slot adds the increment of
        # floor((slot - anchor) / T), exactly what step_count reports per slot
        anchor = stats.last_burst_slot
        burst = round(stats.size_mean)
        prev_steps = math.floor((now_slot - anchor) / interval)
        for slot in range(now_slot + 1, target_slot + 1):
            steps = math.floor((slot - anchor) / interval)
            q += burst * (steps - prev_steps)
            prev_steps = steps
            q -= drains.get(slot, 0)
            if q < 0:
                q = 0
    else:
        for slot in range(now_slot + 1, target_slot + 1):
            q -= drains.get(slot, 0)
            if q < 0:
                q = 0
    basis = BASIS_PREDICTION if gate.enabled else BASIS_RECONSTRUCTION
    return BufferEstimate(flow_id, target_slot, q, basis)


REGULAR = "regular"
IRREGULAR = "irregular"


def classify_bsr(stats: BurstStats, gate: PredictionGate, gap_slots: int) -> str:
    """Does a report request fit the measured pattern?

    Regular reports can be served lazily because the step function already
    accounts for their data; anything off-pattern needs the full round-trip.
    """
    if not gate.enabled or not math.isfinite(stats.interval_mean):
        return IRREGULAR
    tolerance = max(1.0, 0.25 * stats.interval_mean)
    if abs(gap_slots - stats.interval_mean) <= tolerance:
        return REGULAR
    return IRREGULAR
