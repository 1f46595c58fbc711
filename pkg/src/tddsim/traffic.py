"""Arrival processes and the three industrial scenario presets."""
from __future__ import annotations

import random
from dataclasses import dataclass

from .core import Direction, FlowSpec, qos_for


def next_arrival(prev_us: int, interval_us: int, jitter_frac: float, rng: random.Random) -> int:
    """Next message time: the nominal interval scaled uniformly by [1-j, 1+j]."""
    if jitter_frac == 0.0:
        return prev_us + interval_us
    factor = 1.0 + jitter_frac * (2.0 * rng.random() - 1.0)
    step = max(1, round(interval_us * factor))
    return prev_us + step


class ArrivalProcess:
    """Deterministic-by-seed arrival stream for one flow."""

    __slots__ = ("spec", "rng", "next_us")

    def __init__(self, spec: FlowSpec, seed: int):
        self.spec = spec
        self.rng = random.Random(seed)
        # Device clock phase: first message lands somewhere inside the first
        # interval after activation.
        self.next_us = spec.start_us + self.rng.randrange(spec.interval_us)

    def pop_due(self, now_us: int) -> list[int]:
        """All arrival times <= now_us, advancing the stream."""
        due = []
        while self.next_us <= now_us:
            due.append(self.next_us)
            self.next_us = next_arrival(
                self.next_us, self.spec.interval_us, self.spec.jitter_frac, self.rng
            )
        return due


@dataclass(frozen=True)
class ScenarioDefaults:
    bytes_per_symbol: int
    duration_us: int


# Desk-scale link capacity: one symbol batches a few queued messages
# (a 3.6-slot backlog of 70 B wire-size messages still fits one symbol),
# while a full 12-symbol slot carries 3456 B.
SCENARIO_DEFAULTS = {
    1: ScenarioDefaults(bytes_per_symbol=288, duration_us=1_000_000),
    2: ScenarioDefaults(bytes_per_symbol=288, duration_us=5_000_000),
    3: ScenarioDefaults(bytes_per_symbol=288, duration_us=10_000_000),
}


def build_scenario(scenario: int, n_ues: int) -> list[FlowSpec]:
    """Flow lists for the three reference traffic mixes.

    1: n_ues bidirectional deterministic 50 B @ 500 us, 5QI 82.
    2: n_ues bidirectional jittered 145 B @ 25 ms +-25%, 5QI 82.
    3: fixed cast - 4 UL UEs 5QI 83 and 2+2 DL UEs 5QI 82 (the last two
       activate at t=5 s), all 50 B @ 50 us.
    """
    if scenario == 1:
        if not 1 <= n_ues <= 20:
            raise ValueError(f"scenario 1 supports 1..20 UEs, got {n_ues}")
        return _bidirectional(n_ues, payload=50, interval_us=500, jitter=0.0)
    if scenario == 2:
        if not 1 <= n_ues <= 80:
            raise ValueError(f"scenario 2 supports 1..80 UEs, got {n_ues}")
        return _bidirectional(n_ues, payload=145, interval_us=25_000, jitter=0.25)
    if scenario == 3:
        flows = []
        for i in range(4):
            flows.append(
                FlowSpec(
                    flow_id=f"ul{i}",
                    ue_id=f"ue-ul{i}",
                    direction=Direction.UL,
                    qos=qos_for(83),
                    payload_bytes=50,
                    interval_us=50,
                )
            )
        for i in range(4):
            flows.append(
                FlowSpec(
                    flow_id=f"dl{i}",
                    ue_id=f"ue-dl{i}",
                    direction=Direction.DL,
                    qos=qos_for(82),
                    payload_bytes=50,
                    interval_us=50,
                    start_us=0 if i < 2 else 5_000_000,
                )
            )
        return flows
    raise ValueError(f"unknown scenario {scenario}")


def _bidirectional(n_ues: int, payload: int, interval_us: int, jitter: float) -> list[FlowSpec]:
    flows = []
    for i in range(n_ues):
        ue = f"ue{i}"
        for direction in (Direction.UL, Direction.DL):
            flows.append(
                FlowSpec(
                    flow_id=f"{ue}-{direction.value}",
                    ue_id=ue,
                    direction=direction,
                    qos=qos_for(82),
                    payload_bytes=payload,
                    interval_us=interval_us,
                    jitter_frac=jitter,
                )
            )
    return flows
