"""Slot-level simulator of a single dynamic-TDD cell.

A joint uplink/downlink QoS-aware scheduler ("flex") is compared against
per-direction proportional-fair, max-rate and QoS baselines on periodic
industrial traffic. The public surface is intentionally small: build flows,
run a `Simulation`, read the `SimResult`, or drive everything through the
`tddsim` command line.
"""
from .core import (
    ConfigError,
    Direction,
    FlowSpec,
    Grant,
    LinkModel,
    QosProfile,
    SlotClock,
    TimingConfig,
    UlQueueSet,
    qos_for,
)
from .engine import FlowMetrics, SimResult, Simulation, run_simulation
from .traffic import ArrivalProcess, build_scenario

__version__ = "0.1.0"

__all__ = [
    "ArrivalProcess",
    "ConfigError",
    "Direction",
    "FlowMetrics",
    "FlowSpec",
    "Grant",
    "LinkModel",
    "QosProfile",
    "SimResult",
    "Simulation",
    "SlotClock",
    "TimingConfig",
    "UlQueueSet",
    "build_scenario",
    "qos_for",
    "run_simulation",
    "__version__",
]
