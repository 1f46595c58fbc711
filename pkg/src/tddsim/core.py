"""Cell-level constants and primitive types shared by every scheduler.

Time is integer microseconds; capacity is whole OFDM symbols. All byte
quantities are ints so reconstruction arithmetic stays exact.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum

IP_HEADER_BYTES = 20

# 5QI -> scheduling priority (lower wins).
FIVE_QI_PRIORITY = {82: 19, 83: 20}


class Direction(str, Enum):
    UL = "ul"
    DL = "dl"


class ConfigError(ValueError):
    """Raised when a config value violates a documented bound."""


@dataclass(frozen=True)
class SlotClock:
    """Numerology-1 slot grid: 500 us slots, 14 symbols of which 12 carry data."""

    us_per_slot: int = 500
    symbols_per_slot: int = 14
    usable_symbols: int = 12

    def __post_init__(self):
        if not 0 < self.usable_symbols <= self.symbols_per_slot:
            raise ConfigError(
                f"usable_symbols must be in (0, {self.symbols_per_slot}], got {self.usable_symbols}"
            )

    def slot_of(self, us: int) -> int:
        return us // self.us_per_slot

    def start_us(self, slot: int) -> int:
        return slot * self.us_per_slot

    def end_us(self, slot: int) -> int:
        return (slot + 1) * self.us_per_slot


@dataclass(frozen=True)
class TimingConfig:
    """Grant timing: DL applies at k0 slots, UL at k2 slots after the DCI."""

    k0: int = 0
    k2: int = 2
    guard_symbols: int = 2
    sr_delay_slots: int = 1
    # A UE with pending data but no grant in flight repeats its scheduling
    # request this often, so the cell cannot lose track of a backlogged flow.
    sr_period_slots: int = 4

    def __post_init__(self):
        if self.k0 < 0:
            raise ConfigError(f"k0 must be >= 0, got {self.k0}")
        if self.k2 <= self.k0:
            raise ConfigError(f"k2 must exceed k0, got k2={self.k2} k0={self.k0}")
        if self.guard_symbols < 0:
            raise ConfigError(f"guard_symbols must be >= 0, got {self.guard_symbols}")
        if self.sr_delay_slots < 0:
            raise ConfigError(f"sr_delay_slots must be >= 0, got {self.sr_delay_slots}")
        if self.sr_period_slots < 1:
            raise ConfigError(
                f"sr_period_slots must be >= 1, got {self.sr_period_slots}")


@dataclass(frozen=True)
class QosProfile:
    five_qi: int
    priority: int
    pdb_us: int = 10_000

    def __post_init__(self):
        if not 1 <= self.priority <= 127:
            raise ConfigError(f"priority must be in [1, 127], got {self.priority}")
        if self.pdb_us <= 0:
            raise ConfigError(f"pdb_us must be > 0, got {self.pdb_us}")


def qos_for(five_qi: int, pdb_us: int = 10_000) -> QosProfile:
    if five_qi not in FIVE_QI_PRIORITY:
        raise ConfigError(f"unmapped 5QI {five_qi}; known: {sorted(FIVE_QI_PRIORITY)}")
    return QosProfile(five_qi, FIVE_QI_PRIORITY[five_qi], pdb_us)


@dataclass(frozen=True)
class FlowSpec:
    """One unidirectional flow of one UE.

    payload_bytes is the application payload; the IP header is added on top
    when packets are generated. start_us is the activation time; phase_us is
    the device clock offset of the first message inside the first interval.
    """

    flow_id: str
    ue_id: str
    direction: Direction
    qos: QosProfile
    payload_bytes: int
    interval_us: int
    jitter_frac: float = 0.0
    start_us: int = 0

    def __post_init__(self):
        if self.payload_bytes <= 0:
            raise ConfigError(f"{self.flow_id}: payload_bytes must be > 0")
        if self.interval_us <= 0:
            raise ConfigError(f"{self.flow_id}: interval_us must be > 0")
        if not 0.0 <= self.jitter_frac < 1.0:
            raise ConfigError(f"{self.flow_id}: jitter_frac must be in [0, 1)")
        if self.start_us < 0:
            raise ConfigError(f"{self.flow_id}: start_us must be >= 0")

    @property
    def wire_bytes(self) -> int:
        return self.payload_bytes + IP_HEADER_BYTES


def validate_flows(flows: list[FlowSpec]) -> None:
    """Each UE must use exactly one QoS class; flow ids must be unique."""
    seen: dict[str, QosProfile] = {}
    ids = set()
    for f in flows:
        if f.flow_id in ids:
            raise ConfigError(f"duplicate flow_id {f.flow_id}")
        ids.add(f.flow_id)
        prev = seen.setdefault(f.ue_id, f.qos)
        if prev != f.qos:
            raise ConfigError(f"UE {f.ue_id} mixes QoS profiles {prev} and {f.qos}")


@dataclass
class LinkModel:
    """Static per-UE link quality expressed as bytes carried per symbol."""

    default_bytes_per_symbol: int = 96
    per_ue: dict[str, int] = field(default_factory=dict)
    tx_error_probability: float = 0.0
    bsr_symbols: int = 1

    def __post_init__(self):
        if self.default_bytes_per_symbol <= 0:
            raise ConfigError("default_bytes_per_symbol must be > 0")
        for ue, v in self.per_ue.items():
            if v <= 0:
                raise ConfigError(f"bytes_per_symbol for {ue} must be > 0, got {v}")
        if not 0.0 <= self.tx_error_probability < 1.0:
            raise ConfigError("tx_error_probability must be in [0, 1)")
        if self.bsr_symbols <= 0:
            raise ConfigError("bsr_symbols must be > 0")

    def bytes_per_symbol(self, ue_id: str) -> int:
        return self.per_ue.get(ue_id, self.default_bytes_per_symbol)

    def symbol_capacity_bytes(self, ue_id: str, symbols: int) -> int:
        return self.per_ue.get(ue_id, self.default_bytes_per_symbol) * symbols

    def symbols_needed(self, ue_id: str, nbytes: int) -> int:
        if nbytes <= 0:
            return 0
        per = self.per_ue.get(ue_id, self.default_bytes_per_symbol)
        return -(-nbytes // per)


@dataclass(slots=True)
class Grant:
    """A DCI: permission for one flow to occupy `symbols` in `slot`."""

    slot: int
    issued_slot: int
    direction: Direction
    flow_id: str
    ue_id: str
    symbols: int
    data_bytes: int
    kind: str = "data"  # data | bsr


class UlQueueSet:
    """UE-side triple queue; drains status, then retransmissions, then new data.

    Items are packet-like objects with integer attributes `size_bytes` and
    `sent_bytes`; a packet leaves its queue once fully transmitted.
    """

    ORDER = ("status", "retx", "newtx")
    __slots__ = ("status", "retx", "newtx", "_bytes")

    def __init__(self):
        self.status: deque = deque()
        self.retx: deque = deque()
        self.newtx: deque = deque()
        # Outstanding (unsent) bytes per queue, maintained incrementally so
        # lookups are O(1). All mutations must go through the methods below.
        self._bytes = {"status": 0, "retx": 0, "newtx": 0}

    def queue(self, name: str) -> deque:
        return getattr(self, name)

    def push(self, name: str, pkt) -> None:
        getattr(self, name).append(pkt)
        self._bytes[name] += pkt.size_bytes - pkt.sent_bytes

    def push_front(self, name: str, pkt) -> None:
        getattr(self, name).appendleft(pkt)
        self._bytes[name] += pkt.size_bytes - pkt.sent_bytes

    def pop_front(self, name: str):
        pkt = getattr(self, name).popleft()
        self._bytes[name] -= pkt.size_bytes - pkt.sent_bytes
        return pkt

    def rewind(self, name: str, pkt, nbytes: int) -> None:
        """Roll back transmission progress of a packet still queued in `name`."""
        pkt.sent_bytes -= nbytes
        self._bytes[name] += nbytes

    def bytes_in(self, name: str) -> int:
        return self._bytes[name]

    @property
    def total_bytes(self) -> int:
        b = self._bytes
        return b["status"] + b["retx"] + b["newtx"]

    def drain(self, budget: int) -> list[tuple[str, object, int]]:
        """Take up to `budget` bytes in queue order; returns (queue, pkt, taken)."""
        taken: list[tuple[str, object, int]] = []
        for name, q in (("status", self.status), ("retx", self.retx),
                        ("newtx", self.newtx)):
            while q and budget > 0:
                pkt = q[0]
                remaining = pkt.size_bytes - pkt.sent_bytes
                chunk = min(remaining, budget)
                pkt.sent_bytes += chunk
                self._bytes[name] -= chunk
                budget -= chunk
                taken.append((name, pkt, chunk))
                if pkt.sent_bytes >= pkt.size_bytes:
                    q.popleft()
                else:
                    break
            if budget == 0:
                break
        return taken
