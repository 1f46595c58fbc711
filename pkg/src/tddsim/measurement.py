"""Per-flow buffer bookkeeping on the gNB side.

The gNB keeps, per flow, a ring of buffer levels Q and allocations A indexed
by slot. DL levels are observed directly; UL levels are only observed when a
buffer status report arrives and are otherwise rolled forward:

    reconstruct:  Q(t) = max(Q(t-1) - A(t-1), 0)
    ingress:      I(t) = Q(t) - Q(t-1) + min(A(t-1), Q(t-1))

Ingress spikes ("bursts") feed the size/interval statistics that the
prediction gate consumes.
"""
from __future__ import annotations

import math
import statistics
from collections import deque
from dataclasses import dataclass

DEFAULT_WINDOW_SLOTS = 256


def reconstruct_buffer(q_prev: int, a_prev: int) -> int:
    return max(q_prev - a_prev, 0)


def compute_ingress(q_prev: int, q_now: int, a_prev: int) -> int:
    return q_now - q_prev + min(a_prev, q_prev)


@dataclass(slots=True)
class BurstStats:
    """Summary of the nonzero-ingress slots inside the window.

    size_mean is bytes per burst; interval_mean is slots between consecutive
    bursts. A coefficient of variation is +inf whenever too few samples exist
    to take a sample standard deviation.
    """

    sample_count: int = 0
    size_mean: float = 0.0
    size_cv: float = math.inf
    interval_mean: float = math.inf
    interval_cv: float = math.inf
    last_burst_slot: int = -1


class FlowBufferHistory:
    """Fixed-capacity ring of (Q, A, observed?) triples, one entry per slot."""

    __slots__ = ("window", "q", "a", "known", "last_slot")

    def __init__(self, window_slots: int = DEFAULT_WINDOW_SLOTS):
        if window_slots < 4:
            raise ValueError("window_slots must be >= 4")
        self.window = window_slots
        self.q = [0] * window_slots
        self.a = [0] * window_slots
        self.known = [False] * window_slots
        self.last_slot = -1

    def _idx(self, slot: int) -> int:
        return slot % self.window

    def in_window(self, slot: int) -> bool:
        return self.last_slot - self.window < slot <= self.last_slot

    def q_at(self, slot: int) -> int:
        return self.q[self._idx(slot)] if self.in_window(slot) else 0

    def a_at(self, slot: int) -> int:
        return self.a[self._idx(slot)] if self.in_window(slot) else 0

    def record_slot(self, slot: int, observed_q: int | None = None, allocated: int = 0) -> int:
        """Append the next slot; reconstructs Q when there is no observation.

        Returns the ingress attributed to `slot`.
        """
        last = self.last_slot
        if slot != last + 1 and last != -1:
            raise ValueError(f"record_slot out of order: {slot} after {last}")
        window = self.window
        prev = slot - 1
        if last - window < prev <= last:
            j = prev % window
            q_prev = self.q[j]
            a_prev = self.a[j]
        else:
            q_prev = a_prev = 0
        i = slot % window
        self.a[i] = allocated
        self.last_slot = slot
        if observed_q is None:
            # a reconstructed level is by definition ingress-free
            self.q[i] = reconstruct_buffer(q_prev, a_prev)
            self.known[i] = False
            return 0
        self.q[i] = observed_q
        self.known[i] = True
        ingress = compute_ingress(q_prev, observed_q, a_prev)
        return ingress if ingress > 0 else 0

    def set_allocated(self, slot: int, allocated: int) -> None:
        if self.in_window(slot):
            self.a[self._idx(slot)] = allocated

    def ingress_at(self, slot: int) -> int:
        last = self.last_slot
        window = self.window
        if last - window < slot <= last:
            q_now = self.q[slot % window]
        else:
            q_now = 0
        prev = slot - 1
        if last - window < prev <= last:
            j = prev % window
            q_prev = self.q[j]
            a_prev = self.a[j]
        else:
            q_prev = a_prev = 0
        ingress = compute_ingress(q_prev, q_now, a_prev)
        return ingress if ingress > 0 else 0

    def backlog_bsr(self, sent_slot: int, reported_q: int) -> list[tuple[int, int]]:
        """Write a report at its transmission slot and roll later slots forward.

        reported_q is the buffer level at the start of sent_slot (before that
        slot's own allocation drained it). Slots after sent_slot that have no
        observation of their own are re-reconstructed. Never touches anything
        before sent_slot. Returns the (slot, ingress) pairs whose ingress
        became nonzero, oldest first, for burst bookkeeping.
        """
        if not self.in_window(sent_slot):
            return []
        bursts: list[tuple[int, int]] = []
        i = self._idx(sent_slot)
        before = self.ingress_at(sent_slot)
        self.q[i] = reported_q
        self.known[i] = True
        after = self.ingress_at(sent_slot)
        if after > 0 and after != before:
            bursts.append((sent_slot, after))
        for slot in range(sent_slot + 1, self.last_slot + 1):
            j = self._idx(slot)
            if self.known[j]:
                continue
            self.q[j] = reconstruct_buffer(self.q[self._idx(slot - 1)], self.a[self._idx(slot - 1)])
        return bursts


def burst_stats(history: FlowBufferHistory, window_slots: int | None = None) -> BurstStats:
    """Reference statistics: rescans the ring's ingress series.

    The engine uses an incremental tracker for speed; this scan is the
    authoritative definition the tracker is tested against.
    """
    window = window_slots or history.window
    first = max(history.last_slot - window + 1, 0)
    slots: list[int] = []
    sizes: list[int] = []
    for slot in range(first, history.last_slot + 1):
        if not history.in_window(slot):
            continue
        ingress = history.ingress_at(slot)
        if ingress > 0:
            slots.append(slot)
            sizes.append(ingress)
    return _stats_from_bursts(slots, sizes)


def _stats_from_bursts(slots: list[int], sizes: list[int]) -> BurstStats:
    n = len(slots)
    if n == 0:
        return BurstStats()
    stats = BurstStats(sample_count=n, last_burst_slot=slots[-1])
    stats.size_mean = statistics.fmean(sizes)
    if n >= 2:
        stats.size_cv = statistics.stdev(sizes) / stats.size_mean if stats.size_mean else math.inf
        gaps = [b - a for a, b in zip(slots, slots[1:])]
        stats.interval_mean = statistics.fmean(gaps)
        if len(gaps) >= 2:
            stats.interval_cv = statistics.stdev(gaps) / stats.interval_mean
    return stats


class BurstTracker:
    """O(1)-per-event burst statistics over a sliding slot window."""

    __slots__ = ("window", "bursts", "size_sum", "size_sq", "gap_sum", "gap_sq")

    def __init__(self, window_slots: int = DEFAULT_WINDOW_SLOTS):
        self.window = window_slots
        self.bursts: deque[tuple[int, int]] = deque()  # (slot, size)
        self.size_sum = 0
        self.size_sq = 0
        self.gap_sum = 0
        self.gap_sq = 0

    def add(self, slot: int, size: int) -> None:
        if self.bursts:
            last_slot = self.bursts[-1][0]
            if slot <= last_slot:
                # Replaced observation at the same slot: rebuild lazily.
                self._rebuild_with(slot, size)
                return
            gap = slot - last_slot
            self.gap_sum += gap
            self.gap_sq += gap * gap
        self.bursts.append((slot, size))
        self.size_sum += size
        self.size_sq += size * size
        self.evict_before(slot - self.window + 1)

    def _rebuild_with(self, slot: int, size: int) -> None:
        kept = [(s, z) for s, z in self.bursts if s != slot]
        kept.append((slot, size))
        kept.sort()
        self.bursts.clear()
        self.size_sum = self.size_sq = self.gap_sum = self.gap_sq = 0
        for s, z in kept:
            self.add(s, z)

    def evict_before(self, min_slot: int) -> None:
        while self.bursts and self.bursts[0][0] < min_slot:
            slot, size = self.bursts.popleft()
            self.size_sum -= size
            self.size_sq -= size * size
            if self.bursts:
                gap = self.bursts[0][0] - slot
                self.gap_sum -= gap
                self.gap_sq -= gap * gap

    def stats(self) -> BurstStats:
        n = len(self.bursts)
        if n == 0:
            return BurstStats()
        out = BurstStats(sample_count=n, last_burst_slot=self.bursts[-1][0])
        out.size_mean = self.size_sum / n
        if n >= 2:
            out.size_cv = (
                _sample_std(self.size_sum, self.size_sq, n) / out.size_mean
                if out.size_mean
                else math.inf
            )
            gaps = n - 1
            out.interval_mean = self.gap_sum / gaps
            if gaps >= 2:
                out.interval_cv = _sample_std(self.gap_sum, self.gap_sq, gaps) / out.interval_mean
        return out


def _sample_std(total: int, total_sq: int, n: int) -> float:
    var = (total_sq - total * total / n) / (n - 1)
    return math.sqrt(max(var, 0.0))
