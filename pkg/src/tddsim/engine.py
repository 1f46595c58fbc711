"""Slot-level cell simulation driving one scheduler against generated traffic.

Tick order per slot t:
  1. deliver arrivals (UE uplink queues raise SRs; downlink lands in gNB queues)
  2. hand due SR/BSR events to the scheduler, then let it schedule:
     uplink grants for t+k2 are pipelined, downlink grants apply to t itself
  3. execute slot t - drain queues per grant, resolve per-grant error draws,
     collect piggybacked buffer reports from every uplink transmission
  4. discard packets that exceeded their delay budget
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .core import (
    Direction,
    FlowSpec,
    Grant,
    LinkModel,
    SlotClock,
    TimingConfig,
    UlQueueSet,
    validate_flows,
)
from .baselines import BASELINE_KINDS, BaselineScheduler
from .flexsched import FlexScheduler, SlotLayout
from .traffic import ArrivalProcess

DEFAULT_MAX_RETX = 4
DEFAULT_BUCKET_US = 100_000


class QueuedPacket:
    __slots__ = ("arrival_us", "size_bytes", "sent_bytes", "attempts")

    def __init__(self, arrival_us: int, size_bytes: int):
        self.arrival_us = arrival_us
        self.size_bytes = size_bytes
        self.sent_bytes = 0
        self.attempts = 0


class GnbDlQueue(UlQueueSet):
    """Downlink buffer at the cell; same queue discipline as the UE side."""

    __slots__ = ()

    @property
    def newtx_bytes(self) -> int:
        return self.bytes_in("newtx")

    @property
    def retx_bytes(self) -> int:
        return self.bytes_in("retx")


@dataclass(slots=True)
class FlowMetrics:
    direction: Direction
    arrived_pkts: int = 0
    arrived_bytes: int = 0
    delivered_pkts: int = 0
    delivered_bytes: int = 0
    dropped_pkts: int = 0
    dropped_bytes: int = 0
    latencies_us: list[int] = field(default_factory=list)

    def plr(self) -> float:
        return self.dropped_pkts / self.arrived_pkts if self.arrived_pkts else 0.0


@dataclass
class SimResult:
    n_slots: int
    duration_us: int
    flows: dict[str, FlowMetrics]
    buckets: dict[tuple[int, Direction], list[int]]  # -> [arrived, dropped]
    guard_violations: int
    deadline_violations: int
    overflow_violations: int
    conservation_errors: list[str]
    replaced_slots: int
    scheduler: object
    packet_log: list[tuple] | None = None

    def direction_totals(self, direction: Direction) -> tuple[int, int, int]:
        arrived = delivered = dropped = 0
        for fm in self.flows.values():
            if fm.direction is direction:
                arrived += fm.arrived_pkts
                delivered += fm.delivered_pkts
                dropped += fm.dropped_pkts
        return arrived, delivered, dropped


def build_scheduler(name: str, flows: list[FlowSpec], clock: SlotClock,
                    timing: TimingConfig, link: LinkModel, *,
                    thresholds=None, window: int | None = None,
                    log_gates: bool = False, log_decisions: bool = False):
    if name == "flex":
        return FlexScheduler(flows, clock, timing, link, thresholds=thresholds,
                             window=window, log_gates=log_gates,
                             log_decisions=log_decisions)
    if name in BASELINE_KINDS:
        return BaselineScheduler(name, flows, clock, timing, link, window=window)
    raise ValueError(f"unknown scheduler: {name!r}")


class _UlFlow:
    __slots__ = ("spec", "arrivals", "queues", "outstanding_grants",
                 "sr_pending", "last_sr_slot")

    def __init__(self, spec: FlowSpec, seed: int):
        self.spec = spec
        self.arrivals = ArrivalProcess(spec, seed)
        self.queues = UlQueueSet()
        self.outstanding_grants = 0
        self.sr_pending = False
        self.last_sr_slot = -(1 << 30)


class _DlFlow:
    __slots__ = ("spec", "arrivals", "queue")

    def __init__(self, spec: FlowSpec, seed: int):
        self.spec = spec
        self.arrivals = ArrivalProcess(spec, seed)
        self.queue = GnbDlQueue()


class Simulation:
    def __init__(self, flows: list[FlowSpec], scheduler_name: str, seed: int,
                 duration_us: int, *, clock: SlotClock | None = None,
                 timing: TimingConfig | None = None,
                 link: LinkModel | None = None, thresholds=None,
                 window: int | None = None, max_retx: int = DEFAULT_MAX_RETX,
                 bucket_us: int = DEFAULT_BUCKET_US,
                 log_gates: bool = False, log_decisions: bool = False,
                 record_packets: bool = False):
        validate_flows(flows)
        self.clock = clock or SlotClock()
        self.timing = timing or TimingConfig()
        self.link = link or LinkModel()
        self.duration_us = duration_us
        self.n_slots = duration_us // self.clock.us_per_slot
        self.bucket_us = bucket_us
        self.tx_error_probability = self.link.tx_error_probability
        self.max_retx = max_retx

        master = random.Random(seed)
        flow_seeds = {spec.flow_id: master.randrange(2**63) for spec in flows}
        self.error_rng = random.Random(master.randrange(2**63))

        self.sched = build_scheduler(scheduler_name, flows, self.clock,
                                     self.timing, self.link,
                                     thresholds=thresholds, window=window,
                                     log_gates=log_gates,
                                     log_decisions=log_decisions)
        self.packet_log: list[tuple] | None = [] if record_packets else None
        self.ul: dict[str, _UlFlow] = {}
        self.dl: dict[str, _DlFlow] = {}
        self.metrics: dict[str, FlowMetrics] = {}
        for spec in flows:
            self.metrics[spec.flow_id] = FlowMetrics(spec.direction)
            if spec.direction is Direction.UL:
                self.ul[spec.flow_id] = _UlFlow(spec, flow_seeds[spec.flow_id])
            else:
                f = _DlFlow(spec, flow_seeds[spec.flow_id])
                self.dl[spec.flow_id] = f
                self.sched.attach_dl_queue(spec.flow_id, f.queue)

        self.pipeline: dict[int, list[Grant]] = {}
        self.sr_inbox: dict[int, list[tuple[str, int]]] = {}
        self.bsr_inbox: list[tuple[str, int, int, int]] = []
        self.buckets: dict[tuple[int, Direction], list[int]] = {}
        self.guard_violations = 0
        self.deadline_violations = 0
        self.overflow_violations = 0
        self.replaced_slots = 0
        self._prev_tail: tuple[str, int] | None = None  # (kind of last data, trailing non-data)

    # -- bookkeeping -------------------------------------------------------
    def _bucket(self, arrival_us: int, direction: Direction) -> list[int]:
        key = (arrival_us // self.bucket_us, direction)
        cell = self.buckets.get(key)
        if cell is None:
            cell = self.buckets[key] = [0, 0]
        return cell

    def _record_drop(self, flow_id: str, direction: Direction,
                     pkt: QueuedPacket) -> None:
        fm = self.metrics[flow_id]
        fm.dropped_pkts += 1
        fm.dropped_bytes += pkt.size_bytes
        self._bucket(pkt.arrival_us, direction)[1] += 1
        if self.packet_log is not None:
            self.packet_log.append((flow_id, direction.value, pkt.arrival_us,
                                    pkt.size_bytes, "dropped", -1))

    def _record_delivery(self, flow_id: str, pkt: QueuedPacket,
                         slot: int) -> None:
        fm = self.metrics[flow_id]
        fm.delivered_pkts += 1
        fm.delivered_bytes += pkt.size_bytes
        done = self.clock.end_us(slot)
        fm.latencies_us.append(done - pkt.arrival_us)
        if self.packet_log is not None:
            self.packet_log.append((flow_id, fm.direction.value, pkt.arrival_us,
                                    pkt.size_bytes, "delivered", done))

    # -- per-slot phases ---------------------------------------------------
    def _deliver_arrivals(self, t: int) -> None:
        # Bulk path: arrival bookkeeping is spelled out inline because this
        # runs once per packet and the call chain would double its cost.
        now = t * self.clock.us_per_slot
        sr_period = self.timing.sr_period_slots
        bucket_us = self.bucket_us
        buckets = self.buckets
        for f in self.ul.values():
            due = f.arrivals.pop_due(now)
            if due:
                queues = f.queues
                wire = f.spec.wire_bytes
                fm = self.metrics[f.spec.flow_id]
                # Only the packet landing in an empty queue can trigger a
                # request; later ones in the same slot see a non-empty queue.
                was_empty = queues.total_bytes == 0
                for when in due:
                    queues.push("newtx", QueuedPacket(when, wire))
                    fm.arrived_pkts += 1
                    fm.arrived_bytes += wire
                    key = (when // bucket_us, Direction.UL)
                    cell = buckets.get(key)
                    if cell is None:
                        cell = buckets[key] = [0, 0]
                    cell[0] += 1
                if was_empty and f.outstanding_grants == 0 and not f.sr_pending:
                    self._raise_sr(f, t)
            # A UE that still holds data but sees no grant activity repeats
            # its request, so a stale buffer estimate cannot silence it.
            if (not f.sr_pending and f.outstanding_grants == 0
                    and t - f.last_sr_slot >= sr_period
                    and f.queues.total_bytes > 0):
                self._raise_sr(f, t)

        for f in self.dl.values():
            due = f.arrivals.pop_due(now)
            if due:
                queue = f.queue
                wire = f.spec.wire_bytes
                fm = self.metrics[f.spec.flow_id]
                for when in due:
                    queue.push("newtx", QueuedPacket(when, wire))
                    fm.arrived_pkts += 1
                    fm.arrived_bytes += wire
                    key = (when // bucket_us, Direction.DL)
                    cell = buckets.get(key)
                    if cell is None:
                        cell = buckets[key] = [0, 0]
                    cell[0] += 1

    def _raise_sr(self, f: _UlFlow, t: int) -> None:
        f.sr_pending = True
        f.last_sr_slot = t
        due = t + self.timing.sr_delay_slots
        self.sr_inbox.setdefault(due, []).append((f.spec.flow_id, t))

    def _dispatch_events(self, t: int) -> None:
        for flow_id, raised in self.sr_inbox.pop(t, ()):
            self.sched.on_sr(flow_id, raised)
        reports, self.bsr_inbox = self.bsr_inbox, []
        for flow_id, sent_slot, pre, residual in reports:
            self.sched.on_bsr(flow_id, sent_slot, pre, residual, t)

    def _check_layout(self, layout: SlotLayout, dl_syms: int, ul_syms: int) -> None:
        runs = layout.runs()
        total = sum(n for n, _ in runs)
        if total > self.clock.usable_symbols or layout.dl_symbols != dl_syms \
                or layout.ul_symbols != ul_syms:
            self.overflow_violations += 1
        # guard spacing between DL data and UL data within the slot
        gap = 0
        last_dl_seen = False
        lead = 0
        first_data = None
        for n, kind in runs:
            if n == 0:
                continue
            if kind in ("dl", "ul"):
                if first_data is None:
                    first_data = kind
                    lead_before_data = lead
                if kind == "ul" and last_dl_seen and gap < self.timing.guard_symbols:
                    self.guard_violations += 1
                if kind == "dl":
                    last_dl_seen = True
                    gap = 0
                else:
                    last_dl_seen = False
            else:
                gap += n
                lead += n
        # cross-boundary spacing: trailing non-data + slot-edge overhead +
        # leading non-data must cover the guard span when DL data is followed
        # by UL data in the next slot
        edge = self.clock.symbols_per_slot - self.clock.usable_symbols
        if first_data == "ul" and self._prev_tail is not None:
            prev_kind, prev_trail = self._prev_tail
            if prev_kind == "dl" and prev_trail + edge + lead_before_data < \
                    self.timing.guard_symbols:
                self.guard_violations += 1
        last_data = None
        trail = 0
        for n, kind in runs:
            if n == 0:
                continue
            if kind in ("dl", "ul"):
                last_data = kind
                trail = 0
            else:
                trail += n
        trail += self.clock.usable_symbols - total
        if last_data is not None:
            self._prev_tail = (last_data, trail)
        elif self._prev_tail is not None:
            self._prev_tail = (self._prev_tail[0],
                               self._prev_tail[1] + self.clock.usable_symbols)

    def _deadline_ok(self, g: Grant) -> bool:
        lead = g.slot - g.issued_slot
        if g.direction is Direction.UL:
            return lead >= self.timing.k2
        return lead >= self.timing.k0

    def _tb_outcome(self) -> bool:
        """Draw success (True) or decode failure for one transport block."""
        if self.tx_error_probability <= 0.0:
            return True
        return self.error_rng.random() >= self.tx_error_probability

    def _execute_ul(self, t: int, grants: list[Grant]) -> None:
        for g in grants:
            f = self.ul[g.flow_id]
            f.outstanding_grants -= 1
            if g.kind == "bsr":
                total = f.queues.total_bytes
                self.bsr_inbox.append((g.flow_id, t, total, total))
                f.sr_pending = False
                continue
            pre = f.queues.total_bytes
            drained = f.queues.drain(g.data_bytes)
            taken_newtx = sum(take for qname, _, take in drained
                              if qname == "newtx")
            if self._tb_outcome():
                for qname, pkt, take in drained:
                    if pkt.sent_bytes == pkt.size_bytes:
                        self._record_delivery(g.flow_id, pkt, t)
                self.sched.on_served(g.flow_id, t, g.data_bytes, taken_newtx)
            else:
                took = sum(take for _, _, take in drained)
                self._restore_failed(f.queues, drained, g.flow_id, Direction.UL)
                self.sched.on_served(g.flow_id, t, g.data_bytes, taken_newtx)
                self.sched.on_nack(g.flow_id, took)
            f.sr_pending = False
            residual = f.queues.total_bytes
            self.bsr_inbox.append((g.flow_id, t, pre, residual))

    def _execute_dl(self, t: int, grants: list[Grant]) -> None:
        for g in grants:
            f = self.dl[g.flow_id]
            drained = f.queue.drain(g.data_bytes)
            taken_newtx = sum(take for qname, _, take in drained
                              if qname == "newtx")
            if self._tb_outcome():
                for qname, pkt, take in drained:
                    if pkt.sent_bytes == pkt.size_bytes:
                        self._record_delivery(g.flow_id, pkt, t)
                self.sched.on_served(g.flow_id, t, g.data_bytes, taken_newtx)
            else:
                took = sum(take for _, _, take in drained)
                self._restore_failed(f.queue, drained, g.flow_id, Direction.DL)
                self.sched.on_served(g.flow_id, t, g.data_bytes, taken_newtx)
                self.sched.on_nack(g.flow_id, took)

    def _restore_failed(self, queues: UlQueueSet, drained, flow_id: str,
                        direction: Direction) -> None:
        """Failed decode: roll drained bytes back into the retx queue.

        A packet that `drain` popped (it finished inside this block) is
        re-queued; a partially taken packet is still sitting at its queue
        head, so only its progress counter is rewound. Packets past the
        retry budget are dropped.
        """
        for qname, pkt, take in reversed(drained):
            popped = pkt.sent_bytes >= pkt.size_bytes
            pkt.attempts += 1
            if popped:
                pkt.sent_bytes -= take
                if pkt.attempts > self.max_retx:
                    self._record_drop(flow_id, direction, pkt)
                else:
                    queues.push_front("retx", pkt)
            else:
                queues.rewind(qname, pkt, take)
                if pkt.attempts > self.max_retx:
                    self._record_drop(flow_id, direction, queues.pop_front(qname))

    def _discard_expired(self, t: int) -> None:
        # Bulk path: under overload nearly every packet leaves through here,
        # so drop bookkeeping is inlined rather than routed via _record_drop.
        horizon = self.clock.end_us(t)
        bucket_us = self.bucket_us
        buckets = self.buckets
        plog = self.packet_log
        for f in self.ul.values():
            queues = f.queues
            if queues.retx or queues.newtx:
                cutoff = horizon - f.spec.qos.pdb_us
                fm = None
                for qname, q in (("retx", queues.retx), ("newtx", queues.newtx)):
                    while q and q[0].arrival_us < cutoff:
                        pkt = queues.pop_front(qname)
                        if fm is None:
                            fm = self.metrics[f.spec.flow_id]
                        fm.dropped_pkts += 1
                        fm.dropped_bytes += pkt.size_bytes
                        key = (pkt.arrival_us // bucket_us, Direction.UL)
                        cell = buckets.get(key)
                        if cell is None:
                            cell = buckets[key] = [0, 0]
                        cell[1] += 1
                        if plog is not None:
                            plog.append((f.spec.flow_id, "ul", pkt.arrival_us,
                                         pkt.size_bytes, "dropped", -1))
        for f in self.dl.values():
            queue = f.queue
            if queue.retx or queue.newtx:
                cutoff = horizon - f.spec.qos.pdb_us
                fm = None
                for qname, q in (("retx", queue.retx), ("newtx", queue.newtx)):
                    while q and q[0].arrival_us < cutoff:
                        pkt = queue.pop_front(qname)
                        if fm is None:
                            fm = self.metrics[f.spec.flow_id]
                        fm.dropped_pkts += 1
                        fm.dropped_bytes += pkt.size_bytes
                        key = (pkt.arrival_us // bucket_us, Direction.DL)
                        cell = buckets.get(key)
                        if cell is None:
                            cell = buckets[key] = [0, 0]
                        cell[1] += 1
                        if plog is not None:
                            plog.append((f.spec.flow_id, "dl", pkt.arrival_us,
                                         pkt.size_bytes, "dropped", -1))

    # -- main loop ---------------------------------------------------------
    def run(self) -> SimResult:
        for t in range(self.n_slots):
            self._deliver_arrivals(t)
            self._dispatch_events(t)
            ul_grants, dl_grants, layout = self.sched.schedule(t)
            for g in ul_grants:
                if not self._deadline_ok(g):
                    self.deadline_violations += 1
                self.pipeline.setdefault(g.slot, []).append(g)
                self.ul[g.flow_id].outstanding_grants += 1
            for g in dl_grants:
                if not self._deadline_ok(g):
                    self.deadline_violations += 1
            due_ul = self.pipeline.pop(t, [])
            self._check_layout(layout, sum(g.symbols for g in dl_grants),
                               sum(g.symbols for g in due_ul))
            if layout.replaced:
                self.replaced_slots += 1
            self._execute_dl(t, dl_grants)
            self._execute_ul(t, due_ul)
            self._discard_expired(t)
        return self._finish()

    def _finish(self) -> SimResult:
        errors = []
        for flow_id, fm in self.metrics.items():
            if flow_id in self.ul:
                queues = self.ul[flow_id].queues
            else:
                queues = self.dl[flow_id].queue
            left = 0
            for qn in ("status", "retx", "newtx"):
                for pkt in queues.queue(qn):
                    left += 1
                    if self.packet_log is not None:
                        self.packet_log.append(
                            (flow_id, fm.direction.value, pkt.arrival_us,
                             pkt.size_bytes, "queued", -1))
            if fm.arrived_pkts != fm.delivered_pkts + fm.dropped_pkts + left:
                errors.append(
                    f"{flow_id}: {fm.arrived_pkts} arrived != "
                    f"{fm.delivered_pkts} delivered + {fm.dropped_pkts} dropped "
                    f"+ {left} queued")
        return SimResult(
            n_slots=self.n_slots,
            duration_us=self.duration_us,
            flows=self.metrics,
            buckets=self.buckets,
            guard_violations=self.guard_violations,
            deadline_violations=self.deadline_violations,
            overflow_violations=self.overflow_violations,
            conservation_errors=errors,
            replaced_slots=self.replaced_slots,
            scheduler=self.sched,
            packet_log=self.packet_log,
        )


def run_simulation(flows: list[FlowSpec], scheduler_name: str, seed: int,
                   duration_us: int, **kwargs) -> SimResult:
    return Simulation(flows, scheduler_name, seed, duration_us, **kwargs).run()
