"""Reference schedulers: proportional fair, maximum rate, and QoS-weighted.

These model the conventional arrangement the joint scheduler is measured
against: UL and DL schedulers run independently, each owning whole slots.
Slots alternate by parity (UL odd, DL even), except that the UL scheduler -
which commits k2 slots early and does not coordinate with DL - claims any
slot outright once the reported UL backlog reaches a full slot's bytes.

Within a direction, each flow gets floor(budget * metric / total_metric)
symbols, capped by what it actually needs. The floor is deliberate: once
flows outnumber symbols, every share drops below one symbol and rounds to
zero, so the cell schedules nothing at all in that direction.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .core import Direction, FlowSpec, Grant, LinkModel, SlotClock, TimingConfig
from .estimation import IRREGULAR
from .flexsched import GnbFlowState, SlotLayout, update_average_rate
from .measurement import DEFAULT_WINDOW_SLOTS

BASELINE_KINDS = ("pf", "mr", "qos")


@dataclass
class _SlotPlan:
    is_ul: bool
    claimed: bool = False
    ul_grants: list[Grant] = field(default_factory=list)
    ul_symbols: int = 0


def proportional_shares(metrics: list[float], budget_symbols: int) -> list[int]:
    """floor(budget * m_i / sum(m)) for each metric; zero-sum yields zeros."""
    total = sum(metrics)
    if total <= 0.0:
        return [0] * len(metrics)
    return [int(budget_symbols * m / total) for m in metrics]


class BaselineScheduler:
    """One of pf / mr / qos, selected by `kind`."""

    def __init__(self, kind: str, flows: list[FlowSpec], clock: SlotClock,
                 timing: TimingConfig, link: LinkModel,
                 window: int | None = None):
        if kind not in BASELINE_KINDS:
            raise ValueError(f"unknown baseline kind: {kind!r}")
        self.kind = kind
        self.name = kind
        self.clock = clock
        self.timing = timing
        self.link = link
        self.window = window or DEFAULT_WINDOW_SLOTS
        self.views: dict[str, GnbFlowState] = {}
        for i, spec in enumerate(flows):
            self.views[spec.flow_id] = GnbFlowState(i, spec, self.window, clock,
                                                    thresholds=None)
        self._ul_views = [v for v in self.views.values()
                          if v.spec.direction is Direction.UL]
        self._dl_views = [v for v in self.views.values()
                          if v.spec.direction is Direction.DL]
        self._slot_bytes = {
            spec.ue_id: link.symbol_capacity_bytes(spec.ue_id,
                                                   clock.usable_symbols)
            for spec in flows
        }
        self.dl_queues = {}
        self.pending: dict[int, _SlotPlan] = {}
        self.claim_threshold = clock.usable_symbols * link.default_bytes_per_symbol

    def attach_dl_queue(self, flow_id: str, queue) -> None:
        self.dl_queues[flow_id] = queue

    # -- event intake (same engine-facing surface as the joint scheduler) --
    def on_sr(self, flow_id: str, raised_slot: int) -> None:
        v = self.views[flow_id]
        v.need_bsr = IRREGULAR
        v.sr_slot = raised_slot

    def on_bsr(self, flow_id: str, sent_slot: int, reported_pre_drain: int,
               residual: int, now_slot: int) -> None:
        v = self.views[flow_id]
        v.hist.backlog_bsr(sent_slot, reported_pre_drain)
        v.est_bytes = residual
        v.need_bsr = None

    def on_nack(self, flow_id: str, nbytes: int) -> None:
        v = self.views[flow_id]
        if v.spec.direction is Direction.UL:
            v.est_bytes += nbytes

    def on_served(self, flow_id: str, slot: int, granted: int, drained: int) -> None:
        v = self.views[flow_id]
        if v.spec.direction is Direction.UL:
            v.hist.set_allocated(slot, granted)
            v.est_bytes = max(v.est_bytes - granted, 0)
            v.pending_grant_bytes = max(v.pending_grant_bytes - granted, 0)
        v.add_served(slot, drained)

    # -- scheduling --------------------------------------------------------
    def schedule(self, t: int) -> tuple[list[Grant], list[Grant], SlotLayout]:
        for v in self._ul_views:
            v.advance_served(t)
            v.hist.record_slot(t, None)
        for v in self._dl_views:
            v.advance_served(t)
        ul_grants = self._plan_ul(t)
        dl_grants, layout = self._finish_slot(t)
        return ul_grants, dl_grants, layout

    def _full_slot_bytes(self, ue_id: str) -> int:
        return self._slot_bytes[ue_id]

    def _metric(self, v: GnbFlowState, r: int) -> float:
        if r <= 0:
            return 0.0
        if self.kind == "mr":
            return float(r)
        rate = update_average_rate(v.served_sum, self.window)
        if self.kind == "pf":
            return r / rate
        return (r / rate) / v.spec.qos.priority

    def _plan_ul(self, t: int) -> list[Grant]:
        target = t + self.timing.k2
        views = self._ul_views
        backlog = 0
        for v in views:
            d = v.est_bytes - v.pending_grant_bytes
            if d > 0:
                backlog += d
        claimed = backlog >= self.claim_threshold
        plan = _SlotPlan(is_ul=claimed or target % 2 == 1, claimed=claimed)
        grants: list[Grant] = []
        if plan.is_ul:
            budget = self.clock.usable_symbols
            # control reports jump the queue
            for v in views:
                if v.need_bsr is not None and budget >= self.link.bsr_symbols:
                    grants.append(Grant(target, t, Direction.UL, v.spec.flow_id,
                                        v.spec.ue_id, self.link.bsr_symbols, 0,
                                        kind="bsr"))
                    budget -= self.link.bsr_symbols
            cands = []
            for v in views:
                avail = max(v.est_bytes - v.pending_grant_bytes, 0)
                r = min(avail, self._full_slot_bytes(v.spec.ue_id))
                if r > 0:
                    cands.append((v, r, self._metric(v, r)))
            shares = proportional_shares([m for _, _, m in cands], budget)
            for (v, r, _), share in zip(cands, shares):
                syms = min(share, self.link.symbols_needed(v.spec.ue_id, r))
                if syms <= 0:
                    continue
                nbytes = min(r, self.link.symbol_capacity_bytes(v.spec.ue_id, syms))
                grants.append(Grant(target, t, Direction.UL, v.spec.flow_id,
                                    v.spec.ue_id, syms, nbytes))
                v.pending_grant_bytes += nbytes
            plan.ul_grants = grants
            plan.ul_symbols = sum(g.symbols for g in grants)
        self.pending[target] = plan
        return grants

    def _finish_slot(self, t: int) -> tuple[list[Grant], SlotLayout]:
        plan = self.pending.pop(t, None)
        if plan is None:
            return [], SlotLayout(t, "baseline_dl")
        if plan.is_ul:
            return [], SlotLayout(t, "baseline_ul", ul_symbols=plan.ul_symbols)
        budget = self.clock.usable_symbols
        cands = []
        for v in self._dl_views:
            q = self.dl_queues[v.spec.flow_id]
            r = min(q.newtx_bytes + q.retx_bytes,
                    self._full_slot_bytes(v.spec.ue_id))
            if r > 0:
                cands.append((v, r, self._metric(v, r)))
        grants = []
        used = 0
        shares = proportional_shares([m for _, _, m in cands], budget)
        for (v, r, _), share in zip(cands, shares):
            syms = min(share, self.link.symbols_needed(v.spec.ue_id, r))
            if syms <= 0:
                continue
            nbytes = min(r, self.link.symbol_capacity_bytes(v.spec.ue_id, syms))
            grants.append(Grant(t, t, Direction.DL, v.spec.flow_id,
                                v.spec.ue_id, syms, nbytes))
            used += syms
        layout = SlotLayout(t, "baseline_dl", dl_symbols=used,
                            dl_idle=budget - used)
        return grants, layout
