"""Joint UL/DL scheduler for flexible-slot TDD.

Each slot is committed twice: the joint phase runs at the UL DCI deadline
(k2 slots ahead) and fixes the slot's strategy plus all UL grants; the DL
part stays a pending plan that is re-evaluated against actual buffers at the
DL deadline (k0 = 0, i.e. the slot itself). Strategies:

  ul_only  - whole slot to UL; pays head guards if the previous slot ends DL
  dl_only  - whole slot to DL; never pays guards
  mixed    - DL segment first, guard symbols, then the UL segment

Allocation inside a strategy hands out symbols one flow at a time to the
highest weight, which sidesteps the share-flooring failure of proportional
division when flows outnumber symbols.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .core import Direction, FlowSpec, Grant, LinkModel, SlotClock, TimingConfig
from .estimation import (
    GateThresholds,
    IRREGULAR,
    PredictionGate,
    classify_bsr,
    evaluate_gate,
    predict_dl_buffer,
    step_count,
)
from .measurement import DEFAULT_WINDOW_SLOTS, BurstStats, BurstTracker, FlowBufferHistory

STRATEGY_UL_ONLY = "ul_only"
STRATEGY_DL_ONLY = "dl_only"
STRATEGY_MIXED = "mixed"

RATE_EPSILON = 1.0

# The proportional-fair ratio fed into the weight is clamped to this band.
# The upper bound lets a flow that has fallen behind outweigh many freshly
# served peers, which is what rotates service onto whoever waited longest;
# the lower bound keeps every backlogged flow schedulable.
RATIO_MIN = 1.0 / 64.0
RATIO_MAX = 64.0

# Distinct 5QI priority levels form strict tiers separated by this factor.
# It exceeds any realistic sum of same-tier weights (hundreds of flows at
# RATIO_MAX), so no amount of low-priority backlog can outbid a single
# higher-priority flow; the proportional-fair ratio arbitrates within a tier
# and the 5QI priority decides between tiers.
CLASS_GAP = 1.0e7


def priority(qos_priority, rate, average_rate):
    """Scheduling weight: the proportional-fair ratio damped by the 5QI priority.

    Division is duck-typed so exact (Fraction) inputs produce exact weights.
    """
    return (rate / average_rate) / qos_priority


def update_average_rate(window_served_bytes: int, window_slots: int,
                        epsilon: float = RATE_EPSILON) -> float:
    """Past average rate: window mean of served bytes/slot, floored at epsilon."""
    return max(window_served_bytes / window_slots, epsilon)


@dataclass(eq=False, slots=True)
class Candidate:
    idx: int                    # stable flow index, drives the round-robin tie-break
    flow_id: str
    ue_id: str
    direction: Direction
    weight: float
    buffer_bytes: int
    needs_symbols: int
    is_bsr: bool = False


@dataclass(slots=True)
class Alloc:
    flow_id: str
    ue_id: str
    direction: Direction
    symbols: int
    data_bytes: int
    weight: float
    is_bsr: bool = False


@dataclass(slots=True)
class StrategyPlan:
    strategy: str
    head_guards: int = 0
    mid_guards: int = 0
    dl_allocs: list[Alloc] = field(default_factory=list)
    ul_allocs: list[Alloc] = field(default_factory=list)
    reward: float = 0.0
    dl_reserved: int = 0    # symbols fixed for DL at the joint phase

    @property
    def dl_symbols(self) -> int:
        return sum(a.symbols for a in self.dl_allocs)

    @property
    def ul_symbols(self) -> int:
        return sum(a.symbols for a in self.ul_allocs)


def allocate_one_by_one(
    candidates: list[Candidate],
    budget_symbols: int,
    link: LinkModel,
    rr_pointer: int,
    rr_modulus: int,
) -> tuple[list[Alloc], float, int, int]:
    """Grant symbols to the highest-weight candidate until budget or demand runs out.

    Ties break toward candidates that fit fully in the remaining budget, then
    fewer symbols needed, then round-robin order from the pointer. Each
    candidate is granted at most once. A data grant contributes its weight
    scaled by the fraction of the flow's demand it actually covers, so a
    token partial grant cannot claim a flow's full weight; report grants ride
    along for free. Returns (allocs, reward, symbols_used, new_pointer).
    """
    remaining = budget_symbols
    # Sort order note: "fits in the remaining budget" never has to be part of
    # the key.  At equal (weight, kind), every candidate that fits needs
    # strictly fewer symbols than every candidate that does not, so ascending
    # `needs` already ranks fitting candidates first for any remaining budget.
    # idx is unique per candidate, so the plain tuple sort never has to
    # compare the trailing Candidate objects
    live = [(-c.weight, c.is_bsr, c.needs_symbols, c.idx, c)
            for c in candidates if c.needs_symbols > 0]
    live.sort()
    n_live = len(live)
    allocs: list[Alloc] = []
    reward = 0.0
    ptr = rr_pointer
    mod = max(rr_modulus, 1)
    base = 0
    while remaining > 0 and base < n_live:
        entry = live[base]
        neg_w = entry[0]
        is_bsr = entry[1]
        needs = entry[2]
        j = base + 1
        if j < n_live and live[j][0] == neg_w and live[j][1] == is_bsr \
                and live[j][2] == needs:
            # round-robin order from the pointer breaks exact ties; the
            # winner is swapped to the front of its group, which leaves the
            # sort order of everything after `base` intact
            pick = base
            best_d = (entry[3] - ptr) % mod
            while j < n_live and live[j][0] == neg_w \
                    and live[j][1] == is_bsr and live[j][2] == needs:
                d = (live[j][3] - ptr) % mod
                if d < best_d:
                    best_d, pick = d, j
                j += 1
            if pick != base:
                live[base], live[pick] = live[pick], live[base]
                entry = live[base]
        best = entry[4]
        if best.weight <= 0.0:
            break
        give = min(best.needs_symbols, remaining)
        if best.is_bsr:
            if give < best.needs_symbols:
                break  # control messages are not segmented
            data = 0
        else:
            data = min(best.buffer_bytes, link.symbol_capacity_bytes(best.ue_id, give))
        allocs.append(Alloc(best.flow_id, best.ue_id, best.direction, give, data,
                            best.weight, best.is_bsr))
        if not best.is_bsr and best.buffer_bytes > 0:
            reward += best.weight * (data / best.buffer_bytes)
        remaining -= give
        ptr = (best.idx + 1) % mod
        base += 1
    return allocs, reward, budget_symbols - remaining, ptr


def select_strategy(
    ul_candidates: list[Candidate],
    dl_candidates: list[Candidate],
    usable_symbols: int,
    guard_symbols: int,
    head_guard_need: int,
    link: LinkModel,
    rr_pointer: int,
    rr_modulus: int,
    tie_prefer_ul: bool = False,
) -> tuple[StrategyPlan, int]:
    """Build the three strategy plans and keep the highest reward.

    head_guard_need is any guard debt a leading UL segment would owe to the
    previous slot. A mixed plan whose allocations end up single-direction is
    discarded: the matching pure strategy covers the same flows with a budget
    at least guard_symbols larger, so it never rewards less. Exact reward ties
    rotate the slot direction via tie_prefer_ul, which keeps both directions
    served when every flow is equally backlogged.
    """
    dl_alloc, dl_reward, _, dl_ptr = allocate_one_by_one(
        dl_candidates, usable_symbols, link, rr_pointer, rr_modulus)
    plan_dl = StrategyPlan(STRATEGY_DL_ONLY, dl_allocs=dl_alloc, reward=dl_reward)

    ul_budget = max(usable_symbols - head_guard_need, 0)
    ul_alloc, ul_reward, _, ul_ptr = allocate_one_by_one(
        ul_candidates, ul_budget, link, rr_pointer, rr_modulus)
    plan_ul = StrategyPlan(
        STRATEGY_UL_ONLY,
        head_guards=head_guard_need if ul_alloc else 0,
        ul_allocs=ul_alloc,
        reward=ul_reward,
    )

    mixed_budget = max(usable_symbols - guard_symbols, 0)
    merged = dl_candidates + ul_candidates
    mixed_alloc, mixed_reward, _, mixed_ptr = allocate_one_by_one(
        merged, mixed_budget, link, rr_pointer, rr_modulus)
    plan_mixed = StrategyPlan(
        STRATEGY_MIXED,
        mid_guards=guard_symbols,
        dl_allocs=[a for a in mixed_alloc if a.direction is Direction.DL],
        ul_allocs=[a for a in mixed_alloc if a.direction is Direction.UL],
        reward=mixed_reward,
    )

    if tie_prefer_ul:
        pref = {STRATEGY_UL_ONLY: 2, STRATEGY_MIXED: 1, STRATEGY_DL_ONLY: 0}
    else:
        pref = {STRATEGY_DL_ONLY: 2, STRATEGY_MIXED: 1, STRATEGY_UL_ONLY: 0}
    ranked = [(plan_dl, dl_ptr), (plan_ul, ul_ptr)]
    if plan_mixed.dl_allocs and plan_mixed.ul_allocs:
        ranked.append((plan_mixed, mixed_ptr))
    plan, ptr = max(ranked, key=lambda item: (item[0].reward, pref[item[0].strategy]))
    return plan, ptr


@dataclass(slots=True)
class SlotLayout:
    """Final symbol occupancy of one executed slot, head to tail."""

    slot: int
    strategy: str
    head_guards: int = 0
    dl_symbols: int = 0
    dl_idle: int = 0
    mid_guards: int = 0
    ul_symbols: int = 0
    replaced: bool = False

    def runs(self) -> list[tuple[int, str]]:
        return [(self.head_guards, "guard"), (self.dl_symbols, "dl"),
                (self.dl_idle, "idle"), (self.mid_guards, "guard"),
                (self.ul_symbols, "ul")]


class GnbFlowState:
    """Everything the cell knows (or estimates) about one flow."""

    __slots__ = ("idx", "spec", "hist", "tracker", "stats", "gate",
                 "thresholds", "window", "served", "served_sum", "served_slot",
                 "est_bytes", "pending_grant_bytes", "need_bsr", "sr_slot",
                 "gate_ticks", "gate_disabled_ticks", "gate_log", "_stats_key")

    def __init__(self, idx: int, spec: FlowSpec, window: int, clock: SlotClock,
                 thresholds: GateThresholds):
        self.idx = idx
        self.spec = spec
        self.hist = FlowBufferHistory(window)
        self.tracker = BurstTracker(window)
        self.stats = BurstStats()
        self.gate = PredictionGate(False, "too_few_bursts")
        self._stats_key: tuple[int, int, int, int, int] | None = None
        self.thresholds = thresholds
        self.window = window
        # served-bytes ring for the past average rate
        self.served = [0] * window
        self.served_sum = 0
        self.served_slot = -1
        # UL estimate bookkeeping
        self.est_bytes = 0
        self.pending_grant_bytes = 0
        self.need_bsr: str | None = None    # regular | irregular while a report is owed
        self.sr_slot = -1
        # diagnostics
        self.gate_ticks = 0
        self.gate_disabled_ticks = 0
        self.gate_log: list[tuple[int, bool, float, float, int]] | None = None

    # -- served-rate window ------------------------------------------------
    def advance_served(self, slot: int) -> None:
        while self.served_slot < slot:
            self.served_slot += 1
            i = self.served_slot % self.window
            self.served_sum -= self.served[i]
            self.served[i] = 0

    def add_served(self, slot: int, nbytes: int) -> None:
        self.served[slot % self.window] += nbytes
        self.served_sum += nbytes

    def average_rate(self) -> float:
        return update_average_rate(self.served_sum, self.window)

    # -- burst statistics --------------------------------------------------
    def note_bursts(self, bursts: list[tuple[int, int]], now_slot: int) -> None:
        for slot, size in bursts:
            self.tracker.add(slot, size)
        if bursts:
            self.refresh_stats(now_slot)

    def refresh_stats(self, now_slot: int) -> None:
        tr = self.tracker
        tr.evict_before(now_slot - self.window + 1)
        key = (len(tr.bursts), tr.size_sum, tr.size_sq, tr.gap_sum, tr.gap_sq)
        if key == self._stats_key and tr.bursts:
            # Every derived quantity (means, CVs, gate verdict) is a function
            # of these five integers alone; when the window slides without
            # changing them only the anchor slot moves.
            self.stats.last_burst_slot = tr.bursts[-1][0]
            return
        self._stats_key = key
        self.stats = tr.stats()
        gate = evaluate_gate(self.stats, self.thresholds)
        if self.gate_log is not None and gate.enabled != self.gate.enabled:
            self.gate_log.append((now_slot, gate.enabled, gate.cv_interval,
                                  gate.cv_size, gate.sample_count))
        self.gate = gate

    def tick_gate_counters(self) -> None:
        self.gate_ticks += 1
        if not self.gate.enabled:
            self.gate_disabled_ticks += 1


class FlexScheduler:
    """Joint scheduler: measurement, estimation, strategy selection, DL re-check."""

    name = "flex"

    def __init__(self, flows: list[FlowSpec], clock: SlotClock, timing: TimingConfig,
                 link: LinkModel, thresholds: GateThresholds | None = None,
                 window: int | None = None, log_gates: bool = False,
                 log_decisions: bool = False):
        self.clock = clock
        self.timing = timing
        self.link = link
        self.thresholds = thresholds or GateThresholds()
        self.window = window or DEFAULT_WINDOW_SLOTS
        self.views: dict[str, GnbFlowState] = {}
        for i, spec in enumerate(flows):
            v = GnbFlowState(i, spec, self.window, clock, self.thresholds)
            if log_gates:
                v.gate_log = []
            self.views[spec.flow_id] = v
        self.n_flows = len(flows)
        # rank 0 = most urgent priority present in this cell
        levels = sorted({spec.qos.priority for spec in flows})
        self.tier = {p: rank for rank, p in enumerate(levels)}
        self._tier_divisor = {p: CLASS_GAP ** rank
                              for p, rank in self.tier.items()}
        # cached per-UE capacities and direction splits; none of these change
        # after construction
        self._slot_bytes = {
            spec.ue_id: link.symbol_capacity_bytes(spec.ue_id, clock.usable_symbols)
            for spec in flows}
        self._bps = {spec.ue_id: link.bytes_per_symbol(spec.ue_id)
                     for spec in flows}
        self._ul_views = [v for v in self.views.values()
                          if v.spec.direction is Direction.UL]
        self._dl_views = [v for v in self.views.values()
                          if v.spec.direction is Direction.DL]
        self.rr = 0
        self.last_data_dir = Direction.UL
        self.pending: dict[int, StrategyPlan] = {}
        self.dl_queues = {}                  # flow_id -> engine DL queue view
        self.decision_log: list[tuple[int, str, float, bool]] | None = (
            [] if log_decisions else None)

    def attach_dl_queue(self, flow_id: str, queue) -> None:
        self.dl_queues[flow_id] = queue

    # -- event intake ------------------------------------------------------
    def on_sr(self, flow_id: str, raised_slot: int) -> None:
        v = self.views[flow_id]
        gap = raised_slot - v.stats.last_burst_slot if v.stats.last_burst_slot >= 0 else -1
        kind = classify_bsr(v.stats, v.gate, gap) if gap >= 0 else IRREGULAR
        v.need_bsr = kind
        v.sr_slot = raised_slot
        # The request carries no size, but it proves data is waiting - and a
        # repeated request proves the backlog outlived the last estimate. Add
        # one typical burst (one symbol's worth before any statistics exist)
        # per request so an unserved flow's claim keeps growing until a real
        # report resynchronizes it.
        if v.stats.sample_count > 0 and v.stats.size_mean > 0:
            v.est_bytes += max(1, round(v.stats.size_mean))
        else:
            v.est_bytes += self.link.bytes_per_symbol(v.spec.ue_id)

    def on_bsr(self, flow_id: str, sent_slot: int, reported_pre_drain: int,
               residual: int, now_slot: int) -> None:
        v = self.views[flow_id]
        v.note_bursts(v.hist.backlog_bsr(sent_slot, reported_pre_drain), now_slot)
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
        else:
            v.hist.set_allocated(slot, drained)
        v.add_served(slot, drained)

    # -- per-slot work -----------------------------------------------------
    def schedule(self, t: int) -> tuple[list[Grant], list[Grant], SlotLayout]:
        self._measure(t)
        ul_grants = self._joint(t)
        dl_grants, layout = self._finalize(t)
        return ul_grants, dl_grants, layout

    def _measure(self, t: int) -> None:
        dl_queues = self.dl_queues
        for v in self._dl_views:
            v.advance_served(t)
            q_obs = dl_queues[v.spec.flow_id].newtx_bytes
            ingress = v.hist.record_slot(t, q_obs)
            if ingress > 0:
                v.tracker.add(t, ingress)
                v.refresh_stats(t)
            v.gate_ticks += 1
            if not v.gate.enabled:
                v.gate_disabled_ticks += 1
        for v in self._ul_views:
            v.advance_served(t)
            v.hist.record_slot(t, None)
            if v.gate.enabled:
                steps = step_count(v.stats.last_burst_slot, t - 1, t,
                                   v.stats.interval_mean)
                if steps:
                    v.est_bytes += round(v.stats.size_mean) * steps
            v.gate_ticks += 1
            if not v.gate.enabled:
                v.gate_disabled_ticks += 1

    def _full_slot_bytes(self, ue_id: str) -> int:
        return self._slot_bytes[ue_id]

    def _weight(self, v: GnbFlowState, buffer_bytes: int) -> float:
        # Inlined priority()/average_rate() with identical arithmetic; this
        # runs a few times per flow per slot.
        cap = self._slot_bytes[v.spec.ue_id]
        r = buffer_bytes if buffer_bytes < cap else cap
        if r <= 0:
            return 0.0
        avg = v.served_sum / v.window
        if avg < RATE_EPSILON:
            avg = RATE_EPSILON
        ratio = r / avg
        if ratio < RATIO_MIN:
            ratio = RATIO_MIN
        elif ratio > RATIO_MAX:
            ratio = RATIO_MAX
        p = v.spec.qos.priority
        return ratio / p / self._tier_divisor[p]

    def _planned_dl_drains(self, from_slot: int, to_slot: int) -> dict[str, dict[int, int]]:
        """Per-flow slot->bytes map of already-committed DL allocations."""
        drains: dict[str, dict[int, int]] = {}
        for slot in range(from_slot, to_slot + 1):
            plan = self.pending.get(slot)
            if not plan:
                continue
            for a in plan.dl_allocs:
                per_flow = drains.setdefault(a.flow_id, {})
                per_flow[slot] = per_flow.get(slot, 0) + a.data_bytes
        return drains

    def _dl_candidates(self, t: int, target: int) -> list[Candidate]:
        cands = []
        drain_map = self._planned_dl_drains(t, target - 1)
        dl_queues = self.dl_queues
        slot_bytes = self._slot_bytes
        bps = self._bps
        for v in self._dl_views:
            spec = v.spec
            flow_id = spec.flow_id
            queue = dl_queues[flow_id]
            drains = drain_map.get(flow_id)
            if drains is None:
                # mirrors the no-drain fast paths of predict_dl_buffer
                q = queue.newtx_bytes
                if v.gate.enabled:
                    st = v.stats
                    q += round(st.size_mean) * step_count(
                        st.last_burst_slot, t, target, st.interval_mean)
            else:
                q = predict_dl_buffer(flow_id, queue.newtx_bytes, t, target,
                                      v.stats, v.gate, drains).q_bytes
            total = q + queue.retx_bytes
            if total <= 0:
                continue
            cap = slot_bytes[spec.ue_id]
            r = total if total < cap else cap
            cands.append(Candidate(v.idx, flow_id, spec.ue_id, Direction.DL,
                                   self._weight(v, total), r,
                                   -(-r // bps[spec.ue_id])))
        return cands

    def _ul_candidates(self, t: int, target: int) -> list[Candidate]:
        cands = []
        slot_bytes = self._slot_bytes
        bps = self._bps
        for v in self._ul_views:
            pending = v.pending_grant_bytes
            est = v.est_bytes - pending
            if est < 0:
                est = 0
            if v.gate.enabled:
                est += round(v.stats.size_mean) * step_count(
                    v.stats.last_burst_slot, t, target, v.stats.interval_mean)
            if est > 0:
                spec = v.spec
                cap = slot_bytes[spec.ue_id]
                r = est if est < cap else cap
                cands.append(Candidate(v.idx, spec.flow_id, spec.ue_id,
                                       Direction.UL, self._weight(v, est), r,
                                       -(-r // bps[spec.ue_id])))
            if v.need_bsr is not None and est <= 0 and v.pending_grant_bytes <= 0:
                # Standalone report grant, only as a last resort: any data
                # grant already carries a report for free, so this fires just
                # when the cell has no demand estimate left to justify data
                # and nothing in flight that would refresh it. Weigh it like
                # one typical burst so it sorts among its own tier; it never
                # adds reward itself.
                if v.stats.sample_count > 0 and v.stats.size_mean > 0:
                    est = max(1, round(v.stats.size_mean))
                else:
                    est = self.link.bytes_per_symbol(v.spec.ue_id)
                cands.append(Candidate(v.idx, v.spec.flow_id, v.spec.ue_id,
                                       Direction.UL, self._weight(v, est), 0,
                                       self.link.bsr_symbols, is_bsr=True))
        return cands

    def _joint(self, t: int) -> list[Grant]:
        target = t + self.timing.k2
        # Cross-slot DL->UL turnaround is absorbed by the slot-edge control
        # symbols (symbols_per_slot - usable_symbols >= guard span), so a slot
        # that opens with UL data owes no extra head guards. Explicit guard
        # symbols are only spent inside mixed slots.
        plan, self.rr = select_strategy(
            self._ul_candidates(t, target),
            self._dl_candidates(t, target),
            self.clock.usable_symbols,
            self.timing.guard_symbols,
            0,
            self.link,
            self.rr,
            self.n_flows,
            tie_prefer_ul=self.last_data_dir is Direction.DL,
        )
        if plan.ul_allocs:
            self.last_data_dir = Direction.UL
        elif plan.dl_allocs:
            self.last_data_dir = Direction.DL
        plan.dl_reserved = plan.dl_symbols
        self.pending[target] = plan
        grants = []
        for a in plan.ul_allocs:
            if a.is_bsr:
                grants.append(Grant(target, t, Direction.UL, a.flow_id, a.ue_id,
                                    a.symbols, 0, kind="bsr"))
                continue
            # The grant is the transport block, sized by the symbols won; the
            # UE fills it with whatever it actually holds. Sizing it down to
            # the buffer estimate would turn every estimation lag into wasted
            # symbol capacity.
            tb = self.link.symbol_capacity_bytes(a.ue_id, a.symbols)
            grants.append(Grant(target, t, Direction.UL, a.flow_id, a.ue_id,
                                a.symbols, tb))
            self.views[a.flow_id].pending_grant_bytes += tb
        return grants

    def _actual_dl_candidates(self) -> list[Candidate]:
        cands = []
        for v in self.views.values():
            if v.spec.direction is not Direction.DL:
                continue
            queue = self.dl_queues[v.spec.flow_id]
            total = queue.newtx_bytes + queue.retx_bytes
            if total <= 0:
                continue
            r = min(total, self._full_slot_bytes(v.spec.ue_id))
            cands.append(Candidate(v.idx, v.spec.flow_id, v.spec.ue_id, Direction.DL,
                                   self._weight(v, total), r,
                                   self.link.symbols_needed(v.spec.ue_id, r)))
        return cands

    def _shrink_to_actual(self, allocs: list[Alloc]) -> tuple[list[Alloc], float]:
        remaining = {}
        demand = {}
        weights = {}
        for a in allocs:
            if a.flow_id not in remaining:
                q = self.dl_queues[a.flow_id]
                total = q.newtx_bytes + q.retx_bytes
                remaining[a.flow_id] = total
                demand[a.flow_id] = min(total, self._full_slot_bytes(a.ue_id))
                weights[a.flow_id] = self._weight(self.views[a.flow_id], total)
        out = []
        reward = 0.0
        for a in allocs:
            give = min(a.data_bytes, remaining[a.flow_id])
            if give <= 0:
                continue
            remaining[a.flow_id] -= give
            syms = self.link.symbols_needed(a.ue_id, give)
            w = weights[a.flow_id]
            out.append(Alloc(a.flow_id, a.ue_id, Direction.DL, syms, give, w))
            reward += w * (give / demand[a.flow_id])
        return out, reward

    def _finalize(self, t: int) -> tuple[list[Grant], SlotLayout]:
        plan = self.pending.pop(t, None)
        if plan is None:
            return [], SlotLayout(t, STRATEGY_DL_ONLY)
        budget = plan.dl_reserved
        replaced = False
        final_dl = []
        if budget > 0:
            shrunk, shrunk_reward = self._shrink_to_actual(plan.dl_allocs)
            realloc, re_reward, _, _ = allocate_one_by_one(
                self._actual_dl_candidates(), budget, self.link, self.rr, self.n_flows)
            if re_reward > shrunk_reward + 1e-12:
                final_dl, replaced = realloc, True
            else:
                final_dl = shrunk
            if replaced:
                self._recompute_pending(t)
        used = sum(a.symbols for a in final_dl)
        layout = SlotLayout(
            t, plan.strategy,
            head_guards=plan.head_guards,
            dl_symbols=used,
            dl_idle=budget - used,
            mid_guards=plan.mid_guards,
            ul_symbols=plan.ul_symbols,
            replaced=replaced,
        )
        if self.decision_log is not None:
            self.decision_log.append((t, plan.strategy, plan.reward, replaced))
        grants = [Grant(t, t, Direction.DL, a.flow_id, a.ue_id, a.symbols,
                        a.data_bytes) for a in final_dl]
        return grants, layout

    def _recompute_pending(self, now_slot: int) -> None:
        """After a DL reassignment, refresh not-yet-fixed pending DL allocations."""
        for slot in sorted(self.pending):
            if slot <= now_slot or slot > now_slot + self.timing.k2:
                continue
            plan = self.pending[slot]
            budget = plan.dl_reserved
            if budget <= 0:
                continue
            cands = self._dl_candidates(now_slot, slot)
            allocs, _, _, _ = allocate_one_by_one(
                cands, budget, self.link, self.rr, self.n_flows)
            plan.dl_allocs = allocs
