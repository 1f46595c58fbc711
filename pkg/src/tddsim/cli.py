"""Command-line runner: resolve a declarative config, execute a grid of
(scheduler, UE count, seed) cells, and write CSV artifacts plus a manifest.

Outputs in --out:
  summary.csv         one row per cell (or per direction/flow at finer
                      granularity) with PLR, latency stats and throughput
  plr_timeseries.csv  bucketed loss rate per direction
  manifest.json       fully resolved config and versions (no timestamps,
                      so identical configs re-produce identical bytes)
  gate_log.csv / decision_log.csv / flow_trace.csv   on request
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import platform
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import yaml

from . import __version__
from .core import (
    ConfigError,
    Direction,
    FlowSpec,
    LinkModel,
    TimingConfig,
    qos_for,
)
from .engine import DEFAULT_BUCKET_US, Simulation
from .estimation import GateThresholds
from .measurement import DEFAULT_WINDOW_SLOTS
from .traffic import SCENARIO_DEFAULTS, build_scenario

SCHEDULER_NAMES = ("flex", "pf", "mr", "qos")
GRANULARITIES = ("cell", "direction", "flow")

SUMMARY_COLUMNS = ("scheduler", "n_ues", "seed", "direction", "flow", "plr",
                   "latency_mean_us", "latency_median_us", "latency_p99_us",
                   "throughput_bytes_per_s")
TIMESERIES_COLUMNS = ("scheduler", "n_ues", "seed", "bucket_start_ms",
                      "direction", "arrived", "dropped", "plr")
GATE_COLUMNS = ("scheduler", "n_ues", "seed", "flow", "slot", "enabled",
                "cv_interval", "cv_size", "bursts")
DECISION_COLUMNS = ("scheduler", "n_ues", "seed", "slot", "strategy",
                    "reward", "replaced")
TRACE_COLUMNS = ("scheduler", "n_ues", "seed", "flow", "direction",
                 "arrival_us", "size_bytes", "outcome", "completed_us")

_FLOW_REQUIRED = ("flow_id", "ue_id", "direction", "five_qi",
                  "payload_bytes", "interval_us")
_FLOW_OPTIONAL = {"jitter_frac": 0.0, "start_us": 0, "pdb_us": 10_000}


@dataclass(frozen=True)
class RunConfig:
    scenario: int | None
    schedulers: tuple[str, ...]
    n_ues: tuple[int, ...]
    seeds: tuple[int, ...]
    duration_us: int
    bucket_us: int
    granularity: str
    window_slots: int | None
    bytes_per_symbol: int
    per_ue: tuple[tuple[str, int], ...]
    tx_error_probability: float
    bsr_symbols: int
    timing: TimingConfig
    thresholds: GateThresholds | None
    flows: tuple[FlowSpec, ...] | None
    out_dir: Path
    gate_log: bool
    decision_log: bool
    flow_trace: bool
    workers: int


# -- config resolution -----------------------------------------------------
def _as_int_list(value, what: str) -> list[int]:
    if isinstance(value, bool):
        raise ConfigError(f"{what}: expected integers, got {value!r}")
    if isinstance(value, int):
        return [value]
    if isinstance(value, (list, tuple)):
        out = []
        for v in value:
            if not isinstance(v, int) or isinstance(v, bool):
                raise ConfigError(f"{what}: expected integers, got {v!r}")
            out.append(v)
        return out
    if isinstance(value, str):
        text = value.strip()
        if ":" in text:
            lo, _, hi = text.partition(":")
            try:
                a, b = int(lo), int(hi)
            except ValueError:
                raise ConfigError(f"{what}: bad range {value!r}") from None
            if b < a:
                raise ConfigError(f"{what}: empty range {value!r}")
            return list(range(a, b + 1))
        try:
            return [int(part) for part in text.split(",")]
        except ValueError:
            raise ConfigError(f"{what}: bad integer list {value!r}") from None
    raise ConfigError(f"{what}: expected int, list or range, got {value!r}")


def _as_name_list(value, what: str, allowed: tuple[str, ...]) -> list[str]:
    if isinstance(value, str):
        names = [part.strip() for part in value.split(",") if part.strip()]
    elif isinstance(value, (list, tuple)):
        names = [str(v) for v in value]
    else:
        raise ConfigError(f"{what}: expected name or list, got {value!r}")
    if not names:
        raise ConfigError(f"{what}: empty")
    for name in names:
        if name not in allowed:
            raise ConfigError(f"{what}: unknown value {name!r}; "
                              f"allowed: {', '.join(allowed)}")
    return names


def _check_keys(section: dict, allowed: set[str], where: str) -> None:
    for key in section:
        if key not in allowed:
            raise ConfigError(f"{where}: unknown key {key!r}")


def _parse_flows(raw) -> tuple[FlowSpec, ...]:
    if not isinstance(raw, list) or not raw:
        raise ConfigError("flows: expected a non-empty list of flow entries")
    flows = []
    for i, entry in enumerate(raw):
        where = f"flows[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(f"{where}: expected a mapping")
        _check_keys(entry, set(_FLOW_REQUIRED) | set(_FLOW_OPTIONAL), where)
        for key in _FLOW_REQUIRED:
            if key not in entry:
                raise ConfigError(f"{where}: missing required field {key!r}")
        direction = str(entry["direction"]).lower()
        if direction not in ("ul", "dl"):
            raise ConfigError(f"{where}: direction must be 'ul' or 'dl', "
                              f"got {entry['direction']!r}")
        values = dict(_FLOW_OPTIONAL)
        values.update(entry)
        try:
            flows.append(FlowSpec(
                flow_id=str(entry["flow_id"]),
                ue_id=str(entry["ue_id"]),
                direction=Direction(direction),
                qos=qos_for(int(entry["five_qi"]), pdb_us=int(values["pdb_us"])),
                payload_bytes=int(entry["payload_bytes"]),
                interval_us=int(entry["interval_us"]),
                jitter_frac=float(values["jitter_frac"]),
                start_us=int(values["start_us"]),
            ))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}: {exc}") from None
    return tuple(flows)


_TOP_KEYS = {"scenario", "schedulers", "n_ues", "seeds", "duration_us",
             "bucket_us", "granularity", "window_slots", "link", "timing",
             "thresholds", "flows", "out_dir", "gate_log", "decision_log",
             "flow_trace", "workers"}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    raw: dict = {}
    if args.config is not None:
        try:
            loaded = yaml.safe_load(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"config is not valid YAML: {exc}") from None
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError("config root must be a mapping")
        raw = loaded
    _check_keys(raw, _TOP_KEYS, "config")

    def pick(cli_value, key, default):
        if cli_value is not None:
            return cli_value
        return raw.get(key, default)

    flows = None
    if "flows" in raw:
        flows = _parse_flows(raw["flows"])
    scenario = pick(args.scenario, "scenario", None if flows else 1)
    if scenario is not None:
        if flows is not None:
            raise ConfigError("give either 'scenario' or explicit 'flows', not both")
        if scenario not in SCENARIO_DEFAULTS:
            raise ConfigError(f"scenario must be one of {sorted(SCENARIO_DEFAULTS)}, "
                              f"got {scenario}")

    schedulers = tuple(_as_name_list(pick(args.schedulers, "schedulers", "flex"),
                                     "schedulers", SCHEDULER_NAMES))
    seeds = tuple(_as_int_list(pick(args.seeds, "seeds", 0), "seeds"))
    if flows is not None:
        n_ues = (len({f.ue_id for f in flows}),)
    elif scenario == 3:
        n_ues = (len({f.ue_id for f in build_scenario(3, 0)}),)
    else:
        n_ues = tuple(_as_int_list(pick(args.n_ues, "n_ues", 1), "n_ues"))

    preset = SCENARIO_DEFAULTS.get(scenario) if scenario else None
    duration_us = pick(args.duration_us, "duration_us",
                       preset.duration_us if preset else 1_000_000)
    if not isinstance(duration_us, int) or duration_us <= 0:
        raise ConfigError(f"duration_us must be a positive int, got {duration_us!r}")
    bucket_us = pick(args.bucket_us, "bucket_us", DEFAULT_BUCKET_US)
    if not isinstance(bucket_us, int) or bucket_us <= 0 or bucket_us % 1000:
        raise ConfigError(f"bucket_us must be a positive multiple of 1000, "
                          f"got {bucket_us!r}")
    granularity = pick(args.granularity, "granularity", "cell")
    if granularity not in GRANULARITIES:
        raise ConfigError(f"granularity must be one of {GRANULARITIES}, "
                          f"got {granularity!r}")
    window_slots = pick(args.window_slots, "window_slots", None)
    if window_slots is not None and (not isinstance(window_slots, int)
                                     or window_slots <= 0):
        raise ConfigError(f"window_slots must be a positive int, got {window_slots!r}")

    link_raw = raw.get("link", {})
    if not isinstance(link_raw, dict):
        raise ConfigError("link: expected a mapping")
    _check_keys(link_raw, {"bytes_per_symbol", "per_ue", "tx_error_probability",
                           "bsr_symbols"}, "link")
    bytes_per_symbol = pick(args.bytes_per_symbol, None,
                            link_raw.get("bytes_per_symbol",
                                         preset.bytes_per_symbol if preset else 96))
    per_ue_raw = link_raw.get("per_ue", {})
    if not isinstance(per_ue_raw, dict):
        raise ConfigError("link.per_ue: expected a mapping of ue_id -> bytes")
    per_ue = tuple(sorted((str(k), int(v)) for k, v in per_ue_raw.items()))
    tx_error = pick(args.tx_error_probability, None,
                    link_raw.get("tx_error_probability", 0.0))
    bsr_symbols = link_raw.get("bsr_symbols", 1)

    timing_raw = raw.get("timing", {})
    if not isinstance(timing_raw, dict):
        raise ConfigError("timing: expected a mapping")
    _check_keys(timing_raw, {"k0", "k2", "guard_symbols", "sr_delay_slots",
                             "sr_period_slots"}, "timing")
    timing = TimingConfig(**{**asdict(TimingConfig()), **timing_raw})

    thr_raw = raw.get("thresholds", {})
    if not isinstance(thr_raw, dict):
        raise ConfigError("thresholds: expected a mapping")
    _check_keys(thr_raw, {"cv_interval_max", "cv_size_max", "min_samples"},
                "thresholds")
    thr = dict(thr_raw)
    if args.cv_interval_max is not None:
        thr["cv_interval_max"] = args.cv_interval_max
    if args.cv_size_max is not None:
        thr["cv_size_max"] = args.cv_size_max
    thresholds = GateThresholds(**{**asdict(GateThresholds()), **thr}) if thr else None

    return RunConfig(
        scenario=scenario,
        schedulers=schedulers,
        n_ues=n_ues,
        seeds=seeds,
        duration_us=duration_us,
        bucket_us=bucket_us,
        granularity=granularity,
        window_slots=window_slots,
        bytes_per_symbol=int(bytes_per_symbol),
        per_ue=per_ue,
        tx_error_probability=float(tx_error),
        bsr_symbols=int(bsr_symbols),
        timing=timing,
        thresholds=thresholds,
        flows=flows,
        out_dir=Path(pick(args.out, "out_dir", "runs")),
        gate_log=bool(pick(args.gate_log or None, "gate_log", False)),
        decision_log=bool(pick(args.decision_log or None, "decision_log", False)),
        flow_trace=bool(pick(args.flow_trace or None, "flow_trace", False)),
        workers=int(pick(args.workers, "workers", 1)),
    )


def cell_flows(cfg: RunConfig, n: int) -> list[FlowSpec]:
    if cfg.flows is not None:
        return list(cfg.flows)
    return build_scenario(cfg.scenario, n)


# -- per-cell execution ----------------------------------------------------
def _percentile(sorted_xs: list, frac: float):
    idx = max(0, math.ceil(frac * len(sorted_xs)) - 1)
    return sorted_xs[idx]


def _stats_row(prefix: list, direction: str, flow: str, arrived: int,
               delivered: int, delivered_bytes: int, latencies: list[int],
               duration_us: int) -> list[str]:
    plr = 1.0 - delivered / arrived if arrived else 0.0
    if latencies:
        xs = sorted(latencies)
        mean = f"{statistics.fmean(xs):.3f}"
        median = f"{statistics.median(xs):.3f}"
        p99 = f"{_percentile(xs, 0.99):.3f}"
    else:
        mean = median = p99 = ""
    throughput = delivered_bytes / (duration_us / 1_000_000)
    return prefix + [direction, flow, f"{plr:.6f}", mean, median, p99,
                     f"{throughput:.3f}"]


def run_cell(cfg: RunConfig, scheduler: str, n: int, seed: int) -> dict:
    flows = cell_flows(cfg, n)
    link = LinkModel(
        default_bytes_per_symbol=cfg.bytes_per_symbol,
        per_ue=dict(cfg.per_ue),
        tx_error_probability=cfg.tx_error_probability,
        bsr_symbols=cfg.bsr_symbols,
    )
    sim = Simulation(
        flows, scheduler, seed, cfg.duration_us,
        timing=cfg.timing, link=link, thresholds=cfg.thresholds,
        window=cfg.window_slots, bucket_us=cfg.bucket_us,
        log_gates=cfg.gate_log and scheduler == "flex",
        log_decisions=cfg.decision_log and scheduler == "flex",
        record_packets=cfg.flow_trace,
    )
    res = sim.run()
    prefix = [scheduler, str(n), str(seed)]

    summary = []
    if cfg.granularity == "cell":
        arrived = delivered = dbytes = 0
        lats: list[int] = []
        for fm in res.flows.values():
            arrived += fm.arrived_pkts
            delivered += fm.delivered_pkts
            dbytes += fm.delivered_bytes
            lats.extend(fm.latencies_us)
        summary.append(_stats_row(prefix, "all", "all", arrived, delivered,
                                  dbytes, lats, cfg.duration_us))
    elif cfg.granularity == "direction":
        for direction in (Direction.UL, Direction.DL):
            arrived = delivered = dbytes = 0
            lats = []
            present = False
            for fm in res.flows.values():
                if fm.direction is direction:
                    present = True
                    arrived += fm.arrived_pkts
                    delivered += fm.delivered_pkts
                    dbytes += fm.delivered_bytes
                    lats.extend(fm.latencies_us)
            if present:
                summary.append(_stats_row(prefix, direction.value, "all",
                                          arrived, delivered, dbytes, lats,
                                          cfg.duration_us))
    else:
        for flow_id, fm in res.flows.items():
            summary.append(_stats_row(prefix, fm.direction.value, flow_id,
                                      fm.arrived_pkts, fm.delivered_pkts,
                                      fm.delivered_bytes, fm.latencies_us,
                                      cfg.duration_us))

    timeseries = []
    for (bucket, direction), (arrived, dropped) in sorted(
            res.buckets.items(), key=lambda kv: (kv[0][0], kv[0][1].value)):
        plr = dropped / arrived if arrived else 0.0
        timeseries.append(prefix + [str(bucket * cfg.bucket_us // 1000),
                                    direction.value, str(arrived),
                                    str(dropped), f"{plr:.6f}"])

    gates = []
    if cfg.gate_log and scheduler == "flex":
        for flow_id, view in res.scheduler.views.items():
            for slot, enabled, cvi, cvs, count in (view.gate_log or ()):
                gates.append(prefix + [flow_id, str(slot), str(int(enabled)),
                                       f"{cvi:.6f}", f"{cvs:.6f}", str(count)])

    decisions = []
    if cfg.decision_log and scheduler == "flex":
        for slot, strategy, reward, replaced in res.scheduler.decision_log or ():
            decisions.append(prefix + [str(slot), strategy, f"{reward:.6f}",
                                       str(int(replaced))])

    trace = []
    if cfg.flow_trace:
        for flow_id, dirval, arrival, size, outcome, done in res.packet_log:
            trace.append(prefix + [flow_id, dirval, str(arrival), str(size),
                                   outcome, str(done)])

    return {
        "summary": summary,
        "timeseries": timeseries,
        "gates": gates,
        "decisions": decisions,
        "trace": trace,
        "integrity": {
            "guard_violations": res.guard_violations,
            "deadline_violations": res.deadline_violations,
            "overflow_violations": res.overflow_violations,
            "conservation_errors": list(res.conservation_errors),
        },
    }


def _run_cell_task(task) -> dict:
    cfg, scheduler, n, seed = task
    return run_cell(cfg, scheduler, n, seed)


# -- output assembly -------------------------------------------------------
def _write_csv(path: Path, header: tuple[str, ...], rows: list[list[str]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _manifest(cfg: RunConfig, outputs: list[str], integrity: dict) -> dict:
    return {
        "tool": "tddsim",
        "version": __version__,
        "python": platform.python_version(),
        "outputs": outputs,
        "integrity": integrity,
        "config": {
            "scenario": cfg.scenario,
            "schedulers": list(cfg.schedulers),
            "n_ues": list(cfg.n_ues),
            "seeds": list(cfg.seeds),
            "duration_us": cfg.duration_us,
            "bucket_us": cfg.bucket_us,
            "granularity": cfg.granularity,
            "window_slots": cfg.window_slots or DEFAULT_WINDOW_SLOTS,
            "link": {
                "bytes_per_symbol": cfg.bytes_per_symbol,
                "per_ue": dict(cfg.per_ue),
                "tx_error_probability": cfg.tx_error_probability,
                "bsr_symbols": cfg.bsr_symbols,
            },
            "timing": asdict(cfg.timing),
            "thresholds": asdict(cfg.thresholds or GateThresholds()),
            "flows": [
                {
                    "flow_id": f.flow_id, "ue_id": f.ue_id,
                    "direction": f.direction.value, "five_qi": f.qos.five_qi,
                    "payload_bytes": f.payload_bytes,
                    "interval_us": f.interval_us, "jitter_frac": f.jitter_frac,
                    "start_us": f.start_us, "pdb_us": f.qos.pdb_us,
                }
                for f in cfg.flows
            ] if cfg.flows is not None else None,
            "gate_log": cfg.gate_log,
            "decision_log": cfg.decision_log,
            "flow_trace": cfg.flow_trace,
            "workers": cfg.workers,
        },
    }


def run_experiment(cfg: RunConfig) -> Path:
    # validate every cell's flow list up front so errors beat any slot work
    for n in cfg.n_ues:
        cell_flows(cfg, n)
    tasks = [(cfg, s, n, seed)
             for s in cfg.schedulers for n in cfg.n_ues for seed in cfg.seeds]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            payloads = list(pool.map(_run_cell_task, tasks, chunksize=1))
    else:
        payloads = [_run_cell_task(task) for task in tasks]

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    integrity = {"guard_violations": 0, "deadline_violations": 0,
                 "overflow_violations": 0, "conservation_errors": []}
    tables: dict[str, list] = {"summary": [], "timeseries": [], "gates": [],
                               "decisions": [], "trace": []}
    for payload in payloads:
        for key in tables:
            tables[key].extend(payload[key])
        cell = payload["integrity"]
        integrity["guard_violations"] += cell["guard_violations"]
        integrity["deadline_violations"] += cell["deadline_violations"]
        integrity["overflow_violations"] += cell["overflow_violations"]
        integrity["conservation_errors"].extend(cell["conservation_errors"])

    outputs = ["summary.csv", "plr_timeseries.csv", "manifest.json"]
    _write_csv(cfg.out_dir / "summary.csv", SUMMARY_COLUMNS, tables["summary"])
    _write_csv(cfg.out_dir / "plr_timeseries.csv", TIMESERIES_COLUMNS,
               tables["timeseries"])
    if cfg.gate_log:
        _write_csv(cfg.out_dir / "gate_log.csv", GATE_COLUMNS, tables["gates"])
        outputs.append("gate_log.csv")
    if cfg.decision_log:
        _write_csv(cfg.out_dir / "decision_log.csv", DECISION_COLUMNS,
                   tables["decisions"])
        outputs.append("decision_log.csv")
    if cfg.flow_trace:
        _write_csv(cfg.out_dir / "flow_trace.csv", TRACE_COLUMNS,
                   tables["trace"])
        outputs.append("flow_trace.csv")

    manifest = _manifest(cfg, sorted(outputs), integrity)
    with open(cfg.out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return cfg.out_dir


# -- entry point -----------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="tddsim",
        description="Slot-level dynamic-TDD cell simulator: run scheduler/UE/"
                    "seed grids and export CSV metrics.")
    p.add_argument("--config", help="YAML config file; flags override it")
    p.add_argument("--scenario", type=int, choices=sorted(SCENARIO_DEFAULTS),
                   help="built-in traffic mix")
    p.add_argument("--schedulers", "--scheduler", dest="schedulers",
                   help="comma-separated subset of: " + ",".join(SCHEDULER_NAMES))
    p.add_argument("--n-ues", dest="n_ues",
                   help="UE count: single value, comma list, or A:B range")
    p.add_argument("--seeds", help="comma-separated integer seeds")
    p.add_argument("--duration-us", dest="duration_us", type=int)
    p.add_argument("--out", help="output directory (default: runs)")
    p.add_argument("--granularity", choices=GRANULARITIES,
                   help="summary row granularity (default: cell)")
    p.add_argument("--bucket-us", dest="bucket_us", type=int,
                   help="time-series bucket width (default: 100000)")
    p.add_argument("--window-slots", dest="window_slots", type=int,
                   help="averaging window for rates and burst stats")
    p.add_argument("--bytes-per-symbol", dest="bytes_per_symbol", type=int)
    p.add_argument("--tx-error-probability", dest="tx_error_probability",
                   type=float)
    p.add_argument("--cv-interval-max", dest="cv_interval_max", type=float,
                   help="burst-interval CV bound for the prediction gate")
    p.add_argument("--cv-size-max", dest="cv_size_max", type=float,
                   help="burst-size CV bound for the prediction gate")
    p.add_argument("--gate-log", action="store_true", default=False)
    p.add_argument("--decision-log", action="store_true", default=False)
    p.add_argument("--flow-trace", action="store_true", default=False)
    p.add_argument("--workers", type=int, help="parallel cells (default: 1)")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        out_dir = run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    cells = len(cfg.schedulers) * len(cfg.n_ues) * len(cfg.seeds)
    print(f"wrote {out_dir}/summary.csv ({cells} cells)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
