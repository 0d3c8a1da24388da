"""Command-line shell: simulate, detect, estimate, campaign, analyze.

Outputs are deterministic for fixed inputs and configuration: record order
is fixed, no wall-clock values are embedded, and all timestamps are
stream-relative. Diagnostics go to stderr via logging; data goes to files.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Sequence

from . import campaign as campaign_mod
from . import io as gio
from .detector import DetectionResult, DetectorConfig, detect_events
from .errors import GridInertiaError
from .estimator import (
    DEFAULT_SWEEP_WINDOWS_S,
    EstimatorConfig,
    estimate as run_estimate,
)
from .kernels import SensorStream
from .simulator import run_campaign, simulate

log = logging.getLogger("gridinertia")


# ---------------------------------------------------------------------------
# Configuration file
# ---------------------------------------------------------------------------

def load_run_config(path: str | Path | None) -> tuple[DetectorConfig, EstimatorConfig]:
    """JSON config with optional "detector" and "estimator" sections.

    Unknown keys are rejected so typos cannot silently fall back to defaults.
    """
    if path is None:
        return DetectorConfig(), EstimatorConfig()
    with open(path) as fh:
        obj = json.load(fh)
    det_kwargs = obj.get("detector", {})
    est_kwargs = obj.get("estimator", {})
    det_fields = {f.name for f in dataclasses.fields(DetectorConfig)}
    est_fields = {f.name for f in dataclasses.fields(EstimatorConfig)}
    unknown = (set(det_kwargs) - det_fields) | (set(est_kwargs) - est_fields)
    if unknown:
        raise GridInertiaError(f"unknown config keys: {sorted(unknown)}")
    if "osc_band_hz" in det_kwargs:
        det_kwargs["osc_band_hz"] = tuple(det_kwargs["osc_band_hz"])
    return DetectorConfig(**det_kwargs), EstimatorConfig(**est_kwargs)


def _collect_stream_paths(inputs: list[str]) -> list[Path]:
    paths: list[Path] = []
    for item in inputs:
        p = Path(item)
        if p.is_dir():
            paths.extend(sorted(p.glob("*.csv")))
        else:
            paths.append(p)
    return paths


def _load_streams(paths: list[Path]) -> dict[str, SensorStream]:
    streams = {}
    for p in paths:
        stream = gio.parse_stream_csv(p)
        streams[stream.monitor_id] = stream
    return streams


# ---------------------------------------------------------------------------
# detect
# ---------------------------------------------------------------------------

def _emit_events(result: DetectionResult, out_path: Path) -> int:
    records = [gio.event_to_dict(e) for e in result.confirmed]
    return gio.write_jsonl(out_path, records)


def _log_detect_summary(result: DetectionResult, n_streams: int) -> None:
    reasons = result.rejected_by_reason()
    reason_text = ",".join(f"{k}:{v}" for k, v in sorted(reasons.items())) or "-"
    log.info(
        "detect: streams=%d candidates=%d confirmed=%d rejected=%s skipped_monitors=%d",
        n_streams,
        result.n_candidates,
        len(result.confirmed),
        reason_text,
        len(result.skipped_monitors),
    )


def cmd_detect(args: argparse.Namespace) -> int:
    det_cfg, _ = load_run_config(args.config)
    monitor_map = gio.load_monitor_map(args.monitor_map) if args.monitor_map else None
    paths = _collect_stream_paths(args.streams)
    if not paths:
        log.error("detect: no input streams")
        return 2
    if args.follow:
        return _detect_follow(args, det_cfg, monitor_map, paths)
    streams = _load_streams(paths)
    result = detect_events(streams, det_cfg, monitor_map)
    n = _emit_events(result, Path(args.out))
    _log_detect_summary(result, len(streams))
    log.info("detect: wrote %d event records to %s", n, args.out)
    return 0


class _FollowReader:
    """Incrementally reads complete CSV lines appended to one stream file."""

    def __init__(self, path: Path):
        self.path = path
        self.offset = 0
        self.header: str | None = None
        self.lines: list[str] = []

    def poll(self) -> bool:
        """Read newly appended complete lines; returns True on growth."""
        try:
            with open(self.path) as fh:
                fh.seek(self.offset)
                chunk = fh.read()
        except FileNotFoundError:
            return False
        if not chunk:
            return False
        # keep a trailing partial line for the next poll
        complete, sep, _rest = chunk.rpartition("\n")
        if not sep:
            return False
        self.offset += len(complete) + 1
        new_lines = complete.split("\n")
        if self.header is None and new_lines:
            self.header = new_lines[0]
            new_lines = new_lines[1:]
        self.lines.extend(ln for ln in new_lines if ln.strip())
        return True

    def stream(self) -> SensorStream | None:
        if self.header is None:
            return None
        has_v = self.header.strip().split(",")[2:3] == ["v_pu"]
        t, f, v = [], [], []
        for ln in self.lines:
            parts = ln.split(",")
            t.append(float(parts[0]))
            f.append(float(parts[1]))
            if has_v:
                v.append(float(parts[2]))
        return SensorStream(self.path.stem, t, f, v if has_v else None)


def _truncate(stream: SensorStream, t_max: float) -> SensorStream:
    import numpy as np
    hi = int(np.searchsorted(stream.t, t_max, side="right"))
    v = None if stream.v is None else stream.v[:hi]
    return SensorStream(stream.monitor_id, stream.t[:hi], stream.f[:hi], v)


def _detect_follow(
    args: argparse.Namespace,
    det_cfg: DetectorConfig,
    monitor_map: dict[str, str | None] | None,
    paths: list[Path],
) -> int:
    """Tail appended stream files, emitting events as data completes.

    Events are only emitted once every window they depend on is fully
    covered by received data, so the final event set matches a replay of
    the completed files.
    """
    margin = (
        max(5.0, 0.8 * det_cfg.deviation_window_s)
        + det_cfg.v_settle_s
        + det_cfg.v_span_s
        + det_cfg.fusion_window_s
    )
    readers = {p: _FollowReader(p) for p in paths}
    emitted: set[tuple[float, tuple[str, ...]]] = set()
    out_path = Path(args.out)
    out_fh = open(out_path, "w")
    idle = 0
    last_result: DetectionResult | None = None
    try:
        while idle < args.max_idle_polls:
            grew = False
            for reader in readers.values():
                grew |= reader.poll()
            idle = 0 if grew else idle + 1
            final = idle >= args.max_idle_polls
            streams = {}
            for reader in readers.values():
                s = reader.stream()
                if s is not None and len(s) > 0:
                    streams[s.monitor_id] = s
            if streams:
                if final:
                    bounded = streams
                else:
                    bounded = {
                        m: _truncate(s, s.t[-1] - margin) for m, s in streams.items()
                    }
                    bounded = {m: s for m, s in bounded.items() if len(s) > 0}
                if bounded:
                    result = detect_events(bounded, det_cfg, monitor_map)
                    last_result = result
                    for event in result.confirmed:
                        key = (event.t_event_s, event.monitor_ids)
                        if key not in emitted:
                            emitted.add(key)
                            out_fh.write(json.dumps(gio.event_to_dict(event), separators=(",", ":")))
                            out_fh.write("\n")
                            out_fh.flush()
            if not final:
                time.sleep(args.poll_interval)
    finally:
        out_fh.close()
    if last_result is not None:
        _log_detect_summary(last_result, len(readers))
    log.info("detect --follow: wrote %d event records to %s", len(emitted), out_path)
    return 0


# ---------------------------------------------------------------------------
# estimate
# ---------------------------------------------------------------------------

def cmd_estimate(args: argparse.Namespace) -> int:
    _, est_cfg = load_run_config(args.config)
    registry = gio.load_registry(args.registry)
    streams = _load_streams(_collect_stream_paths(args.streams))
    events = [gio.event_from_dict(obj) for obj in gio.read_jsonl(args.events)]
    records: list[dict[str, Any]] = []
    n_ok = 0
    for event in events:
        if event.plant_id is None:
            records.append({"t_event_s": event.t_event_s, "skip_reason": "no plant attributed"})
            continue
        sig = registry.get(event.plant_id)
        if sig is None:
            records.append(
                {"t_event_s": event.t_event_s,
                 "skip_reason": f"plant {event.plant_id!r} not in registry"}
            )
            continue
        stream = _pick_stream(event.monitor_ids, streams)
        if stream is None:
            records.append(
                {"t_event_s": event.t_event_s, "skip_reason": "no stream for contributing monitors"}
            )
            continue
        try:
            est = run_estimate(event, stream, sig, est_cfg)
        except GridInertiaError as exc:
            records.append({"t_event_s": event.t_event_s, "skip_reason": str(exc)})
            continue
        records.append(gio.estimate_to_dict(est))
        n_ok += 1
    gio.write_jsonl(args.out, records)
    log.info("estimate: %d estimates, %d skipped, wrote %s", n_ok, len(records) - n_ok, args.out)
    return 0


def _pick_stream(
    monitor_ids: Sequence[str], streams: dict[str, SensorStream]
) -> SensorStream | None:
    for m in sorted(monitor_ids):
        if m in streams:
            return streams[m]
    return None


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def cmd_simulate(args: argparse.Namespace) -> int:
    scenario = gio.load_scenario(args.scenario)
    if args.seed is not None:
        if scenario.noise is None:
            log.warning("simulate: --seed given but scenario has no noise block; ignored")
        else:
            scenario = dataclasses.replace(
                scenario, noise=dataclasses.replace(scenario.noise, seed=args.seed)
            )
    trace = simulate(scenario)
    written = gio.export_trace(trace, args.out_dir)
    log.info("simulate: wrote %d monitor traces + truth to %s", len(written) - 1, args.out_dir)
    return 0


# ---------------------------------------------------------------------------
# campaign
# ---------------------------------------------------------------------------

def cmd_campaign(args: argparse.Namespace) -> int:
    base = gio.load_scenario(args.scenario)
    registry = gio.load_registry(args.registry)
    plant_id = base.events[0].plant_id if base.events else None
    if plant_id is None or plant_id not in registry:
        log.error("campaign: base scenario event plant %r not in registry", plant_id)
        return 2
    sig = registry[plant_id]
    _, est_cfg = load_run_config(args.config)

    cases = run_campaign(
        base,
        count_per_direction=args.count,
        master_seed=args.master_seed,
        ramp_rate_range_mw_per_s=(args.ramp_min, args.ramp_max),
    )
    results = campaign_mod.evaluate_cases(cases, sig, est_cfg)
    summary = campaign_mod.summarize(results)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    cases_path = out_dir / "campaign_cases.csv"
    with open(cases_path, "w") as fh:
        fh.write(
            "case_id,direction,ramp_rate_mw_per_s,seed,h_true_mw_s,"
            "pre_rocof_hz_per_s,true_rocof_hz_per_s,h_improved_mw_s,"
            "h_traditional_mw_s,improved_error,traditional_error,failure\n"
        )
        for r in results:
            fh.write(
                f"{r.case_id},{r.direction},{r.ramp_rate_mw_per_s!r},{r.seed},"
                f"{r.h_true_mw_s!r},{r.pre_rocof_hz_per_s!r},{r.true_rocof_hz_per_s!r},"
                f"{'' if r.h_improved_mw_s is None else repr(r.h_improved_mw_s)},"
                f"{'' if r.h_traditional_mw_s is None else repr(r.h_traditional_mw_s)},"
                f"{'' if r.improved_error is None else repr(r.improved_error)},"
                f"{'' if r.traditional_error is None else repr(r.traditional_error)},"
                f"{r.failure or ''}\n"
            )

    summary_path = out_dir / "campaign_summary.json"
    with open(summary_path, "w") as fh:
        json.dump(
            {
                "n_cases": summary.n_cases,
                "mean_abs_error_improved": summary.mean_abs_error_improved,
                "mean_abs_error_traditional": summary.mean_abs_error_traditional,
            },
            fh,
            indent=2,
        )
        fh.write("\n")

    sweep_cases = cases[: args.sweep_cases] if args.sweep_cases else cases
    table = campaign_mod.window_error_table(
        sweep_cases, sig, est_cfg, windows_s=DEFAULT_SWEEP_WINDOWS_S
    )
    sweep_csv = out_dir / "window_sweep.csv"
    with open(sweep_csv, "w") as fh:
        fh.write("window_length_s,mean_abs_error,median_abs_error,max_abs_error,n\n")
        for w in DEFAULT_SWEEP_WINDOWS_S:
            row = table[w]
            fh.write(
                f"{w!r},{row['mean_abs_error']!r},{row['median_abs_error']!r},"
                f"{row['max_abs_error']!r},{row['n']}\n"
            )
    sweep_json = out_dir / "window_sweep.json"
    with open(sweep_json, "w") as fh:
        json.dump({repr(w): table[w] for w in DEFAULT_SWEEP_WINDOWS_S}, fh, indent=2)
        fh.write("\n")

    log.info(
        "campaign: %d cases, improved=%s traditional=%s, outputs in %s",
        summary.n_cases,
        {k: f"{v:.3f}" for k, v in summary.mean_abs_error_improved.items()},
        {k: f"{v:.3f}" for k, v in summary.mean_abs_error_traditional.items()},
        out_dir,
    )
    return 0


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

def _parse_span(text: str) -> tuple[int, int]:
    lo, _, hi = text.partition("-")
    return int(lo), int(hi)


def cmd_analyze(args: argparse.Namespace) -> int:
    from . import analytics

    ledger = gio.load_ledger(args.ledger, display_timezone=args.timezone)
    plant_ids = [args.plant] if args.plant else sorted({r.plant_id for r in ledger.records})
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    span = _parse_span(args.low_inertia_span) if args.low_inertia_span else None

    for plant_id in plant_ids:
        stats = analytics.mw_step_stats(ledger, plant_id, bin_width_mw=args.bin_width)
        monthly = analytics.monthly_mw_profile(ledger, plant_id)
        daily = analytics.daily_event_counts(ledger, plant_id)
        tod = analytics.time_of_day_profile(ledger, plant_id, low_inertia_span=span)

        report = {
            "plant_id": plant_id,
            "mw_step_stats": {
                "n_records": stats.n_records,
                "mean_mw": stats.mean_mw,
                "max_abs_deviation_ratio": stats.max_abs_deviation_ratio,
                "mean_abs_deviation_ratio": stats.mean_abs_deviation_ratio,
            },
            "monthly_mw_profile": [dataclasses.asdict(row) for row in monthly],
            "daily_event_counts": {
                "mean_per_day": daily.mean_per_day,
                "max_per_day": daily.max_per_day,
                "span_days": daily.span_days,
                "total": daily.total,
            },
            "time_of_day": {
                "hour_counts": list(tod.hour_counts),
                "modal_span": list(tod.modal_span),
                "modal_span_count": tod.modal_span_count,
                "overlap": None if tod.overlap is None else dataclasses.asdict(tod.overlap),
            },
        }
        with open(out_dir / f"{plant_id}_report.json", "w") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")

        # plot-ready CSVs: bin edges + counts
        with open(out_dir / f"{plant_id}_mw_hist.csv", "w") as fh:
            fh.write("bin_left_mw,bin_right_mw,count\n")
            edges = stats.histogram.bin_edges_mw
            for i, count in enumerate(stats.histogram.counts):
                fh.write(f"{edges[i]!r},{edges[i + 1]!r},{count}\n")
        with open(out_dir / f"{plant_id}_daily_counts.csv", "w") as fh:
            fh.write("date,count\n")
            for day in sorted(daily.per_day):
                fh.write(f"{day},{daily.per_day[day]}\n")
        with open(out_dir / f"{plant_id}_hourly_counts.csv", "w") as fh:
            fh.write("hour,count\n")
            for hour, count in enumerate(tod.hour_counts):
                fh.write(f"{hour},{count}\n")
        log.info("analyze: wrote reports for plant %s to %s", plant_id, out_dir)
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridinertia",
        description="Pump switching-off detection and grid inertia estimation.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v for info, -vv for debug")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario file and export traces")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the scenario noise seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("detect", help="detect pump switching-off events in stream CSVs")
    p.add_argument("--streams", nargs="+", required=True,
                   help="stream CSV files and/or directories of them")
    p.add_argument("--out", required=True, help="events JSONL output path")
    p.add_argument("--config", default=None, help="JSON run configuration")
    p.add_argument("--monitor-map", default=None, help="monitor->plant proximity CSV")
    p.add_argument("--follow", action="store_true", help="tail growing files instead of replaying")
    p.add_argument("--poll-interval", type=float, default=0.2)
    p.add_argument("--max-idle-polls", type=int, default=10,
                   help="stop following after this many polls without growth")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("estimate", help="turn confirmed events into inertia estimates")
    p.add_argument("--events", required=True, help="events JSONL from detect")
    p.add_argument("--streams", nargs="+", required=True)
    p.add_argument("--registry", required=True, help="plant registry CSV")
    p.add_argument("--out", required=True, help="estimates JSONL output path")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("campaign", help="seeded error-rate campaign + window sweep")
    p.add_argument("--scenario", required=True, help="base scenario JSON (one event)")
    p.add_argument("--registry", required=True)
    p.add_argument("--count", type=int, default=66, help="cases per ramp direction")
    p.add_argument("--master-seed", type=int, default=2024)
    p.add_argument("--ramp-min", type=float, default=3.0, help="min |ramp rate| MW/s")
    p.add_argument("--ramp-max", type=float, default=9.0, help="max |ramp rate| MW/s")
    p.add_argument("--sweep-cases", type=int, default=20,
                   help="cases used for the window sweep table (0 = all)")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_campaign)

    p = sub.add_parser("analyze", help="ledger statistics reports")
    p.add_argument("--ledger", required=True, help="event ledger CSV")
    p.add_argument("--plant", default=None, help="restrict to one plant id")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--timezone", default="UTC", help="display timezone for calendar grouping")
    p.add_argument("--bin-width", type=float, default=5.0, help="MW histogram bin width")
    p.add_argument("--low-inertia-span", default=None,
                   help="daily lowest-inertia local-hour span, e.g. 1-5")
    p.set_defaults(func=cmd_analyze)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)
    try:
        return args.func(args)
    except GridInertiaError as exc:
        log.error("%s", exc)
        return 2
    except OSError as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
