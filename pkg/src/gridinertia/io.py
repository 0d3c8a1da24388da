"""File formats: stream CSV, plant registry, monitor map, ledger, scenario.

All numeric JSON fields carry their unit in the field name (t_event_s,
rocof_hz_per_s, h_mw_s, ...) so downstream consumers cannot silently drift
units. Output records never embed wall-clock time, keeping replays
byte-reproducible.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable

from .analytics import EventLedger, LedgerRecord
from .detector import CandidateEvent, ConfirmedEvent
from .errors import NonMonotonicTime, ParseError
from .estimator import InertiaEstimate, PlantSignature
from .kernels import SensorStream
from . import simulator as sim

STREAM_HEADER = ["t", "f_hz", "v_pu"]


# ---------------------------------------------------------------------------
# Sensor stream CSV
# ---------------------------------------------------------------------------

def parse_stream_csv(path: str | Path, monitor_id: str | None = None) -> SensorStream:
    """Read one monitor's stream from CSV.

    Columns: t (seconds, strictly increasing), f_hz, and optionally v_pu.
    A header line is required. The monitor id defaults to the file stem.

    Raises:
        ParseError: malformed header or row (carries the line number).
        NonMonotonicTime: a timestamp fails to strictly increase.
    """
    path = Path(path)
    monitor_id = monitor_id if monitor_id is not None else path.stem
    t: list[float] = []
    f: list[float] = []
    v: list[float] = []
    has_v: bool | None = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if lineno == 1:
                if [c.strip() for c in row[:2]] != STREAM_HEADER[:2]:
                    raise ParseError(lineno, f"expected header starting 't,f_hz', got {row!r}")
                has_v = len(row) >= 3 and row[2].strip() == "v_pu"
                continue
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            expected = 3 if has_v else 2
            if len(row) != expected:
                raise ParseError(lineno, f"expected {expected} columns, got {len(row)}")
            try:
                ti = float(row[0])
                fi = float(row[1])
                vi = float(row[2]) if has_v else None
            except ValueError as exc:
                raise ParseError(lineno, f"bad number: {exc}") from None
            if not math.isfinite(ti):
                raise ParseError(lineno, f"non-finite timestamp {row[0]!r}")
            if t and ti <= t[-1]:
                raise NonMonotonicTime(lineno)
            t.append(ti)
            f.append(fi)
            if has_v:
                v.append(vi)
    return SensorStream(monitor_id, t, f, v if has_v else None)


def write_stream_csv(path: str | Path, stream: SensorStream) -> None:
    """Write a stream in the same format parse_stream_csv reads."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if stream.has_voltage:
            writer.writerow(STREAM_HEADER)
            for i in range(len(stream)):
                writer.writerow(
                    [repr(float(stream.t[i])), repr(float(stream.f[i])), repr(float(stream.v[i]))]
                )
        else:
            writer.writerow(STREAM_HEADER[:2])
            for i in range(len(stream)):
                writer.writerow([repr(float(stream.t[i])), repr(float(stream.f[i]))])


# ---------------------------------------------------------------------------
# Plant registry and monitor map
# ---------------------------------------------------------------------------

REGISTRY_HEADER = ["plant_id", "region", "unit_capacity_mw", "mw_step_mean_mw", "mw_step_tolerance"]


def load_registry(path: str | Path) -> dict[str, PlantSignature]:
    """Plant registry CSV -> {plant_id: PlantSignature}."""
    registry: dict[str, PlantSignature] = {}
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if lineno == 1:
                if [c.strip() for c in row] != REGISTRY_HEADER:
                    raise ParseError(lineno, f"expected header {REGISTRY_HEADER}, got {row!r}")
                continue
            if not row:
                continue
            if len(row) != len(REGISTRY_HEADER):
                raise ParseError(lineno, f"expected {len(REGISTRY_HEADER)} columns, got {len(row)}")
            try:
                sig = PlantSignature(
                    plant_id=row[0].strip(),
                    region=row[1].strip(),
                    unit_capacity_mw=float(row[2]),
                    mw_step_mean=float(row[3]),
                    mw_step_tolerance=float(row[4]),
                )
            except ValueError as exc:
                raise ParseError(lineno, str(exc)) from None
            registry[sig.plant_id] = sig
    return registry


def write_registry(path: str | Path, plants: Iterable[PlantSignature]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REGISTRY_HEADER)
        for p in plants:
            writer.writerow(
                [p.plant_id, p.region, repr(p.unit_capacity_mw), repr(p.mw_step_mean), repr(p.mw_step_tolerance)]
            )


def load_monitor_map(path: str | Path) -> dict[str, str | None]:
    """monitor_id -> plant_id proximity table; empty plant cell means none."""
    mapping: dict[str, str | None] = {}
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if lineno == 1:
                if [c.strip() for c in row] != ["monitor_id", "plant_id"]:
                    raise ParseError(lineno, f"expected header monitor_id,plant_id, got {row!r}")
                continue
            if not row:
                continue
            if len(row) != 2:
                raise ParseError(lineno, f"expected 2 columns, got {len(row)}")
            plant = row[1].strip()
            mapping[row[0].strip()] = plant if plant else None
    return mapping


def write_monitor_map(path: str | Path, mapping: dict[str, str | None]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["monitor_id", "plant_id"])
        for monitor_id in sorted(mapping):
            writer.writerow([monitor_id, mapping[monitor_id] or ""])


# ---------------------------------------------------------------------------
# Event ledger
# ---------------------------------------------------------------------------

LEDGER_HEADER = ["t_event_utc", "plant_id", "mw_observed", "h_estimate_mw_s"]


def _parse_utc(text: str, lineno: int) -> datetime:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(text)
    except ValueError:
        raise ParseError(lineno, f"bad timestamp {text!r}, expected ISO 8601") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def load_ledger(path: str | Path, display_timezone: str = "UTC") -> EventLedger:
    records: list[LedgerRecord] = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if lineno == 1:
                if [c.strip() for c in row] != LEDGER_HEADER:
                    raise ParseError(lineno, f"expected header {LEDGER_HEADER}, got {row!r}")
                continue
            if not row:
                continue
            if len(row) != len(LEDGER_HEADER):
                raise ParseError(lineno, f"expected {len(LEDGER_HEADER)} columns, got {len(row)}")
            try:
                records.append(
                    LedgerRecord(
                        t_event_utc=_parse_utc(row[0], lineno),
                        plant_id=row[1].strip(),
                        mw_observed=float(row[2]) if row[2].strip() else None,
                        h_estimate_mw_s=float(row[3]) if row[3].strip() else None,
                    )
                )
            except ParseError:
                raise
            except ValueError as exc:
                raise ParseError(lineno, str(exc)) from None
    return EventLedger(records=records, display_timezone=display_timezone)


def write_ledger(path: str | Path, ledger: EventLedger) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LEDGER_HEADER)
        for r in ledger.records:
            writer.writerow(
                [
                    r.t_event_utc.isoformat().replace("+00:00", "Z"),
                    r.plant_id,
                    "" if r.mw_observed is None else repr(r.mw_observed),
                    "" if r.h_estimate_mw_s is None else repr(r.h_estimate_mw_s),
                ]
            )


# ---------------------------------------------------------------------------
# Scenario files (declarative JSON)
# ---------------------------------------------------------------------------

def scenario_to_dict(s: sim.SimScenario) -> dict[str, Any]:
    return {
        "h_true_mw_s": s.h_true_mw_s,
        "duration_s": s.duration_s,
        "f0_hz": s.f0_hz,
        "damping_mw_per_hz": s.damping_mw_per_hz,
        "governor": None
        if s.governor is None
        else {
            "droop_mw_per_hz": s.governor.droop_mw_per_hz,
            "time_constant_s": s.governor.time_constant_s,
        },
        "noise": None
        if s.noise is None
        else {
            "std_mw": s.noise.std_mw,
            "correlation_time_s": s.noise.correlation_time_s,
            "seed": s.noise.seed,
        },
        "events": [
            {"t_s": e.t_s, "delta_p_mw": e.delta_p_mw, "plant_id": e.plant_id}
            for e in s.events
        ],
        "pre_ramp": None
        if s.pre_ramp is None
        else {"rate_mw_per_s": s.pre_ramp.rate_mw_per_s, "start_s": s.pre_ramp.start_s},
        "oscillations": [
            {
                "freq_hz": o.freq_hz,
                "amp_hz": o.amp_hz,
                "start_s": o.start_s,
                "duration_s": o.duration_s,
                "v_amp_pu": o.v_amp_pu,
                "growth_rate": o.growth_rate,
            }
            for o in s.oscillations
        ],
        "monitors": [
            {
                "monitor_id": m.monitor_id,
                "near_plant": m.near_plant,
                "gap": None
                if m.gap is None
                else {"start_s": m.gap.start_s, "length_s": m.gap.length_s},
                "spike_amp_hz": m.spike_amp_hz,
                "v_step_pu": m.v_step_pu,
                "v_noise_pu": m.v_noise_pu,
                "has_voltage": m.has_voltage,
            }
            for m in s.monitors
        ],
        "sample_rate_hz": s.sample_rate_hz,
    }


def scenario_from_dict(obj: dict[str, Any]) -> sim.SimScenario:
    gov = obj.get("governor")
    noise = obj.get("noise")
    ramp = obj.get("pre_ramp")
    return sim.SimScenario(
        h_true_mw_s=float(obj["h_true_mw_s"]),
        duration_s=float(obj["duration_s"]),
        f0_hz=float(obj.get("f0_hz", 60.0)),
        damping_mw_per_hz=float(obj.get("damping_mw_per_hz", 0.0)),
        governor=None
        if gov is None
        else sim.GovernorSpec(
            droop_mw_per_hz=float(gov["droop_mw_per_hz"]),
            time_constant_s=float(gov["time_constant_s"]),
        ),
        noise=None
        if noise is None
        else sim.NoiseSpec(
            std_mw=float(noise["std_mw"]),
            correlation_time_s=float(noise.get("correlation_time_s", 3.0)),
            seed=int(noise.get("seed", 0)),
        ),
        events=tuple(
            sim.EventSpec(float(e["t_s"]), float(e["delta_p_mw"]), str(e["plant_id"]))
            for e in obj.get("events", [])
        ),
        pre_ramp=None
        if ramp is None
        else sim.RampSpec(rate_mw_per_s=float(ramp["rate_mw_per_s"]), start_s=float(ramp["start_s"])),
        oscillations=tuple(
            sim.OscillationSpec(
                freq_hz=float(o["freq_hz"]),
                amp_hz=float(o["amp_hz"]),
                start_s=float(o["start_s"]),
                duration_s=float(o["duration_s"]),
                v_amp_pu=float(o.get("v_amp_pu", 0.0)),
                growth_rate=float(o.get("growth_rate", 0.0)),
            )
            for o in obj.get("oscillations", [])
        ),
        monitors=tuple(
            sim.MonitorSpec(
                monitor_id=str(m["monitor_id"]),
                near_plant=m.get("near_plant"),
                gap=None
                if m.get("gap") is None
                else sim.GapSpec(float(m["gap"]["start_s"]), float(m["gap"]["length_s"])),
                spike_amp_hz=float(m.get("spike_amp_hz", 0.06)),
                v_step_pu=float(m.get("v_step_pu", 0.01)),
                v_noise_pu=float(m.get("v_noise_pu", 0.0)),
                has_voltage=bool(m.get("has_voltage", True)),
            )
            for m in obj.get("monitors", [])
        ),
        sample_rate_hz=float(obj.get("sample_rate_hz", 10.0)),
    )


def load_scenario(path: str | Path) -> sim.SimScenario:
    with open(path) as fh:
        obj = json.load(fh)
    scenario = scenario_from_dict(obj)
    scenario.validate()
    return scenario


def save_scenario(path: str | Path, scenario: sim.SimScenario) -> None:
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(scenario), fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Event / estimate JSON records
# ---------------------------------------------------------------------------

def event_to_dict(event: ConfirmedEvent) -> dict[str, Any]:
    return {
        "t_event_s": event.t_event_s,
        "monitor_ids": list(event.monitor_ids),
        "plant_id": event.plant_id,
        "features": {
            m: {
                "spike_rocof_hz_per_s": c.spike_rocof_hz_per_s,
                "v_step_pu": c.v_step_pu,
                "f_deviation_hz": c.f_deviation_hz,
            }
            for m, c in sorted(event.features.items())
        },
        "attribution_note": event.attribution_note,
    }


def event_from_dict(obj: dict[str, Any]) -> ConfirmedEvent:
    features = {
        m: CandidateEvent(
            t_event_s=float(obj["t_event_s"]),
            monitor_id=m,
            spike_rocof_hz_per_s=float(feat["spike_rocof_hz_per_s"]),
            v_step_pu=float(feat["v_step_pu"]),
            f_deviation_hz=float(feat["f_deviation_hz"]),
        )
        for m, feat in obj.get("features", {}).items()
    }
    return ConfirmedEvent(
        t_event_s=float(obj["t_event_s"]),
        monitor_ids=tuple(obj["monitor_ids"]),
        features=features,
        plant_id=obj.get("plant_id"),
        attribution_note=obj.get("attribution_note"),
    )


def estimate_to_dict(est: InertiaEstimate) -> dict[str, Any]:
    out = {
        "t_event_s": est.t_event_s,
        "plant_id": est.plant_id,
        "delta_p_mw": est.delta_p_mw,
        "pre_rocof_hz_per_s": est.pre_rocof_hz_per_s,
        "post_rocof_hz_per_s": est.post_rocof_hz_per_s,
        "true_rocof_hz_per_s": est.true_rocof_hz_per_s,
        "window_length_s": est.window_length_s,
        "h_mw_s": est.h_mw_s,
        "f0_hz": est.f0_hz,
        "method": est.method,
        "quality": dataclasses.asdict(est.quality),
    }
    if est.h_pu is not None:
        out["h_pu"] = est.h_pu
    return out


def write_jsonl(path: str | Path, records: Iterable[dict[str, Any]]) -> int:
    n = 0
    with open(path, "w") as fh:
        for record in records:
            fh.write(json.dumps(record, separators=(",", ":"), sort_keys=False))
            fh.write("\n")
            n += 1
    return n


def read_jsonl(path: str | Path) -> list[dict[str, Any]]:
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ParseError(lineno, f"bad JSON: {exc}") from None
    return records


# ---------------------------------------------------------------------------
# Trace export
# ---------------------------------------------------------------------------

def export_trace(trace: sim.SimTrace, out_dir: str | Path) -> dict[str, Path]:
    """Write one CSV per monitor plus a truth.json; returns written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    for monitor_id in sorted(trace.monitors):
        path = out_dir / f"{monitor_id}.csv"
        write_stream_csv(path, trace.monitors[monitor_id])
        written[monitor_id] = path
    truth_path = out_dir / "truth.json"
    with open(truth_path, "w") as fh:
        json.dump(
            {
                "h_true_mw_s": trace.truth.h_true_mw_s,
                "f0_hz": trace.truth.f0_hz,
                "events": [
                    {
                        "t_s": e.t_s,
                        "delta_p_mw": e.delta_p_mw,
                        "plant_id": e.plant_id,
                        "pre_rocof_hz_per_s": e.pre_rocof_hz_per_s,
                    }
                    for e in trace.truth.events
                ],
            },
            fh,
            indent=2,
        )
        fh.write("\n")
    written["truth"] = truth_path
    return written
