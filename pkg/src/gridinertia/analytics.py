"""Offline statistics over confirmed pump switching-off event ledgers.

Covers the constancy of a plant's MW step, its monthly spread, how often
events occur per day, and what time of day they cluster at. All statistics
are plain batch computations over an in-memory ledger; timestamps are held
in UTC and converted to the ledger's display timezone for calendar grouping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from zoneinfo import ZoneInfo

from .errors import InsufficientRecords

DEFAULT_HIST_BIN_MW = 5.0
MODAL_SPAN_HOURS = 3


@dataclass(frozen=True)
class LedgerRecord:
    t_event_utc: datetime
    plant_id: str
    mw_observed: float | None = None
    h_estimate_mw_s: float | None = None

    def __post_init__(self):
        if self.t_event_utc.tzinfo is None:
            raise ValueError("ledger timestamps must be timezone-aware")
        if self.mw_observed is not None and not (self.mw_observed > 0):
            raise ValueError(f"mw_observed must be > 0 when present, got {self.mw_observed}")
        object.__setattr__(self, "t_event_utc", self.t_event_utc.astimezone(timezone.utc))


@dataclass
class EventLedger:
    records: list[LedgerRecord] = field(default_factory=list)
    display_timezone: str = "UTC"

    def for_plant(self, plant_id: str) -> list[LedgerRecord]:
        return [r for r in self.records if r.plant_id == plant_id]

    def local_times(self, plant_id: str) -> list[datetime]:
        tz = ZoneInfo(self.display_timezone)
        return [r.t_event_utc.astimezone(tz) for r in self.for_plant(plant_id)]


# ---------------------------------------------------------------------------
# MW step constancy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Histogram:
    bin_edges_mw: tuple[float, ...]
    counts: tuple[int, ...]


@dataclass(frozen=True)
class MwStepStats:
    plant_id: str
    n_records: int
    mean_mw: float
    max_abs_deviation_ratio: float
    mean_abs_deviation_ratio: float
    histogram: Histogram


def _mw_values(ledger: EventLedger, plant_id: str, minimum: int) -> list[float]:
    values = [r.mw_observed for r in ledger.for_plant(plant_id) if r.mw_observed is not None]
    if len(values) < minimum:
        raise InsufficientRecords(
            f"plant {plant_id!r}: {len(values)} MW records, need >= {minimum}"
        )
    return values


def _histogram(values: list[float], bin_width: float) -> Histogram:
    origin = math.floor(min(values) / bin_width) * bin_width
    n_bins = int(math.floor((max(values) - origin) / bin_width)) + 1
    edges = [origin + k * bin_width for k in range(n_bins + 1)]
    counts = [0] * n_bins
    for v in values:
        idx = int(math.floor((v - origin) / bin_width))
        idx = min(idx, n_bins - 1)
        counts[idx] += 1
    return Histogram(bin_edges_mw=tuple(edges), counts=tuple(counts))


def mw_step_stats(
    ledger: EventLedger, plant_id: str, bin_width_mw: float = DEFAULT_HIST_BIN_MW
) -> MwStepStats:
    """Mean MW step plus max/mean absolute deviation ratios and a histogram.

    Deviation ratios are |mw - mean| / mean; a perfectly constant step gives
    zero for both.
    """
    values = _mw_values(ledger, plant_id, minimum=2)
    mean = math.fsum(values) / len(values)
    ratios = [abs(v - mean) / mean for v in values]
    return MwStepStats(
        plant_id=plant_id,
        n_records=len(values),
        mean_mw=mean,
        max_abs_deviation_ratio=max(ratios),
        mean_abs_deviation_ratio=math.fsum(ratios) / len(ratios),
        histogram=_histogram(values, bin_width_mw),
    )


# ---------------------------------------------------------------------------
# Monthly profile
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MonthlyMwRow:
    month: str  # "YYYY-MM" in the ledger's display timezone
    max_mw: float
    mean_mw: float
    min_mw: float
    n_records: int


def monthly_mw_profile(ledger: EventLedger, plant_id: str) -> list[MonthlyMwRow]:
    """Per-calendar-month max/mean/min MW step; empty months are absent."""
    _mw_values(ledger, plant_id, minimum=2)
    tz = ZoneInfo(ledger.display_timezone)
    groups: dict[str, list[float]] = {}
    for r in ledger.for_plant(plant_id):
        if r.mw_observed is None:
            continue
        local = r.t_event_utc.astimezone(tz)
        key = f"{local.year:04d}-{local.month:02d}"
        groups.setdefault(key, []).append(r.mw_observed)
    rows = []
    for key in sorted(groups):
        vals = groups[key]
        rows.append(
            MonthlyMwRow(
                month=key,
                max_mw=max(vals),
                mean_mw=math.fsum(vals) / len(vals),
                min_mw=min(vals),
                n_records=len(vals),
            )
        )
    return rows


# ---------------------------------------------------------------------------
# Daily counts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DailyCounts:
    per_day: dict[str, int]  # ISO date -> count, zero days included
    mean_per_day: float
    max_per_day: int
    span_days: int
    total: int


def daily_event_counts(ledger: EventLedger, plant_id: str) -> DailyCounts:
    """Events per local calendar day over the ledger's full date span.

    Days with zero events count in the mean: mean = total / span_days, so
    mean * span_days always equals the total exactly.
    """
    times = ledger.local_times(plant_id)
    if not times:
        raise InsufficientRecords(f"plant {plant_id!r}: no records")
    dates = [t.date() for t in times]
    first, last = min(dates), max(dates)
    span_days = (last - first).days + 1
    per_day = {(first + timedelta(days=k)).isoformat(): 0 for k in range(span_days)}
    for d in dates:
        per_day[d.isoformat()] += 1
    total = len(dates)
    return DailyCounts(
        per_day=per_day,
        mean_per_day=total / span_days,
        max_per_day=max(per_day.values()),
        span_days=span_days,
        total=total,
    )


# ---------------------------------------------------------------------------
# Time-of-day profile
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpanOverlap:
    supplied_span: tuple[int, int]
    modal_span: tuple[int, int]
    overlap_hours: int
    contained: bool
    verdict: str  # "yes" when contained, "partial" when intersecting, "no" otherwise


@dataclass(frozen=True)
class TimeOfDayProfile:
    plant_id: str
    hour_counts: tuple[int, ...]  # 24 bins, local time
    modal_span: tuple[int, int]  # [start_hour, end_hour) wrapping at 24
    modal_span_count: int
    overlap: SpanOverlap | None = None


def _span_hours(span: tuple[int, int]) -> set[int]:
    start, end = span
    if start == end:
        return set(range(24))
    hours = set()
    h = start
    while h != end:
        hours.add(h)
        h = (h + 1) % 24
    return hours


def time_of_day_profile(
    ledger: EventLedger,
    plant_id: str,
    low_inertia_span: tuple[int, int] | None = None,
) -> TimeOfDayProfile:
    """24-bin local-time histogram plus the modal 3-hour span.

    The modal span is the contiguous 3-hour window (wrapping at midnight)
    holding the most events; ties resolve to the earliest start hour. When a
    daily-lowest-inertia span is supplied, the report states whether the
    modal span falls inside it ("yes"), merely intersects it ("partial"),
    or misses it ("no").
    """
    times = ledger.local_times(plant_id)
    if not times:
        raise InsufficientRecords(f"plant {plant_id!r}: no records")
    counts = [0] * 24
    for t in times:
        counts[t.hour] += 1
    best_start, best_total = 0, -1
    for start in range(24):
        total = sum(counts[(start + k) % 24] for k in range(MODAL_SPAN_HOURS))
        if total > best_total:
            best_start, best_total = start, total
    modal_span = (best_start, (best_start + MODAL_SPAN_HOURS) % 24)
    overlap = None
    if low_inertia_span is not None:
        modal_hours = _span_hours(modal_span)
        supplied_hours = _span_hours(low_inertia_span)
        inter = modal_hours & supplied_hours
        contained = modal_hours <= supplied_hours
        verdict = "yes" if contained else ("partial" if inter else "no")
        overlap = SpanOverlap(
            supplied_span=low_inertia_span,
            modal_span=modal_span,
            overlap_hours=len(inter),
            contained=contained,
            verdict=verdict,
        )
    return TimeOfDayProfile(
        plant_id=plant_id,
        hour_counts=tuple(counts),
        modal_span=modal_span,
        modal_span_count=best_total,
        overlap=overlap,
    )
