"""Pure numeric kernels shared by the detector, estimator, and analytics.

All kernels operate on timestamps, never on sample indices, so they accept
any (possibly irregular) sample rate. Every function here is a deterministic
pure function of its inputs and is safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .errors import MissingVoltage, NonFinite, WindowTooSparse

NOMINAL_FREQ_HZ = 60.0

# Frequency band considered physically plausible for a 50/60 Hz grid sensor.
VALID_FREQ_BAND_HZ = (45.0, 75.0)


@dataclass(frozen=True)
class TimedSample:
    """One monitor reading: time (s since stream epoch), frequency, voltage.

    Voltage is optional; some monitors report frequency only.
    """

    t_s: float
    f_hz: float
    v_pu: float | None = None


@dataclass(frozen=True)
class Window:
    """Half-open time window [start_s, start_s + length_s)."""

    start_s: float
    length_s: float

    def __post_init__(self):
        if not (self.length_s > 0):
            raise ValueError(f"window length must be > 0, got {self.length_s}")

    @property
    def end_s(self) -> float:
        return self.start_s + self.length_s


@dataclass(frozen=True)
class RocofValue:
    """Least-squares frequency slope over a window.

    r_squared is the coefficient of determination of the fit; a window with
    exactly constant frequency reports r_squared = 1.0 (the fit is the data).
    """

    slope_hz_per_s: float
    n_samples: int
    r_squared: float


class SensorStream:
    """Timestamped frequency (and optional voltage) from one monitor.

    Timestamps must be finite and strictly increasing. Arrays are stored as
    float64 and treated as immutable after construction.
    """

    __slots__ = ("monitor_id", "t", "f", "v")

    def __init__(self, monitor_id: str, t, f, v=None):
        t = np.asarray(t, dtype=np.float64)
        f = np.asarray(f, dtype=np.float64)
        if t.ndim != 1 or f.shape != t.shape:
            raise ValueError("t and f must be 1-D arrays of equal length")
        if not np.isfinite(t).all():
            raise ValueError("timestamps must be finite")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("timestamps must be strictly increasing")
        if v is not None:
            v = np.asarray(v, dtype=np.float64)
            if v.shape != t.shape:
                raise ValueError("v must match t in length")
        self.monitor_id = monitor_id
        self.t = t
        self.f = f
        self.v = v

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_samples(cls, monitor_id: str, samples: Iterable[TimedSample]) -> "SensorStream":
        samples = list(samples)
        t = [s.t_s for s in samples]
        f = [s.f_hz for s in samples]
        has_v = any(s.v_pu is not None for s in samples)
        if has_v and any(s.v_pu is None for s in samples):
            raise ValueError("voltage must be present on all samples or none")
        v = [s.v_pu for s in samples] if has_v else None
        return cls(monitor_id, t, f, v)

    # -- basic accessors -------------------------------------------------------

    def __len__(self) -> int:
        return int(self.t.size)

    def __iter__(self) -> Iterator[TimedSample]:
        for i in range(len(self)):
            v = None if self.v is None else float(self.v[i])
            yield TimedSample(float(self.t[i]), float(self.f[i]), v)

    @property
    def has_voltage(self) -> bool:
        return self.v is not None

    def span(self) -> tuple[float, float]:
        if len(self) == 0:
            raise ValueError("empty stream has no span")
        return float(self.t[0]), float(self.t[-1])

    def index_range(self, window: Window) -> tuple[int, int]:
        """Indices [lo, hi) of samples with start_s <= t < end_s."""
        lo = int(np.searchsorted(self.t, window.start_s, side="left"))
        hi = int(np.searchsorted(self.t, window.end_s, side="left"))
        return lo, hi

    def select(self, window: Window) -> "SensorStream":
        """Sub-stream of samples falling in the window (shares no state)."""
        lo, hi = self.index_range(window)
        v = None if self.v is None else self.v[lo:hi].copy()
        return SensorStream(self.monitor_id, self.t[lo:hi].copy(), self.f[lo:hi].copy(), v)


# ---------------------------------------------------------------------------
# Fitting primitives
# ---------------------------------------------------------------------------

def fit_line(t: np.ndarray, f: np.ndarray) -> RocofValue:
    """Ordinary least-squares line fit of f against t.

    Times are centered per call, so the result is invariant to a uniform
    time shift and numerically stable for large absolute timestamps.

    Raises:
        WindowTooSparse: fewer than 2 samples.
        NonFinite: any frequency value is NaN/inf.
    """
    t = np.asarray(t, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    n = t.size
    if n < 2:
        raise WindowTooSparse(f"need >= 2 samples for a line fit, got {n}")
    if not np.isfinite(f).all():
        raise NonFinite("non-finite frequency value in fit window")
    tc = t - t.mean()
    fc = f - f.mean()
    stt = float(tc @ tc)
    stf = float(tc @ fc)
    sff = float(fc @ fc)
    slope = stf / stt
    if sff == 0.0:
        r2 = 1.0
    else:
        r2 = min(1.0, (stf * stf) / (stt * sff))
    return RocofValue(slope_hz_per_s=slope, n_samples=int(n), r_squared=r2)


def rocof(stream: SensorStream, window: Window) -> RocofValue:
    """Windowed RoCoF: least-squares slope of frequency over the window.

    Deterministic, order-independent (the closed form sees only the set of
    (t, f) pairs inside the window).
    """
    lo, hi = stream.index_range(window)
    if hi - lo < 2:
        raise WindowTooSparse(
            f"window [{window.start_s}, {window.end_s}) holds {hi - lo} samples, need >= 2"
        )
    return fit_line(stream.t[lo:hi], stream.f[lo:hi])


def true_event_rocof(pre: RocofValue, post: RocofValue) -> float:
    """Event RoCoF with the background pre-event slope removed.

    Returns post.slope - pre.slope (Hz/s). The pre-event slope captures the
    random background frequency drift that would otherwise contaminate an
    inertia estimate built from the post-event slope alone.
    """
    return post.slope_hz_per_s - pre.slope_hz_per_s


def voltage_step(
    stream: SensorStream,
    t_event_s: float,
    settle_s: float,
    span_s: float,
) -> float:
    """Signed voltage step (pu) across an event, median-over-median.

    Compares the median voltage over [t_event + settle, t_event + settle + span)
    against the median over [t_event - settle - span, t_event - settle).
    Medians make the extraction immune to single-sample spikes.

    Raises:
        MissingVoltage: the stream has no voltage channel.
        WindowTooSparse: either span holds fewer than 3 voltage samples.
    """
    if stream.v is None:
        raise MissingVoltage(f"monitor {stream.monitor_id!r} carries no voltage channel")
    pre = Window(t_event_s - settle_s - span_s, span_s)
    post = Window(t_event_s + settle_s, span_s)
    values = []
    for w in (pre, post):
        lo, hi = stream.index_range(w)
        if hi - lo < 3:
            raise WindowTooSparse(
                f"voltage span [{w.start_s:.3f}, {w.end_s:.3f}) holds {hi - lo} samples, need >= 3"
            )
        values.append(float(np.median(stream.v[lo:hi])))
    return values[1] - values[0]


# Fraction of a deviation window used to form the reference frequency.
DEVIATION_REF_FRACTION = 0.2


def max_frequency_deviation(stream: SensorStream, window: Window) -> float:
    """Largest |f - f_ref| over the window (Hz).

    f_ref is the median frequency over the leading 20% of the window span;
    when no sample falls in that lead-in, the first in-window sample is used.
    """
    lo, hi = stream.index_range(window)
    if hi - lo < 2:
        raise WindowTooSparse(
            f"window [{window.start_s}, {window.end_s}) holds {hi - lo} samples, need >= 2"
        )
    f = stream.f[lo:hi]
    if not np.isfinite(f).all():
        raise NonFinite("non-finite frequency value in deviation window")
    t = stream.t[lo:hi]
    lead_end = window.start_s + DEVIATION_REF_FRACTION * window.length_s
    n_lead = int(np.searchsorted(t, lead_end, side="left"))
    f_ref = float(np.median(f[:n_lead])) if n_lead > 0 else float(f[0])
    return float(np.max(np.abs(f - f_ref)))


def detrend(stream: SensorStream, window: Window) -> np.ndarray:
    """Residuals of frequency after removing the least-squares line.

    The residual mean is zero to within 1e-9 Hz by construction.
    """
    lo, hi = stream.index_range(window)
    if hi - lo < 3:
        raise WindowTooSparse(
            f"window [{window.start_s}, {window.end_s}) holds {hi - lo} samples, need >= 3"
        )
    t = stream.t[lo:hi]
    f = stream.f[lo:hi]
    fit = fit_line(t, f)
    tc = t - t.mean()
    fc = f - f.mean()
    return fc - fit.slope_hz_per_s * tc


def sliding_rocof(t: np.ndarray, f: np.ndarray, window_length_s: float) -> np.ndarray:
    """Short-window RoCoF at every sample position, vectorized.

    Entry i is the least-squares slope over samples with
    t[i] <= t < t[i] + window_length_s; positions covering fewer than two
    samples report NaN. Windows are centered individually, so the result is
    stable even for day-long absolute timestamps.
    """
    t = np.asarray(t, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    n = t.size
    slopes = np.full(n, np.nan)
    if n < 2:
        return slopes
    ends = np.searchsorted(t, t + window_length_s, side="left")
    counts = ends - np.arange(n)
    for m in np.unique(counts):
        if m < 2:
            continue
        starts = np.nonzero(counts == m)[0]
        idx = starts[:, None] + np.arange(m)[None, :]
        tw = t[idx]
        fw = f[idx]
        tc = tw - tw.mean(axis=1, keepdims=True)
        fc = fw - fw.mean(axis=1, keepdims=True)
        denom = np.einsum("ij,ij->i", tc, tc)
        slopes[starts] = np.einsum("ij,ij->i", tc, fc) / denom
    return slopes
