"""Swing-equation inertia estimation from confirmed pump-trip events.

The estimate divides the plant's historical constant MW step by twice the
true event RoCoF, scaled by nominal frequency:

    H = f0 * delta_p / (2 * |true RoCoF|)        [MW * s]

with the true event RoCoF formed as post-event slope minus pre-event slope
so background frequency drift cancels. The traditional variant keeps only
the post-event slope and exists for comparison studies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .detector import ConfirmedEvent
from .errors import InsufficientData, NonPositiveTruth, RocofBelowFloor
from .kernels import RocofValue, SensorStream, fit_line, true_event_rocof

METHOD_PRE_CORRECTED = "pre_corrected"
METHOD_POST_ONLY = "post_only"

DEFAULT_SWEEP_WINDOWS_S = (0.1, 0.2, 0.3, 0.4, 0.5, 1.0, 2.0, 3.0, 4.0)


@dataclass(frozen=True)
class PlantSignature:
    """A plant's historical constant MW step and its spread."""

    plant_id: str
    mw_step_mean: float
    mw_step_tolerance: float
    unit_capacity_mw: float
    region: str = ""

    def __post_init__(self):
        if not (self.mw_step_mean > 0):
            raise ValueError(f"mw_step_mean must be > 0, got {self.mw_step_mean}")
        if not (0 <= self.mw_step_tolerance < 1):
            raise ValueError(f"mw_step_tolerance must be in [0, 1), got {self.mw_step_tolerance}")
        if self.mw_step_mean > self.unit_capacity_mw:
            raise ValueError("mw_step_mean cannot exceed unit_capacity_mw")


@dataclass(frozen=True)
class EstimatorConfig:
    window_length_s: float = 0.3
    guard_s: float = 0.1
    f0_hz: float = 60.0
    min_abs_true_rocof_hz_per_s: float = 0.001
    mva_base: float | None = None

    def __post_init__(self):
        if not (self.window_length_s > 0):
            raise ValueError(f"window_length_s must be > 0, got {self.window_length_s}")
        if self.guard_s < 0:
            raise ValueError(f"guard_s must be >= 0, got {self.guard_s}")
        if not (self.min_abs_true_rocof_hz_per_s > 0):
            raise ValueError("min_abs_true_rocof_hz_per_s must be > 0")


@dataclass(frozen=True)
class FitQuality:
    pre_r_squared: float
    post_r_squared: float
    pre_samples: int
    post_samples: int


@dataclass(frozen=True)
class InertiaEstimate:
    t_event_s: float
    plant_id: str
    delta_p_mw: float
    pre_rocof_hz_per_s: float
    post_rocof_hz_per_s: float
    true_rocof_hz_per_s: float
    window_length_s: float
    h_mw_s: float
    f0_hz: float
    quality: FitQuality
    method: str = METHOD_PRE_CORRECTED
    h_pu: float | None = None


def _fit_event_windows(
    stream: SensorStream, t_event_s: float, cfg: EstimatorConfig, window_length_s: float
) -> tuple[RocofValue, RocofValue]:
    """Least-squares slopes over the pre and post event windows.

    Pre window: [t_event - guard - L, t_event - guard), post window:
    (t_event + guard, t_event + guard + L]. Both exclude the guarded region
    around the event instant where the local spike artifact lives.
    """
    t = stream.t
    g, L = cfg.guard_s, window_length_s
    pre_mask = (t >= t_event_s - g - L) & (t < t_event_s - g)
    post_mask = (t > t_event_s + g) & (t <= t_event_s + g + L)
    n_pre = int(np.count_nonzero(pre_mask))
    n_post = int(np.count_nonzero(post_mask))
    if n_pre < 2 or n_post < 2:
        raise InsufficientData(
            f"event at t={t_event_s}: pre window holds {n_pre}, post holds {n_post} "
            f"samples (need >= 2 each, window {window_length_s}s, guard {g}s)"
        )
    pre = fit_line(t[pre_mask], stream.f[pre_mask])
    post = fit_line(t[post_mask], stream.f[post_mask])
    return pre, post


def _build_estimate(
    event: ConfirmedEvent,
    sig: PlantSignature,
    cfg: EstimatorConfig,
    window_length_s: float,
    pre: RocofValue,
    post: RocofValue,
    method: str,
) -> InertiaEstimate:
    true_slope = true_event_rocof(pre, post)
    effective = post.slope_hz_per_s if method == METHOD_POST_ONLY else true_slope
    if abs(effective) < cfg.min_abs_true_rocof_hz_per_s:
        raise RocofBelowFloor(
            f"|event RoCoF| {abs(effective):.3e} Hz/s is below the "
            f"{cfg.min_abs_true_rocof_hz_per_s:.3e} floor; event too small for current noise"
        )
    delta_p = sig.mw_step_mean
    h = cfg.f0_hz * delta_p / (2.0 * abs(effective))
    return InertiaEstimate(
        t_event_s=event.t_event_s,
        plant_id=sig.plant_id,
        delta_p_mw=delta_p,
        pre_rocof_hz_per_s=pre.slope_hz_per_s,
        post_rocof_hz_per_s=post.slope_hz_per_s,
        true_rocof_hz_per_s=effective,
        window_length_s=window_length_s,
        h_mw_s=h,
        f0_hz=cfg.f0_hz,
        quality=FitQuality(
            pre_r_squared=pre.r_squared,
            post_r_squared=post.r_squared,
            pre_samples=pre.n_samples,
            post_samples=post.n_samples,
        ),
        method=method,
        h_pu=None if cfg.mva_base is None else h / cfg.mva_base,
    )


def _check_plant(event: ConfirmedEvent, sig: PlantSignature) -> None:
    if event.plant_id is not None and event.plant_id != sig.plant_id:
        raise ValueError(
            f"event attributed to plant {event.plant_id!r} but signature is for {sig.plant_id!r}"
        )


def estimate(
    event: ConfirmedEvent,
    stream: SensorStream,
    sig: PlantSignature,
    cfg: EstimatorConfig | None = None,
) -> InertiaEstimate:
    """Inertia estimate with the pre-event RoCoF correction applied.

    A pump switching-off is a load loss, so frequency rises after the event;
    signed slopes are recorded for audit while the estimate itself uses the
    magnitude of the corrected RoCoF.

    Raises:
        InsufficientData: either fit window is too sparse.
        RocofBelowFloor: the corrected RoCoF is numerically too small.
    """
    cfg = cfg or EstimatorConfig()
    _check_plant(event, sig)
    pre, post = _fit_event_windows(stream, event.t_event_s, cfg, cfg.window_length_s)
    return _build_estimate(event, sig, cfg, cfg.window_length_s, pre, post, METHOD_PRE_CORRECTED)


def traditional_estimate(
    event: ConfirmedEvent,
    stream: SensorStream,
    sig: PlantSignature,
    cfg: EstimatorConfig | None = None,
) -> InertiaEstimate:
    """Post-event-only estimate (no pre-event correction), for comparison.

    The pre-event slope is still fitted and recorded for audit.
    """
    cfg = cfg or EstimatorConfig()
    _check_plant(event, sig)
    pre, post = _fit_event_windows(stream, event.t_event_s, cfg, cfg.window_length_s)
    return _build_estimate(event, sig, cfg, cfg.window_length_s, pre, post, METHOD_POST_ONLY)


def error_rate(h_est_mw_s: float, h_true_mw_s: float) -> float:
    """Relative inertia estimation error |h_est - h_true| / h_true."""
    if not (h_true_mw_s > 0):
        raise NonPositiveTruth(f"h_true must be > 0, got {h_true_mw_s}")
    return abs(h_est_mw_s - h_true_mw_s) / h_true_mw_s


def rocof_contamination(pre: RocofValue | float, post: RocofValue | float) -> float:
    """Relative RoCoF error carried by the post-only method: |pre / post|.

    This is the fraction of the post-event slope contributed by background
    drift rather than the event itself.
    """
    pre_slope = pre.slope_hz_per_s if isinstance(pre, RocofValue) else pre
    post_slope = post.slope_hz_per_s if isinstance(post, RocofValue) else post
    if post_slope == 0:
        raise ValueError("post-event RoCoF must be nonzero")
    return abs(pre_slope / post_slope)


@dataclass(frozen=True)
class SweepEntry:
    window_length_s: float
    estimate: InertiaEstimate | None
    error: str | None = None


def window_sweep(
    event: ConfirmedEvent,
    stream: SensorStream,
    sig: PlantSignature,
    cfg: EstimatorConfig | None = None,
    windows_s: tuple[float, ...] = DEFAULT_SWEEP_WINDOWS_S,
    method: str = METHOD_PRE_CORRECTED,
) -> list[SweepEntry]:
    """One estimate per window length, same event time and MW step.

    Windows that cannot be fitted (sparse data, RoCoF below floor) are
    recorded as failed entries and the sweep continues.
    """
    cfg = cfg or EstimatorConfig()
    _check_plant(event, sig)
    entries = []
    for L in windows_s:
        try:
            pre, post = _fit_event_windows(stream, event.t_event_s, cfg, L)
            est = _build_estimate(event, sig, cfg, L, pre, post, method)
            entries.append(SweepEntry(window_length_s=L, estimate=est))
        except (InsufficientData, RocofBelowFloor) as exc:
            entries.append(SweepEntry(window_length_s=L, estimate=None, error=str(exc)))
    return entries
