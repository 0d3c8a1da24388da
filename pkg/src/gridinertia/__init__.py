"""Grid inertia monitoring from pump switching-off signatures.

Detects pump switching-off events in multi-monitor frequency/voltage
streams, estimates system inertia via the swing equation with a pre-event
RoCoF correction, and ships an aggregate swing simulator that generates
ground-truth scenarios for validating every numeric claim.
"""

from .errors import (
    GridInertiaError,
    InsufficientData,
    InsufficientRecords,
    InvalidScenario,
    MissingVoltage,
    NonFinite,
    NonMonotonicTime,
    NonPositiveTruth,
    ParseError,
    RestrictionViolated,
    RocofBelowFloor,
    WindowTooSparse,
)
from .kernels import (
    RocofValue,
    SensorStream,
    TimedSample,
    Window,
    detrend,
    fit_line,
    max_frequency_deviation,
    rocof,
    true_event_rocof,
    voltage_step,
)
from .detector import (
    CandidateEvent,
    ConfirmedEvent,
    DetectionResult,
    DetectorConfig,
    Rejection,
    attribute_plant,
    detect_events,
    fuse_monitors,
    step1_scan,
    step2_filter,
)
from .estimator import (
    EstimatorConfig,
    InertiaEstimate,
    PlantSignature,
    error_rate,
    estimate,
    rocof_contamination,
    traditional_estimate,
    window_sweep,
)
from .simulator import (
    CampaignCase,
    EventSpec,
    GapSpec,
    GovernorSpec,
    MonitorSpec,
    NoiseSpec,
    OscillationSpec,
    RampSpec,
    SimScenario,
    SimTrace,
    analytic_rocof,
    run_campaign,
    simulate,
)
from .analytics import (
    EventLedger,
    LedgerRecord,
    daily_event_counts,
    monthly_mw_profile,
    mw_step_stats,
    time_of_day_profile,
)

__version__ = "0.1.0"

__all__ = [
    "GridInertiaError",
    "InsufficientData",
    "InsufficientRecords",
    "InvalidScenario",
    "MissingVoltage",
    "NonFinite",
    "NonMonotonicTime",
    "NonPositiveTruth",
    "ParseError",
    "RestrictionViolated",
    "RocofBelowFloor",
    "WindowTooSparse",
    "RocofValue",
    "SensorStream",
    "TimedSample",
    "Window",
    "detrend",
    "fit_line",
    "max_frequency_deviation",
    "rocof",
    "true_event_rocof",
    "voltage_step",
    "CandidateEvent",
    "ConfirmedEvent",
    "DetectionResult",
    "DetectorConfig",
    "Rejection",
    "attribute_plant",
    "detect_events",
    "fuse_monitors",
    "step1_scan",
    "step2_filter",
    "EstimatorConfig",
    "InertiaEstimate",
    "PlantSignature",
    "error_rate",
    "estimate",
    "rocof_contamination",
    "traditional_estimate",
    "window_sweep",
    "CampaignCase",
    "EventSpec",
    "GapSpec",
    "GovernorSpec",
    "MonitorSpec",
    "NoiseSpec",
    "OscillationSpec",
    "RampSpec",
    "SimScenario",
    "SimTrace",
    "analytic_rocof",
    "run_campaign",
    "simulate",
    "EventLedger",
    "LedgerRecord",
    "daily_event_counts",
    "monthly_mw_profile",
    "mw_step_stats",
    "time_of_day_profile",
    "__version__",
]
