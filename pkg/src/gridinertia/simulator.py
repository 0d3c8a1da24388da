"""Aggregate swing-model simulator with injected pump-trip signatures.

A single-machine aggregate stands in for the interconnection: the system
frequency obeys

    2 H / f0 * d(delta_f)/dt = P_net(t) - D * delta_f - P_gov(t)

where P_net collects event steps, a pre-event MW ramp, and exponentially
correlated load noise, D is a frequency-damping coefficient (MW per Hz), and
P_gov is an optional first-order droop governor. Integration is fixed-step
explicit Euler at 10x the output sample rate, then decimated.

Monitor-local artifacts (one-sample frequency spike, voltage step) are added
only to monitors electrically near the event's plant, mirroring how nearby
and distant sensors see a pump switching-off differently. Oscillation
scenarios are injected additive waveforms, visible system-wide.

Every scenario is fully determined by its seed: equal seeds give
byte-identical traces.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import InvalidScenario, RestrictionViolated
from .kernels import SensorStream

INTERNAL_OVERSAMPLE = 10


# ---------------------------------------------------------------------------
# Scenario description
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GovernorSpec:
    """First-order droop: d(P_gov)/dt = (droop * delta_f - P_gov) / T."""

    droop_mw_per_hz: float
    time_constant_s: float


@dataclass(frozen=True)
class NoiseSpec:
    """Exponentially correlated (first-order filtered white) load noise."""

    std_mw: float
    correlation_time_s: float = 3.0
    seed: int = 0


@dataclass(frozen=True)
class EventSpec:
    """One MW step at time t_s; positive delta means load loss."""

    t_s: float
    delta_p_mw: float
    plant_id: str


@dataclass(frozen=True)
class RampSpec:
    """Linear MW ramp, rate_mw_per_s applied from start_s onward."""

    rate_mw_per_s: float
    start_s: float


@dataclass(frozen=True)
class OscillationSpec:
    """Additive sinusoidal frequency (and optional voltage) waveform.

    Injected system-wide for start_s <= t < start_s + duration_s. The
    amplitude envelope grows as exp(growth_rate * (t - start_s)), so
    growth_rate = 0 gives a sustained oscillation.
    """

    freq_hz: float
    amp_hz: float
    start_s: float
    duration_s: float
    v_amp_pu: float = 0.0
    growth_rate: float = 0.0


@dataclass(frozen=True)
class GapSpec:
    """Samples in [start_s, start_s + length_s) are dropped entirely."""

    start_s: float
    length_s: float


@dataclass(frozen=True)
class MonitorSpec:
    monitor_id: str
    near_plant: str | None = None
    gap: GapSpec | None = None
    spike_amp_hz: float = 0.06
    v_step_pu: float = 0.01
    v_noise_pu: float = 0.0
    has_voltage: bool = True


@dataclass(frozen=True)
class SimScenario:
    h_true_mw_s: float
    duration_s: float
    f0_hz: float = 60.0
    damping_mw_per_hz: float = 0.0
    governor: GovernorSpec | None = None
    noise: NoiseSpec | None = None
    events: tuple[EventSpec, ...] = ()
    pre_ramp: RampSpec | None = None
    oscillations: tuple[OscillationSpec, ...] = ()
    monitors: tuple[MonitorSpec, ...] = (MonitorSpec("mon_0"),)
    sample_rate_hz: float = 10.0

    def validate(self) -> None:
        if not (self.h_true_mw_s > 0):
            raise InvalidScenario(f"h_true_mw_s must be > 0, got {self.h_true_mw_s}")
        if not (self.f0_hz > 0):
            raise InvalidScenario(f"f0_hz must be > 0, got {self.f0_hz}")
        if not (self.duration_s > 0):
            raise InvalidScenario(f"duration_s must be > 0, got {self.duration_s}")
        if not (self.sample_rate_hz > 0):
            raise InvalidScenario(f"sample_rate_hz must be > 0, got {self.sample_rate_hz}")
        if self.damping_mw_per_hz < 0:
            raise InvalidScenario(f"damping_mw_per_hz must be >= 0, got {self.damping_mw_per_hz}")
        for e in self.events:
            if not (0 <= e.t_s < self.duration_s):
                raise InvalidScenario(f"event at t={e.t_s} outside [0, {self.duration_s})")
        if self.governor is not None and not (self.governor.time_constant_s > 0):
            raise InvalidScenario("governor.time_constant_s must be > 0")
        if self.noise is not None:
            if self.noise.std_mw < 0:
                raise InvalidScenario(f"noise.std_mw must be >= 0, got {self.noise.std_mw}")
            if not (self.noise.correlation_time_s > 0):
                raise InvalidScenario("noise.correlation_time_s must be > 0")
        if len(self.monitors) == 0:
            raise InvalidScenario("at least one monitor is required")
        ids = [m.monitor_id for m in self.monitors]
        if len(set(ids)) != len(ids):
            raise InvalidScenario(f"duplicate monitor ids: {ids}")


# ---------------------------------------------------------------------------
# Trace output
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EventTruth:
    t_s: float
    delta_p_mw: float
    plant_id: str
    pre_rocof_hz_per_s: float


@dataclass(frozen=True)
class TraceTruth:
    h_true_mw_s: float
    f0_hz: float
    events: tuple[EventTruth, ...]


@dataclass(frozen=True, eq=False)
class SimTrace:
    monitors: dict[str, SensorStream]
    truth: TraceTruth
    system_t: np.ndarray = field(repr=False, default=None)
    system_f: np.ndarray = field(repr=False, default=None)


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

def _ou_noise(rng: np.random.Generator, n: int, dt: float, spec: NoiseSpec) -> np.ndarray:
    """Stationary exponentially correlated noise, std = spec.std_mw."""
    if spec.std_mw == 0.0:
        return np.zeros(n)
    alpha = float(np.exp(-dt / spec.correlation_time_s))
    white = rng.standard_normal(n)
    scale = spec.std_mw * np.sqrt(1.0 - alpha * alpha)
    # x[k] = alpha * x[k-1] + scale * w[k], started from the stationary draw
    x0 = spec.std_mw * white[0]
    out = lfilter([scale], [1.0, -alpha], white[1:], zi=np.array([alpha * x0]))[0]
    return np.concatenate(([x0], out))


def _net_power(scenario: SimScenario, t: np.ndarray, noise: np.ndarray) -> np.ndarray:
    u = noise.copy()
    if scenario.pre_ramp is not None:
        r = scenario.pre_ramp
        u += r.rate_mw_per_s * np.maximum(t - r.start_s, 0.0)
    for e in scenario.events:
        u[t >= e.t_s] += e.delta_p_mw
    return u


def _integrate(scenario: SimScenario, u: np.ndarray, dt: float) -> np.ndarray:
    """Frequency deviation (Hz) on the internal grid, Euler step dt."""
    c = scenario.f0_hz / (2.0 * scenario.h_true_mw_s)
    d = scenario.damping_mw_per_hz
    if scenario.governor is None:
        # delta_f[k] = a * delta_f[k-1] + b * u[k-1]: a linear IIR recursion
        a = 1.0 - dt * c * d
        b = dt * c
        return lfilter([0.0, b], [1.0, -a], u)
    gov = scenario.governor
    k_gov = gov.droop_mw_per_hz
    t_gov = gov.time_constant_s
    df = np.empty_like(u)
    df[0] = 0.0
    f_now = 0.0
    p_gov = 0.0
    for k in range(1, u.size):
        dfdt = c * (u[k - 1] - d * f_now - p_gov)
        dgdt = (k_gov * f_now - p_gov) / t_gov
        f_now = f_now + dt * dfdt
        p_gov = p_gov + dt * dgdt
        df[k] = f_now
    return df


def _oscillation_waveforms(
    oscillations: tuple[OscillationSpec, ...], t: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """(frequency Hz, voltage pu) additive waveforms at the given times."""
    f_add = np.zeros_like(t)
    v_add = np.zeros_like(t)
    for osc in oscillations:
        mask = (t >= osc.start_s) & (t < osc.start_s + osc.duration_s)
        if not mask.any():
            continue
        rel = t[mask] - osc.start_s
        envelope = np.exp(osc.growth_rate * rel)
        wave = np.sin(2.0 * np.pi * osc.freq_hz * rel) * envelope
        f_add[mask] += osc.amp_hz * wave
        v_add[mask] += osc.v_amp_pu * wave
    return f_add, v_add


def simulate(scenario: SimScenario) -> SimTrace:
    """Generate a multi-monitor trace plus ground-truth metadata.

    Raises:
        InvalidScenario: any scenario field fails validation.
    """
    scenario.validate()
    rate_int = scenario.sample_rate_hz * INTERNAL_OVERSAMPLE
    dt = 1.0 / rate_int
    n_int = int(round(scenario.duration_s * rate_int))
    t_int = np.arange(n_int) * dt

    seed = scenario.noise.seed if scenario.noise is not None else 0
    streams = np.random.SeedSequence(seed).spawn(1 + len(scenario.monitors))
    load_rng = np.random.default_rng(streams[0])

    if scenario.noise is not None:
        noise = _ou_noise(load_rng, n_int, dt, scenario.noise)
    else:
        noise = np.zeros(n_int)
    u = _net_power(scenario, t_int, noise)
    df_int = _integrate(scenario, u, dt)

    # Truth: instantaneous pre-event RoCoF from the state entering each step.
    truths = []
    for e in scenario.events:
        k = int(np.searchsorted(t_int, e.t_s, side="left"))
        if 1 <= k < n_int:
            pre_slope = (df_int[k] - df_int[k - 1]) / dt
        else:
            pre_slope = 0.0
        truths.append(EventTruth(e.t_s, e.delta_p_mw, e.plant_id, float(pre_slope)))

    # Decimate to the output sample rate.
    t_out = t_int[::INTERNAL_OVERSAMPLE].copy()
    f_sys = scenario.f0_hz + df_int[::INTERNAL_OVERSAMPLE]
    osc_f, osc_v = _oscillation_waveforms(scenario.oscillations, t_out)
    f_sys = f_sys + osc_f

    monitors: dict[str, SensorStream] = {}
    for m_idx, mon in enumerate(scenario.monitors):
        mon_rng = np.random.default_rng(streams[1 + m_idx])
        f_mon = f_sys.copy()
        v_mon = np.ones_like(t_out) + osc_v if mon.has_voltage else None
        if v_mon is not None and mon.v_noise_pu > 0:
            v_mon = v_mon + mon.v_noise_pu * mon_rng.standard_normal(t_out.size)
        for e in scenario.events:
            if mon.near_plant is not None and mon.near_plant == e.plant_id:
                k = int(np.searchsorted(t_out, e.t_s, side="left"))
                if k < t_out.size:
                    f_mon[k] += mon.spike_amp_hz
                if v_mon is not None:
                    v_mon[t_out >= e.t_s] += mon.v_step_pu
        keep = slice(None)
        if mon.gap is not None:
            keep = ~((t_out >= mon.gap.start_s) & (t_out < mon.gap.start_s + mon.gap.length_s))
        monitors[mon.monitor_id] = SensorStream(
            mon.monitor_id,
            t_out[keep],
            f_mon[keep],
            None if v_mon is None else v_mon[keep],
        )

    truth = TraceTruth(scenario.h_true_mw_s, scenario.f0_hz, tuple(truths))
    return SimTrace(monitors=monitors, truth=truth, system_t=t_out, system_f=f_sys)


# ---------------------------------------------------------------------------
# Analytic oracle
# ---------------------------------------------------------------------------

def analytic_rocof(scenario: SimScenario) -> float:
    """Closed-form post-event RoCoF for restricted scenarios (Hz/s).

    Restricted means: no damping, no governor, no noise, exactly one event.
    The result is f0 * delta_p / (2 * H) plus the ramp-power contribution
    accumulated by the event instant, f0 * rate * (t_event - t_ramp) / (2 * H).

    Raises:
        RestrictionViolated: the scenario has noise, damping, a governor,
            or an event count other than one.
    """
    if scenario.damping_mw_per_hz != 0:
        raise RestrictionViolated("analytic oracle requires damping_mw_per_hz == 0")
    if scenario.governor is not None:
        raise RestrictionViolated("analytic oracle requires governor off")
    if scenario.noise is not None and scenario.noise.std_mw != 0:
        raise RestrictionViolated("analytic oracle requires zero noise")
    if len(scenario.events) != 1:
        raise RestrictionViolated(f"analytic oracle requires exactly 1 event, got {len(scenario.events)}")
    event = scenario.events[0]
    p_total = event.delta_p_mw
    if scenario.pre_ramp is not None and event.t_s >= scenario.pre_ramp.start_s:
        p_total += scenario.pre_ramp.rate_mw_per_s * (event.t_s - scenario.pre_ramp.start_s)
    return scenario.f0_hz * p_total / (2.0 * scenario.h_true_mw_s)


# ---------------------------------------------------------------------------
# Campaign expansion
# ---------------------------------------------------------------------------

RAMP_DOWN = "down"
RAMP_UP = "up"


@dataclass(frozen=True)
class CampaignCase:
    case_id: str
    direction: str
    ramp_rate_mw_per_s: float
    seed: int
    scenario: SimScenario
    trace: SimTrace


def run_campaign(
    base: SimScenario,
    count_per_direction: int,
    master_seed: int = 2024,
    ramp_rate_range_mw_per_s: tuple[float, float] = (3.0, 9.0),
    ramp_lead_s: float = 20.0,
    directions: tuple[str, ...] = (RAMP_DOWN, RAMP_UP),
) -> list[CampaignCase]:
    """Expand a base scenario into seeded ramp-variation cases and run them.

    Per direction, ramp magnitudes sweep the given range linearly; every case
    gets its own noise seed derived from master_seed, so re-running with the
    same master seed reproduces the traces exactly. The ramp starts
    ramp_lead_s before the (single) event of the base scenario.
    """
    if count_per_direction < 1:
        raise ValueError("count_per_direction must be >= 1")
    if len(base.events) != 1:
        raise ValueError("campaign base scenario must define exactly one event")
    t_event = base.events[0].t_s
    lo, hi = ramp_rate_range_mw_per_s
    if count_per_direction == 1:
        magnitudes = np.array([lo])
    else:
        magnitudes = np.linspace(lo, hi, count_per_direction)
    seeds = np.random.SeedSequence(master_seed).generate_state(
        len(directions) * count_per_direction
    )
    cases = []
    k = 0
    for direction in directions:
        sign = -1.0 if direction == RAMP_DOWN else 1.0
        for i in range(count_per_direction):
            rate = sign * float(magnitudes[i])
            seed = int(seeds[k])
            k += 1
            noise = base.noise
            if noise is not None:
                noise = dataclasses.replace(noise, seed=seed)
            ramp = None
            if rate != 0.0:
                ramp = RampSpec(rate_mw_per_s=rate, start_s=t_event - ramp_lead_s)
            scenario = dataclasses.replace(base, noise=noise, pre_ramp=ramp)
            trace = simulate(scenario)
            cases.append(
                CampaignCase(
                    case_id=f"{direction}_{i:03d}",
                    direction=direction,
                    ramp_rate_mw_per_s=rate,
                    seed=seed,
                    scenario=scenario,
                    trace=trace,
                )
            )
    return cases
