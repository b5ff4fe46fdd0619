"""Discrete-time simulation of the localize / reconfigure / estimate loop.

A mobile user crosses the blockage disc on a straight chord.  Each cycle
localizes the user (perfectly, after ``t_loc_s``), designs an illumination
profile around the localized position, then estimates the end-to-end
channel once per coherence time until the tracked SNR drops below the
threshold, which starts the next cycle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .field import (
    PhaseProfile,
    RadioConfig,
    field_to_baseband,
    linear_to_db,
    reflected_field_many,
    snr_many,
)
from .geometry import BlockageArea, CarrierConfig, IrsPanel, Point3, distance
from .overhead import overhead_proposed_alpha
from .phase_design import IlluminationSpec, wide_profile

# Threshold checks evaluate future time steps in batches that grow from
# _FIRST_LOOKAHEAD to _LOOKAHEAD steps.
_FIRST_LOOKAHEAD = 4
_LOOKAHEAD = 2048


@dataclass(frozen=True)
class Scenario:
    """Fixed geometry and radio parameters of one IRS link."""

    carrier: CarrierConfig
    panel: IrsPanel
    bs: Point3
    radio: RadioConfig

    def __post_init__(self):
        object.__setattr__(self, "bs", Point3.of(self.bs))


@dataclass(frozen=True)
class MobilitySegment:
    entry: Point3
    exit: Point3
    speed_m_per_s: float

    def __post_init__(self):
        object.__setattr__(self, "entry", Point3.of(self.entry))
        object.__setattr__(self, "exit", Point3.of(self.exit))
        if not self.speed_m_per_s > 0:
            raise ValueError("speed must be positive")
        if self.entry == self.exit:
            raise ValueError("segment has zero length")

    @property
    def length_m(self) -> float:
        return distance(self.entry, self.exit)

    @property
    def duration_s(self) -> float:
        return self.length_m / self.speed_m_per_s


@dataclass(frozen=True)
class ProtocolConfig:
    gamma_thr_linear: float
    t_loc_s: float
    t_coh_s: float = 0.024
    n_plt: int = 3
    t_sym_s: float = 1.0 / 15_000
    t_irs_s: float = 0.0
    time_step_s: float | None = None
    rng_seed: int = 0
    # Widens the illumination square to absorb localization error.
    delta_inflation_m: float = 0.0
    # "los": noiseless LoS SNR at the true position, checked every step.
    # "estimated": mean of the last ``snr_window`` LS-based SNRs, checked at estimates.
    snr_mode: str = "los"
    snr_window: int = 8

    def __post_init__(self):
        if self.time_step_s is None:
            object.__setattr__(self, "time_step_s", self.t_coh_s / 10.0)
        if self.t_loc_s <= 0 or self.t_coh_s <= 0 or self.t_sym_s <= 0 or self.time_step_s <= 0:
            raise ValueError("protocol times must be positive")
        if self.t_irs_s < 0:
            raise ValueError("t_irs_s must be nonnegative")
        if self.time_step_s > self.t_coh_s / 10.0 * (1 + 1e-12):
            raise ValueError("time step must not exceed a tenth of the coherence time")
        if self.n_plt < 1:
            raise ValueError("need at least one pilot")
        if self.snr_mode not in ("los", "estimated"):
            raise ValueError(f"unknown snr_mode {self.snr_mode!r}")

    @property
    def t_est_s(self) -> float:
        return self.n_plt * self.t_sym_s


EVENT_KINDS = ("localize", "reconfigure", "estimate", "threshold_crossed", "exit")


@dataclass(frozen=True, slots=True)
class ProtocolEvent:
    timestamp_s: float
    kind: str
    mu: tuple
    snr_db: float


@dataclass
class ProtocolTrace:
    events: list = field(default_factory=list)
    t_upd_samples_s: list = field(default_factory=list)
    overhead_fraction: float = 0.0
    crossing_time_s: float = 0.0
    channel_estimates: list = field(default_factory=list)

    def count(self, kind: str) -> int:
        return sum(1 for e in self.events if e.kind == kind)

    @property
    def mean_t_upd_s(self) -> float:
        if not self.t_upd_samples_s:
            return float("nan")
        return float(np.mean(self.t_upd_samples_s))

    def rows(self):
        for e in self.events:
            yield (e.timestamp_s, e.kind, e.mu[0], e.mu[1], e.mu[2], e.snr_db)


def chord_angles(rng: np.random.Generator, n: int) -> np.ndarray:
    """(n, 2) independent uniform boundary angles for entry and exit."""
    return rng.uniform(0.0, 2.0 * math.pi, size=(n, 2))


def sample_crossing(blockage: BlockageArea, speed_m_per_s: float, rng_seed) -> MobilitySegment:
    """Chord between two independent uniform points on the blockage circle.

    A coincident pair is redrawn from the same stream.
    """
    if not speed_m_per_s > 0:
        raise ValueError("speed must be positive")
    if blockage.diameter_m <= 0:
        raise ValueError("blockage diameter must be positive to sample a crossing")
    rng = np.random.default_rng(rng_seed)
    c, r = blockage.center, blockage.radius_m
    while True:
        a, b = chord_angles(rng, 1)[0]
        pa = Point3(c.x + r * math.cos(a), c.y + r * math.sin(a), c.z)
        pb = Point3(c.x + r * math.cos(b), c.y + r * math.sin(b), c.z)
        if pa != pb:
            return MobilitySegment(pa, pb, speed_m_per_s)


def mean_chord_length(radius_m: float) -> float:
    return 4.0 * radius_m / math.pi


def mu_positions(segment: MobilitySegment, times_s) -> np.ndarray:
    t = np.asarray(times_s, dtype=float)
    a = segment.entry.as_array()
    b = segment.exit.as_array()
    frac = t * segment.speed_m_per_s / segment.length_m
    return a + frac[..., None] * (b - a)


def mu_position(segment: MobilitySegment, t_s: float) -> Point3:
    # tolerate round-off at the exit time
    if t_s < 0 or t_s > segment.duration_s * (1 + 1e-12):
        raise ValueError(f"time {t_s} outside the crossing window [0, {segment.duration_s}]")
    if t_s >= segment.duration_s:
        return segment.exit
    return Point3.of(mu_positions(segment, t_s))


def ls_estimate(pilot_symbols, received):
    """Least-squares scalar channel estimate from pilots.

    Works on 1-D inputs or on batches whose last axis indexes pilots.
    Returns ``(h_hat, residual)`` with ``residual = sum |y - h_hat s|^2``.
    """
    s = np.asarray(pilot_symbols, dtype=complex)
    y = np.asarray(received, dtype=complex)
    if s.shape[-1] == 0 or y.shape[-1] != s.shape[-1]:
        raise ValueError("pilot and received sequences must have equal nonzero length")
    energy = np.sum(np.abs(s) ** 2, axis=-1)
    if np.any(energy == 0):
        raise ValueError("pilot sequence is all zero")
    h = np.sum(y * np.conj(s), axis=-1) / energy
    resid = np.sum(np.abs(y - np.expand_dims(h, -1) * s) ** 2, axis=-1)
    if np.ndim(h) == 0:
        return complex(h), float(resid)
    return h, resid


def _end_to_end(scenario: Scenario, profile: PhaseProfile, points: np.ndarray) -> np.ndarray:
    """Noiseless end-to-end channel gain at each point (complex amplitude per unit symbol)."""
    unit = scenario.radio.with_tx_power(1.0)
    e = reflected_field_many(scenario.panel, profile, scenario.bs, points, unit, scenario.carrier)
    return field_to_baseband(e, unit, scenario.carrier)


def _design(scenario: Scenario, illum: IlluminationSpec, localized, cfg: ProtocolConfig):
    center = illum.center if illum.center is not None else localized
    spec = IlluminationSpec(center, illum.delta_m + cfg.delta_inflation_m)
    return wide_profile(scenario.panel, scenario.bs, spec, scenario.carrier)


def run_protocol(scenario: Scenario, blockage: BlockageArea, illum: IlluminationSpec,
                 cfg: ProtocolConfig, segment: MobilitySegment) -> ProtocolTrace:
    """Run the reconfiguration loop over one crossing.

    ``illum.center`` of ``None`` tracks the localized MU; a fixed center
    (e.g. the blockage center with Δ = D_blk) gives a static illumination.
    """
    radio = scenario.radio
    sigma2 = radio.noise_power_w
    p_tx = radio.tx_power_w
    amp = math.sqrt(p_tx)
    rng = np.random.default_rng(cfg.rng_seed)
    dt = cfg.time_step_s
    t_end = segment.duration_s
    trace = ProtocolTrace(crossing_time_s=t_end)
    ev = trace.events

    def snr_at(points, profile):
        return snr_many(scenario.panel, profile, scenario.bs, points, radio, scenario.carrier)

    def emit(t, kind, pos, snr):
        ev.append(ProtocolEvent(float(t), kind, tuple(float(v) for v in pos), float(linear_to_db(snr))))

    t = 0.0
    loc_starts = []
    profile = None
    while True:
        # sub-block 1: localization (perfect, position measured at its start)
        pos = mu_positions(segment, min(t, t_end))
        if t >= t_end:
            break
        loc_starts.append(t)
        # the previous profile stays active while localizing
        emit(t, "localize", pos, 0.0 if profile is None else float(snr_at(pos, profile)[0]))
        t_cfg = t + cfg.t_loc_s
        if t_cfg >= t_end:
            break
        # sub-block 2: phase design
        profile = _design(scenario, illum, pos, cfg)
        t_active = t_cfg + cfg.t_irs_s
        pos_cfg = mu_positions(segment, t_cfg)
        emit(t_cfg, "reconfigure", pos_cfg, float(snr_at(pos_cfg, profile)[0]))
        if t_active >= t_end:
            break
        # sub-block 3 and SNR tracking until the threshold is crossed
        t_cross, snr_cross = _find_crossing(segment, profile, t_active, t_end, dt, cfg,
                                            snr_at, rng, scenario, sigma2, amp)
        stop = t_cross if t_cross is not None else t_end
        _emit_estimates(trace, segment, scenario, profile, t_active, stop, cfg, rng,
                        sigma2, amp, emit, snr_at)
        if t_cross is None:
            break
        emit(t_cross, "threshold_crossed", mu_positions(segment, t_cross), snr_cross)
        t = t_cross

    # T_upd: time between consecutive localization starts; the last one ends at exit
    bounds = loc_starts + [t_end]
    samples = [b - a for a, b in zip(bounds[:-1], bounds[1:])]
    if samples and samples[-1] < cfg.t_loc_s + cfg.t_irs_s:
        samples.pop()
    trace.t_upd_samples_s = samples
    exit_snr = 0.0 if profile is None else float(snr_at(segment.exit.as_array(), profile)[0])
    emit(t_end, "exit", segment.exit, exit_snr)
    # stable: ties keep their causal order
    trace.events.sort(key=lambda e: e.timestamp_s)
    if samples:
        t_upd = trace.mean_t_upd_s
        trace.overhead_fraction = min(1.0, overhead_proposed_alpha(
            cfg.t_loc_s, t_upd, cfg.n_plt, cfg.t_sym_s, cfg.t_coh_s)) \
            if t_upd > cfg.t_loc_s else 1.0
    else:
        trace.overhead_fraction = 1.0
    return trace


def _estimate_times(t_active, stop, cfg):
    n = int(math.floor((stop - t_active) / cfg.t_coh_s)) + 1
    times = t_active + cfg.t_coh_s * np.arange(n)
    return times[times < stop] if stop > t_active else times[:0]


def _ls_batch(scenario, profile, positions, cfg, rng, sigma2, amp):
    h = _end_to_end(scenario, profile, positions)
    pilots = np.full(cfg.n_plt, amp, dtype=complex)
    noise = math.sqrt(sigma2 / 2.0) * (rng.standard_normal((h.size, cfg.n_plt))
                                        + 1j * rng.standard_normal((h.size, cfg.n_plt)))
    y = h[:, None] * pilots + noise
    h_hat, _ = ls_estimate(np.broadcast_to(pilots, y.shape), y)
    return h_hat


def _find_crossing(segment, profile, t_active, t_end, dt, cfg, snr_at, rng, scenario,
                   sigma2, amp):
    """First time the tracked SNR falls below threshold, or None before exit."""
    thr = cfg.gamma_thr_linear
    if cfg.snr_mode == "los":
        m0 = 0
        n_total = int(math.floor((t_end - t_active) / dt)) + 1
        chunk = _FIRST_LOOKAHEAD
        while m0 < n_total:
            m = np.arange(m0, min(n_total, m0 + chunk))
            times = t_active + m * dt
            times = times[times <= t_end]
            if times.size == 0:
                break
            snr = snr_at(mu_positions(segment, times), profile)
            below = np.flatnonzero(snr < thr)
            if below.size:
                i = below[0]
                return float(times[i]), float(snr[i])
            m0 += chunk
            chunk = min(2 * chunk, _LOOKAHEAD)
        return None, None
    # estimated mode: check the windowed LS SNR at each estimation instant
    times = _estimate_times(t_active, t_end, cfg)
    if times.size == 0:
        return None, None
    # a separate stream keeps the logged estimates independent of the trigger draws
    trig_rng = np.random.default_rng(rng.integers(2 ** 63))
    h_hat = _ls_batch(scenario, profile, mu_positions(segment, times), cfg, trig_rng, sigma2, amp)
    inst = np.abs(h_hat) ** 2 * amp ** 2 / sigma2
    csum = np.cumsum(np.concatenate([[0.0], inst]))
    w = cfg.snr_window
    for i in range(inst.size):
        lo = max(0, i + 1 - w)
        avg = (csum[i + 1] - csum[lo]) / (i + 1 - lo)
        if avg < thr:
            return float(times[i]) + cfg.t_est_s, float(avg)
    return None, None


def _emit_estimates(trace, segment, scenario, profile, t_active, stop, cfg, rng, sigma2, amp,
                    emit, snr_at):
    times = _estimate_times(t_active, stop, cfg)
    if times.size == 0:
        return
    pos = mu_positions(segment, times)
    h_hat = _ls_batch(scenario, profile, pos, cfg, rng, sigma2, amp)
    snr = snr_at(pos, profile)
    for t, p, s, h in zip(times, pos, snr, h_hat):
        emit(t, "estimate", p, s)
        trace.channel_estimates.append(complex(h))


def run_many(scenario, blockage, illum, cfg: ProtocolConfig, speed_m_per_s: float,
             n_seeds: int, base_seed: int = 0) -> list:
    """Monte Carlo over crossings; crossing ``i`` uses seed ``base_seed + i``."""
    traces = []
    for i in range(n_seeds):
        seed = base_seed + i
        seg = sample_crossing(blockage, speed_m_per_s, seed)
        traces.append(run_protocol(scenario, blockage, illum, replace(cfg, rng_seed=seed), seg))
    return traces
