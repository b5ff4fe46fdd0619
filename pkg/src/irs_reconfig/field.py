"""Reflected field, received power and SNR for a given IRS phase profile.

Phase convention: a wave travelling a distance ``d`` picks up ``exp(+j*k*d)``.
The scattering integral is evaluated as a sum over unit cells.  Phases use
exact per-element distances; amplitudes use the panel-center distances
unless ``exact_amplitude`` is set.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    AnglePair,
    CarrierConfig,
    IrsPanel,
    distance,
    distances_to_elements,
    element_positions,
    path_differences,
)

FREE_SPACE_IMPEDANCE = 376.730
ZERO_POWER_DB = -400.0
COMPENSATED_SUM_THRESHOLD = 100_000
_CHUNK = 16_384


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x):
    """Convert to dB, mapping exact zero to the -400 dB sentinel."""
    arr = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.where(arr > 0, 10.0 * np.log10(np.where(arr > 0, arr, 1.0)), ZERO_POWER_DB)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class RadioConfig:
    tx_power_w: float
    tx_directivity: float
    rx_directivity: float
    noise_density_w_per_hz: float
    bandwidth_hz: float
    noise_figure: float
    characteristic_impedance_ohm: float = FREE_SPACE_IMPEDANCE

    def __post_init__(self):
        if self.tx_power_w < 0:
            raise ValueError("transmit power must be nonnegative")
        for name in ("tx_directivity", "rx_directivity", "noise_density_w_per_hz",
                     "bandwidth_hz", "noise_figure", "characteristic_impedance_ohm"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def from_db(cls, tx_power_dbm=10.0, tx_directivity_db=12.0, rx_directivity_db=0.0,
                noise_density_dbm_per_hz=-174.0, bandwidth_hz=20e6, noise_figure_db=6.0,
                impedance_ohm=FREE_SPACE_IMPEDANCE) -> "RadioConfig":
        return cls(
            tx_power_w=db_to_linear(tx_power_dbm) * 1e-3,
            tx_directivity=db_to_linear(tx_directivity_db),
            rx_directivity=db_to_linear(rx_directivity_db),
            noise_density_w_per_hz=db_to_linear(noise_density_dbm_per_hz) * 1e-3,
            bandwidth_hz=bandwidth_hz,
            noise_figure=db_to_linear(noise_figure_db),
            characteristic_impedance_ohm=impedance_ohm,
        )

    @property
    def noise_power_w(self) -> float:
        return self.noise_density_w_per_hz * self.bandwidth_hz * self.noise_figure

    def with_tx_power(self, tx_power_w: float) -> "RadioConfig":
        return RadioConfig(tx_power_w, self.tx_directivity, self.rx_directivity,
                           self.noise_density_w_per_hz, self.bandwidth_hz,
                           self.noise_figure, self.characteristic_impedance_ohm)


def wrap_phase(x):
    """Wrap angles to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(x, dtype=float), 2.0 * np.pi)


@dataclass(frozen=True, eq=False)
class PhaseProfile:
    """Per-element IRS phase shifts, same ordering as ``element_positions``."""

    phases_rad: np.ndarray

    def __post_init__(self):
        ph = wrap_phase(np.array(self.phases_rad, dtype=float).ravel())
        ph.setflags(write=False)
        object.__setattr__(self, "phases_rad", ph)

    def __len__(self):
        return self.phases_rad.shape[0]

    def shifted(self, offset_rad: float) -> "PhaseProfile":
        return PhaseProfile(self.phases_rad + offset_rad)

    def to_rows(self, panel: IrsPanel):
        """Rows of (element_index, y_m, z_m, phase_rad) for CSV export."""
        off = panel.element_local_offsets
        if off.shape[0] != len(self):
            raise ValueError("profile length does not match the panel")
        return [(q, float(off[q, 0]), float(off[q, 1]), float(self.phases_rad[q]))
                for q in range(len(self))]


@dataclass(frozen=True)
class FieldSample:
    e_field: complex
    rx_power_w: float
    snr_linear: float

    @property
    def snr_db(self) -> float:
        return linear_to_db(self.snr_linear)


def _check_profile(panel: IrsPanel, profile: PhaseProfile):
    if len(profile) != panel.element_count:
        raise ValueError(
            f"profile has {len(profile)} phases, panel has {panel.element_count} elements")


def _nonzero_distance(d, what):
    if np.any(np.asarray(d) == 0):
        raise ValueError(f"{what} lies on an IRS element or the panel center")


def incident_amplitude(panel: IrsPanel, bs, radio: RadioConfig) -> float:
    """Incident field amplitude E_i at the panel center, V/m."""
    d_i = distance(bs, panel.center)
    _nonzero_distance(d_i, "BS")
    eta = radio.characteristic_impedance_ohm
    return math.sqrt(2.0 * eta * radio.tx_power_w * radio.tx_directivity / (4.0 * math.pi * d_i ** 2))


def incident_field(panel: IrsPanel, bs, radio: RadioConfig, carrier: CarrierConfig):
    """Incident amplitude (center distance) and exact per-element phases."""
    amp = incident_amplitude(panel, bs, radio)
    d_iq = distances_to_elements(panel, bs)
    _nonzero_distance(d_iq, "BS")
    return amp, carrier.wavenumber_rad_per_m * d_iq


def _row_sum(terms: np.ndarray, compensated: bool) -> np.ndarray:
    if not compensated:
        return terms.sum(axis=-1)
    re = np.array([math.fsum(r) for r in terms.real])
    im = np.array([math.fsum(r) for r in terms.imag])
    return re + 1j * im


def reflected_field_many(panel: IrsPanel, profile: PhaseProfile, bs, points,
                         radio: RadioConfig, carrier: CarrierConfig, *,
                         exact_amplitude: bool = False,
                         compensated: bool | None = None) -> np.ndarray:
    """Complex reflected field E_r at each of the (n, 3) observation points.

    Points are evaluated independently (chunked), so the value at a point
    does not depend on which other points are in the batch.
    """
    _check_profile(panel, profile)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if compensated is None:
        compensated = panel.element_count > COMPENSATED_SUM_THRESHOLD
    k = carrier.wavenumber_rad_per_m
    lam = carrier.wavelength_m
    e_i = incident_amplitude(panel, bs, radio)
    # large common path phases are applied once per point, outside the sum
    d_iq = distances_to_elements(panel, bs)
    _nonzero_distance(d_iq, "BS")
    weight = profile.phases_rad + k * path_differences(panel, bs, d_iq)
    d_i = distance(bs, panel.center)
    if exact_amplitude:
        inc_amp = d_i / d_iq
    else:
        inc_amp = None
    prefactor = panel.tau / (1j * lam) * e_i * panel.cell_area_m2
    center = panel.center.as_array()
    out = np.empty(pts.shape[0], dtype=complex)
    for start in range(0, pts.shape[0], _CHUNK):
        block = pts[start:start + _CHUNK]
        d_rq = distances_to_elements(panel, block)
        _nonzero_distance(d_rq, "observation point")
        d_r = np.linalg.norm(block - center, axis=1)
        _nonzero_distance(d_r, "observation point")
        terms = np.exp(1j * (k * path_differences(panel, block, d_rq) + weight))
        if exact_amplitude:
            terms = terms * (inc_amp / d_rq)
        else:
            terms = terms / d_r[:, None]
        common = np.exp(1j * k * (d_i + d_r))
        out[start:start + block.shape[0]] = prefactor * common * _row_sum(terms, compensated)
    return out


def received_power(e_field, radio: RadioConfig, carrier: CarrierConfig):
    """P_rx = |E_r|^2 / (2 eta) * D_rx lambda^2 / (4 pi)."""
    lam = carrier.wavelength_m
    aperture = radio.rx_directivity * lam ** 2 / (4.0 * math.pi)
    return np.abs(e_field) ** 2 / (2.0 * radio.characteristic_impedance_ohm) * aperture


def snr_many(panel, profile, bs, points, radio, carrier, **kw) -> np.ndarray:
    e = reflected_field_many(panel, profile, bs, points, radio, carrier, **kw)
    return received_power(e, radio, carrier) / radio.noise_power_w


def reflected_field(panel: IrsPanel, profile: PhaseProfile, bs, obs,
                    radio: RadioConfig, carrier: CarrierConfig, **kw) -> FieldSample:
    e = complex(reflected_field_many(panel, profile, bs, [obs], radio, carrier, **kw)[0])
    p = float(received_power(e, radio, carrier))
    return FieldSample(e, p, p / radio.noise_power_w)


def gamma_max(panel: IrsPanel, bs, mu, radio: RadioConfig, carrier: CarrierConfig):
    """Closed-form SNR of ideal focusing at ``mu``.

    ``mu`` may be a single point or an (n, 3) array.
    """
    d_i = distance(bs, panel.center)
    mu = np.asarray(mu, dtype=float)
    d_r = np.linalg.norm(mu - panel.center.as_array(), axis=-1)
    link = radio.tx_power_w * radio.tx_directivity * radio.rx_directivity / radio.noise_power_w
    g = link * (panel.tau * panel.side_y_m * panel.side_z_m / (4.0 * math.pi * d_i * d_r)) ** 2
    return float(g) if np.ndim(g) == 0 else g


def gamma_uniform(panel: IrsPanel, bs_angles: AnglePair, d_i: float, radio: RadioConfig,
                  carrier: CarrierConfig, blockage_area_m2: float) -> float:
    """SNR if all power intercepted by the IRS were spread evenly over the blockage."""
    if not blockage_area_m2 > 0:
        raise ValueError("blockage area must be positive")
    lam = carrier.wavelength_m
    link = radio.tx_power_w * radio.tx_directivity * radio.rx_directivity / radio.noise_power_w
    a_x = max(0.0, bs_angles.a_x)
    return link * (lam / (4.0 * math.pi * d_i)) ** 2 * panel.side_y_m * panel.side_z_m * a_x / blockage_area_m2


@dataclass(frozen=True, eq=False)
class ChannelCoefficients:
    h_incident: np.ndarray
    h_reflect: np.ndarray
    reflect_gain: float
    reflection_magnitude: float = 1.0


def element_gain(panel: IrsPanel, carrier: CarrierConfig) -> float:
    """Effective power gain factor of one unit cell."""
    return 4.0 * math.pi * panel.tau * panel.cell_area_m2 / carrier.wavelength_m ** 2


def build_channel_coefficients(panel: IrsPanel, bs, mu, radio: RadioConfig,
                               carrier: CarrierConfig,
                               reflection_magnitude: float = 1.0) -> ChannelCoefficients:
    """LoS cascaded-channel coefficients that match the scattering sum."""
    lam = carrier.wavelength_m
    k = carrier.wavenumber_rad_per_m
    g = element_gain(panel, carrier)
    d_i = distance(bs, panel.center)
    d_r = distance(mu, panel.center)
    _nonzero_distance([d_i, d_r], "BS or MU")
    d_iq = distances_to_elements(panel, bs)
    d_rq = distances_to_elements(panel, mu)
    # exp(jk d_q) = exp(jk d_0) exp(jk (d_q - d_0)); the split keeps the
    # per-element phases small so cancelling sums stay accurate
    h_i = (math.sqrt(radio.tx_directivity * g) * lam / (4 * math.pi * d_i) * cmath.exp(1j * k * d_i)
           * np.exp(1j * k * path_differences(panel, bs, d_iq)))
    h_r = (math.sqrt(g * radio.rx_directivity) * lam / (4 * math.pi * d_r) * cmath.exp(1j * k * d_r)
           * np.exp(1j * k * path_differences(panel, mu, d_rq)))
    return ChannelCoefficients(h_i, h_r, g, reflection_magnitude)


REFLECTION_PHASE_OFFSET = -math.pi / 2


def reflection_coefficients(coeffs: ChannelCoefficients, profile: PhaseProfile,
                            phase_offset: float = REFLECTION_PHASE_OFFSET) -> np.ndarray:
    return coeffs.reflection_magnitude * np.exp(1j * (profile.phases_rad + phase_offset))


def end_to_end_channel(coeffs: ChannelCoefficients, profile: PhaseProfile,
                       phase_offset: float = REFLECTION_PHASE_OFFSET) -> complex:
    if not (len(coeffs.h_incident) == len(coeffs.h_reflect) == len(profile)):
        raise ValueError("coefficient and profile lengths differ")
    gamma = reflection_coefficients(coeffs, profile, phase_offset)
    return complex(np.sum(coeffs.h_reflect * gamma * coeffs.h_incident))


def baseband_receive(coeffs: ChannelCoefficients, profile: PhaseProfile, symbol: complex,
                     noise: complex = 0.0,
                     phase_offset: float = REFLECTION_PHASE_OFFSET) -> complex:
    """y = sum_q h_r,q Gamma_q h_i,q s + n."""
    return end_to_end_channel(coeffs, profile, phase_offset) * symbol + noise


def field_to_baseband(e_field, radio: RadioConfig, carrier: CarrierConfig):
    """Noiseless received amplitude produced by a field E_r at the MU antenna."""
    lam = carrier.wavelength_m
    scale = math.sqrt(radio.rx_directivity * lam ** 2
                      / (2.0 * radio.characteristic_impedance_ohm * 4.0 * math.pi))
    return scale * np.asarray(e_field)


# ---------------------------------------------------------------------------
# SNR grids

_AXES = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True)
class GridSpec:
    """Rectangular grid through ``origin`` spanned by two global axes."""

    origin: tuple
    axis_u: str = "x"
    axis_v: str = "y"
    u_offsets: tuple = (0.0,)
    v_offsets: tuple = (0.0,)

    def __post_init__(self):
        if self.axis_u not in _AXES or self.axis_v not in _AXES or self.axis_u == self.axis_v:
            raise ValueError("grid axes must be two distinct names out of x, y, z")

    @classmethod
    def regular(cls, origin, axis_u, axis_v, half_u, half_v, step) -> "GridSpec":
        if step <= 0:
            raise ValueError("grid step must be positive")
        nu = int(round(half_u / step))
        nv = int(round(half_v / step))
        return cls(tuple(origin), axis_u, axis_v,
                   tuple(float(i * step) for i in range(-nu, nu + 1)),
                   tuple(float(i * step) for i in range(-nv, nv + 1)))

    def points(self) -> np.ndarray:
        u = np.asarray(self.u_offsets, dtype=float)
        v = np.asarray(self.v_offsets, dtype=float)
        uu, vv = np.meshgrid(u, v, indexing="ij")
        pts = np.tile(np.asarray(self.origin, dtype=float), (uu.size, 1))
        pts[:, _AXES[self.axis_u]] += uu.ravel()
        pts[:, _AXES[self.axis_v]] += vv.ravel()
        return pts


@dataclass(frozen=True, eq=False)
class SnrGrid:
    origin: tuple
    axis_u: str
    axis_v: str
    u_offsets: np.ndarray
    v_offsets: np.ndarray
    snr_db: np.ndarray = field(repr=False)

    @property
    def dims(self) -> tuple[int, int]:
        return self.snr_db.shape

    def rows(self):
        for i, u in enumerate(self.u_offsets):
            for j, v in enumerate(self.v_offsets):
                yield float(u), float(v), float(self.snr_db[i, j])


def snr_map(panel, profile, bs, grid: GridSpec, radio, carrier, **kw) -> SnrGrid:
    snr = snr_many(panel, profile, bs, grid.points(), radio, carrier, **kw)
    u = np.asarray(grid.u_offsets, dtype=float)
    v = np.asarray(grid.v_offsets, dtype=float)
    return SnrGrid(tuple(grid.origin), grid.axis_u, grid.axis_v, u, v,
                   linear_to_db(snr).reshape(u.size, v.size))


__all__ = [
    "FREE_SPACE_IMPEDANCE", "ZERO_POWER_DB", "RadioConfig", "PhaseProfile", "FieldSample",
    "ChannelCoefficients", "GridSpec", "SnrGrid", "wrap_phase", "db_to_linear", "linear_to_db",
    "incident_amplitude", "incident_field", "reflected_field", "reflected_field_many",
    "received_power", "snr_many", "snr_map", "gamma_max", "gamma_uniform", "element_gain",
    "build_channel_coefficients", "baseband_receive", "end_to_end_channel", "field_to_baseband",
    "element_positions",
]
