"""IRS phase-shift profiles: focusing, wide illumination and far-field designs.

All designs share the field engine's convention (propagation phase
``exp(+j*k*d)``), so a profile cancels the incident and reflected path
phases it is designed for.  Far-field designs take direction cosines of
unit vectors pointing *away* from the panel towards the BS and the MU.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .field import PhaseProfile
from .geometry import (
    AnglePair,
    BlockageArea,
    CarrierConfig,
    IrsPanel,
    Point3,
    distances_to_elements,
    element_positions,
)


@dataclass(frozen=True)
class IlluminationSpec:
    """Δ×Δ square to illuminate, parallel to the x-y plane at ``center``'s height.

    ``center=None`` means "follow the MU": the protocol fills it with the
    localized MU position before each design.
    """

    center: Point3 | None = None
    delta_m: float = 0.0

    def __post_init__(self):
        if self.delta_m < 0:
            raise ValueError("illumination width must be nonnegative")
        if self.center is not None:
            object.__setattr__(self, "center", Point3.of(self.center))

    def centered_at(self, point) -> "IlluminationSpec":
        return IlluminationSpec(Point3.of(point), self.delta_m)


def _incident_phases(panel: IrsPanel, bs, carrier: CarrierConfig) -> np.ndarray:
    return carrier.wavenumber_rad_per_m * distances_to_elements(panel, bs)


def focus_profile(panel: IrsPanel, bs, target, carrier: CarrierConfig) -> PhaseProfile:
    """Phase shifts that bring every element's contribution in phase at ``target``."""
    d_r = distances_to_elements(panel, target)
    if np.any(d_r == 0):
        raise ValueError("focus target lies on the panel")
    k = carrier.wavenumber_rad_per_m
    return PhaseProfile(-k * d_r - _incident_phases(panel, bs, carrier))


def illumination_map(panel: IrsPanel, spec: IlluminationSpec) -> np.ndarray:
    """Map each element to its point in the illumination square, (Q, 3).

    Local z of the panel spreads along global x and local y along global y,
    so the panel edges land exactly on the square's edges.
    """
    if not panel.is_square:
        raise ValueError("the square illumination mapping needs L_y == L_z")
    if spec.center is None:
        raise ValueError("illumination center is not set")
    scale = spec.delta_m / panel.side_y_m
    off = panel.element_local_offsets
    c = spec.center
    m = np.empty((off.shape[0], 3))
    m[:, 0] = scale * off[:, 1] + c.x
    m[:, 1] = scale * off[:, 0] + c.y
    m[:, 2] = c.z
    return m


def wide_profile(panel: IrsPanel, bs, spec: IlluminationSpec, carrier: CarrierConfig) -> PhaseProfile:
    """Each element focuses on its mapped point, minus that point's reference path."""
    k = carrier.wavenumber_rad_per_m
    targets = illumination_map(panel, spec)
    elems = element_positions(panel)
    to_elem = np.linalg.norm(targets - elems, axis=1)
    to_center = np.linalg.norm(targets - panel.center.as_array(), axis=1)
    if np.any(to_elem == 0):
        raise ValueError("illumination square touches the panel")
    return PhaseProfile(-k * (to_elem - to_center) - _incident_phases(panel, bs, carrier))


def full_illumination_profile(panel: IrsPanel, bs, blockage: BlockageArea,
                              carrier: CarrierConfig) -> PhaseProfile:
    """Fixed profile whose Δ×Δ square circumscribes the whole blockage disc."""
    spec = IlluminationSpec(blockage.center, blockage.diameter_m)
    return wide_profile(panel, bs, spec, carrier)


def farfield_linear_profile(panel: IrsPanel, incident: AnglePair, departure: AnglePair,
                            carrier: CarrierConfig) -> PhaseProfile:
    """Linear phase gradient that steers a far-field BS beam towards ``departure``.

    Matches the far-field limit of :func:`focus_profile` up to a constant.
    """
    k = carrier.wavenumber_rad_per_m
    a_y = incident.a_y + departure.a_y
    a_z = incident.a_z + departure.a_z
    off = panel.element_local_offsets
    return PhaseProfile(k * (a_y * off[:, 0] + a_z * off[:, 1]))


@dataclass(frozen=True)
class FarFieldSpec:
    """Window of summed direction cosines (incident + departure) to cover."""

    ay_min: float
    ay_max: float
    az_min: float
    az_max: float
    side_m: float

    def __post_init__(self):
        if self.ay_min > self.ay_max or self.az_min > self.az_max:
            raise ValueError("direction-cosine window has min > max")
        if not self.side_m > 0:
            raise ValueError("panel side must be positive")

    @property
    def a_y(self) -> float:
        return (self.ay_max - self.ay_min) / self.side_m

    @property
    def b_y(self) -> float:
        return (self.ay_max + self.ay_min) / 2.0

    @property
    def a_z(self) -> float:
        return (self.az_max - self.az_min) / self.side_m

    @property
    def b_z(self) -> float:
        return (self.az_max + self.az_min) / 2.0


def farfield_quadratic_profile(panel: IrsPanel, spec: FarFieldSpec,
                               carrier: CarrierConfig) -> PhaseProfile:
    """Quadratic profile spreading the far-field beam over a direction window."""
    k = carrier.wavenumber_rad_per_m
    y = panel.element_local_offsets[:, 0]
    z = panel.element_local_offsets[:, 1]
    return PhaseProfile(k * (spec.a_y * y ** 2 + spec.b_y * y + spec.a_z * z ** 2 + spec.b_z * z))


def quantize_profile(profile: PhaseProfile, bits: int) -> PhaseProfile:
    """Round phases to the nearest of 2**bits uniform levels."""
    if bits < 1:
        raise ValueError("need at least one bit")
    step = 2.0 * math.pi / (1 << bits)
    return PhaseProfile(np.round(profile.phases_rad / step) * step)
