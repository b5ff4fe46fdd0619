"""Coordinate handling, IRS panel discretization and angles.

The IRS panel lies in a plane of constant global x.  Its local frame is a
pure translation of the global frame: local ``y`` and ``z`` run along the
global axes and the panel normal points along +x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

# Guards floor(L/d) against L/d landing a hair below an integer.
_GRID_EPS = 1e-9


class Point3(NamedTuple):
    """A point in the global frame, meters."""

    x: float
    y: float
    z: float

    @classmethod
    def of(cls, p) -> "Point3":
        x, y, z = (float(v) for v in p)
        if not all(math.isfinite(v) for v in (x, y, z)):
            raise ValueError(f"non-finite point {p!r}")
        return cls(x, y, z)

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


@dataclass(frozen=True)
class CarrierConfig:
    frequency_hz: float

    def __post_init__(self):
        if not self.frequency_hz > 0:
            raise ValueError("carrier frequency must be positive")

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.frequency_hz

    @property
    def wavenumber_rad_per_m(self) -> float:
        return 2.0 * math.pi / self.wavelength_m


@dataclass(frozen=True)
class IrsPanel:
    """Rectangular IRS discretized into a uniform grid of unit cells.

    Elements are ordered with the y index major and the z index minor,
    i.e. ``q = iy * n_z + iz``.
    """

    center: Point3
    side_y_m: float
    side_z_m: float
    spacing_y_m: float
    spacing_z_m: float
    tau: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", Point3.of(self.center))
        if self.spacing_y_m <= 0 or self.spacing_z_m <= 0:
            raise ValueError("element spacing must be positive")
        if self.side_y_m < self.spacing_y_m or self.side_z_m < self.spacing_z_m:
            raise ValueError("panel side is smaller than the element spacing")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must lie in [0, 1]")

    @classmethod
    def square(cls, center, side_m: float, carrier: CarrierConfig,
               spacing_wavelengths: float = 0.5, tau: float = 1.0) -> "IrsPanel":
        d = spacing_wavelengths * carrier.wavelength_m
        return cls(center, side_m, side_m, d, d, tau)

    @property
    def shape(self) -> tuple[int, int]:
        n_y = int(math.floor(self.side_y_m / self.spacing_y_m + _GRID_EPS))
        n_z = int(math.floor(self.side_z_m / self.spacing_z_m + _GRID_EPS))
        return n_y, n_z

    @property
    def element_count(self) -> int:
        n_y, n_z = self.shape
        return n_y * n_z

    @property
    def cell_area_m2(self) -> float:
        return self.spacing_y_m * self.spacing_z_m

    @property
    def is_square(self) -> bool:
        return math.isclose(self.side_y_m, self.side_z_m, rel_tol=1e-12)

    @cached_property
    def element_local_offsets(self) -> np.ndarray:
        """(Q, 2) array of cell-center (y, z) offsets with zero centroid."""
        n_y, n_z = self.shape
        ys = (np.arange(n_y) - (n_y - 1) / 2.0) * self.spacing_y_m
        zs = (np.arange(n_z) - (n_z - 1) / 2.0) * self.spacing_z_m
        yy, zz = np.meshgrid(ys, zs, indexing="ij")
        offsets = np.column_stack([yy.ravel(), zz.ravel()])
        offsets.setflags(write=False)
        return offsets


def element_positions(panel: IrsPanel) -> np.ndarray:
    """Global (Q, 3) coordinates of the element centers."""
    off = panel.element_local_offsets
    pts = np.empty((off.shape[0], 3))
    pts[:, 0] = panel.center.x
    pts[:, 1] = panel.center.y + off[:, 0]
    pts[:, 2] = panel.center.z + off[:, 1]
    return pts


def distance(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))


def distances_to_elements(panel: IrsPanel, points) -> np.ndarray:
    """Exact distances from each point to each element.

    ``points`` is a single point or an (n, 3) array; the result has shape
    (Q,) or (n, Q) accordingly.
    """
    pts = np.asarray(points, dtype=float)
    elems = element_positions(panel)
    diff = pts[..., None, :] - elems
    return np.sqrt(np.einsum("...qk,...qk->...q", diff, diff))


def path_differences(panel: IrsPanel, points, d_q: np.ndarray | None = None) -> np.ndarray:
    """Per-element distance minus center distance, same shapes as above.

    Computed as (|o|^2 - 2 v.o) / (d_q + d_0) so the small difference keeps
    full relative precision instead of cancelling two large distances.
    """
    v = np.asarray(points, dtype=float) - panel.center.as_array()
    off = panel.element_local_offsets
    if d_q is None:
        d_q = distances_to_elements(panel, points)
    d_0 = np.linalg.norm(v, axis=-1)[..., None]
    # elementwise, so a point's result does not depend on the batch shape
    dot = v[..., 1, None] * off[:, 0] + v[..., 2, None] * off[:, 1]
    num = (off[:, 0] ** 2 + off[:, 1] ** 2) - 2.0 * dot
    return num / (d_q + d_0)


@dataclass(frozen=True)
class AnglePair:
    """Elevation (from local +z) and azimuth (from local +x) of a direction."""

    theta_rad: float
    phi_rad: float

    @classmethod
    def from_direction(cls, v) -> "AnglePair":
        v = np.asarray(v, dtype=float)
        n = np.linalg.norm(v)
        if n == 0:
            raise ValueError("zero-length direction")
        x, y, z = v / n
        # atan2 keeps precision near the poles, where acos(z) does not
        theta = math.atan2(math.hypot(x, y), z)
        phi = math.atan2(y, x)
        if phi == -math.pi:
            phi = math.pi
        return cls(theta, phi)

    @classmethod
    def from_direction_cosines(cls, a_y: float, a_z: float, a_x: float | None = None) -> "AnglePair":
        """Angles for given (A_y, A_z); A_x defaults to the front half-space root."""
        if a_x is None:
            a_x = math.sqrt(max(0.0, 1.0 - a_y * a_y - a_z * a_z))
        return cls.from_direction((a_x, a_y, a_z))

    @property
    def a_x(self) -> float:
        return math.sin(self.theta_rad) * math.cos(self.phi_rad)

    @property
    def a_y(self) -> float:
        return math.sin(self.theta_rad) * math.sin(self.phi_rad)

    @property
    def a_z(self) -> float:
        return math.cos(self.theta_rad)

    def unit_vector(self) -> np.ndarray:
        return np.array([self.a_x, self.a_y, self.a_z])


def incidence_angles(source, panel: IrsPanel) -> AnglePair:
    """Direction from the panel center towards ``source`` in the local frame."""
    v = np.asarray(source, dtype=float) - panel.center.as_array()
    if not np.any(v):
        raise ValueError("source coincides with the panel center")
    return AnglePair.from_direction(v)


def passive_tau(source, panel: IrsPanel) -> float:
    """Largest reflection magnitude that re-radiates no more than the panel intercepts.

    The panel captures the incident flux over its projected area L_y L_z A_x,
    so the scattered field can be at most sqrt(A_x) of the incident one.
    """
    a_x = incidence_angles(source, panel).a_x
    if a_x <= 0:
        raise ValueError("source lies behind the panel")
    return math.sqrt(a_x)


def fraunhofer_distance(panel: IrsPanel, carrier: CarrierConfig) -> float:
    return 8.0 * (panel.side_y_m ** 2 + panel.side_z_m ** 2) / carrier.wavelength_m


def far_field_distance(side_y_m: float, side_z_m: float, carrier: CarrierConfig) -> float:
    """Fraunhofer distance for raw side lengths (allows a zero-size panel)."""
    return 8.0 * (side_y_m ** 2 + side_z_m ** 2) / carrier.wavelength_m


@dataclass(frozen=True)
class BlockageArea:
    """Circular region without direct BS coverage, at the MU height."""

    center: Point3
    diameter_m: float

    def __post_init__(self):
        object.__setattr__(self, "center", Point3.of(self.center))
        if self.diameter_m < 0:
            raise ValueError("blockage diameter must be nonnegative")

    @property
    def radius_m(self) -> float:
        return self.diameter_m / 2.0

    @property
    def area_m2(self) -> float:
        return math.pi * self.radius_m ** 2


def hex_disc_grid(center, diameter_m: float, spacing_m: float) -> np.ndarray:
    """Hexagonally packed points covering a horizontal disc, center included.

    Rows run along x with pitch ``spacing_m``; odd rows are shifted by half
    a pitch and rows are ``spacing_m * sqrt(3)/2`` apart along y.
    """
    if spacing_m <= 0:
        raise ValueError("grid spacing must be positive")
    c = np.asarray(center, dtype=float)
    r = diameter_m / 2.0
    if r == 0:
        return c[None, :].copy()
    dy = spacing_m * math.sqrt(3.0) / 2.0
    n_rows = int(math.floor(r / dy))
    n_cols = int(math.floor(r / spacing_m)) + 1
    rows = []
    for j in range(-n_rows, n_rows + 1):
        y = j * dy
        shift = 0.5 * spacing_m if j % 2 else 0.0
        xs = (np.arange(-n_cols, n_cols + 1) * spacing_m) + shift
        keep = xs * xs + y * y <= r * r * (1 + 1e-12)
        xs = xs[keep]
        rows.append(np.column_stack([xs, np.full(xs.shape, y)]))
    xy = np.concatenate(rows)
    out = np.empty((xy.shape[0], 3))
    out[:, 0] = c[0] + xy[:, 0]
    out[:, 1] = c[1] + xy[:, 1]
    out[:, 2] = c[2]
    return out
