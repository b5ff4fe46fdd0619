import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from irs_reconfig.geometry import (
    SPEED_OF_LIGHT,
    AnglePair,
    BlockageArea,
    CarrierConfig,
    IrsPanel,
    Point3,
    distance,
    distances_to_elements,
    element_positions,
    far_field_distance,
    fraunhofer_distance,
    hex_disc_grid,
    incidence_angles,
    passive_tau,
    path_differences,
)

IRS = (0.0, 50.0, 5.0)
BS = (30.0, 0.0, 10.0)
MU = (20.0, 60.0, 1.0)

coord = st.floats(-100, 100, allow_nan=False)
points = st.tuples(coord, coord, coord)


def test_carrier_constants():
    c = CarrierConfig(3e9)
    assert c.wavelength_m == SPEED_OF_LIGHT / 3e9
    assert c.wavenumber_rad_per_m == pytest.approx(2 * math.pi / c.wavelength_m, rel=1e-15)
    with pytest.raises(ValueError):
        CarrierConfig(0.0)


def test_caption_distances():
    assert distance(BS, IRS) == pytest.approx(58.52, abs=5e-3)
    assert distance(MU, IRS) == pytest.approx(22.72, abs=5e-3)
    assert round(distance(BS, IRS)) == 59 or abs(distance(BS, IRS) - 58) < 1
    assert abs(distance(MU, IRS) - 22) < 1
    assert distance(BS, BS) == 0.0


@settings(max_examples=200, deadline=None)
@given(points, points, points)
def test_distance_is_a_metric(a, b, c):
    assert distance(a, b) == distance(b, a)
    assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9


def test_fig3_panel_has_100_elements():
    panel = IrsPanel.square(IRS, 0.5, CarrierConfig(3e9))
    assert panel.shape == (10, 10)
    assert panel.element_count == 100
    assert len(element_positions(panel)) == 100


def test_28ghz_panel_element_count():
    panel = IrsPanel.square(IRS, 0.5, CarrierConfig(28e9))
    assert panel.element_count == 93 * 93


def test_fig3_centroid_is_panel_center():
    panel = IrsPanel.square(IRS, 0.5, CarrierConfig(3e9))
    assert np.max(np.abs(element_positions(panel).mean(axis=0) - IRS)) < 1e-12


def test_single_element_sits_at_center():
    panel = IrsPanel(IRS, 0.1, 0.1, 0.1, 0.1)
    assert panel.element_count == 1
    np.testing.assert_array_equal(element_positions(panel), [IRS])


def test_fractional_cells_are_dropped_not_stretched():
    panel = IrsPanel(IRS, 1.0, 0.5, 0.3, 0.2)
    assert panel.shape == (3, 2)
    off = panel.element_local_offsets
    assert np.allclose(np.diff(np.unique(off[:, 0])), 0.3)
    assert np.allclose(np.diff(np.unique(off[:, 1])), 0.2)


@pytest.mark.parametrize("kw", [dict(spacing_y_m=0.0), dict(spacing_z_m=-0.1),
                                dict(side_y_m=0.01), dict(tau=1.5)])
def test_panel_rejects_bad_dimensions(kw):
    args = dict(center=IRS, side_y_m=0.5, side_z_m=0.5, spacing_y_m=0.05, spacing_z_m=0.05)
    args.update(kw)
    with pytest.raises(ValueError):
        IrsPanel(**args)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 2.0), st.floats(0.05, 2.0), st.floats(0.01, 0.05), st.floats(0.01, 0.05))
def test_grid_invariants(ly, lz, dy, dz):
    panel = IrsPanel(IRS, ly, lz, dy, dz)
    off = panel.element_local_offsets
    ny, nz = panel.shape
    assert ny == math.floor(ly / dy + 1e-9) and nz == math.floor(lz / dz + 1e-9)
    assert panel.element_count == ny * nz == len(off)
    assert np.all(np.abs(off[:, 0]) <= ly / 2 + 1e-12)
    assert np.all(np.abs(off[:, 1]) <= lz / 2 + 1e-12)
    assert np.max(np.abs(off.mean(axis=0))) < 1e-12
    pos = element_positions(panel)
    centroid = [math.fsum(pos[:, k]) / len(pos) for k in range(3)]
    assert np.max(np.abs(np.subtract(centroid, IRS))) < 1e-12
    # panel lies in a constant-x plane
    assert np.all(element_positions(panel)[:, 0] == IRS[0])


def test_distances_to_elements_matches_loop():
    panel = IrsPanel.square(IRS, 0.5, CarrierConfig(3e9))
    pts = np.array([BS, MU])
    got = distances_to_elements(panel, pts)
    want = [[math.dist(p, e) for e in element_positions(panel)] for p in pts]
    np.testing.assert_allclose(got, want, rtol=1e-14)
    np.testing.assert_allclose(distances_to_elements(panel, BS), want[0], rtol=1e-14)


def test_incidence_angles_boresight_and_zenith():
    panel = IrsPanel.square(IRS, 0.5, CarrierConfig(3e9))
    a = incidence_angles((10.0, 50.0, 5.0), panel)
    assert a.theta_rad == pytest.approx(math.pi / 2)
    assert a.phi_rad == pytest.approx(0.0)
    assert a.a_x == pytest.approx(1.0)
    z = incidence_angles((0.0, 50.0, 9.0), panel)
    assert z.theta_rad == pytest.approx(0.0)
    assert z.a_z == pytest.approx(1.0)
    with pytest.raises(ValueError):
        incidence_angles(IRS, panel)


def test_incidence_angles_match_normalized_vector():
    panel = IrsPanel.square(IRS, 0.5, CarrierConfig(3e9))
    v = np.array([30.0, -50.0, 5.0])
    u = v / math.sqrt(30 ** 2 + 50 ** 2 + 5 ** 2)
    a = incidence_angles(BS, panel)
    np.testing.assert_allclose([a.a_x, a.a_y, a.a_z], u, atol=1e-14)


@settings(max_examples=200, deadline=None)
@given(points)
def test_direction_cosines_unit_norm(p):
    v = np.asarray(p)
    if np.linalg.norm(v) < 1e-6:
        return
    a = AnglePair.from_direction(v)
    assert 0.0 <= a.theta_rad <= math.pi
    assert -math.pi < a.phi_rad <= math.pi
    assert abs(a.a_x ** 2 + a.a_y ** 2 + a.a_z ** 2 - 1.0) <= 1e-12
    np.testing.assert_allclose(a.unit_vector(), v / np.linalg.norm(v), atol=1e-12)


def test_negative_x_axis_azimuth_is_pi():
    assert AnglePair.from_direction((-1.0, -0.0, 0.0)).phi_rad == math.pi


def test_fraunhofer_distances():
    for f, want, tol in ((3e9, 40.0, 0.05), (28e9, 373.6, 0.05)):
        car = CarrierConfig(f)
        panel = IrsPanel.square(IRS, 0.5, car)
        assert fraunhofer_distance(panel, car) == pytest.approx(want, abs=tol)
    assert far_field_distance(0.0, 0.0, CarrierConfig(3e9)) == 0.0


def test_passive_tau_is_sqrt_of_projected_fraction():
    panel = IrsPanel.square(IRS, 0.5, CarrierConfig(3e9))
    assert passive_tau((10.0, 50.0, 5.0), panel) == pytest.approx(1.0)
    assert passive_tau(BS, panel) == pytest.approx(math.sqrt(30 / distance(BS, IRS)))
    with pytest.raises(ValueError):
        passive_tau((-5.0, 50.0, 5.0), panel)


def test_blockage_area():
    b = BlockageArea((20, 60, 1), 10.0)
    assert b.radius_m == 5.0
    assert b.area_m2 == pytest.approx(25 * math.pi)
    with pytest.raises(ValueError):
        BlockageArea((0, 0, 0), -1.0)


def test_hex_grid_point_disc():
    g = hex_disc_grid((20, 60, 1), 0.0, 0.1)
    np.testing.assert_array_equal(g, [[20, 60, 1]])


@settings(max_examples=25, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(0.03, 0.2))
def test_hex_grid_covers_disc(diameter, spacing):
    c = np.array([20.0, 60.0, 1.0])
    g = hex_disc_grid(c, diameter, spacing)
    r = np.hypot(g[:, 0] - c[0], g[:, 1] - c[1])
    assert np.all(r <= diameter / 2 * (1 + 1e-9))
    assert np.all(g[:, 2] == c[2])
    assert np.any(np.all(g == c, axis=1))
    # density of a hexagonal packing: one point per s^2 sqrt(3)/2
    expected = math.pi * (diameter / 2) ** 2 / (spacing ** 2 * math.sqrt(3) / 2)
    if expected > 200:
        assert len(g) == pytest.approx(expected, rel=0.15)


def test_hex_grid_nearest_neighbour_spacing():
    g = hex_disc_grid((0, 0, 0), 1.0, 0.1)
    d = np.linalg.norm(g[:, None, :2] - g[None, :, :2], axis=-1)
    np.fill_diagonal(d, np.inf)
    np.testing.assert_allclose(d.min(axis=1), 0.1, rtol=1e-9)


def test_point3_rejects_non_finite():
    with pytest.raises(ValueError):
        Point3.of((0.0, math.nan, 1.0))


def test_path_differences_keep_precision():
    car = CarrierConfig(28e9)
    panel = IrsPanel.square((1.0, -3.0, 2.0), 0.3, car)
    far = np.array([[4000.0, 1500.0, -800.0], [3.0, -2.9, 2.2]])
    got = path_differences(panel, far)
    # long double oracle; naive float64 subtraction is off by ~1e-12 m here
    e = element_positions(panel).astype(np.longdouble)
    c = np.array(panel.center, dtype=np.longdouble)
    for row, p in zip(got, far.astype(np.longdouble)):
        want = np.sqrt(((p - e) ** 2).sum(1)) - np.sqrt(((p - c) ** 2).sum())
        np.testing.assert_allclose(row, want.astype(float), rtol=1e-13, atol=1e-14)
    np.testing.assert_array_equal(path_differences(panel, far[1]), got[1])
