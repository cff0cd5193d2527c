import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sonarflow.geometry import (
    DEFAULT_GEOMETRY,
    SonarGeometry,
    cartesian_to_polar,
    cell_centers,
    fan_bounds,
    meters_per_bin,
    polar_to_cartesian,
    rasterize,
)


class TestGeometryInvariants:
    def test_rejects_bad_ranges(self):
        with pytest.raises(ValueError):
            SonarGeometry(128, 0.5, 5.0, 5.0, 512, 10.0)
        with pytest.raises(ValueError):
            SonarGeometry(1, 0.5, 1.0, 21.0, 512, 10.0)
        with pytest.raises(ValueError):
            SonarGeometry(128, 0.5, 1.0, 21.0, 512, 0.0)

    def test_beam_angles_strictly_increasing(self, geom):
        angles = geom.beam_angle(np.arange(geom.beam_count))
        assert np.all(np.diff(angles) > 0)
        assert angles[0] == pytest.approx(-0.25)
        assert angles[-1] == pytest.approx(0.25)


class TestPolarToCartesian:
    def test_center_beam_points_straight_ahead(self, geom):
        # fractional center index 63.5 has angle exactly 0 by symmetry
        bin_at_10m = (10.0 - geom.range_min_m) / meters_per_bin(geom)
        x, y = polar_to_cartesian(geom, 63.5, bin_at_10m)
        assert x == pytest.approx(0.0, abs=1e-12)
        assert y == pytest.approx(10.0)

    def test_edge_beam_by_direct_trigonometry(self, geom):
        bin_at_10m = (10.0 - geom.range_min_m) / meters_per_bin(geom)
        x, y = polar_to_cartesian(geom, 0.0, bin_at_10m)
        assert x == pytest.approx(10.0 * math.sin(-0.25))
        assert y == pytest.approx(10.0 * math.cos(-0.25))

    def test_bin_zero_is_range_min(self, geom):
        for beam in (0.0, 17.0, geom.beam_count - 1.0):
            x, y = polar_to_cartesian(geom, beam, 0.0)
            assert math.hypot(x, y) == pytest.approx(geom.range_min_m)

    def test_out_of_range_indices_rejected(self, geom):
        with pytest.raises(ValueError):
            polar_to_cartesian(geom, -0.1, 0.0)
        with pytest.raises(ValueError):
            polar_to_cartesian(geom, 0.0, geom.range_bin_count)

    @given(
        beam=st.floats(0, 127),
        rbin=st.floats(0, 511),
    )
    @settings(max_examples=100, deadline=None)
    def test_round_trip_within_half_cell(self, beam, rbin):
        geom = DEFAULT_GEOMETRY
        x, y = polar_to_cartesian(geom, beam, rbin)
        beam_back, bin_back = cartesian_to_polar(geom, x, y)
        assert abs(beam_back - beam) < 0.5
        assert abs(bin_back - rbin) < 0.5

    def test_radius_monotone_in_bin_and_angle_in_beam(self, geom):
        bins = np.arange(geom.range_bin_count, dtype=float)
        x, y = polar_to_cartesian(geom, np.full_like(bins, 20.0), bins)
        assert np.all(np.diff(np.hypot(x, y)) > 0)
        beams = np.arange(geom.beam_count, dtype=float)
        x, y = polar_to_cartesian(geom, beams, np.full_like(beams, 100.0))
        assert np.all(np.diff(np.arctan2(x, y)) > 0)


class TestMetersPerBin:
    def test_spec_arithmetic(self):
        g = SonarGeometry(128, 0.5, 1.0, 21.0, 201, 10.0)
        assert meters_per_bin(g) == pytest.approx(0.1)

    def test_two_point_case(self):
        g = SonarGeometry(2, 0.5, 0.0, 10.0, 2, 1.0)
        assert meters_per_bin(g) == pytest.approx(10.0)

    @given(
        rmin=st.floats(0, 5),
        span=st.floats(0.1, 50),
        bins=st.integers(2, 4096),
    )
    @settings(max_examples=50, deadline=None)
    def test_always_positive(self, rmin, span, bins):
        g = SonarGeometry(4, 0.3, rmin, rmin + span, bins, 10.0)
        assert meters_per_bin(g) > 0


class TestRasterize:
    def test_zero_frame_gives_zero_raster(self, small_geom):
        values = np.zeros((small_geom.beam_count, small_geom.range_bin_count))
        raster = rasterize(values, small_geom, 0.05)
        assert not raster.values.any()

    def test_single_cell_lands_on_one_pixel(self, geom):
        values = np.zeros((geom.beam_count, geom.range_bin_count))
        bin_at_10m = round((10.0 - geom.range_min_m) / meters_per_bin(geom))
        values[64, bin_at_10m] = 1.0
        raster = rasterize(values, geom, 0.05)
        rows, cols = np.nonzero(raster.values)
        assert len(rows) == 1
        x_world = raster.origin_m[0] + (cols[0] + 0.5) * 0.05
        y_world = raster.origin_m[1] + (rows[0] + 0.5) * 0.05
        x_true, y_true = polar_to_cartesian(geom, 64.0, float(bin_at_10m))
        assert abs(x_world - x_true) <= 0.5 * 0.05 + 1e-9
        assert abs(y_world - y_true) <= 0.5 * 0.05 + 1e-9

    @pytest.mark.parametrize("mpp", [0.1, 0.15])
    def test_full_fan_area_matches_analytic_sector(self, geom, mpp):
        # lit region = entire fan; raster area must match the analytic
        # annular-sector area within one pixel-area per boundary pixel
        values = np.ones((geom.beam_count, geom.range_bin_count))
        raster = rasterize(values, geom, mpp)
        filled = raster.values > 0
        area_px = filled.sum() * mpp * mpp
        sector = 0.5 * geom.beam_fov_rad * (geom.range_max_m**2 - geom.range_min_m**2)
        interior = (
            filled
            & np.roll(filled, 1, 0)
            & np.roll(filled, -1, 0)
            & np.roll(filled, 1, 1)
            & np.roll(filled, -1, 1)
        )
        boundary_px = int(filled.sum() - interior.sum())
        assert abs(area_px - sector) <= boundary_px * mpp * mpp

    def test_rejects_nonpositive_resolution(self, small_geom):
        values = np.zeros((small_geom.beam_count, small_geom.range_bin_count))
        with pytest.raises(ValueError):
            rasterize(values, small_geom, 0.0)


def test_fan_bounds_cover_all_cells(geom):
    x_min, x_max, y_min, y_max = fan_bounds(geom)
    xs, ys = cell_centers(geom)
    assert xs.min() >= x_min - 1e-9 and xs.max() <= x_max + 1e-9
    assert ys.min() >= y_min - 1e-9 and ys.max() <= y_max + 1e-9
