"""Polar sonar coordinate model and conversions.

A frame is a (beam_count, range_bin_count) intensity grid.  Axis 0 is the
beam axis (x in box coordinates), axis 1 the range-bin axis (y).  Beams are
evenly spaced across the field of view and centered on 0; world coordinates
put +y along the center beam and +x toward increasing beam index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SonarGeometry:
    """Beam/range calibration of an imaging sonar.

    Parameters
    ----------
    beam_count : int
        Number of beams, >= 2.  Beam ``i`` points at
        ``-beam_fov_rad/2 + i * beam_fov_rad/(beam_count-1)``.
    beam_fov_rad : float
        Total angular field of view in radians.
    range_min_m, range_max_m : float
        Range of the first and last range bin, in meters.
    range_bin_count : int
        Number of range bins, >= 2.
    frame_rate_hz : float
        Frames per second, > 0.
    """

    beam_count: int
    beam_fov_rad: float
    range_min_m: float
    range_max_m: float
    range_bin_count: int
    frame_rate_hz: float

    def __post_init__(self) -> None:
        if self.beam_count < 2:
            raise ValueError("beam_count must be >= 2")
        if self.range_bin_count < 2:
            raise ValueError("range_bin_count must be >= 2")
        if not self.beam_fov_rad > 0:
            raise ValueError("beam_fov_rad must be > 0")
        if self.range_min_m < 0 or not self.range_min_m < self.range_max_m:
            raise ValueError("require 0 <= range_min_m < range_max_m")
        if not self.frame_rate_hz > 0:
            raise ValueError("frame_rate_hz must be > 0")

    @property
    def meters_per_bin(self) -> float:
        return (self.range_max_m - self.range_min_m) / (self.range_bin_count - 1)

    @property
    def radians_per_beam(self) -> float:
        return self.beam_fov_rad / (self.beam_count - 1)

    def beam_angle(self, beam_idx):
        """Angle of (possibly fractional) beam index, radians from center."""
        return -self.beam_fov_rad / 2.0 + np.asarray(beam_idx, dtype=float) * self.radians_per_beam

    def bin_range(self, bin_idx):
        """Range in meters of a (possibly fractional) bin index."""
        return self.range_min_m + np.asarray(bin_idx, dtype=float) * self.meters_per_bin


# Plausible ARIS-scale defaults used across examples and tests.
DEFAULT_GEOMETRY = SonarGeometry(
    beam_count=128,
    beam_fov_rad=0.5,
    range_min_m=1.0,
    range_max_m=21.0,
    range_bin_count=512,
    frame_rate_hz=10.0,
)


def meters_per_bin(geom: SonarGeometry) -> float:
    return geom.meters_per_bin


def polar_to_cartesian(geom: SonarGeometry, beam_idx, bin_idx):
    """Map (beam, bin) grid indices to world (x_m, y_m).

    Indices may be fractional and are interpolated linearly; they must lie
    inside the grid (``0 <= beam_idx <= beam_count-1`` and likewise for
    bins), otherwise a ValueError is raised.
    """
    beam = np.asarray(beam_idx, dtype=float)
    rbin = np.asarray(bin_idx, dtype=float)
    if np.any(beam < 0) or np.any(beam > geom.beam_count - 1):
        raise ValueError(f"beam_idx out of range [0, {geom.beam_count - 1}]")
    if np.any(rbin < 0) or np.any(rbin > geom.range_bin_count - 1):
        raise ValueError(f"bin_idx out of range [0, {geom.range_bin_count - 1}]")
    r = geom.bin_range(rbin)
    theta = geom.beam_angle(beam)
    x = r * np.sin(theta)
    y = r * np.cos(theta)
    if np.isscalar(beam_idx) and np.isscalar(bin_idx):
        return float(x), float(y)
    return x, y


def cartesian_to_polar(geom: SonarGeometry, x, y):
    """Inverse of :func:`polar_to_cartesian`; returns fractional indices.

    No range check is applied: callers decide whether out-of-grid values
    mean "outside the fan".
    """
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    r = np.hypot(xa, ya)
    theta = np.arctan2(xa, ya)
    bin_idx = (r - geom.range_min_m) / geom.meters_per_bin
    beam_idx = (theta + geom.beam_fov_rad / 2.0) / geom.radians_per_beam
    if np.isscalar(x) and np.isscalar(y):
        return float(beam_idx), float(bin_idx)
    return beam_idx, bin_idx


def cell_centers(geom: SonarGeometry) -> tuple[np.ndarray, np.ndarray]:
    """World coordinates of every cell center, as (X, Y) arrays of shape
    (beam_count, range_bin_count)."""
    beams = np.arange(geom.beam_count, dtype=float)
    bins = np.arange(geom.range_bin_count, dtype=float)
    theta = geom.beam_angle(beams)[:, None]
    r = geom.bin_range(bins)[None, :]
    return r * np.sin(theta), r * np.cos(theta)


def fan_bounds(geom: SonarGeometry) -> tuple[float, float, float, float]:
    """World-space bounding box (x_min, x_max, y_min, y_max) of the fan."""
    half = geom.beam_fov_rad / 2.0
    x_max = geom.range_max_m * math.sin(min(half, math.pi / 2.0))
    if half <= math.pi / 2.0:
        y_min = geom.range_min_m * math.cos(half)
    else:
        y_min = geom.range_max_m * math.cos(half)
    return -x_max, x_max, y_min, geom.range_max_m


@dataclass(frozen=True)
class CartesianRaster:
    """Cartesian resampling of a polar grid.

    ``values[row, col]`` covers the world square with corners
    ``origin_m + (col, row) * meters_per_pixel`` and
    ``origin_m + (col+1, row+1) * meters_per_pixel``; +row is +y (away from
    the sonar), +col is +x.
    """

    width_px: int
    height_px: int
    meters_per_pixel: float
    origin_m: tuple[float, float]
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.meters_per_pixel <= 0:
            raise ValueError("meters_per_pixel must be > 0")
        if self.values.shape != (self.height_px, self.width_px):
            raise ValueError("values shape must be (height_px, width_px)")


def rasterize(values: np.ndarray, geom: SonarGeometry, meters_per_pixel: float) -> CartesianRaster:
    """Forward-splat a polar grid onto a Cartesian raster covering the fan.

    Each polar cell contributes its value to the single pixel containing the
    cell's world center; overlapping contributions are max-combined.  Pixels
    that receive no cell stay 0.
    """
    if meters_per_pixel <= 0:
        raise ValueError("meters_per_pixel must be > 0")
    values = np.asarray(values)
    if values.shape != (geom.beam_count, geom.range_bin_count):
        raise ValueError(
            f"expected grid of shape {(geom.beam_count, geom.range_bin_count)}, got {values.shape}"
        )
    x_min, x_max, y_min, y_max = fan_bounds(geom)
    width = int(math.floor((x_max - x_min) / meters_per_pixel)) + 1
    height = int(math.floor((y_max - y_min) / meters_per_pixel)) + 1
    raster = np.zeros((height, width), dtype=values.dtype)

    cells = np.nonzero(values)
    if cells[0].size:
        x, y = polar_to_cartesian(geom, cells[0].astype(float), cells[1].astype(float))
        cols = np.floor((x - x_min) / meters_per_pixel).astype(int)
        rows = np.floor((y - y_min) / meters_per_pixel).astype(int)
        np.maximum.at(raster, (rows, cols), values[cells])
    return CartesianRaster(
        width_px=width,
        height_px=height,
        meters_per_pixel=meters_per_pixel,
        origin_m=(x_min, y_min),
        values=raster,
    )
