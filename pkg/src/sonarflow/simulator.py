"""Deterministic synthetic sonar scenes with full ground truth.

Fish are filled world-space ellipses (major axis = body length, fixed 0.25
aspect ratio) swimming along the y axis at constant speed, with optional
per-frame lateral wobble.  Upstream means +y.  Every frame's noise comes
from a counter-mode random stream seeded with ``seed XOR frame_index``, so
identical configs produce byte-identical output and frames can be generated
independently.

Per-frame stream layout (indices are normal-deviate positions):

* ``[0, n_cells)``                      background noise, beam-major
* ``[n_cells, n_cells + n_fish)``       lateral wobble, one per fish
* ``n_cells + n_fish + i*n_cells + c``  speckle for fish ``i`` at flat cell ``c``
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .geometry import SonarGeometry, cell_centers

FISH_ASPECT_RATIO = 0.25


class Direction(str, enum.Enum):
    """Crossing direction; upstream is +y."""

    UPSTREAM = "Upstream"
    DOWNSTREAM = "Downstream"
    NONE = "None"


@dataclass(frozen=True)
class FishSpec:
    """One simulated fish and its straight-line path."""

    id: int
    length_m: float
    speed_mps: float
    entry_frame: int
    lateral_m: float = 0.0
    wobble_std_m: float = 0.0
    reflectivity: float = 0.9

    def __post_init__(self) -> None:
        if self.length_m <= 0:
            raise ValueError("length_m must be > 0")
        if not 0 < self.reflectivity <= 1:
            raise ValueError("reflectivity must be in (0, 1]")


@dataclass(frozen=True)
class NoiseParams:
    background_mean: float = 0.1
    background_std: float = 0.03
    speckle_std: float = 0.1


@dataclass(frozen=True)
class ScenarioConfig:
    geom: SonarGeometry
    duration_frames: int
    fish: tuple[FishSpec, ...]
    noise: NoiseParams = NoiseParams()
    counting_line_y_m: float = 10.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.duration_frames <= 0:
            raise ValueError("duration_frames must be > 0")
        object.__setattr__(self, "fish", tuple(self.fish))
        for f in self.fish:
            if f.entry_frame >= self.duration_frames:
                raise ValueError(f"fish {f.id}: entry_frame must be < duration_frames")
        ids = [f.id for f in self.fish]
        if len(set(ids)) != len(ids):
            raise ValueError("fish ids must be unique")


@dataclass(frozen=True)
class GroundTruthObservation:
    fish_id: int
    box: tuple[float, float, float, float] | None  # (x, y, w, h), polar-grid coords
    visible: bool


@dataclass
class GroundTruth:
    """Per-frame observations plus per-fish truth for evaluation."""

    frames: list[list[GroundTruthObservation]]
    lengths_m: dict[int, float]
    directions: dict[int, Direction]
    upstream_total: int
    downstream_total: int


def _visible_y_window(geom: SonarGeometry, lateral: float) -> tuple[float, float] | None:
    """y interval over which a path at fixed x=lateral intersects the fan."""
    half = geom.beam_fov_rad / 2.0
    x = abs(lateral)
    if half < math.pi / 2 and x >= geom.range_max_m * math.sin(half):
        return None
    if x >= geom.range_max_m:
        return None
    y_hi = math.sqrt(geom.range_max_m**2 - x * x)
    y_lo = math.sqrt(max(geom.range_min_m**2 - x * x, 0.0))
    if half < math.pi / 2:
        y_lo = max(y_lo, x / math.tan(half) if half > 0 else math.inf)
    if y_lo >= y_hi:
        return None
    return y_lo, y_hi


def fish_path_y0(geom: SonarGeometry, fish: FishSpec) -> float:
    """Path start: just outside the visible window on the approach side.

    Upstream fish start below the fan, downstream fish above; a fish with
    zero speed is parked at the middle of its visible window.
    """
    window = _visible_y_window(geom, fish.lateral_m)
    if window is None:
        return geom.range_min_m  # path never intersects the fan
    y_lo, y_hi = window
    if fish.speed_mps > 0:
        return y_lo - fish.length_m
    if fish.speed_mps < 0:
        return y_hi + fish.length_m
    return (y_lo + y_hi) / 2.0


def fish_center_y(geom: SonarGeometry, fish: FishSpec, frame_index: int) -> float:
    """Ideal (wobble-free) center y at a frame at or after entry."""
    dt = (frame_index - fish.entry_frame) / geom.frame_rate_hz
    return fish_path_y0(geom, fish) + fish.speed_mps * dt


def _crossing_direction(config: ScenarioConfig, fish: FishSpec) -> Direction:
    """Direction in which the fish's path crosses the counting line, if any."""
    line = config.counting_line_y_m
    last_sign = 0
    for t in range(fish.entry_frame, config.duration_frames):
        s = fish_center_y(config.geom, fish, t) - line
        sign = (s > 0) - (s < 0)
        if sign != 0:
            if last_sign != 0 and sign != last_sign:
                return Direction.UPSTREAM if sign > 0 else Direction.DOWNSTREAM
            last_sign = sign
    return Direction.NONE


def _fish_cells(
    geom: SonarGeometry,
    xc: np.ndarray,
    yc: np.ndarray,
    center: tuple[float, float],
    length_m: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Grid indices of cells whose center lies inside the fish ellipse."""
    cx, cy = center
    a = length_m / 2.0
    b = FISH_ASPECT_RATIO * length_m / 2.0
    r_c = math.hypot(cx, cy)
    mpb = geom.meters_per_bin
    bin_lo = max(int(math.floor((r_c - a - geom.range_min_m) / mpb)) - 1, 0)
    bin_hi = min(int(math.ceil((r_c + a - geom.range_min_m) / mpb)) + 1, geom.range_bin_count - 1)
    if bin_hi < bin_lo:
        return np.empty(0, dtype=int), np.empty(0, dtype=int)
    theta_c = math.atan2(cx, cy)
    dtheta = math.atan2(a, max(r_c - a, 1e-6)) + geom.radians_per_beam
    half = geom.beam_fov_rad / 2.0
    beam_lo = max(int(math.floor((theta_c - dtheta + half) / geom.radians_per_beam)) - 1, 0)
    beam_hi = min(
        int(math.ceil((theta_c + dtheta + half) / geom.radians_per_beam)) + 1,
        geom.beam_count - 1,
    )
    if beam_hi < beam_lo:
        return np.empty(0, dtype=int), np.empty(0, dtype=int)
    sub_x = xc[beam_lo : beam_hi + 1, bin_lo : bin_hi + 1]
    sub_y = yc[beam_lo : beam_hi + 1, bin_lo : bin_hi + 1]
    inside = ((sub_x - cx) / b) ** 2 + ((sub_y - cy) / a) ** 2 <= 1.0
    bi, ri = np.nonzero(inside)
    return bi + beam_lo, ri + bin_lo


def simulate(config: ScenarioConfig) -> tuple[np.ndarray, GroundTruth]:
    """Render the scenario.

    Returns
    -------
    frames : float32 array of shape (duration, beam_count, range_bin_count)
    truth : GroundTruth
    """
    geom = config.geom
    n_cells = geom.beam_count * geom.range_bin_count
    n_fish = len(config.fish)
    xc, yc = cell_centers(geom)
    noise = config.noise

    frames = np.empty((config.duration_frames, geom.beam_count, geom.range_bin_count), dtype=np.float32)
    gt_frames: list[list[GroundTruthObservation]] = []

    for t in range(config.duration_frames):
        stream_seed = config.seed ^ t
        frame = np.full((geom.beam_count, geom.range_bin_count), noise.background_mean, dtype=np.float64)
        if noise.background_std > 0:
            frame += noise.background_std * rng.normals_at(stream_seed, 0, n_cells).reshape(frame.shape)
        np.clip(frame, 0.0, 1.0, out=frame)

        observations: list[GroundTruthObservation] = []
        for i, fish in enumerate(config.fish):
            if t < fish.entry_frame:
                continue
            wobble = 0.0
            if fish.wobble_std_m > 0:
                wobble = fish.wobble_std_m * float(rng.normals_at(stream_seed, n_cells + i, 1)[0])
            center = (fish.lateral_m + wobble, fish_center_y(geom, fish, t))
            beams, bins = _fish_cells(geom, xc, yc, center, fish.length_m)
            if beams.size == 0:
                observations.append(GroundTruthObservation(fish.id, None, False))
                continue
            intensity = np.full(beams.shape, fish.reflectivity, dtype=np.float64)
            if noise.speckle_std > 0:
                flat = beams * geom.range_bin_count + bins
                base = n_cells + n_fish + i * n_cells
                speckle = rng.normals_at_indices(stream_seed, base + flat)
                intensity *= 1.0 + noise.speckle_std * speckle
            np.clip(intensity, 0.0, 1.0, out=intensity)
            np.maximum.at(frame, (beams, bins), intensity)
            box = (
                float(beams.min()),
                float(bins.min()),
                float(beams.max() - beams.min() + 1),
                float(bins.max() - bins.min() + 1),
            )
            observations.append(GroundTruthObservation(fish.id, box, True))
        frames[t] = frame
        gt_frames.append(observations)

    directions = {f.id: _crossing_direction(config, f) for f in config.fish}
    truth = GroundTruth(
        frames=gt_frames,
        lengths_m={f.id: f.length_m for f in config.fish},
        directions=directions,
        upstream_total=sum(1 for d in directions.values() if d is Direction.UPSTREAM),
        downstream_total=sum(1 for d in directions.values() if d is Direction.DOWNSTREAM),
    )
    return frames, truth
