"""Echogram construction and temporal activity gating.

The echogram is the stream's second modality: each sonar frame is reduced
across beams to a single range column, and columns are stacked over time.
Fish passages show up as bright streaks, which the activity gate turns into
a set of frames worth running the detector on.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class Reduction(str, enum.Enum):
    MAX = "max"
    MEAN = "mean"


@dataclass(frozen=True)
class Echogram:
    """Range x time reduction of a frame stream; values[bin, frame]."""

    values: np.ndarray = field(repr=False)
    reduction: Reduction = Reduction.MAX

    @property
    def bin_count(self) -> int:
        return self.values.shape[0]

    @property
    def frame_count(self) -> int:
        return self.values.shape[1]


def build_echogram(frames: np.ndarray, reduction: Reduction = Reduction.MAX) -> Echogram:
    """Reduce each (beams, bins) frame across beams into one column.

    ``frames`` is a (n, beams, bins) array or a nonempty sequence of
    homogeneous 2-D frames.
    """
    frames = np.asarray(frames)
    if frames.ndim != 3 or frames.shape[0] == 0:
        raise ValueError("frames must be a nonempty sequence of 2-D frames")
    reduction = Reduction(reduction)
    if reduction is Reduction.MAX:
        cols = frames.max(axis=1)
    else:
        cols = frames.mean(axis=1)
    return Echogram(values=np.ascontiguousarray(cols.T), reduction=reduction)


def activity_gate(
    echogram: Echogram,
    background_quantile: float = 0.5,
    k_sigma: float = 3.0,
) -> list[int]:
    """Frames whose echogram column rises above the per-bin baseline.

    The baseline of each range bin is the given quantile of its values over
    time; a frame is active iff any bin exceeds baseline plus ``k_sigma``
    temporal standard deviations.  Returns sorted, duplicate-free indices.
    """
    if not 0 < background_quantile < 1:
        raise ValueError("background_quantile must be in (0, 1)")
    if k_sigma < 0:
        raise ValueError("k_sigma must be >= 0")
    v = echogram.values
    baseline = np.quantile(v, background_quantile, axis=1, keepdims=True)
    std = v.std(axis=1, keepdims=True)
    active = (v > baseline + k_sigma * std).any(axis=0)
    return [int(i) for i in np.nonzero(active)[0]]


def write_pgm(echogram: Echogram, path: str | Path) -> None:
    """8-bit binary PGM; rows are range bins, columns are frames."""
    v = np.clip(echogram.values, 0.0, 1.0)
    pixels = np.round(v * 255.0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{pixels.shape[1]} {pixels.shape[0]}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


def write_csv(echogram: Echogram, path: str | Path) -> None:
    """(bin, frame, value) rows for plotting."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin", "frame", "value"])
        for b in range(echogram.bin_count):
            for f in range(echogram.frame_count):
                writer.writerow([b, f, repr(float(echogram.values[b, f]))])
