"""Classical detection front-end: background model, thresholding, components, NMS.

This is the pluggable stand-in for a learned detector: per-cell median
background over a window, foreground thresholding, morphological opening,
8-connected component labeling.  External detections (e.g. from a foundation
model) can be injected through the MOT CSV route instead; everything
downstream only sees ``Detection`` objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

Box = tuple[float, float, float, float]  # (x, y, w, h); x = beam axis, y = bin axis

DEFAULT_THRESHOLD_DELTA = 0.15
DEFAULT_MIN_AREA_CELLS = 12
DEFAULT_MORPH_OPEN_RADIUS = 1
DEFAULT_NMS_IOU = 0.5


@dataclass(frozen=True)
class Mask:
    """Run-length encoded binary mask in polar-grid coordinates.

    Runs are (beam, bin_start, length) with length cells along the bin axis.
    """

    runs: tuple[tuple[int, int, int], ...]

    @property
    def area(self) -> int:
        return sum(r[2] for r in self.runs)

    def cells(self) -> tuple[np.ndarray, np.ndarray]:
        """(beams, bins) index arrays of all mask cells."""
        if not self.runs:
            return np.empty(0, dtype=int), np.empty(0, dtype=int)
        beams = np.concatenate([np.full(n, b, dtype=int) for b, _, n in self.runs])
        bins = np.concatenate([np.arange(s, s + n, dtype=int) for _, s, n in self.runs])
        return beams, bins

    @classmethod
    def from_cells(cls, beams: np.ndarray, bins: np.ndarray) -> "Mask":
        order = np.lexsort((bins, beams))
        beams = np.asarray(beams)[order]
        bins = np.asarray(bins)[order]
        runs: list[tuple[int, int, int]] = []
        for b, s, n in _runs_of(beams, bins):
            runs.append((b, s, n))
        return cls(runs=tuple(runs))


def _runs_of(beams: np.ndarray, bins: np.ndarray):
    start = 0
    for i in range(1, len(beams) + 1):
        if i == len(beams) or beams[i] != beams[start] or bins[i] != bins[i - 1] + 1:
            yield int(beams[start]), int(bins[start]), i - start
            start = i


@dataclass(frozen=True)
class Detection:
    frame_index: int
    box: Box
    confidence: float
    species_label: str = "salmonid"
    mask: Mask | None = None

    def __post_init__(self) -> None:
        x, y, w, h = self.box
        if w <= 0 or h <= 0:
            raise ValueError("box must have positive width and height")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must be in [0, 1]")


@dataclass(frozen=True)
class BackgroundModel:
    """Per-cell temporal median over a trailing window of frames."""

    values: np.ndarray = field(repr=False)
    window_len: int = 1


def estimate_background(frames: np.ndarray, window_len: int) -> BackgroundModel:
    """Median of the trailing ``window_len`` frames, per cell."""
    frames = np.asarray(frames)
    if frames.ndim != 3 or frames.shape[0] == 0:
        raise ValueError("frames must be a nonempty sequence of 2-D frames")
    if window_len < 1:
        raise ValueError("window_len must be >= 1")
    if window_len > frames.shape[0]:
        raise ValueError("window_len exceeds number of frames")
    window = frames[-window_len:]
    return BackgroundModel(values=np.median(window, axis=0), window_len=window_len)


def _opening_structure(radius: int) -> np.ndarray:
    """Line of 2*radius+1 cells along the range-bin axis.

    Polar cells are strongly anisotropic (beam pitch grows with range and
    exceeds bin pitch several-fold), so an isotropic cell-space disk would
    reject real targets that are legitimately one or two beams wide at
    range.  A radius along the fine (bin) axis rejects speckle while fitting
    inside any plausible fish.
    """
    return np.ones((1, 2 * int(radius) + 1), dtype=bool)


_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


def detect(
    frame: np.ndarray,
    background: BackgroundModel,
    threshold_delta: float = DEFAULT_THRESHOLD_DELTA,
    min_area_cells: int = DEFAULT_MIN_AREA_CELLS,
    morph_open_radius: int = DEFAULT_MORPH_OPEN_RADIUS,
    frame_index: int = 0,
    species_label: str = "salmonid",
) -> list[Detection]:
    """Detect foreground components in one frame.

    Foreground is where ``frame - background`` exceeds ``threshold_delta``.
    The disk opening is applied by reconstruction: 8-connected components in
    which the disk fits nowhere are discarded, but surviving components keep
    their full original shape (a plain opening would amputate extremities
    thinner than the disk, which at polar cell pitch means the tail and
    snout of every fish).  Components smaller than ``min_area_cells`` are
    dropped.  Confidence combines brightness (mean excess beyond the
    threshold, scaled by the threshold) and size; it is a plumbing
    heuristic, not a calibrated probability.
    """
    frame = np.asarray(frame)
    if frame.shape != background.values.shape:
        raise ValueError("frame and background dimensions differ")
    if threshold_delta <= 0:
        raise ValueError("threshold_delta must be > 0")
    excess = frame - background.values - threshold_delta
    fg = excess > 0
    labels, count = ndimage.label(fg, structure=_EIGHT_CONNECTED)
    if morph_open_radius > 0 and count:
        opened = ndimage.binary_opening(fg, structure=_opening_structure(morph_open_radius))
        surviving = np.unique(labels[opened])
        keep = np.zeros(count + 1, dtype=bool)
        keep[surviving] = True
        keep[0] = False
        labels[~keep[labels]] = 0
    detections: list[Detection] = []
    for obj_slice, label in zip(ndimage.find_objects(labels), range(1, count + 1)):
        if obj_slice is None:
            continue
        comp = labels[obj_slice] == label
        area = int(comp.sum())
        if area < min_area_cells:
            continue
        beams, bins = np.nonzero(comp)
        beams = beams + obj_slice[0].start
        bins = bins + obj_slice[1].start
        box = (
            float(beams.min()),
            float(bins.min()),
            float(beams.max() - beams.min() + 1),
            float(bins.max() - bins.min() + 1),
        )
        brightness = float(np.clip(excess[beams, bins].mean() / threshold_delta, 0.0, 1.0))
        confidence = brightness * (1.0 - math.exp(-area / min_area_cells))
        detections.append(
            Detection(
                frame_index=frame_index,
                box=box,
                confidence=confidence,
                species_label=species_label,
                mask=Mask.from_cells(beams, bins),
            )
        )
    detections.sort(key=lambda d: (-d.confidence, d.box[1], d.box[0]))
    return detections


def iou(box_a: Box, box_b: Box) -> float:
    """Intersection over union of two (x, y, w, h) boxes; 0 when disjoint."""
    ax, ay, aw, ah = box_a
    bx, by, bw, bh = box_b
    ix = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
    iy = max(0.0, min(ay + ah, by + bh) - max(ay, by))
    inter = ix * iy
    if inter <= 0.0:
        return 0.0
    return inter / (aw * ah + bw * bh - inter)


def nms(detections: list[Detection], iou_threshold: float = DEFAULT_NMS_IOU) -> list[Detection]:
    """Greedy non-maximum suppression within a single frame.

    Repeatedly keeps the highest-confidence remaining detection and discards
    the rest with IoU strictly above ``iou_threshold`` against it.  Ties
    follow the detect() order: confidence descending, then (y, x) ascending.
    """
    if not 0.0 <= iou_threshold <= 1.0:
        raise ValueError("iou_threshold must be in [0, 1]")
    if len({d.frame_index for d in detections}) > 1:
        raise ValueError("nms expects detections from a single frame")
    pending = sorted(detections, key=lambda d: (-d.confidence, d.box[1], d.box[0]))
    kept: list[Detection] = []
    while pending:
        best = pending.pop(0)
        kept.append(best)
        pending = [d for d in pending if iou(best.box, d.box) <= iou_threshold]
    return kept
