"""Wire formats: .sraw frame files and MOT-style CSV.

.sraw layout (all little-endian): magic ``SRAW``, u32 version (=1),
u32 beam_count, u32 range_bin_count, u32 frame_count, f32 range_min_m,
f32 range_max_m, f32 beam_fov_rad, f32 frame_rate_hz, then frame_count
frames of beam-major float32 intensities.  The header is 36 bytes.

MOT CSV rows are ``frame,id,x,y,w,h,conf,class,visibility`` with 1-based
frame indices; raw detections carry id -1.  Floats are written with repr()
so numeric values round-trip exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import SonarGeometry

SRAW_MAGIC = b"SRAW"
SRAW_VERSION = 1
SRAW_HEADER = struct.Struct("<4sIIIIffff")


class SrawFormatError(ValueError):
    """Malformed .sraw input; carries the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class MotFormatError(ValueError):
    """Malformed MOT CSV row; carries the 1-based line number."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


def write_sraw(path: str | Path, geom: SonarGeometry, frames: np.ndarray) -> None:
    frames = np.asarray(frames, dtype=np.float32)
    if frames.ndim != 3 or frames.shape[1:] != (geom.beam_count, geom.range_bin_count):
        raise ValueError(
            f"frames must have shape (n, {geom.beam_count}, {geom.range_bin_count})"
        )
    header = SRAW_HEADER.pack(
        SRAW_MAGIC,
        SRAW_VERSION,
        geom.beam_count,
        geom.range_bin_count,
        frames.shape[0],
        geom.range_min_m,
        geom.range_max_m,
        geom.beam_fov_rad,
        geom.frame_rate_hz,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(frames).astype("<f4", copy=False).tobytes())


def read_sraw(path: str | Path) -> tuple[SonarGeometry, np.ndarray]:
    data = Path(path).read_bytes()
    if len(data) < SRAW_HEADER.size:
        raise SrawFormatError(
            f"truncated header: expected {SRAW_HEADER.size} bytes, got {len(data)}", len(data)
        )
    magic, version, beams, bins, count, rmin, rmax, fov, rate = SRAW_HEADER.unpack_from(data)
    if magic != SRAW_MAGIC:
        raise SrawFormatError(f"bad magic {magic!r}", 0)
    if version != SRAW_VERSION:
        raise SrawFormatError(f"unsupported version {version}", 4)
    expected = SRAW_HEADER.size + count * beams * bins * 4
    if len(data) != expected:
        raise SrawFormatError(
            f"wrong payload length: expected {expected} bytes, got {len(data)}",
            min(len(data), expected),
        )
    geom = SonarGeometry(
        beam_count=beams,
        beam_fov_rad=float(np.float32(fov)),
        range_min_m=float(np.float32(rmin)),
        range_max_m=float(np.float32(rmax)),
        range_bin_count=bins,
        frame_rate_hz=float(np.float32(rate)),
    )
    frames = np.frombuffer(data, dtype="<f4", offset=SRAW_HEADER.size).reshape(count, beams, bins)
    return geom, frames.copy()


@dataclass(frozen=True)
class MotRecord:
    """One MOT CSV row; ``frame`` is 1-based as on the wire."""

    frame: int
    track_id: int
    x: float
    y: float
    w: float
    h: float
    conf: float = 1.0
    cls: int = 1
    visibility: float = 1.0

    def __post_init__(self) -> None:
        if self.frame < 1:
            raise ValueError("MOT frame indices are 1-based")

    @property
    def box(self):
        return (self.x, self.y, self.w, self.h)


def write_mot_csv(path: str | Path, records) -> None:
    rows = sorted(records, key=lambda r: (r.frame, r.track_id))
    with open(path, "w", newline="") as fh:
        for r in rows:
            fh.write(
                f"{r.frame},{r.track_id},{r.x!r},{r.y!r},{r.w!r},{r.h!r},{r.conf!r},{r.cls},{r.visibility!r}\n"
            )


def read_mot_csv(path: str | Path) -> list[MotRecord]:
    records: list[MotRecord] = []
    with open(path, "r", newline="") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 9:
                raise MotFormatError(f"expected 9 fields, got {len(parts)}", line_number)
            try:
                records.append(
                    MotRecord(
                        frame=int(parts[0]),
                        track_id=int(parts[1]),
                        x=float(parts[2]),
                        y=float(parts[3]),
                        w=float(parts[4]),
                        h=float(parts[5]),
                        conf=float(parts[6]),
                        cls=int(parts[7]),
                        visibility=float(parts[8]),
                    )
                )
            except ValueError as exc:
                raise MotFormatError(str(exc), line_number) from None
    return records


def ground_truth_to_mot(truth) -> list[MotRecord]:
    """One row per visible (frame, fish) ground-truth observation."""
    records = []
    for frame_index, observations in enumerate(truth.frames):
        for obs in observations:
            if not obs.visible or obs.box is None:
                continue
            x, y, w, h = obs.box
            records.append(MotRecord(frame=frame_index + 1, track_id=obs.fish_id, x=x, y=y, w=w, h=h))
    return records
