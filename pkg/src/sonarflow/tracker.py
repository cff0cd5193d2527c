"""DeepSORT-style multi-object tracker.

State is the usual 8-vector (cx, cy, aspect, height) plus velocities in
polar-grid units, filtered by a constant-velocity Kalman model whose noise
scales with target height.  Association runs a matching cascade over
confirmed tracks ordered by frames-since-update, mixing gated Mahalanobis
distance with appearance (cosine distance to a feature gallery), then an
IoU fallback stage that also serves tentative tracks.  The learned re-ID
embedding of the original method is replaced by a hand-crafted
histogram+shape feature; the gallery mechanism is unchanged.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .assignment import hungarian
from .detector import Box, Detection, iou

# Motion/measurement noise scales relative to target height, after the
# original DeepSORT implementation.
_STD_WEIGHT_POSITION = 1.0 / 20.0
_STD_WEIGHT_VELOCITY = 1.0 / 160.0
# Box aspect warps quickly while a target crosses the fan boundary (the
# near edge clips it and beam pitch varies with range), so aspect gets an
# order of magnitude more process/initial noise than camera trackers use.
_STD_ASPECT = 1e-1

CHI2_95_4DOF = 9.4877

APPEARANCE_DIM = 40
_HIST_BINS = 32


def kalman_predict(mean: np.ndarray, cov: np.ndarray, transition: np.ndarray, process_noise: np.ndarray):
    """One linear-Gaussian prediction step; returns (mean, cov)."""
    mean = transition @ mean
    cov = transition @ cov @ transition.T + process_noise
    return mean, cov


def kalman_update(
    mean: np.ndarray,
    cov: np.ndarray,
    measurement: np.ndarray,
    observation: np.ndarray,
    measurement_noise: np.ndarray,
):
    """One linear-Gaussian correction step; returns (mean, cov)."""
    innovation_cov = observation @ cov @ observation.T + measurement_noise
    gain = np.linalg.solve(innovation_cov.T, (cov @ observation.T).T).T
    innovation = measurement - observation @ mean
    new_mean = mean + gain @ innovation
    new_cov = (np.eye(len(mean)) - gain @ observation) @ cov
    return new_mean, new_cov


def _require_psd(matrix: np.ndarray, name: str) -> None:
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"{name} must be square")
    if not np.allclose(matrix, matrix.T, atol=1e-9):
        raise ValueError(f"{name} must be symmetric")
    if np.linalg.eigvalsh(matrix).min() < -1e-9:
        raise ValueError(f"{name} must be positive semi-definite")


class TrackStatus(enum.Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    DELETED = "deleted"


@dataclass(frozen=True)
class TrackerConfig:
    gating_threshold: float = CHI2_95_4DOF
    max_age: int = 30
    n_init: int = 3
    appearance_budget: int = 100
    lambda_motion: float = 0.5
    match_iou_floor: float = 0.3

    def __post_init__(self) -> None:
        if not 0.0 <= self.lambda_motion <= 1.0:
            raise ValueError("lambda_motion must be in [0, 1]")
        if self.max_age < 1 or self.n_init < 1:
            raise ValueError("max_age and n_init must be >= 1")


@dataclass(frozen=True)
class TrackState:
    """Filtered state of one track; value-style, replaced on each step."""

    mean: np.ndarray
    covariance: np.ndarray
    track_id: int
    status: TrackStatus = TrackStatus.TENTATIVE
    hits: int = 1
    age: int = 1
    frames_since_update: int = 0
    appearance_gallery: tuple[np.ndarray, ...] = ()
    species_label: str = "salmonid"
    last_confidence: float = 0.0

    def to_box(self) -> Box:
        cx, cy, aspect, height = self.mean[:4]
        w = aspect * height
        return (float(cx - w / 2.0), float(cy - height / 2.0), float(w), float(height))


def box_to_measurement(box: Box) -> np.ndarray:
    x, y, w, h = box
    return np.array([x + w / 2.0, y + h / 2.0, w / h, h], dtype=float)


_TRANSITION = np.eye(8)
_TRANSITION[:4, 4:] = np.eye(4)
_OBSERVATION = np.eye(4, 8)


def _process_noise(height: float) -> np.ndarray:
    wp, wv = _STD_WEIGHT_POSITION, _STD_WEIGHT_VELOCITY
    std = [wp * height, wp * height, _STD_ASPECT, wp * height, wv * height, wv * height, 1e-5, wv * height]
    return np.diag(np.square(std))


def measurement_noise(height: float) -> np.ndarray:
    wp = _STD_WEIGHT_POSITION
    std = [wp * height, wp * height, 1e-1, wp * height]
    return np.diag(np.square(std))


def initiate_track(track_id: int, detection: Detection, feature: np.ndarray | None) -> TrackState:
    z = box_to_measurement(detection.box)
    mean = np.zeros(8)
    mean[:4] = z
    h = z[3]
    wp, wv = _STD_WEIGHT_POSITION, _STD_WEIGHT_VELOCITY
    std = [2 * wp * h, 2 * wp * h, _STD_ASPECT, 2 * wp * h, 10 * wv * h, 10 * wv * h, 1e-5, 10 * wv * h]
    return TrackState(
        mean=mean,
        covariance=np.diag(np.square(std)),
        track_id=track_id,
        appearance_gallery=(feature,) if feature is not None else (),
        species_label=detection.species_label,
        last_confidence=detection.confidence,
    )


def predict(state: TrackState) -> TrackState:
    """Advance one frame under the constant-velocity model."""
    if state.status is TrackStatus.DELETED:
        raise ValueError("cannot predict a deleted track")
    mean, cov = kalman_predict(state.mean, state.covariance, _TRANSITION, _process_noise(state.mean[3]))
    return replace(
        state,
        mean=mean,
        covariance=cov,
        age=state.age + 1,
        frames_since_update=state.frames_since_update + 1,
    )


def update(state: TrackState, measurement: np.ndarray, noise: np.ndarray | None = None) -> TrackState:
    """Correct the state with a (cx, cy, aspect, height) measurement."""
    if state.status is TrackStatus.DELETED:
        raise ValueError("cannot update a deleted track")
    if noise is None:
        noise = measurement_noise(state.mean[3])
    else:
        _require_psd(noise, "measurement noise")
    mean, cov = kalman_update(state.mean, state.covariance, np.asarray(measurement, dtype=float), _OBSERVATION, noise)
    return replace(state, mean=mean, covariance=cov, hits=state.hits + 1, frames_since_update=0)


def gating_distance(state: TrackState, measurement: np.ndarray) -> float:
    """Squared Mahalanobis distance of a measurement from the track."""
    innovation_cov = _OBSERVATION @ state.covariance @ _OBSERVATION.T + measurement_noise(state.mean[3])
    d = np.asarray(measurement, dtype=float) - _OBSERVATION @ state.mean
    return float(d @ np.linalg.solve(innovation_cov, d))


def appearance_feature(frame: np.ndarray, detection: Detection) -> np.ndarray:
    """Unit-norm 40-d feature: 32-bin intensity histogram + 8 shape terms.

    Shape terms: saturating area, boundary fraction, eccentricity,
    orientation sin/cos, bbox extent, solidity proxy (area over the area of
    the moment-equivalent ellipse) and minor/major axis ratio.
    """
    if detection.mask is None or detection.mask.area == 0:
        raise ValueError("appearance feature requires a nonempty mask")
    beams, bins = detection.mask.cells()
    values = np.asarray(frame)[beams, bins]
    hist = np.bincount(
        np.clip((values * _HIST_BINS).astype(int), 0, _HIST_BINS - 1), minlength=_HIST_BINS
    ).astype(float)
    hist /= len(values)

    area = float(len(values))
    xs = beams.astype(float)
    ys = bins.astype(float)
    mx, my = xs.mean(), ys.mean()
    mxx = ((xs - mx) ** 2).mean()
    myy = ((ys - my) ** 2).mean()
    mxy = ((xs - mx) * (ys - my)).mean()
    lam1 = (mxx + myy) / 2.0 + math.sqrt(((mxx - myy) / 2.0) ** 2 + mxy**2)
    lam2 = (mxx + myy) / 2.0 - math.sqrt(((mxx - myy) / 2.0) ** 2 + mxy**2)
    lam2 = max(lam2, 0.0)
    if lam1 < 1e-12:
        eccentricity, axis_ratio, phi = 0.0, 1.0, 0.0
    else:
        eccentricity = math.sqrt(max(0.0, 1.0 - lam2 / lam1))
        axis_ratio = math.sqrt(lam2 / lam1)
        phi = 0.5 * math.atan2(2.0 * mxy, mxx - myy)

    cell_set = set(zip(beams.tolist(), bins.tolist()))
    boundary = sum(
        1
        for b, r in cell_set
        if not all(n in cell_set for n in ((b - 1, r), (b + 1, r), (b, r - 1), (b, r + 1)))
    )
    w = xs.max() - xs.min() + 1.0
    h = ys.max() - ys.min() + 1.0
    ellipse_area = 4.0 * math.pi * math.sqrt(max(lam1 * lam2, 0.0))
    shape = np.array(
        [
            1.0 - math.exp(-area / 100.0),
            min(1.0, boundary / area),
            eccentricity,
            math.sin(phi),
            math.cos(phi),
            area / (w * h),
            min(1.0, area / ellipse_area) if ellipse_area > 0 else 1.0,
            axis_ratio,
        ]
    )
    feature = np.concatenate([hist, shape])
    return feature / np.linalg.norm(feature)


def cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    return 1.0 - float(np.dot(a, b))


@dataclass
class TrackOutput:
    frame_index: int
    track_id: int
    box: Box
    confidence: float
    species_label: str
    mask: object | None = None


class DeepSortTracker:
    """Sequential tracker over one stream; not shareable across threads."""

    def __init__(self, config: TrackerConfig | None = None):
        self.config = config or TrackerConfig()
        self.tracks: dict[int, TrackState] = {}
        self._next_id = 1
        self._last_frame: int | None = None

    def step(
        self,
        frame_index: int,
        detections: list[Detection],
        frame: np.ndarray | None = None,
    ) -> list[TrackOutput]:
        """Advance one frame and return outputs of confirmed, updated tracks."""
        if self._last_frame is not None and frame_index <= self._last_frame:
            raise ValueError("frame indices must be strictly increasing")
        for det in detections:
            if det.frame_index != frame_index:
                raise ValueError("detections must belong to the stepped frame")
        self._last_frame = frame_index

        self.tracks = {tid: predict(s) for tid, s in self.tracks.items()}

        features: list[np.ndarray | None] = []
        for det in detections:
            if frame is not None and det.mask is not None and det.mask.area > 0:
                features.append(appearance_feature(frame, det))
            else:
                features.append(None)

        matches, unmatched_tracks, unmatched_dets = self._associate(detections, features)

        cfg = self.config
        for tid, di in matches:
            det = detections[di]
            state = update(self.tracks[tid], box_to_measurement(det.box))
            gallery = state.appearance_gallery
            if features[di] is not None:
                gallery = (gallery + (features[di],))[-cfg.appearance_budget :]
            if state.status is TrackStatus.TENTATIVE and state.hits >= cfg.n_init:
                state = replace(state, status=TrackStatus.CONFIRMED)
            self.tracks[tid] = replace(
                state,
                appearance_gallery=gallery,
                species_label=det.species_label,
                last_confidence=det.confidence,
            )

        for tid in unmatched_tracks:
            state = self.tracks[tid]
            if state.status is TrackStatus.TENTATIVE or state.frames_since_update > cfg.max_age:
                self.tracks[tid] = replace(state, status=TrackStatus.DELETED)

        detection_for_track = {tid: di for tid, di in matches}
        for di in unmatched_dets:
            det = detections[di]
            state = initiate_track(self._next_id, det, features[di])
            if state.hits >= cfg.n_init:
                state = replace(state, status=TrackStatus.CONFIRMED)
            self.tracks[self._next_id] = state
            detection_for_track[self._next_id] = di
            self._next_id += 1

        self.tracks = {tid: s for tid, s in self.tracks.items() if s.status is not TrackStatus.DELETED}

        outputs = [
            TrackOutput(
                frame_index=frame_index,
                track_id=tid,
                box=state.to_box(),
                confidence=state.last_confidence,
                species_label=state.species_label,
                mask=detections[detection_for_track[tid]].mask if tid in detection_for_track else None,
            )
            for tid, state in sorted(self.tracks.items())
            if state.status is TrackStatus.CONFIRMED and state.frames_since_update == 0
        ]
        return outputs

    def _associate(self, detections, features):
        cfg = self.config
        matches: list[tuple[int, int]] = []
        unmatched_dets = list(range(len(detections)))

        confirmed = [tid for tid, s in sorted(self.tracks.items()) if s.status is TrackStatus.CONFIRMED]
        tentative = [tid for tid, s in sorted(self.tracks.items()) if s.status is TrackStatus.TENTATIVE]

        # Cascade: earlier-updated confirmed tracks get first pick.
        unmatched_confirmed: list[int] = []
        for level in sorted({self.tracks[t].frames_since_update for t in confirmed}):
            level_tracks = [t for t in confirmed if self.tracks[t].frames_since_update == level]
            if not unmatched_dets:
                unmatched_confirmed.extend(level_tracks)
                continue
            cost = np.full((len(level_tracks), len(unmatched_dets)), np.inf)
            for i, tid in enumerate(level_tracks):
                state = self.tracks[tid]
                for j, di in enumerate(unmatched_dets):
                    z = box_to_measurement(detections[di].box)
                    maha = gating_distance(state, z)
                    if maha > cfg.gating_threshold:
                        continue
                    motion = maha / cfg.gating_threshold
                    feat = features[di]
                    if feat is not None and state.appearance_gallery:
                        appearance = min(cosine_distance(feat, g) for g in state.appearance_gallery)
                        cost[i, j] = cfg.lambda_motion * motion + (1 - cfg.lambda_motion) * appearance
                    else:
                        cost[i, j] = motion
            assign, _ = hungarian(cost)
            level_unmatched = []
            newly_matched = []
            for i, j in enumerate(assign):
                if j is None:
                    level_unmatched.append(level_tracks[i])
                else:
                    newly_matched.append((level_tracks[i], unmatched_dets[j]))
            matches.extend(newly_matched)
            taken = {di for _, di in newly_matched}
            unmatched_dets = [di for di in unmatched_dets if di not in taken]
            unmatched_confirmed.extend(level_unmatched)

        # IoU fallback for tentative tracks and confirmed leftovers.
        fallback = tentative + unmatched_confirmed
        unmatched_tracks: list[int] = []
        if fallback and unmatched_dets:
            cost = np.full((len(fallback), len(unmatched_dets)), np.inf)
            for i, tid in enumerate(fallback):
                tb = self.tracks[tid].to_box()
                for j, di in enumerate(unmatched_dets):
                    overlap = iou(tb, detections[di].box)
                    if overlap >= cfg.match_iou_floor:
                        cost[i, j] = 1.0 - overlap
            assign, _ = hungarian(cost)
            taken = set()
            for i, j in enumerate(assign):
                if j is None:
                    unmatched_tracks.append(fallback[i])
                else:
                    matches.append((fallback[i], unmatched_dets[j]))
                    taken.add(unmatched_dets[j])
            unmatched_dets = [di for di in unmatched_dets if di not in taken]
        else:
            unmatched_tracks.extend(fallback)

        return matches, unmatched_tracks, unmatched_dets
