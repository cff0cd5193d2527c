"""End-to-end pipeline: load/simulate, gate, detect, track, count, measure,
evaluate, flag for review, report.

This is the edge side of the split: everything runs in-process over one
stream and emits a JSON report plus MOT CSVs.  Reports are deterministic
given the config and inputs, except for the wall-clock ``timings_s`` block.
The ``SONARFLOW_SEED_OVERRIDE`` environment variable (an integer) overrides
the scenario seed for fuzzing runs.
"""

from __future__ import annotations

import dataclasses
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analytics, detector, echogram, metrics, review
from .formats import MotRecord, read_mot_csv, read_sraw, write_mot_csv
from .geometry import SonarGeometry
from .simulator import GroundTruth, ScenarioConfig, simulate
from .scenarios import PRESETS
from .tracker import DeepSortTracker, TrackerConfig, TrackOutput

SEED_OVERRIDE_ENV = "SONARFLOW_SEED_OVERRIDE"


class PipelineStageError(RuntimeError):
    def __init__(self, stage: str, error: Exception):
        super().__init__(f"{stage}: {error}")
        self.stage = stage


@dataclass(frozen=True)
class DetectorParams:
    threshold_delta: float = detector.DEFAULT_THRESHOLD_DELTA
    min_area_cells: int = detector.DEFAULT_MIN_AREA_CELLS
    morph_open_radius: int = detector.DEFAULT_MORPH_OPEN_RADIUS
    nms_iou: float = detector.DEFAULT_NMS_IOU
    background_window: int = 33


@dataclass(frozen=True)
class GatingParams:
    reduction: str = "max"
    background_quantile: float = 0.5
    k_sigma: float = 3.0


@dataclass(frozen=True)
class AnalyticsParams:
    counting_line_y_m: float | None = None  # None: take the scenario's line
    debounce_frames: int = analytics.DEFAULT_DEBOUNCE_FRAMES
    meters_per_pixel: float = analytics.DEFAULT_METERS_PER_PIXEL
    min_mask_area: int = analytics.DEFAULT_MIN_MASK_AREA


@dataclass(frozen=True)
class ReviewParams:
    site_id: str = "default"
    confidence_threshold: float = 0.5


@dataclass(frozen=True)
class RunConfig:
    scenario: str | None = None  # preset name or path to a scenario JSON
    sraw_path: str | None = None
    gt_path: str | None = None  # MOT CSV ground truth for .sraw inputs
    output_dir: str = "run_output"
    gate: bool = False
    inject_detections: str | None = None
    detector_params: DetectorParams = DetectorParams()
    tracker_params: TrackerConfig = TrackerConfig()
    analytics_params: AnalyticsParams = AnalyticsParams()
    gating_params: GatingParams = GatingParams()
    review_params: ReviewParams = ReviewParams()

    def __post_init__(self) -> None:
        if (self.scenario is None) == (self.sraw_path is None):
            raise ValueError("exactly one of scenario or sraw_path is required")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        kwargs = dict(data)
        for key, sub in (
            ("detector_params", DetectorParams),
            ("tracker_params", TrackerConfig),
            ("analytics_params", AnalyticsParams),
            ("gating_params", GatingParams),
            ("review_params", ReviewParams),
        ):
            if key in kwargs and isinstance(kwargs[key], dict):
                kwargs[key] = sub(**kwargs[key])
        return cls(**kwargs)


@dataclass
class RunReport:
    config: dict
    counts: dict
    events: list
    lengths: list
    review_summary: dict
    metrics: dict | None = None
    timings_s: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "counts": self.counts,
            "events": self.events,
            "lengths": self.lengths,
            "review_summary": self.review_summary,
            "metrics": self.metrics,
            "timings_s": self.timings_s,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def load_scenario_config(spec: str) -> ScenarioConfig:
    """Resolve a preset name or scenario JSON path into a config."""
    if spec in PRESETS:
        config = PRESETS[spec]()
    else:
        config = scenario_from_dict(json.loads(Path(spec).read_text()))
    override = os.environ.get(SEED_OVERRIDE_ENV)
    if override:
        config = dataclasses.replace(config, seed=int(override))
    return config


def scenario_to_dict(config: ScenarioConfig) -> dict:
    return dataclasses.asdict(config)


def scenario_from_dict(data: dict) -> ScenarioConfig:
    from .simulator import FishSpec, NoiseParams

    geom = SonarGeometry(**data["geom"])
    fish = tuple(FishSpec(**f) for f in data["fish"])
    noise = NoiseParams(**data.get("noise", {}))
    return ScenarioConfig(
        geom=geom,
        duration_frames=data["duration_frames"],
        fish=fish,
        noise=noise,
        counting_line_y_m=data.get("counting_line_y_m", 10.0),
        seed=data.get("seed", 0),
    )


def _detections_from_mot(records: list[MotRecord], species_label: str = "salmonid"):
    by_frame: dict[int, list[detector.Detection]] = {}
    for rec in records:
        by_frame.setdefault(rec.frame - 1, []).append(
            detector.Detection(
                frame_index=rec.frame - 1,
                box=(rec.x, rec.y, rec.w, rec.h),
                confidence=min(max(rec.conf, 0.0), 1.0),
                species_label=species_label,
            )
        )
    return by_frame


def _track_observations(outputs: list[TrackOutput]):
    return [(o.frame_index, o.track_id, o.box) for o in outputs]


def _gt_observations(truth: GroundTruth):
    obs = []
    for frame_index, frame_obs in enumerate(truth.frames):
        for o in frame_obs:
            if o.visible and o.box is not None:
                obs.append((frame_index, o.fish_id, o.box))
    return obs


def run_pipeline(config: RunConfig) -> RunReport:
    """Execute all stages in order; see the module docstring.

    Any stage failure removes files already written to the output directory
    and re-raises as a stage-tagged PipelineStageError.
    """
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    timings: dict[str, float] = {}

    def stage(name: str):
        class _Timer:
            def __enter__(self_inner):
                self_inner.t0 = time.monotonic()

            def __exit__(self_inner, exc_type, exc, tb):
                timings[name] = round(time.monotonic() - self_inner.t0, 6)
                if exc is not None:
                    for path in written:
                        path.unlink(missing_ok=True)
                    raise PipelineStageError(name, exc) from exc

        return _Timer()

    truth: GroundTruth | None = None
    line_y = config.analytics_params.counting_line_y_m

    resolved_seed = None
    with stage("load"):
        if config.scenario is not None:
            scenario = load_scenario_config(config.scenario)
            resolved_seed = scenario.seed
            frames, truth = simulate(scenario)
            geom = scenario.geom
            if line_y is None:
                line_y = scenario.counting_line_y_m
        else:
            geom, frames = read_sraw(config.sraw_path)
            if config.gt_path:
                gt_records = read_mot_csv(config.gt_path)
            if line_y is None:
                line_y = 10.0
        gt_obs = None
        if truth is not None:
            gt_obs = _gt_observations(truth)
        elif config.gt_path:
            gt_obs = [(r.frame - 1, r.track_id, r.box) for r in gt_records]

    with stage("gate"):
        active = list(range(frames.shape[0]))
        if config.gate:
            gp = config.gating_params
            gram = echogram.build_echogram(frames, echogram.Reduction(gp.reduction))
            active = echogram.activity_gate(gram, gp.background_quantile, gp.k_sigma)

    with stage("detect"):
        dp = config.detector_params
        if config.inject_detections:
            by_frame = _detections_from_mot(read_mot_csv(config.inject_detections))
            detections = {f: by_frame.get(f, []) for f in active}
        else:
            n = frames.shape[0]
            sample_idx = np.unique(np.linspace(0, n - 1, num=min(dp.background_window, n)).round().astype(int))
            background = detector.estimate_background(frames[sample_idx], len(sample_idx))
            detections = {}
            for f in active:
                dets = detector.detect(
                    frames[f],
                    background,
                    threshold_delta=dp.threshold_delta,
                    min_area_cells=dp.min_area_cells,
                    morph_open_radius=dp.morph_open_radius,
                    frame_index=f,
                )
                detections[f] = detector.nms(dets, dp.nms_iou)

    with stage("track"):
        tracker = DeepSortTracker(config.tracker_params)
        outputs: list[TrackOutput] = []
        for f in active:
            outputs.extend(tracker.step(f, detections[f], frame=frames[f]))

    with stage("count"):
        by_track: dict[int, list[TrackOutput]] = {}
        for out in outputs:
            by_track.setdefault(out.track_id, []).append(out)
        events: list[analytics.CountEvent] = []
        for tid in sorted(by_track):
            history = [
                (o.frame_index, analytics.box_center_world(geom, o.box)) for o in by_track[tid]
            ]
            events.extend(
                analytics.detect_crossings(tid, history, line_y, config.analytics_params.debounce_frames)
            )
        upstream, downstream, net = analytics.net_counts(events)

    with stage("measure"):
        ap = config.analytics_params
        lengths: list[analytics.LengthEstimate] = []
        for tid in sorted(by_track):
            try:
                lengths.append(
                    analytics.estimate_length(
                        tid, by_track[tid], geom, ap.meters_per_pixel, ap.min_mask_area
                    )
                )
            except ValueError:
                continue  # no qualifying masked frames (e.g. injected detections)

    with stage("evaluate"):
        report_metrics = None
        if gt_obs is not None:
            pred_obs = _track_observations(outputs)
            det_scored = [
                (f, d.confidence, d.box) for f, dets in sorted(detections.items()) for d in dets
            ]
            counts_pred = counts_true = None
            lengths_pred = lengths_true = None
            if truth is not None:
                counts_pred = [upstream, downstream]
                counts_true = [truth.upstream_total, truth.downstream_total]
                fish_to_track = metrics.match_tracks_to_truth(gt_obs, pred_obs)
                estimates = {est.track_id: est.length_m for est in lengths}
                paired = [
                    (estimates[tid], truth.lengths_m[gid])
                    for gid, tid in sorted(fish_to_track.items())
                    if tid in estimates
                ]
                lengths_pred = [p for p, _ in paired]
                lengths_true = [t for _, t in paired]
            report_metrics = metrics.evaluate_tracking(
                gt_obs,
                pred_obs,
                detections=det_scored,
                counts_predicted=counts_pred,
                counts_true=counts_true,
                lengths_predicted=lengths_pred,
                lengths_true=lengths_true,
            ).to_dict()

    with stage("review"):
        rp = config.review_params
        frame_file = config.sraw_path or (config.scenario or "")
        items = review.flag_outputs(
            outputs, rp.confidence_threshold, events, site_id=rp.site_id, frame_file=str(frame_file)
        )
        store = review.ReviewStore(out_dir / "review")
        store.record_base_counts(rp.site_id, upstream, downstream)
        store.add_items(items)
        by_reason: dict[str, int] = {}
        for item in items:
            by_reason[item.reason] = by_reason.get(item.reason, 0) + 1
        review_summary = {"flagged": len(items), "by_reason": by_reason}

    with stage("write"):
        det_records = [
            MotRecord(frame=f + 1, track_id=-1, x=d.box[0], y=d.box[1], w=d.box[2], h=d.box[3], conf=d.confidence)
            for f, dets in sorted(detections.items())
            for d in dets
        ]
        det_path = out_dir / "detections.csv"
        write_mot_csv(det_path, det_records)
        written.append(det_path)
        track_records = [
            MotRecord(
                frame=o.frame_index + 1,
                track_id=o.track_id,
                x=o.box[0],
                y=o.box[1],
                w=o.box[2],
                h=o.box[3],
                conf=o.confidence,
            )
            for o in outputs
        ]
        trk_path = out_dir / "tracks.csv"
        write_mot_csv(trk_path, track_records)
        written.append(trk_path)

    config_echo = config.to_dict()
    if resolved_seed is not None:
        config_echo["resolved_scenario_seed"] = resolved_seed  # reflects any env override
    report = RunReport(
        config=config_echo,
        counts={"upstream": upstream, "downstream": downstream, "net": net},
        events=[
            {"track_id": e.track_id, "frame_index": e.frame_index, "direction": e.direction.value}
            for e in events
        ],
        lengths=[
            {"track_id": l.track_id, "length_m": l.length_m, "sample_count": l.sample_count}
            for l in lengths
        ],
        review_summary=review_summary,
        metrics=report_metrics,
        timings_s=timings,
    )
    (out_dir / "report.json").write_text(report.to_json())
    return report
