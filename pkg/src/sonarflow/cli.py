"""Command-line interface; one subcommand per pipeline stage plus ``run``
and ``serve``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analytics, detector, echogram
from .formats import ground_truth_to_mot, read_mot_csv, read_sraw, write_mot_csv, write_sraw
from .pipeline import (
    DetectorParams,
    ReviewParams,
    RunConfig,
    load_scenario_config,
    run_pipeline,
    scenario_to_dict,
)
from .simulator import simulate
from .tracker import DeepSortTracker, TrackerConfig


def _cmd_simulate(args) -> int:
    config = load_scenario_config(args.scenario)
    frames, truth = simulate(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_sraw(out / "frames.sraw", config.geom, frames)
    write_mot_csv(out / "gt.csv", ground_truth_to_mot(truth))
    meta = {
        "scenario": scenario_to_dict(config),
        "lengths_m": truth.lengths_m,
        "directions": {fid: d.value for fid, d in truth.directions.items()},
        "upstream_total": truth.upstream_total,
        "downstream_total": truth.downstream_total,
    }
    (out / "gt_meta.json").write_text(json.dumps(meta, sort_keys=True, indent=2))
    print(f"wrote {out}/frames.sraw ({frames.shape[0]} frames), gt.csv, gt_meta.json")
    return 0


def _cmd_echogram(args) -> int:
    _, frames = read_sraw(args.input)
    gram = echogram.build_echogram(frames, echogram.Reduction(args.reduction))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    echogram.write_pgm(gram, out / "echogram.pgm")
    echogram.write_csv(gram, out / "echogram.csv")
    if args.gate:
        active = echogram.activity_gate(gram, args.background_quantile, args.k_sigma)
        (out / "active_frames.json").write_text(json.dumps(active))
        print(f"{len(active)} of {gram.frame_count} frames active")
    print(f"wrote {out}/echogram.pgm and echogram.csv")
    return 0


def _detect_frames(frames, params: DetectorParams):
    n = frames.shape[0]
    idx = np.unique(np.linspace(0, n - 1, num=min(params.background_window, n)).round().astype(int))
    background = detector.estimate_background(frames[idx], len(idx))
    for f in range(n):
        dets = detector.detect(
            frames[f],
            background,
            threshold_delta=params.threshold_delta,
            min_area_cells=params.min_area_cells,
            morph_open_radius=params.morph_open_radius,
            frame_index=f,
        )
        yield f, detector.nms(dets, params.nms_iou)


def _cmd_detect(args) -> int:
    _, frames = read_sraw(args.input)
    params = DetectorParams(
        threshold_delta=args.threshold_delta,
        min_area_cells=args.min_area_cells,
        morph_open_radius=args.morph_open_radius,
        nms_iou=args.nms_iou,
    )
    from .formats import MotRecord

    records = []
    for f, dets in _detect_frames(frames, params):
        for d in dets:
            records.append(
                MotRecord(frame=f + 1, track_id=-1, x=d.box[0], y=d.box[1], w=d.box[2], h=d.box[3], conf=d.confidence)
            )
    write_mot_csv(args.out, records)
    print(f"wrote {len(records)} detections to {args.out}")
    return 0


def _cmd_track(args) -> int:
    _, frames = read_sraw(args.input)
    from .formats import MotRecord
    from .pipeline import _detections_from_mot

    if args.detections:
        by_frame = _detections_from_mot(read_mot_csv(args.detections))
    else:
        by_frame = dict(_detect_frames(frames, DetectorParams()))
    tracker = DeepSortTracker(TrackerConfig())
    records = []
    for f in range(frames.shape[0]):
        for o in tracker.step(f, by_frame.get(f, []), frame=frames[f]):
            records.append(
                MotRecord(frame=f + 1, track_id=o.track_id, x=o.box[0], y=o.box[1], w=o.box[2], h=o.box[3], conf=o.confidence)
            )
    write_mot_csv(args.out, records)
    print(f"wrote {len(records)} track observations to {args.out}")
    return 0


def _cmd_count(args) -> int:
    geom, _ = read_sraw(args.input)
    records = read_mot_csv(args.tracks)
    by_track: dict[int, list] = {}
    for r in records:
        by_track.setdefault(r.track_id, []).append((r.frame - 1, analytics.box_center_world(geom, r.box)))
    events = []
    for tid in sorted(by_track):
        events.extend(analytics.detect_crossings(tid, by_track[tid], args.line_y, args.debounce))
    up, down, net = analytics.net_counts(events)
    result = {
        "upstream": up,
        "downstream": down,
        "net": net,
        "events": [
            {"track_id": e.track_id, "frame_index": e.frame_index, "direction": e.direction.value} for e in events
        ],
    }
    print(json.dumps(result, indent=2))
    if args.out:
        Path(args.out).write_text(json.dumps(result, sort_keys=True, indent=2))
    return 0


def _cmd_measure(args) -> int:
    geom, frames = read_sraw(args.input)
    tracker = DeepSortTracker(TrackerConfig())
    by_track: dict[int, list] = {}
    for f, dets in _detect_frames(frames, DetectorParams()):
        for o in tracker.step(f, dets, frame=frames[f]):
            by_track.setdefault(o.track_id, []).append(o)
    result = []
    for tid in sorted(by_track):
        try:
            est = analytics.estimate_length(tid, by_track[tid], geom, args.meters_per_pixel)
        except ValueError:
            continue
        result.append({"track_id": tid, "length_m": est.length_m, "sample_count": est.sample_count})
    print(json.dumps(result, indent=2))
    if args.out:
        Path(args.out).write_text(json.dumps(result, sort_keys=True, indent=2))
    return 0


def _cmd_evaluate(args) -> int:
    from . import metrics

    gt = [(r.frame - 1, r.track_id, r.box) for r in read_mot_csv(args.gt)]
    pred = [(r.frame - 1, r.track_id, r.box) for r in read_mot_csv(args.tracks)]
    detections = None
    if args.detections:
        detections = [(r.frame - 1, r.conf, r.box) for r in read_mot_csv(args.detections)]
    report = metrics.evaluate_tracking(gt, pred, detections=detections)
    print(json.dumps(report.to_dict(), indent=2))
    if args.out:
        Path(args.out).write_text(json.dumps(report.to_dict(), sort_keys=True, indent=2))
    return 0


def _cmd_run(args) -> int:
    config = RunConfig(
        scenario=args.scenario,
        sraw_path=args.input,
        gt_path=args.gt,
        output_dir=args.out,
        gate=args.gate,
        inject_detections=args.inject_detections,
        review_params=ReviewParams(site_id=args.site, confidence_threshold=args.confidence_threshold),
    )
    report = run_pipeline(config)
    print(json.dumps({"counts": report.counts, "metrics": report.metrics}, indent=2))
    print(f"report written to {args.out}/report.json")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.data_dir, frames_dir=args.frames_dir, confidence_threshold=args.confidence_threshold)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sonarflow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="render a scenario to .sraw plus ground truth")
    p.add_argument("--scenario", required=True, help="preset name or scenario JSON path")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("echogram", help="build the echogram for a .sraw file")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--reduction", choices=["max", "mean"], default="max")
    p.add_argument("--gate", action="store_true", help="also emit active frame indices")
    p.add_argument("--background-quantile", type=float, default=0.5)
    p.add_argument("--k-sigma", type=float, default=3.0)
    p.set_defaults(func=_cmd_echogram)

    p = sub.add_parser("detect", help="run the detector over a .sraw file")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threshold-delta", type=float, default=detector.DEFAULT_THRESHOLD_DELTA)
    p.add_argument("--min-area-cells", type=int, default=detector.DEFAULT_MIN_AREA_CELLS)
    p.add_argument("--morph-open-radius", type=int, default=detector.DEFAULT_MORPH_OPEN_RADIUS)
    p.add_argument("--nms-iou", type=float, default=detector.DEFAULT_NMS_IOU)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("track", help="track detections (own or injected)")
    p.add_argument("--input", required=True)
    p.add_argument("--detections", help="MOT CSV to inject; omit to detect internally")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_track)

    p = sub.add_parser("count", help="directional crossing counts from a track CSV")
    p.add_argument("--input", required=True, help=".sraw file supplying the geometry")
    p.add_argument("--tracks", required=True)
    p.add_argument("--line-y", type=float, default=10.0)
    p.add_argument("--debounce", type=int, default=analytics.DEFAULT_DEBOUNCE_FRAMES)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_count)

    p = sub.add_parser("measure", help="fish lengths from a .sraw file (detect+track+measure)")
    p.add_argument("--input", required=True)
    p.add_argument("--meters-per-pixel", type=float, default=analytics.DEFAULT_METERS_PER_PIXEL)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_measure)

    p = sub.add_parser("evaluate", help="metric suite over GT and track CSVs")
    p.add_argument("--gt", required=True)
    p.add_argument("--tracks", required=True)
    p.add_argument("--detections")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("run", help="end-to-end pipeline")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", help="preset name or scenario JSON path")
    src.add_argument("--input", help=".sraw path")
    p.add_argument("--gt", help="MOT CSV ground truth (for --input)")
    p.add_argument("--out", required=True)
    p.add_argument("--gate", action="store_true")
    p.add_argument("--inject-detections")
    p.add_argument("--site", default="default")
    p.add_argument("--confidence-threshold", type=float, default=0.5)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("serve", help="review service HTTP API")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--frames-dir", default=None, help="directory containing .sraw files for frame rendering")
    p.add_argument("--confidence-threshold", type=float, default=0.5)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
