"""Evaluation suite: detection (mAP, F1), tracking (MOTA, HOTA, IDF1),
counting (MAE, RMSE, MAPE) and length (MAE, RMSE) metrics.

Track data is exchanged as flat observation lists: ``(frame, id, box)``
tuples (confidence added for detections).  Conventions for degenerate
inputs are explicit: a metric over an empty ground truth AND empty
predictions is 1.0; undefined ratios are reported as NaN.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .assignment import solve_assignment
from .detector import Box, iou

DEFAULT_ALPHA_GRID = tuple(round(0.05 * k, 2) for k in range(1, 20))
MAP_50_75_THRESHOLDS = tuple(round(0.50 + 0.05 * k, 2) for k in range(6))

Observation = tuple[int, int, Box]  # (frame_index, track_id, box)
ScoredBox = tuple[int, float, Box]  # (frame_index, confidence, box)


@dataclass
class MetricsReport:
    map50: float
    map50_75: float
    detection_f1: float
    mota: float
    hota: float
    det_a: float
    ass_a: float
    idf1: float
    id_switches: int
    count_mae: float
    count_rmse: float
    count_mape: float
    length_mae_m: float
    length_rmse_m: float
    detection_tallies: dict[float, dict[str, int]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "map50": self.map50,
            "map50_75": self.map50_75,
            "detection_f1": self.detection_f1,
            "mota": self.mota,
            "hota": self.hota,
            "det_a": self.det_a,
            "ass_a": self.ass_a,
            "idf1": self.idf1,
            "id_switches": self.id_switches,
            "count_mae": self.count_mae,
            "count_rmse": self.count_rmse,
            "count_mape": self.count_mape,
            "length_mae_m": self.length_mae_m,
            "length_rmse_m": self.length_rmse_m,
            "detection_tallies": {str(k): v for k, v in sorted(self.detection_tallies.items())},
        }


def match_frame(
    gt_boxes: list[Box], pred_boxes: list[Box], iou_threshold: float
) -> tuple[list[tuple[int, int]], list[int], list[int]]:
    """One-to-one matching maximizing total IoU among pairs above threshold.

    Returns (matches as (gt_idx, pred_idx) pairs, unmatched gt indices,
    unmatched pred indices).
    """
    if not gt_boxes or not pred_boxes:
        return [], list(range(len(gt_boxes))), list(range(len(pred_boxes)))
    cost = np.full((len(gt_boxes), len(pred_boxes)), np.inf)
    for i, g in enumerate(gt_boxes):
        for j, p in enumerate(pred_boxes):
            o = iou(g, p)
            if o >= iou_threshold:
                cost[i, j] = -o
    assign, _ = solve_assignment(cost)
    matches = [(i, j) for i, j in enumerate(assign) if j is not None]
    matched_preds = {j for _, j in matches}
    unmatched_gt = [i for i, j in enumerate(assign) if j is None]
    unmatched_pred = [j for j in range(len(pred_boxes)) if j not in matched_preds]
    return matches, unmatched_gt, unmatched_pred


def _by_frame(records) -> dict[int, list]:
    grouped: dict[int, list] = defaultdict(list)
    for rec in records:
        grouped[rec[0]].append(rec)
    return grouped


def average_precision(predictions: list[ScoredBox], gts: list[tuple[int, Box]], iou_threshold: float) -> float:
    """All-point interpolated AP with greedy confidence-ordered matching."""
    n_gt = len(gts)
    if n_gt == 0:
        return 0.0 if predictions else 1.0
    gt_by_frame: dict[int, list[Box]] = defaultdict(list)
    for frame, box in gts:
        gt_by_frame[frame].append(box)
    taken: dict[int, set[int]] = defaultdict(set)

    order = sorted(range(len(predictions)), key=lambda k: (-predictions[k][1], predictions[k][0], k))
    tp = np.zeros(len(order))
    fp = np.zeros(len(order))
    for rank, k in enumerate(order):
        frame, _, box = predictions[k]
        best_iou, best_j = 0.0, None
        for j, gt_box in enumerate(gt_by_frame.get(frame, [])):
            if j in taken[frame]:
                continue
            o = iou(box, gt_box)
            if o >= iou_threshold and o > best_iou:
                best_iou, best_j = o, j
        if best_j is not None:
            taken[frame].add(best_j)
            tp[rank] = 1
        else:
            fp[rank] = 1
    if len(order) == 0:
        return 0.0
    tp_cum = np.cumsum(tp)
    fp_cum = np.cumsum(fp)
    recall = tp_cum / n_gt
    precision = tp_cum / (tp_cum + fp_cum)
    # precision envelope over recall, integrated at recall steps
    mrec = np.concatenate([[0.0], recall, [recall[-1]]])
    mpre = np.concatenate([[1.0], precision, [0.0]])
    for i in range(len(mpre) - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    idx = np.nonzero(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[idx + 1] - mrec[idx]) * mpre[idx + 1]))


def map_range(predictions: list[ScoredBox], gts: list[tuple[int, Box]], thresholds) -> float:
    thresholds = list(thresholds)
    if not thresholds:
        raise ValueError("thresholds must be nonempty")
    return float(np.mean([average_precision(predictions, gts, t) for t in thresholds]))


def detection_f1(predictions: list[ScoredBox], gts: list[tuple[int, Box]], iou_threshold: float = 0.5) -> float:
    """F1 of per-frame optimal matching at the given IoU threshold."""
    if not gts and not predictions:
        return 1.0
    pred_by_frame: dict[int, list[Box]] = defaultdict(list)
    for frame, _, box in predictions:
        pred_by_frame[frame].append(box)
    gt_by_frame: dict[int, list[Box]] = defaultdict(list)
    for frame, box in gts:
        gt_by_frame[frame].append(box)
    tp = fp = fn = 0
    for frame in set(pred_by_frame) | set(gt_by_frame):
        matches, unmatched_gt, unmatched_pred = match_frame(
            gt_by_frame.get(frame, []), pred_by_frame.get(frame, []), iou_threshold
        )
        tp += len(matches)
        fn += len(unmatched_gt)
        fp += len(unmatched_pred)
    if 2 * tp + fp + fn == 0:
        return 1.0
    return 2 * tp / (2 * tp + fp + fn)


def mota(
    gt_tracks: list[Observation], pred_tracks: list[Observation], iou_threshold: float = 0.5
) -> tuple[float, int, int, int, int]:
    """CLEAR-style MOTA with match persistence.

    Returns (mota, fn, fp, id_switches, gt_total); mota is NaN when the
    ground truth is empty.
    """
    gt_by_frame = _by_frame(gt_tracks)
    pred_by_frame = _by_frame(pred_tracks)
    gt_total = len(gt_tracks)
    fn = fp = idsw = 0
    active: dict[int, int] = {}  # gt_id -> pred_id matched in the previous frame
    last_match: dict[int, int] = {}  # gt_id -> most recent matched pred_id
    for frame in sorted(set(gt_by_frame) | set(pred_by_frame)):
        gts = gt_by_frame.get(frame, [])
        preds = pred_by_frame.get(frame, [])
        gt_ids = [g[1] for g in gts]
        pred_ids = [p[1] for p in preds]
        gt_boxes = {g[1]: g[2] for g in gts}
        pred_boxes = {p[1]: p[2] for p in preds}

        pairs: list[tuple[int, int]] = []
        # keep surviving pairs from the previous frame
        for gid, pid in active.items():
            if gid in gt_boxes and pid in pred_boxes and iou(gt_boxes[gid], pred_boxes[pid]) >= iou_threshold:
                pairs.append((gid, pid))
        matched_g = {g for g, _ in pairs}
        matched_p = {p for _, p in pairs}
        rest_g = [g for g in gt_ids if g not in matched_g]
        rest_p = [p for p in pred_ids if p not in matched_p]
        matches, _, _ = match_frame([gt_boxes[g] for g in rest_g], [pred_boxes[p] for p in rest_p], iou_threshold)
        pairs.extend((rest_g[i], rest_p[j]) for i, j in matches)

        fn += len(gt_ids) - len(pairs)
        fp += len(pred_ids) - len(pairs)
        for gid, pid in pairs:
            if gid in last_match and last_match[gid] != pid:
                idsw += 1
            last_match[gid] = pid
        active = dict(pairs)
    score = math.nan if gt_total == 0 else 1.0 - (fn + fp + idsw) / gt_total
    return score, fn, fp, idsw, gt_total


def hota(
    gt_tracks: list[Observation],
    pred_tracks: list[Observation],
    alpha_grid=DEFAULT_ALPHA_GRID,
) -> tuple[float, dict[float, float], dict[float, float]]:
    """HOTA averaged over the alpha grid, plus per-alpha DetA and AssA.

    Per alpha, true positives come from per-frame Hungarian matching among
    pairs with IoU >= alpha, maximizing match count first and total global
    association score second (the documented tie-break).
    """
    if not gt_tracks and not pred_tracks:
        return 1.0, {a: 1.0 for a in alpha_grid}, {a: 1.0 for a in alpha_grid}
    gt_by_frame = _by_frame(gt_tracks)
    pred_by_frame = _by_frame(pred_tracks)
    frames = sorted(set(gt_by_frame) | set(pred_by_frame))
    gt_count: dict[int, int] = defaultdict(int)
    for _, gid, _ in gt_tracks:
        gt_count[gid] += 1
    pred_count: dict[int, int] = defaultdict(int)
    for _, pid, _ in pred_tracks:
        pred_count[pid] += 1

    det_a: dict[float, float] = {}
    ass_a: dict[float, float] = {}
    hota_alpha: dict[float, float] = {}
    for alpha in alpha_grid:
        potential: dict[tuple[int, int], int] = defaultdict(int)
        eligible: dict[int, list[tuple[int, int]]] = {}
        for frame in frames:
            pairs = []
            for _, gid, gbox in gt_by_frame.get(frame, []):
                for _, pid, pbox in pred_by_frame.get(frame, []):
                    if iou(gbox, pbox) >= alpha:
                        pairs.append((gid, pid))
                        potential[(gid, pid)] += 1
            eligible[frame] = pairs

        global_score = {
            key: cnt / (gt_count[key[0]] + pred_count[key[1]] - cnt) for key, cnt in potential.items()
        }

        tp_pairs: dict[tuple[int, int], int] = defaultdict(int)
        tp = 0
        for frame in frames:
            gts = gt_by_frame.get(frame, [])
            preds = pred_by_frame.get(frame, [])
            if not gts or not preds or not eligible[frame]:
                continue
            gt_ids = [g[1] for g in gts]
            pred_ids = [p[1] for p in preds]
            ok = set(eligible[frame])
            cost = np.full((len(gt_ids), len(pred_ids)), np.inf)
            for i, gid in enumerate(gt_ids):
                for j, pid in enumerate(pred_ids):
                    if (gid, pid) in ok:
                        # maximize cardinality first, then global score
                        cost[i, j] = -(1.0 + global_score[(gid, pid)])
            assign, _ = solve_assignment(cost)
            for i, j in enumerate(assign):
                if j is not None:
                    tp_pairs[(gt_ids[i], pred_ids[j])] += 1
                    tp += 1

        fn = len(gt_tracks) - tp
        fp = len(pred_tracks) - tp
        if tp + fn + fp == 0:
            det_a[alpha] = 1.0
            ass_a[alpha] = 1.0
            hota_alpha[alpha] = 1.0
            continue
        det_a[alpha] = tp / (tp + fn + fp)
        if tp == 0:
            ass_a[alpha] = 0.0
        else:
            total_ass = 0.0
            for (gid, pid), tpa in tp_pairs.items():
                fna = gt_count[gid] - tpa
                fpa = pred_count[pid] - tpa
                total_ass += tpa * (tpa / (tpa + fna + fpa))
            ass_a[alpha] = total_ass / tp
        hota_alpha[alpha] = math.sqrt(det_a[alpha] * ass_a[alpha])
    return float(np.mean(list(hota_alpha.values()))), det_a, ass_a


def idf1(
    gt_tracks: list[Observation], pred_tracks: list[Observation], iou_threshold: float = 0.5
) -> tuple[float, int, int, int]:
    """Identity F1 under the optimal trajectory-level id pairing.

    Returns (idf1, idtp, idfp, idfn).
    """
    if not gt_tracks and not pred_tracks:
        return 1.0, 0, 0, 0
    gt_count: dict[int, int] = defaultdict(int)
    pred_count: dict[int, int] = defaultdict(int)
    overlap: dict[tuple[int, int], int] = defaultdict(int)
    for _, gid, _ in gt_tracks:
        gt_count[gid] += 1
    for _, pid, _ in pred_tracks:
        pred_count[pid] += 1
    gt_by_frame = _by_frame(gt_tracks)
    pred_by_frame = _by_frame(pred_tracks)
    for frame in set(gt_by_frame) & set(pred_by_frame):
        for _, gid, gbox in gt_by_frame[frame]:
            for _, pid, pbox in pred_by_frame[frame]:
                if iou(gbox, pbox) >= iou_threshold:
                    overlap[(gid, pid)] += 1

    gt_ids = sorted(gt_count)
    pred_ids = sorted(pred_count)
    idtp = 0
    if gt_ids and pred_ids:
        cost = np.zeros((len(gt_ids), len(pred_ids)))
        for i, gid in enumerate(gt_ids):
            for j, pid in enumerate(pred_ids):
                cost[i, j] = -overlap.get((gid, pid), 0)
        assign, total = solve_assignment(cost)
        idtp = int(round(-total))
    idfn = len(gt_tracks) - idtp
    idfp = len(pred_tracks) - idtp
    denom = 2 * idtp + idfp + idfn
    score = 1.0 if denom == 0 else 2 * idtp / denom
    return score, idtp, idfp, idfn


def count_errors(predicted, true) -> tuple[float, float, float]:
    """(mae, rmse, mape) over per-scenario totals.

    MAPE skips entries whose true total is 0 and is NaN if none remain.
    """
    predicted = np.asarray(predicted, dtype=float)
    true = np.asarray(true, dtype=float)
    if predicted.shape != true.shape or predicted.size == 0:
        raise ValueError("predicted and true totals must be equal-length and nonempty")
    err = predicted - true
    mae = float(np.abs(err).mean())
    rmse = float(np.sqrt((err**2).mean()))
    nonzero = true != 0
    mape = float(np.abs(err[nonzero] / true[nonzero]).mean()) if nonzero.any() else math.nan
    return mae, rmse, mape


def length_errors(predicted_m, true_m) -> tuple[float, float]:
    """(mae, rmse) in meters over matched fish pairs; NaN when no pairs."""
    predicted = np.asarray(predicted_m, dtype=float)
    true = np.asarray(true_m, dtype=float)
    if predicted.shape != true.shape:
        raise ValueError("predicted and true lengths must be equal-length")
    if predicted.size == 0:
        return math.nan, math.nan
    err = predicted - true
    return float(np.abs(err).mean()), float(np.sqrt((err**2).mean()))


def match_tracks_to_truth(
    gt_tracks: list[Observation], pred_tracks: list[Observation], iou_threshold: float = 0.5
) -> dict[int, int]:
    """Map each ground-truth id to the predicted track that dominantly covers it.

    Per frame, each predicted box votes for its best-IoU ground truth above
    the threshold; each ground-truth id is then paired with the track holding
    the most votes (ties to the smaller track id).
    """
    votes: dict[int, dict[int, int]] = defaultdict(lambda: defaultdict(int))
    gt_by_frame = _by_frame(gt_tracks)
    for frame, pid, pbox in pred_tracks:
        best_gid, best_iou = None, iou_threshold
        for _, gid, gbox in gt_by_frame.get(frame, []):
            o = iou(pbox, gbox)
            if o > best_iou or (o == best_iou and best_gid is not None and gid < best_gid):
                best_gid, best_iou = gid, o
            elif best_gid is None and o >= best_iou:
                best_gid, best_iou = gid, o
        if best_gid is not None:
            votes[best_gid][pid] += 1
    return {
        gid: min(pid for pid, v in pids.items() if v == max(pids.values()))
        for gid, pids in votes.items()
    }


def evaluate_tracking(
    gt_tracks: list[Observation],
    pred_tracks: list[Observation],
    detections: list[ScoredBox] | None = None,
    counts_predicted=None,
    counts_true=None,
    lengths_predicted=None,
    lengths_true=None,
) -> MetricsReport:
    """Assemble the full report from raw observation lists."""
    gt_boxes = [(f, b) for f, _, b in gt_tracks]
    if detections is None:
        detections = [(f, 1.0, b) for f, _, b in pred_tracks]
    map50 = average_precision(detections, gt_boxes, 0.5)
    map50_75 = map_range(detections, gt_boxes, MAP_50_75_THRESHOLDS)
    f1 = detection_f1(detections, gt_boxes, 0.5)
    mota_score, fn, fp, idsw, gt_total = mota(gt_tracks, pred_tracks, 0.5)
    hota_score, det_a, ass_a = hota(gt_tracks, pred_tracks)
    idf1_score, idtp, idfp, idfn = idf1(gt_tracks, pred_tracks, 0.5)
    if counts_predicted is not None and counts_true is not None and len(counts_true):
        count_mae, count_rmse, count_mape = count_errors(counts_predicted, counts_true)
    else:
        count_mae = count_rmse = count_mape = math.nan
    if lengths_predicted is not None and lengths_true is not None:
        length_mae, length_rmse = length_errors(lengths_predicted, lengths_true)
    else:
        length_mae = length_rmse = math.nan
    tallies = {
        0.5: {"tp": gt_total - fn, "fp": fp, "fn": fn},
    }
    return MetricsReport(
        map50=map50,
        map50_75=map50_75,
        detection_f1=f1,
        mota=mota_score,
        hota=hota_score,
        det_a=float(np.mean(list(det_a.values()))),
        ass_a=float(np.mean(list(ass_a.values()))),
        idf1=idf1_score,
        id_switches=idsw,
        count_mae=count_mae,
        count_rmse=count_rmse,
        count_mape=count_mape,
        length_mae_m=length_mae,
        length_rmse_m=length_rmse,
        detection_tallies=tallies,
    )
