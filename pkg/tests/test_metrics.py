import itertools
import math

import numpy as np
import pytest

from sonarflow.metrics import (
    average_precision,
    count_errors,
    detection_f1,
    hota,
    idf1,
    length_errors,
    map_range,
    match_frame,
    match_tracks_to_truth,
    mota,
)


def track(frames, tid, boxes):
    return [(f, tid, b) for f, b in zip(frames, boxes)]


def straight_boxes(n, x0=10.0, y0=10.0, step=5.0, w=8.0, h=8.0):
    return [(x0, y0 + k * step, w, h) for k in range(n)]


def ten_frame_split_case():
    """One 10-frame GT trajectory; predictions use id 1 for the first five
    frames and id 2 for the rest, with perfect boxes."""
    boxes = straight_boxes(10)
    gt = track(range(10), 1, boxes)
    pred = track(range(5), 1, boxes[:5]) + track(range(5, 10), 2, boxes[5:])
    return gt, pred


class TestMatchFrame:
    def test_identical_sets_match_perfectly(self):
        boxes = [(0.0, 0.0, 4.0, 4.0), (10.0, 10.0, 4.0, 4.0)]
        matches, un_gt, un_pred = match_frame(boxes, boxes, 0.5)
        assert sorted(matches) == [(0, 0), (1, 1)]
        assert un_gt == [] and un_pred == []

    def test_empty_predictions(self):
        boxes = [(0.0, 0.0, 4.0, 4.0)]
        matches, un_gt, un_pred = match_frame(boxes, [], 0.5)
        assert matches == [] and un_gt == [0] and un_pred == []

    def test_three_by_three_matches_brute_force(self):
        rng = np.random.default_rng(31)
        for _ in range(40):
            gt = [(rng.uniform(0, 20), rng.uniform(0, 20), 8.0, 8.0) for _ in range(3)]
            pred = [(g[0] + rng.uniform(-4, 4), g[1] + rng.uniform(-4, 4), 8.0, 8.0) for g in gt]
            matches, _, _ = match_frame(gt, pred, 0.3)
            from sonarflow.detector import iou

            got = sum(iou(gt[i], pred[j]) for i, j in matches)
            best = 0.0
            for perm in itertools.permutations(range(3)):
                total = sum(
                    iou(gt[i], pred[perm[i]])
                    for i in range(3)
                    if iou(gt[i], pred[perm[i]]) >= 0.3
                )
                best = max(best, total)
            assert got == pytest.approx(best)


class TestAveragePrecision:
    def test_single_true_positive(self):
        gts = [(0, (0.0, 0.0, 10.0, 10.0))]
        preds = [(0, 0.9, (1.0, 0.0, 10.0, 10.0))]  # IoU ~ 0.8
        assert average_precision(preds, gts, 0.5) == pytest.approx(1.0)

    def test_single_disjoint_prediction(self):
        gts = [(0, (0.0, 0.0, 10.0, 10.0))]
        preds = [(0, 0.9, (50.0, 50.0, 10.0, 10.0))]
        assert average_precision(preds, gts, 0.5) == 0.0

    def test_duplicates_count_as_false_positives(self):
        # two GT boxes in different frames, each predicted twice at equal
        # confidence; the interleaved duplicate drags the envelope below 1
        gts = [(0, (0.0, 0.0, 10.0, 10.0)), (1, (30.0, 30.0, 10.0, 10.0))]
        preds = [
            (0, 1.0, (0.0, 0.0, 10.0, 10.0)),
            (0, 1.0, (0.0, 0.0, 10.0, 10.0)),
            (1, 1.0, (30.0, 30.0, 10.0, 10.0)),
            (1, 1.0, (30.0, 30.0, 10.0, 10.0)),
        ]
        # hand-computed PR walk: TP FP TP FP -> AP = 0.5*1 + 0.5*(2/3)
        assert average_precision(preds, gts, 0.5) == pytest.approx(0.5 + 0.5 * 2 / 3)

    def test_zero_gt_conventions(self):
        assert average_precision([], [], 0.5) == 1.0
        assert average_precision([(0, 0.9, (0.0, 0.0, 1.0, 1.0))], [], 0.5) == 0.0


class TestMapRange:
    def test_perfect_detections_all_thresholds(self):
        gts = [(f, (0.0, 0.0, 10.0, 10.0)) for f in range(5)]
        preds = [(f, 0.9, (0.0, 0.0, 10.0, 10.0)) for f in range(5)]
        assert map_range(preds, gts, [0.5 + 0.05 * k for k in range(6)]) == pytest.approx(1.0)

    def test_single_threshold_equals_ap(self):
        gts = [(0, (0.0, 0.0, 10.0, 10.0))]
        preds = [(0, 0.7, (2.0, 0.0, 10.0, 10.0))]
        assert map_range(preds, gts, [0.5]) == pytest.approx(average_precision(preds, gts, 0.5))

    def test_intermediate_value_for_iou_between_thresholds(self):
        # IoU = 10/15 ~ 0.667: above 0.5, below 0.75
        gts = [(0, (0.0, 0.0, 10.0, 10.0))]
        preds = [(0, 0.9, (0.0, 2.5, 10.0, 10.0))]  # IoU 0.6
        lo = average_precision(preds, gts, 0.5)
        hi = average_precision(preds, gts, 0.75)
        assert lo == 1.0 and hi == 0.0
        mid = map_range(preds, gts, [0.5 + 0.05 * k for k in range(6)])
        assert 0.0 < mid < 1.0

    def test_empty_thresholds_rejected(self):
        with pytest.raises(ValueError):
            map_range([], [], [])


class TestMota:
    def test_perfect_predictions(self):
        gt, _ = ten_frame_split_case()
        score, fn, fp, idsw, total = mota(gt, gt, 0.5)
        assert (score, fn, fp, idsw) == (1.0, 0, 0, 0)
        assert total == 10

    def test_one_fn_one_fp_formula(self):
        boxes = straight_boxes(10)
        gt = track(range(10), 1, boxes)
        pred = track(range(9), 1, boxes[:9])  # FN at frame 9
        pred.append((3, 99, (200.0, 200.0, 5.0, 5.0)))  # spurious FP
        score, fn, fp, idsw, total = mota(gt, pred, 0.5)
        assert (fn, fp, idsw, total) == (1, 1, 0, 10)
        assert score == pytest.approx(0.8)

    def test_empty_predictions(self):
        gt, _ = ten_frame_split_case()
        score, fn, fp, idsw, total = mota(gt, [], 0.5)
        assert score == pytest.approx(0.0)
        assert fn == total == 10

    def test_id_switch_counted(self):
        gt, pred = ten_frame_split_case()
        score, fn, fp, idsw, total = mota(gt, pred, 0.5)
        assert idsw == 1
        assert score == pytest.approx(1.0 - 1 / 10)

    def test_empty_gt_is_nan(self):
        score, *_ = mota([], [(0, 1, (0.0, 0.0, 1.0, 1.0))], 0.5)
        assert math.isnan(score)

    def test_match_persistence_prevents_flip_flop_switches(self):
        # two overlapping GT boxes tracked consistently; optimal per-frame
        # re-matching could swap them, persistence must not
        gt = track(range(6), 1, [(0.0, k, 10.0, 10.0) for k in range(6)])
        gt += track(range(6), 2, [(4.0, k, 10.0, 10.0) for k in range(6)])
        pred = track(range(6), 7, [(0.0, k, 10.0, 10.0) for k in range(6)])
        pred += track(range(6), 8, [(4.0, k, 10.0, 10.0) for k in range(6)])
        _, fn, fp, idsw, _ = mota(gt, pred, 0.5)
        assert (fn, fp, idsw) == (0, 0, 0)


class TestHota:
    def test_perfect_tracking(self):
        gt, _ = ten_frame_split_case()
        score, det_a, ass_a = hota(gt, gt)
        assert score == pytest.approx(1.0)
        assert all(v == pytest.approx(1.0) for v in det_a.values())
        assert all(v == pytest.approx(1.0) for v in ass_a.values())

    def test_no_predictions(self):
        gt, _ = ten_frame_split_case()
        score, _, _ = hota(gt, [])
        assert score == 0.0

    def test_split_identity_hand_case(self):
        gt, pred = ten_frame_split_case()
        score, det_a, ass_a = hota(gt, pred)
        for alpha in det_a:
            assert det_a[alpha] == pytest.approx(1.0)
            assert ass_a[alpha] == pytest.approx(0.5)
        assert score == pytest.approx(math.sqrt(0.5), abs=1e-9)

    def test_empty_empty_convention(self):
        score, _, _ = hota([], [])
        assert score == 1.0

    def test_invariant_under_prediction_relabeling(self):
        gt, pred = ten_frame_split_case()
        relabeled = [(f, tid + 107, b) for f, tid, b in pred]
        assert hota(gt, pred)[0] == pytest.approx(hota(gt, relabeled)[0])


class TestIdf1:
    def test_perfect_tracking(self):
        gt, _ = ten_frame_split_case()
        score, idtp, idfp, idfn = idf1(gt, gt, 0.5)
        assert (score, idtp, idfp, idfn) == (1.0, 10, 0, 0)

    def test_split_identity_hand_case(self):
        gt, pred = ten_frame_split_case()
        score, idtp, idfp, idfn = idf1(gt, pred, 0.5)
        assert (idtp, idfp, idfn) == (5, 5, 5)
        assert score == pytest.approx(0.5)

    def test_empty_predictions(self):
        gt, _ = ten_frame_split_case()
        score, *_ = idf1(gt, [], 0.5)
        assert score == 0.0

    def test_empty_empty_convention(self):
        assert idf1([], [], 0.5)[0] == 1.0

    def test_invariant_under_prediction_relabeling(self):
        gt, pred = ten_frame_split_case()
        relabeled = [(f, -tid, b) for f, tid, b in pred]
        assert idf1(gt, pred, 0.5)[0] == pytest.approx(idf1(gt, relabeled, 0.5)[0])


class TestCountErrors:
    def test_ninety_vs_hundred(self):
        mae, rmse, mape = count_errors([90], [100])
        assert (mae, rmse, mape) == (10.0, 10.0, pytest.approx(0.10))

    def test_perfect_counts(self):
        assert count_errors([5, 7], [5, 7]) == (0.0, 0.0, 0.0)

    def test_two_scenarios_arithmetic(self):
        mae, rmse, mape = count_errors([13, 6], [10, 10])
        assert mae == pytest.approx(3.5)
        assert rmse == pytest.approx(math.sqrt(12.5))

    def test_mape_skips_zero_truth(self):
        _, _, mape = count_errors([1, 11], [0, 10])
        assert mape == pytest.approx(0.1)
        _, _, mape = count_errors([1, 2], [0, 0])
        assert math.isnan(mape)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            count_errors([1, 2], [1])
        with pytest.raises(ValueError):
            count_errors([], [])


class TestLengthErrors:
    def test_perfect(self):
        assert length_errors([0.6, 0.7], [0.6, 0.7]) == (0.0, 0.0)

    def test_single_pair(self):
        mae, rmse = length_errors([0.58], [0.60])
        assert mae == pytest.approx(0.02)
        assert rmse == pytest.approx(0.02)

    def test_two_pair_arithmetic(self):
        mae, rmse = length_errors([0.61, 0.63], [0.60, 0.60])
        assert mae == pytest.approx(0.02)
        assert rmse == pytest.approx(math.sqrt(0.0005))

    def test_no_pairs_is_nan(self):
        mae, rmse = length_errors([], [])
        assert math.isnan(mae) and math.isnan(rmse)


class TestRangesFuzz:
    def test_all_unit_metrics_stay_in_range(self):
        rng = np.random.default_rng(77)
        for _ in range(200):
            n_frames = int(rng.integers(1, 6))
            def random_tracks():
                obs = []
                for f in range(n_frames):
                    for tid in range(int(rng.integers(0, 4))):
                        obs.append(
                            (f, int(rng.integers(1, 4)), (
                                float(rng.uniform(0, 20)), float(rng.uniform(0, 20)),
                                float(rng.uniform(1, 10)), float(rng.uniform(1, 10)),
                            ))
                        )
                # ids must be unique per frame for a sane track set
                seen = set()
                unique = []
                for f, tid, b in obs:
                    if (f, tid) not in seen:
                        seen.add((f, tid))
                        unique.append((f, tid, b))
                return unique

            gt = random_tracks()
            pred = random_tracks()
            preds_scored = [(f, float(rng.uniform()), b) for f, _, b in pred]
            assert 0.0 <= average_precision(preds_scored, [(f, b) for f, _, b in gt], 0.5) <= 1.0
            assert 0.0 <= detection_f1(preds_scored, [(f, b) for f, _, b in gt], 0.5) <= 1.0
            h, _, _ = hota(gt, pred)
            assert 0.0 <= h <= 1.0
            i, *_ = idf1(gt, pred, 0.5)
            assert 0.0 <= i <= 1.0
            m, *_ = mota(gt, pred, 0.5)
            if gt:
                assert m <= 1.0
            else:
                assert math.isnan(m)


class TestMatchTracksToTruth:
    def test_dominant_track_wins(self):
        boxes = straight_boxes(10)
        gt = track(range(10), 5, boxes)
        pred = track(range(2), 100, boxes[:2]) + track(range(2, 10), 200, boxes[2:])
        assert match_tracks_to_truth(gt, pred) == {5: 200}

    def test_unrelated_tracks_ignored(self):
        gt = track(range(5), 1, straight_boxes(5))
        pred = track(range(5), 9, [(100.0, 100.0, 5.0, 5.0)] * 5)
        assert match_tracks_to_truth(gt, pred) == {}
