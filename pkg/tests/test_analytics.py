import math

import numpy as np
import pytest

from sonarflow.analytics import (
    CountEvent,
    box_center_world,
    centerline_length_px,
    detect_crossings,
    estimate_length,
    length_sample_m,
    mask_to_cartesian,
    net_counts,
    skeletonize,
)
from sonarflow.detector import Mask
from sonarflow.simulator import Direction


def history(track_ys, start_frame=0, x=0.0):
    return [(start_frame + k, (x, y)) for k, y in enumerate(track_ys)]


class TestDetectCrossings:
    def test_simple_upstream_crossing(self):
        events = detect_crossings(1, history([9.8, 10.2]), 10.0)
        assert len(events) == 1
        assert events[0].direction is Direction.UPSTREAM
        assert events[0].frame_index == 1

    def test_track_never_reaching_line(self):
        assert detect_crossings(1, history([5.0, 6.0, 7.0]), 10.0) == []

    def test_jitter_debounced_to_single_event(self):
        events = detect_crossings(1, history([9.9, 10.1, 9.9, 10.1]), 10.0, debounce_frames=5)
        assert len(events) == 1
        assert events[0].direction is Direction.UPSTREAM

    def test_two_real_crossings_outside_debounce(self):
        ys = [9.0, 11.0] + [11.0] * 20 + [9.0]
        events = detect_crossings(1, history(ys), 10.0, debounce_frames=5)
        assert [e.direction for e in events] == [Direction.UPSTREAM, Direction.DOWNSTREAM]

    def test_downstream_direction(self):
        events = detect_crossings(2, history([12.0, 9.5]), 10.0)
        assert events == [CountEvent(track_id=2, frame_index=1, direction=Direction.DOWNSTREAM)]

    def test_exactly_on_line_keeps_previous_side(self):
        events = detect_crossings(1, history([9.5, 10.0, 9.7]), 10.0)
        assert events == []

    def test_unsorted_history_accepted(self):
        events = detect_crossings(1, [(1, (0.0, 10.2)), (0, (0.0, 9.8))], 10.0)
        assert len(events) == 1


class TestNetCounts:
    def make(self, direction, k=0):
        return CountEvent(track_id=k, frame_index=k, direction=direction)

    def test_empty(self):
        assert net_counts([]) == (0, 0, 0)

    def test_three_up_one_down(self):
        events = [self.make(Direction.UPSTREAM, k) for k in range(3)]
        events.append(self.make(Direction.DOWNSTREAM, 9))
        assert net_counts(events) == (3, 1, 2)

    def test_order_invariant(self):
        events = [self.make(Direction.UPSTREAM, 0), self.make(Direction.DOWNSTREAM, 1)]
        assert net_counts(events) == net_counts(events[::-1])


def zhang_suen_reference(image):
    """Literal per-pixel transcription of the two-subcycle thinning rules;
    deliberately slow, used as the oracle for the vectorized version."""
    img = image.astype(bool).copy()

    def neighbors(r, c):
        return [
            img[r - 1, c], img[r - 1, c + 1], img[r, c + 1], img[r + 1, c + 1],
            img[r + 1, c], img[r + 1, c - 1], img[r, c - 1], img[r - 1, c - 1],
        ]

    changed = True
    while changed:
        changed = False
        for sub in (0, 1):
            to_delete = []
            for r in range(1, img.shape[0] - 1):
                for c in range(1, img.shape[1] - 1):
                    if not img[r, c]:
                        continue
                    p = neighbors(r, c)
                    b = sum(p)
                    if not 2 <= b <= 6:
                        continue
                    ring = p + [p[0]]
                    a = sum(1 for k in range(8) if not ring[k] and ring[k + 1])
                    if a != 1:
                        continue
                    p2, p4, p6, p8 = p[0], p[2], p[4], p[6]
                    if sub == 0 and (p2 and p4 and p6 or p4 and p6 and p8):
                        continue
                    if sub == 1 and (p2 and p4 and p8 or p2 and p6 and p8):
                        continue
                    to_delete.append((r, c))
            for r, c in to_delete:
                img[r, c] = False
            changed = changed or bool(to_delete)
    return img


class TestSkeletonize:
    def test_empty_raster(self):
        assert not skeletonize(np.zeros((5, 5), bool)).any()

    def test_bar_thins_to_single_pixel_line(self):
        bar = np.zeros((7, 34), bool)
        bar[2:5, 2:32] = True
        skeleton = skeletonize(bar)
        rows = set(np.nonzero(skeleton)[0].tolist())
        assert rows == {3}
        assert (skeleton.sum(axis=0) <= 1).all()
        assert skeleton.sum() >= 26

    def test_skeleton_subset_of_foreground(self):
        rng = np.random.default_rng(2)
        blob = rng.random((20, 20)) > 0.4
        skeleton = skeletonize(blob)
        assert not (skeleton & ~blob).any()

    def test_idempotent(self):
        rng = np.random.default_rng(3)
        blob = rng.random((25, 25)) > 0.45
        once = skeletonize(blob)
        assert np.array_equal(skeletonize(once), once)

    def test_matches_literal_rule_reference(self):
        rng = np.random.default_rng(5)
        for _ in range(15):
            img = np.zeros((18, 18), bool)
            img[2:16, 2:16] = rng.random((14, 14)) > 0.35
            assert np.array_equal(skeletonize(img), zhang_suen_reference(img))


class TestCenterlineLength:
    def test_single_pixel_is_zero(self):
        img = np.zeros((3, 3), bool)
        img[1, 1] = True
        assert centerline_length_px(img) == 0.0

    def test_straight_axial_line(self):
        img = np.zeros((3, 32), bool)
        img[1, 1:31] = True
        assert centerline_length_px(img) == pytest.approx(29.0)

    def test_l_shape_takes_diagonal_shortcut_at_corner(self):
        # 10+10 axial pixels sharing a corner; under the 8-neighbor metric
        # the geodesic cuts the corner: 8 + sqrt(2) + 8
        img = np.zeros((12, 12), bool)
        img[1:11, 1] = True
        img[10, 1:11] = True
        assert centerline_length_px(img) == pytest.approx(16 + math.sqrt(2))

    def test_diagonal_line(self):
        img = np.zeros((12, 12), bool)
        for k in range(10):
            img[k + 1, k + 1] = True
        assert centerline_length_px(img) == pytest.approx(9 * math.sqrt(2))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            centerline_length_px(np.zeros((4, 4), bool))


class TestLengthSample:
    def test_straight_31px_line_formula(self):
        img = np.zeros((3, 33), bool)
        img[1, 1:32] = True
        assert length_sample_m(img, 0.02) == pytest.approx(31 * 0.02)

    def test_ideal_ellipse_recovers_extent(self):
        for extent_px in (20, 30, 46):
            a, b = extent_px / 2, extent_px / 8
            h, w = int(2 * b) + 6, extent_px + 6
            yy, xx = np.mgrid[0:h, 0:w]
            ellipse = ((xx - (w - 1) / 2) / a) ** 2 + ((yy - (h - 1) / 2) / b) ** 2 <= 1
            sample = length_sample_m(ellipse, 1.0)
            assert sample == pytest.approx(extent_px, abs=1.5)


class TestEstimateLength:
    class _Output:
        def __init__(self, mask):
            self.mask = mask

    def radial_mask(self, geom, r_start_m, length_m, beam=64):
        mpb = geom.meters_per_bin
        bin_start = int(round((r_start_m - geom.range_min_m) / mpb))
        n = int(round(length_m / mpb)) + 1
        cells_b = np.concatenate([np.full(n, beam - 1), np.full(n, beam), np.full(n, beam + 1)])
        cells_r = np.tile(np.arange(bin_start, bin_start + n), 3)
        return Mask.from_cells(cells_b, cells_r)

    def test_radial_mask_recovers_world_length(self, geom):
        mask = self.radial_mask(geom, 8.0, 0.6)
        est = estimate_length(1, [self._Output(mask)], geom, 0.02)
        assert est.sample_count == 1
        assert 0.54 <= est.length_m <= 0.70

    def test_single_frame_median_is_that_sample(self, geom):
        mask = self.radial_mask(geom, 10.0, 0.5)
        est = estimate_length(1, [self._Output(mask)], geom, 0.02)
        assert est.length_m == est.samples_m[0]

    def test_median_over_frames(self, geom):
        outputs = [
            self._Output(self.radial_mask(geom, 8.0, 0.5)),
            self._Output(self.radial_mask(geom, 9.0, 0.6)),
            self._Output(self.radial_mask(geom, 10.0, 0.7)),
        ]
        est = estimate_length(1, outputs, geom, 0.02)
        assert est.sample_count == 3
        assert est.length_m == sorted(est.samples_m)[1]

    def test_doubling_world_size_doubles_estimate(self, geom):
        small = estimate_length(1, [self._Output(self.radial_mask(geom, 9.0, 0.4))], geom, 0.02)
        large = estimate_length(1, [self._Output(self.radial_mask(geom, 9.0, 0.8))], geom, 0.02)
        assert abs(large.length_m - 2 * small.length_m) <= 2 * 0.02 + 2 * geom.meters_per_bin

    def test_no_qualifying_frames_rejected(self, geom):
        tiny = Mask.from_cells(np.array([64]), np.array([100]))
        with pytest.raises(ValueError):
            estimate_length(1, [self._Output(tiny)], geom, 0.02, min_mask_area=12)
        with pytest.raises(ValueError):
            estimate_length(1, [self._Output(None)], geom, 0.02)

    def test_simulated_fish_length_band(self, small_geom):
        # end-to-end oracle: simulate one zero-noise fish, detect, measure
        from sonarflow.detector import detect, estimate_background
        from sonarflow.simulator import FishSpec, NoiseParams, ScenarioConfig, simulate

        config = ScenarioConfig(
            geom=small_geom,
            duration_frames=60,
            fish=(FishSpec(id=1, length_m=0.6, speed_mps=0.5, entry_frame=0, reflectivity=0.9),),
            noise=NoiseParams(0.1, 0.0, 0.0),
            counting_line_y_m=5.0,
            seed=3,
        )
        frames, _ = simulate(config)
        background = estimate_background(frames[:1], 1)
        outputs = []
        for f in range(len(frames)):
            dets = detect(frames[f], background, frame_index=f)
            if dets:
                outputs.append(self._Output(dets[0].mask))
        est = estimate_length(1, outputs, small_geom, 0.02)
        assert 0.54 <= est.length_m <= 0.66


class TestMaskToCartesian:
    def test_gap_free_below_cell_pitch(self, geom):
        mask = Mask.from_cells(np.full(20, 64), np.arange(200, 220))
        raster = mask_to_cartesian(mask, geom, 0.01)
        from scipy import ndimage

        labels, count = ndimage.label(raster, structure=np.ones((3, 3)))
        assert count == 1

    def test_rejects_bad_resolution(self, geom):
        mask = Mask.from_cells(np.array([1]), np.array([1]))
        with pytest.raises(ValueError):
            mask_to_cartesian(mask, geom, 0.0)


def test_box_center_world_clamps_into_grid(geom):
    x, y = box_center_world(geom, (-5.0, -5.0, 2.0, 2.0))
    assert math.hypot(x, y) == pytest.approx(geom.range_min_m)
    x, y = box_center_world(geom, (63.0, 255.0, 1.0, 1.0))
    assert y > 0
