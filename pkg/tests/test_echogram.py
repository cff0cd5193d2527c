import numpy as np
import pytest

from sonarflow.echogram import Echogram, Reduction, activity_gate, build_echogram, write_csv, write_pgm


class TestBuildEchogram:
    def test_all_zero_frames(self):
        frames = np.zeros((5, 8, 16))
        gram = build_echogram(frames)
        assert gram.values.shape == (16, 5)
        assert not gram.values.any()

    def test_single_lit_cell_max_reduction(self):
        frames = np.zeros((3, 8, 16))
        frames[1, 4, 9] = 1.0
        gram = build_echogram(frames, Reduction.MAX)
        assert gram.values[9, 1] == 1.0
        assert gram.values.sum() == 1.0

    def test_mean_reduction_column_sums(self):
        rng = np.random.default_rng(3)
        frames = rng.uniform(size=(6, 8, 16))
        gram = build_echogram(frames, Reduction.MEAN)
        for t in range(6):
            assert gram.values[:, t].sum() == pytest.approx(frames[t].sum() / 8)

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            build_echogram(np.zeros((0, 8, 16)))


class TestActivityGate:
    def test_constant_echogram_inactive(self):
        gram = Echogram(values=np.full((16, 20), 0.3))
        assert activity_gate(gram, 0.5, 1.0) == []

    def test_single_spike_frame_detected(self):
        # 20 quiet frames with one bright column; baseline is the quiet
        # level, std is dominated by the spike, chosen k keeps only it
        values = np.full((4, 20), 0.1)
        values[2, 7] = 1.0
        gram = Echogram(values=values)
        # hand computation for bin 2: baseline=0.1 (median), std of one 0.9
        # outlier among 20 = 0.9*sqrt(19)/20 ~ 0.196; 0.1+2*0.196 < 1.0
        assert activity_gate(gram, 0.5, 2.0) == [7]

    def test_k_zero_with_noise_gates_nothing_out(self):
        rng = np.random.default_rng(0)
        values = rng.uniform(0.0, 1.0, size=(32, 40))
        gram = Echogram(values=values)
        assert activity_gate(gram, 0.5, 0.0) == list(range(40))

    def test_raising_k_never_adds_frames(self):
        rng = np.random.default_rng(1)
        values = rng.uniform(0.0, 1.0, size=(16, 30))
        values[:, 5] += 2.0
        gram = Echogram(values=values)
        previous = None
        for k in (0.0, 0.5, 1.0, 2.0, 4.0):
            active = set(activity_gate(gram, 0.5, k))
            if previous is not None:
                assert active <= previous
            previous = active

    def test_parameter_validation(self):
        gram = Echogram(values=np.zeros((4, 4)))
        with pytest.raises(ValueError):
            activity_gate(gram, 0.0, 1.0)
        with pytest.raises(ValueError):
            activity_gate(gram, 0.5, -1.0)


def test_pgm_and_csv_exports(tmp_path):
    values = np.linspace(0, 1, 12).reshape(3, 4)
    gram = Echogram(values=values)
    pgm = tmp_path / "e.pgm"
    write_pgm(gram, pgm)
    data = pgm.read_bytes()
    assert data.startswith(b"P5\n4 3\n255\n")
    assert len(data) == len(b"P5\n4 3\n255\n") + 12

    csv_path = tmp_path / "e.csv"
    write_csv(gram, csv_path)
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "bin,frame,value"
    assert len(lines) == 1 + 12
