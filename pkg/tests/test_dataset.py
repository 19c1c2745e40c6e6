import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from probmask.dataset import (WindowConfig, accumulate_predictions, extract_windows, flatten_window,
                              normalize_unit_scale, unflatten_window, window_pairs)
from probmask.masking import BinaryMask


def brute_counts(total_frames, width, stride, bins):
    count = np.zeros((bins, total_frames), dtype=int)
    k = 0
    while k * stride + width <= total_frames:
        for t in range(k * stride, k * stride + width):
            for f in range(bins):
                count[f, t] += 1
        k += 1
    return count


class TestNormalize:
    def test_quartered(self):
        m = np.array([[1.0, 4.0], [2.0, 0.0]])
        out, scale = normalize_unit_scale(m)
        assert scale.scale == 4.0
        np.testing.assert_array_equal(out, m / 4)

    def test_identity(self):
        m = np.array([[1.0, 0.5]])
        out, scale = normalize_unit_scale(m)
        assert scale.scale == 1.0
        np.testing.assert_array_equal(out, m)

    def test_argmax_kept(self):
        m = np.random.default_rng(0).random((65, 40)) * 17
        out, _ = normalize_unit_scale(m)
        assert out.argmax() == m.argmax() and out.max() == 1.0

    def test_all_zero(self):
        with pytest.raises(ValueError):
            normalize_unit_scale(np.zeros((3, 3)))


class TestWindows:
    def test_full_scale_training_count(self):
        # two minutes at 4 kHz with hop 1 and a 128-sample window
        frames = 2 * 60 * 4000 - 128 + 1
        assert frames == 479_873
        n = WindowConfig().num_windows(frames, 10)
        assert n == 47_986
        assert abs(n - 50_000) / 50_000 < 0.05

    def test_exactly_one(self):
        cfg = WindowConfig(width=5, stride_train=3, bins=4)
        x = np.random.default_rng(1).random((4, 5))
        inputs, targets = window_pairs(x, BinaryMask(x > 0.5), cfg, 3)
        assert inputs.shape == (1, 20)
        np.testing.assert_array_equal(inputs[0], flatten_window(x))
        np.testing.assert_array_equal(targets[0], flatten_window((x > 0.5).astype(float)))

    def test_frame_major_order(self):
        block = np.arange(6).reshape(3, 2)  # 3 bins, 2 frames
        np.testing.assert_array_equal(flatten_window(block), [0, 2, 4, 1, 3, 5])

    def test_windows_match_slices(self):
        cfg = WindowConfig(width=4, stride_train=2, bins=3)
        x = np.random.default_rng(2).random((3, 13))
        w = extract_windows(x, cfg, 2)
        assert w.shape == ((13 - 4) // 2 + 1, 12)
        for k, row in enumerate(w):
            np.testing.assert_array_equal(unflatten_window(row, 3), x[:, 2 * k:2 * k + 4])

    def test_roundtrip(self):
        x = np.random.default_rng(3).random((65, 20))
        np.testing.assert_array_equal(unflatten_window(flatten_window(x), 65), x)

    def test_too_few_frames(self):
        cfg = WindowConfig(width=5, stride_train=1, bins=2)
        with pytest.raises(ValueError):
            extract_windows(np.zeros((2, 4)), cfg, 1)

    def test_incongruent(self):
        cfg = WindowConfig(width=2, stride_train=1, bins=2)
        with pytest.raises(ValueError):
            window_pairs(np.zeros((2, 4)), BinaryMask(np.zeros((2, 5))), cfg, 1)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            WindowConfig(width=5, stride_train=6)
        with pytest.raises(ValueError):
            WindowConfig(width=5, stride_test=0)
        assert WindowConfig().dim == 1300


class TestAccumulate:
    def test_constant(self):
        cfg = WindowConfig(width=4, stride_train=1, bins=3)
        n = cfg.num_windows(11, 1)
        field = accumulate_predictions(np.full((n, 12), 0.3), cfg, 1, 11)
        np.testing.assert_allclose(field.mean(), 0.3)

    def test_single_window(self):
        cfg = WindowConfig(width=4, stride_train=1, bins=3)
        pred = np.random.default_rng(4).random((1, 12))
        field = accumulate_predictions(pred, cfg, 1, 4)
        np.testing.assert_array_equal(field.count, 1)
        np.testing.assert_array_equal(field.mean(), unflatten_window(pred[0], 3))

    def test_coverage_width_plus_five(self):
        cfg = WindowConfig(width=20, stride_train=1, bins=65)
        total = 25
        n = cfg.num_windows(total, 1)
        field = accumulate_predictions(np.zeros((n, cfg.dim)), cfg, 1, total)
        np.testing.assert_array_equal(field.count, brute_counts(total, 20, 1, 65))
        np.testing.assert_array_equal(field.count[0, :5], [1, 2, 3, 4, 5])
        np.testing.assert_array_equal(field.count[0, 20:], [5, 4, 3, 2, 1])
        np.testing.assert_array_equal(field.count[0, 5:20], 6)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 20), st.integers(1, 4))
    def test_coverage_brute_force(self, width, stride, extra, bins):
        stride = min(stride, width)
        cfg = WindowConfig(width=width, stride_train=stride, stride_test=stride, bins=bins)
        total = width + extra
        n = cfg.num_windows(total, stride)
        field = accumulate_predictions(np.zeros((n, cfg.dim)), cfg, stride, total)
        np.testing.assert_array_equal(field.count, brute_counts(total, width, stride, bins))

    def test_interior_full_coverage(self):
        cfg = WindowConfig(width=20, stride_train=1, bins=2)
        total = 60
        field = accumulate_predictions(np.zeros((cfg.num_windows(total, 1), cfg.dim)), cfg, 1, total)
        np.testing.assert_array_equal(field.count[:, 19:total - 19], 20)

    def test_linearity(self):
        cfg = WindowConfig(width=3, stride_train=1, bins=2)
        rng = np.random.default_rng(5)
        p1, p2 = rng.random((8, 6)), rng.random((8, 6))
        f1 = accumulate_predictions(p1, cfg, 1, 10)
        f2 = accumulate_predictions(p2, cfg, 1, 10)
        both = f1 + f2
        np.testing.assert_allclose(both.sum, f1.sum + f2.sum)
        np.testing.assert_array_equal(both.count, 2 * f1.count)

    def test_length_mismatch(self):
        cfg = WindowConfig(width=3, stride_train=1, bins=2)
        with pytest.raises(ValueError):
            accumulate_predictions(np.zeros((4, 6)), cfg, 1, 10)

    def test_sum_bounded_by_count(self):
        cfg = WindowConfig(width=5, stride_train=1, bins=4)
        pred = np.random.default_rng(6).random((cfg.num_windows(30, 1), cfg.dim))
        field = accumulate_predictions(pred, cfg, 1, 30)
        assert np.all(field.sum >= 0) and np.all(field.sum <= field.count)
