"""Windowing of spectrograms into network examples and re-assembly of predictions.

A window is a ``(bins, width)`` block of consecutive frames. It is flattened
frame by frame: all bins of frame 0, then all bins of frame 1, and so on.
Training and inference must share this order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .masking import BinaryMask, PredictionField


@dataclass(frozen=True)
class WindowConfig:
    width: int = 20
    stride_train: int = 10
    stride_test: int = 1
    bins: int = 65

    def __post_init__(self):
        if self.width < 1 or self.bins < 1:
            raise ValueError("width and bins must be positive")
        for stride in (self.stride_train, self.stride_test):
            if not 1 <= stride <= self.width:
                raise ValueError(f"stride must be in [1, {self.width}], got {stride}")

    @property
    def dim(self) -> int:
        return self.bins * self.width

    def num_windows(self, frames: int, stride: int) -> int:
        if frames < self.width:
            raise ValueError(f"need at least {self.width} frames, got {frames}")
        return (frames - self.width) // stride + 1


@dataclass(frozen=True)
class NormScale:
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    def apply(self, mag: np.ndarray) -> np.ndarray:
        return np.asarray(mag, dtype=np.float64) / self.scale


def normalize_unit_scale(mag: np.ndarray) -> tuple[np.ndarray, NormScale]:
    """Divide by the global maximum so the largest entry becomes exactly 1."""
    mag = np.asarray(mag, dtype=np.float64)
    peak = float(mag.max()) if mag.size else 0.0
    if not peak > 0:
        raise ValueError("cannot normalize an all-zero matrix")
    scale = NormScale(peak)
    return scale.apply(mag), scale


def flatten_window(block: np.ndarray) -> np.ndarray:
    return np.asarray(block).T.reshape(-1)


def unflatten_window(vec: np.ndarray, bins: int) -> np.ndarray:
    return np.asarray(vec).reshape(-1, bins).T


def extract_windows(mat: np.ndarray, cfg: WindowConfig, stride: int) -> np.ndarray:
    """Stack of flattened windows, shape ``(n_windows, bins * width)``."""
    mat = np.asarray(mat)
    if mat.shape[0] != cfg.bins:
        raise ValueError(f"expected {cfg.bins} bins, got {mat.shape[0]}")
    cfg.num_windows(mat.shape[1], stride)
    # (n, bins, width) -> (n, width, bins) gives frame-major flattening
    blocks = sliding_window_view(mat, cfg.width, axis=1)[:, ::stride, :]
    return np.ascontiguousarray(blocks.transpose(1, 2, 0)).reshape(blocks.shape[1], -1)


def window_pairs(mix_mag: np.ndarray, mask: BinaryMask, cfg: WindowConfig,
                 stride: int) -> tuple[np.ndarray, np.ndarray]:
    """Aligned (input, target) windows as two ``(n_windows, dim)`` arrays."""
    if np.shape(mix_mag) != mask.shape:
        raise ValueError(f"mixture {np.shape(mix_mag)} and mask {mask.shape} are not congruent")
    inputs = extract_windows(mix_mag, cfg, stride).astype(np.float64)
    targets = extract_windows(mask.data, cfg, stride).astype(np.float64)
    return inputs, targets


def accumulate_predictions(predictions: np.ndarray, cfg: WindowConfig, stride: int,
                           total_frames: int) -> PredictionField:
    """Overlap-add window predictions back onto the ``(bins, total_frames)`` grid."""
    predictions = np.asarray(predictions, dtype=np.float64)
    n = cfg.num_windows(total_frames, stride)
    if predictions.ndim != 2 or predictions.shape != (n, cfg.dim):
        raise ValueError(f"expected predictions of shape {(n, cfg.dim)}, got {predictions.shape}")
    total = np.zeros((cfg.bins, total_frames))
    count = np.zeros((cfg.bins, total_frames), dtype=np.int64)
    blocks = predictions.reshape(n, cfg.width, cfg.bins)
    starts = np.arange(n) * stride
    # one pass per in-window offset keeps the summation order fixed
    for j in range(cfg.width):
        total[:, starts + j] += blocks[:, j, :].T
        count[:, starts + j] += 1
    return PredictionField(total, count)
