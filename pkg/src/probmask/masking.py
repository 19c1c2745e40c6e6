"""Binary masks: oracle construction, probabilistic thresholding, application."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .stft import Spectrogram


@dataclass
class BinaryMask:
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2:
            raise ValueError("mask must be a 2-D (bins, frames) matrix")
        if not np.all((data == 0) | (data == 1)):
            raise ValueError("mask entries must be 0 or 1")
        self.data = data.astype(np.uint8)

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def crop_frames(self, frames: int) -> BinaryMask:
        return BinaryMask(self.data[:, :frames])


@dataclass
class PredictionField:
    """Per-bin running sum of sigmoid predictions and the number of contributors."""

    sum: np.ndarray
    count: np.ndarray

    def __post_init__(self):
        self.sum = np.asarray(self.sum, dtype=np.float64)
        self.count = np.asarray(self.count, dtype=np.int64)
        if self.sum.shape != self.count.shape:
            raise ValueError("sum and count must have the same shape")
        if np.any(self.count < 0):
            raise ValueError("count must be non-negative")

    @property
    def shape(self) -> tuple[int, int]:
        return self.sum.shape

    def covered_frames(self) -> int:
        """Length of the leading run of frames where every bin has a contributor."""
        covered = np.all(self.count > 0, axis=0)
        if covered.all():
            return covered.size
        return int(np.argmin(covered))

    def crop_frames(self, frames: int) -> PredictionField:
        return PredictionField(self.sum[:, :frames], self.count[:, :frames])

    def mean(self) -> np.ndarray:
        if np.any(self.count == 0):
            raise ValueError("prediction field has uncovered bins; crop before thresholding")
        return self.sum / self.count

    def __add__(self, other: PredictionField) -> PredictionField:
        return PredictionField(self.sum + other.sum, self.count + other.count)


def ideal_binary_mask(mag_a: np.ndarray, mag_b: np.ndarray) -> BinaryMask:
    """1 where source A is strictly louder than source B; ties go to B."""
    mag_a = np.asarray(mag_a, dtype=np.float64)
    mag_b = np.asarray(mag_b, dtype=np.float64)
    if mag_a.shape != mag_b.shape:
        raise ValueError(f"shape mismatch: {mag_a.shape} vs {mag_b.shape}")
    if np.any(mag_a < 0) or np.any(mag_b < 0):
        raise ValueError("magnitudes must be non-negative")
    return BinaryMask(mag_a > mag_b)


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


def threshold_mask_a(field: PredictionField, alpha: float) -> BinaryMask:
    """Mask for source A: mean prediction strictly above ``alpha``."""
    _check_alpha(alpha)
    return BinaryMask(field.mean() > alpha)


def threshold_mask_b(field: PredictionField, alpha: float) -> BinaryMask:
    """Mask for source B: mean prediction strictly below ``1 - alpha``."""
    _check_alpha(alpha)
    return BinaryMask(field.mean() < 1.0 - alpha)


def apply_mask(mask: BinaryMask, spec: Spectrogram) -> Spectrogram:
    if mask.shape != spec.shape:
        raise ValueError(f"mask shape {mask.shape} does not match spectrogram {spec.shape}")
    return Spectrogram(spec.data * mask.data, spec.config, spec.origin_len, spec.sample_rate)
