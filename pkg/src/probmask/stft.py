"""Hann-windowed short-time Fourier transform and weighted overlap-add inverse.

Frames are laid out as columns: ``Spectrogram.data`` has shape
``(bins, frames)`` with ``bins = window_len // 2 + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .audio import AudioClip

WOLA_FLOOR = 1e-8


def hann(window_len: int) -> np.ndarray:
    """Hann window sampled at half-integer offsets, ``sin^2(pi (n + 1/2) / N)``.

    Same shape and overlap-add behaviour as the periodic Hann window, but no
    coefficient is exactly zero, so the first sample of a clip survives
    analysis and can be recovered on synthesis.
    """
    n = np.arange(window_len)
    return np.sin(np.pi * (n + 0.5) / window_len) ** 2


@dataclass(frozen=True)
class StftConfig:
    window_len: int = 128
    hop: int = 1
    window: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.window_len < 2 or self.window_len % 2:
            raise ValueError(f"window_len must be even and >= 2, got {self.window_len}")
        if not 1 <= self.hop <= self.window_len:
            raise ValueError(f"hop must be in [1, {self.window_len}], got {self.hop}")
        if self.window is None:
            object.__setattr__(self, "window", hann(self.window_len))
        elif len(self.window) != self.window_len:
            raise ValueError("window length does not match window_len")

    @property
    def bins(self) -> int:
        return self.window_len // 2 + 1

    def num_frames(self, length: int) -> int:
        """Frames needed to cover ``length`` samples (tail zero-padded to a whole hop)."""
        if length < self.window_len:
            raise ValueError(f"clip of {length} samples is shorter than one window ({self.window_len})")
        return -(-(length - self.window_len) // self.hop) + 1

    def span(self, frames: int) -> int:
        """Number of samples touched by ``frames`` consecutive frames."""
        return (frames - 1) * self.hop + self.window_len


@dataclass
class Spectrogram:
    data: np.ndarray
    config: StftConfig
    origin_len: int
    sample_rate: int = 4000

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.complex128)
        if self.data.ndim != 2 or self.data.shape[0] != self.config.bins:
            raise ValueError(f"expected {self.config.bins} bins, got shape {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("spectrogram entries must be finite")

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def frames(self) -> int:
        return self.data.shape[1]

    def crop_frames(self, frames: int) -> Spectrogram:
        """Keep the first ``frames`` frames; origin_len shrinks to the samples they cover."""
        if not 1 <= frames <= self.frames:
            raise ValueError(f"cannot crop {self.frames} frames to {frames}")
        if frames == self.frames:
            return Spectrogram(self.data.copy(), self.config, self.origin_len, self.sample_rate)
        length = min(self.origin_len, self.config.span(frames))
        return Spectrogram(self.data[:, :frames].copy(), self.config, length, self.sample_rate)


def stft(clip: AudioClip, config: StftConfig = None) -> Spectrogram:
    """Forward STFT.

    Frame ``t`` covers samples ``[t*hop, t*hop + window_len)``. When the last
    hop is incomplete the tail is zero-padded so every sample is analysed.
    """
    config = config or StftConfig()
    x = clip.samples
    frames = config.num_frames(len(x))
    padded = np.zeros(config.span(frames))
    padded[:len(x)] = x
    segments = sliding_window_view(padded, config.window_len)[::config.hop]
    spectra = np.fft.rfft(segments * config.window, axis=1)
    return Spectrogram(spectra.T, config, len(x), clip.sample_rate)


def istft(spec: Spectrogram) -> AudioClip:
    """Weighted overlap-add inverse, normalised by the accumulated squared window."""
    cfg = spec.config
    n, hop = cfg.window_len, cfg.hop
    frames = spec.frames
    segments = np.fft.irfft(spec.data.T, n=n, axis=1) * cfg.window
    length = cfg.span(frames)
    out = np.zeros(length)
    norm = np.zeros(length)
    stop = (frames - 1) * hop + 1
    w2 = cfg.window ** 2
    for k in range(n):
        out[k:k + stop:hop] += segments[:, k]
        norm[k:k + stop:hop] += w2[k]
    out /= np.maximum(norm, WOLA_FLOOR)
    if length >= spec.origin_len:
        out = out[:spec.origin_len]
    else:
        out = np.concatenate([out, np.zeros(spec.origin_len - length)])
    return AudioClip(out, spec.sample_rate)


def split_magnitude_phase(spec: Spectrogram) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(|data|, angle(data))``; zero entries get phase 0."""
    return np.abs(spec.data), np.angle(spec.data)
