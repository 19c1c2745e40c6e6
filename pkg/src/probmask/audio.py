"""Mono audio clips: WAV I/O, integer-ratio decimation, level matching, mixing."""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

WAVE_FORMAT_PCM = 1
WAVE_FORMAT_IEEE_FLOAT = 3
WAVE_FORMAT_EXTENSIBLE = 0xFFFE

DECIMATION_TAPS = 127


class WavFormatError(ValueError):
    """Raised when a WAV file is malformed or uses an unsupported encoding."""


@dataclass
class AudioClip:
    """A mono signal with its sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be a positive integer, got {self.sample_rate!r}")
        self.sample_rate = int(self.sample_rate)
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples must be finite")

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    def rms(self) -> float:
        if len(self) == 0:
            return 0.0
        return float(np.sqrt(np.mean(self.samples ** 2)))


def _iter_chunks(data: bytes):
    pos = 12
    while pos + 8 <= len(data):
        cid, size = struct.unpack_from("<4sI", data, pos)
        body = data[pos + 8:pos + 8 + size]
        yield cid, body
        pos += 8 + size + (size & 1)


def load_wav(path) -> AudioClip:
    """Read a mono RIFF/WAVE file (16-bit PCM or 32-bit IEEE float).

    PCM samples are divided by 32768. Multichannel files are rejected
    rather than downmixed.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    for cid, body in _iter_chunks(data):
        if cid == b"fmt ":
            if len(body) < 16:
                raise WavFormatError(f"{path}: truncated fmt chunk")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
            if fmt[0] == WAVE_FORMAT_EXTENSIBLE and len(body) >= 26:
                # the real format tag lives in the first two bytes of the subformat GUID
                sub = struct.unpack_from("<H", body, 24)[0]
                fmt = (sub,) + fmt[1:]
        elif cid == b"data":
            payload = body
    if fmt is None or payload is None:
        raise WavFormatError(f"{path}: missing fmt or data chunk")

    tag, channels, rate, _, _, bits = fmt
    if channels != 1:
        raise WavFormatError(f"{path}: expected 1 channel, found {channels}")
    if tag == WAVE_FORMAT_PCM and bits == 16:
        n = len(payload) // 2
        samples = np.frombuffer(payload[:2 * n], dtype="<i2").astype(np.float64) / 32768.0
    elif tag == WAVE_FORMAT_IEEE_FLOAT and bits == 32:
        n = len(payload) // 4
        samples = np.frombuffer(payload[:4 * n], dtype="<f4").astype(np.float64)
    else:
        raise WavFormatError(f"{path}: unsupported encoding (format {tag}, {bits} bits)")
    return AudioClip(samples, rate)


def save_wav(clip: AudioClip, path) -> None:
    """Write ``clip`` as a 32-bit float mono WAV. Values are not clipped."""
    payload = np.asarray(clip.samples, dtype="<f4").tobytes()
    rate = clip.sample_rate
    fmt = struct.pack("<HHIIHH", WAVE_FORMAT_IEEE_FLOAT, 1, rate, rate * 4, 4, 32)
    # non-PCM formats carry a cbSize field and a fact chunk
    fmt += struct.pack("<H", 0)
    fact = struct.pack("<I", len(clip))
    body = (b"WAVE"
            + b"fmt " + struct.pack("<I", len(fmt)) + fmt
            + b"fact" + struct.pack("<I", len(fact)) + fact
            + b"data" + struct.pack("<I", len(payload)) + payload)
    with open(path, "wb") as fh:
        fh.write(b"RIFF" + struct.pack("<I", len(body)) + body)


def lowpass_taps(cutoff: float, rate: int, numtaps: int = DECIMATION_TAPS) -> np.ndarray:
    """Hann-windowed sinc low-pass with unit DC gain."""
    n = np.arange(numtaps) - (numtaps - 1) / 2
    fc = cutoff / rate
    h = 2 * fc * np.sinc(2 * fc * n) * np.hanning(numtaps)
    return h / h.sum()


def decimate(clip: AudioClip, target_rate: int) -> AudioClip:
    """Anti-alias filter and downsample by an integer ratio.

    The filter cutoff is 0.45 * ``target_rate``. Its group delay is
    compensated so output sample ``k`` aligns with input sample
    ``k * ratio``. Output length is ``ceil(len(clip) / ratio)``.
    """
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if target_rate > clip.sample_rate:
        raise ValueError(f"cannot decimate {clip.sample_rate} Hz up to {target_rate} Hz")
    if clip.sample_rate % target_rate:
        raise ValueError(f"{clip.sample_rate} Hz is not an integer multiple of {target_rate} Hz")
    ratio = clip.sample_rate // target_rate
    if ratio == 1:
        return AudioClip(clip.samples.copy(), clip.sample_rate)
    if len(clip) == 0:
        return AudioClip(np.zeros(0), target_rate)
    h = lowpass_taps(0.45 * target_rate, clip.sample_rate)
    delay = (len(h) - 1) // 2
    filtered = np.convolve(clip.samples, h)[delay:delay + len(clip)]
    return AudioClip(filtered[::ratio], target_rate)


def equalize_intensity(a: AudioClip, b: AudioClip) -> tuple[AudioClip, AudioClip]:
    """Scale both clips to the geometric mean of their RMS levels."""
    ra, rb = a.rms(), b.rms()
    if ra == 0 or rb == 0:
        raise ValueError("cannot equalize a silent clip")
    target = np.sqrt(ra * rb)
    return (AudioClip(a.samples * (target / ra), a.sample_rate),
            AudioClip(b.samples * (target / rb), b.sample_rate))


def mix(a: AudioClip, b: AudioClip) -> AudioClip:
    if a.sample_rate != b.sample_rate:
        raise ValueError(f"sample rate mismatch: {a.sample_rate} vs {b.sample_rate}")
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    return AudioClip(a.samples + b.samples, a.sample_rate)
