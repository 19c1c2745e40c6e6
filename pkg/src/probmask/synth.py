"""Deterministic two-talker stand-in corpus.

Each "speaker" is a harmonic complex with a slowly wandering fundamental,
shaped by two formant resonances that move from syllable to syllable.
Loudness follows a 4 Hz syllabic envelope inside phrases of 1.5-4 s, with
short silent pauses between phrases, roughly like reading aloud. Speaker A
sits at 100-150 Hz, speaker B at 200-300 Hz with formants about 15% higher.
Phrase timing and syllable phase are drawn independently per speaker.
"""

from __future__ import annotations

import numpy as np

from .audio import AudioClip, equalize_intensity

SYLLABLE_RATE = 4.0
SYLLABLE_FLOOR = 0.2
PHRASE_RANGE = (1.5, 4.0)
PAUSE_RANGE = (0.2, 0.6)
TARGET_RMS = 0.1
# (low, high) formant centre ranges in Hz and bandwidths, for a male voice
FORMANTS = (((300.0, 800.0), 90.0), ((900.0, 1700.0), 120.0))
FORMANT_FLOOR = 0.03


def _meander(rng, t: np.ndarray, n_components: int = 4) -> np.ndarray:
    """Smooth pseudo-random trajectory in [-1, 1]."""
    freqs = rng.uniform(0.1, 0.8, n_components)
    phases = rng.uniform(0, 2 * np.pi, n_components)
    return np.sin(2 * np.pi * freqs[:, None] * t[None, :] + phases[:, None]).sum(axis=0) / n_components


def _phrase_gate(rng, t: np.ndarray) -> np.ndarray:
    """1 inside phrases, 0 in the pauses between them, with 20 ms ramps."""
    edges = []
    pos = rng.uniform(0, PHRASE_RANGE[0])
    while pos < t[-1]:
        length = rng.uniform(*PHRASE_RANGE)
        edges.append((pos, pos + length))
        pos += length + rng.uniform(*PAUSE_RANGE)
    gate = np.zeros_like(t)
    for start, stop in edges:
        ramp = np.clip(np.minimum(t - start, stop - t) / 0.02, 0.0, 1.0)
        gate = np.maximum(gate, ramp)
    return gate


def _syllable_gate(rng, t: np.ndarray) -> np.ndarray:
    """Syllabic amplitude modulation inside phrases, silence in pauses."""
    slot = t * SYLLABLE_RATE + rng.uniform(0, 1)
    index = slot.astype(np.int64)
    level = rng.uniform(0.5, 1.0, index[-1] + 1)
    syllable = level[index] * (SYLLABLE_FLOOR + (1 - SYLLABLE_FLOOR) * np.sin(np.pi * (slot - index)) ** 2)
    return syllable * _phrase_gate(rng, t)


def _formant_tracks(rng, t: np.ndarray, scale: float) -> list[np.ndarray]:
    """One target per syllable for each formant, glided with a raised cosine."""
    slot = t * SYLLABLE_RATE
    index = slot.astype(np.int64)
    frac = slot - index
    glide = np.sin(0.5 * np.pi * np.clip(frac / 0.3, 0.0, 1.0)) ** 2
    tracks = []
    for (lo, hi), _ in FORMANTS:
        targets = rng.uniform(lo, hi, index[-1] + 2) * scale
        prev = np.concatenate([[targets[0]], targets[:-1]])
        tracks.append(prev[index] + (targets[index] - prev[index]) * glide)
    return tracks


def harmonic_talker(rng, n: int, rate: int, f0_lo: float, f0_hi: float,
                    formant_scale: float = 1.0) -> np.ndarray:
    t = np.arange(n) / rate
    f0 = 0.5 * (f0_lo + f0_hi) + 0.5 * (f0_hi - f0_lo) * _meander(rng, t)
    phase = 2 * np.pi * np.cumsum(f0) / rate
    tracks = _formant_tracks(rng, t, formant_scale)
    ceiling = 0.45 * rate
    out = np.zeros(n)
    for k in range(1, int(ceiling // f0_lo) + 1):
        fk = k * f0
        envelope = FORMANT_FLOOR + sum(
            1.0 / (1.0 + ((fk - centre) / (bw * formant_scale)) ** 2)
            for centre, (_, bw) in zip(tracks, FORMANTS))
        # fade harmonics out over 50 Hz below the ceiling instead of switching them off
        taper = np.clip((ceiling - fk) / 50.0, 0.0, 1.0)
        out += taper * envelope * np.sin(k * phase + rng.uniform(0, 2 * np.pi))
    return out * _syllable_gate(rng, t)


def synth_corpus(seed: int, duration_s: float, rate: int = 4000) -> tuple[AudioClip, AudioClip]:
    """Generate the (A, B) talker pair, equalized to a common RMS."""
    n = int(round(duration_s * rate))
    if n <= 0:
        raise ValueError("duration must be positive")
    rng_a, rng_b = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    a = AudioClip(harmonic_talker(rng_a, n, rate, 100.0, 150.0), rate)
    b = AudioClip(harmonic_talker(rng_b, n, rate, 200.0, 300.0, formant_scale=1.15), rate)
    a, b = equalize_intensity(a, b)
    gain = TARGET_RMS / a.rms()
    return AudioClip(a.samples * gain, rate), AudioClip(b.samples * gain, rate)
