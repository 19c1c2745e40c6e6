"""Experiment orchestration: prepare, train, separate, sweep, IBM baseline.

The functions here work on in-memory objects; ``cli`` handles files.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import bss_eval, mlp
from .audio import AudioClip, decimate, equalize_intensity, mix
from .config import ExperimentConfig
from .dataset import NormScale, accumulate_predictions, extract_windows, normalize_unit_scale, window_pairs
from .masking import BinaryMask, PredictionField, apply_mask, ideal_binary_mask, threshold_mask_a, threshold_mask_b
from .stft import Spectrogram, StftConfig, istft, split_magnitude_phase, stft

log = logging.getLogger(__name__)

METRIC_COLUMNS = ["sdr_mean", "sir_mean", "sar_mean", "sdr_a", "sir_a", "sar_a", "sdr_b", "sir_b", "sar_b"]


@dataclass
class Prepared:
    """Level-matched sources and mixture at the working rate, plus training targets."""

    source_a: AudioClip
    source_b: AudioClip
    mixture: AudioClip
    train_mix_mag: np.ndarray
    train_ibm: BinaryMask
    norm_scale: NormScale
    window_len: int
    hop: int
    train_samples: int
    test_samples: int

    def check_compatible(self, cfg: ExperimentConfig) -> None:
        mine = (self.mixture.sample_rate, self.window_len, self.hop, self.train_samples, self.test_samples)
        theirs = (cfg.sample_rate, cfg.window_len, cfg.hop, cfg.train_samples, cfg.test_samples)
        if mine != theirs:
            raise ValueError(
                "prepared data was built with (rate, window_len, hop, train, test) = "
                f"{mine}, but the current config has {theirs}; re-run prepare")

    def segment(self, clip: AudioClip, which: str) -> AudioClip:
        if which == "train":
            return AudioClip(clip.samples[:self.train_samples], clip.sample_rate)
        stop = self.train_samples + self.test_samples
        return AudioClip(clip.samples[self.train_samples:stop], clip.sample_rate)

    def save(self, path) -> None:
        np.savez(
            path,
            source_a=self.source_a.samples, source_b=self.source_b.samples,
            mixture=self.mixture.samples, sample_rate=self.mixture.sample_rate,
            train_mix_mag=self.train_mix_mag, train_ibm=self.train_ibm.data,
            norm_scale=self.norm_scale.scale, window_len=self.window_len, hop=self.hop,
            train_samples=self.train_samples, test_samples=self.test_samples,
        )

    @classmethod
    def load(cls, path) -> Prepared:
        with np.load(path) as z:
            rate = int(z["sample_rate"])
            return cls(
                AudioClip(z["source_a"], rate), AudioClip(z["source_b"], rate),
                AudioClip(z["mixture"], rate), z["train_mix_mag"], BinaryMask(z["train_ibm"]),
                NormScale(float(z["norm_scale"])), int(z["window_len"]), int(z["hop"]),
                int(z["train_samples"]), int(z["test_samples"]),
            )


def _to_rate(clip: AudioClip, rate: int) -> AudioClip:
    return clip if clip.sample_rate == rate else decimate(clip, rate)


def prepare(source_a: AudioClip, source_b: AudioClip, cfg: ExperimentConfig) -> Prepared:
    """Decimate, equalize and mix the sources; build training magnitudes and IBM."""
    a = _to_rate(source_a, cfg.sample_rate)
    b = _to_rate(source_b, cfg.sample_rate)
    n = min(len(a), len(b))
    needed = cfg.train_samples + cfg.test_samples
    if n < needed:
        raise ValueError(f"sources give {n} samples at {cfg.sample_rate} Hz; "
                         f"train + test segments need {needed}")
    a = AudioClip(a.samples[:needed], cfg.sample_rate)
    b = AudioClip(b.samples[:needed], cfg.sample_rate)
    a, b = equalize_intensity(a, b)
    mixture = mix(a, b)

    def train_mag(clip):
        return split_magnitude_phase(stft(AudioClip(clip.samples[:cfg.train_samples], clip.sample_rate),
                                          cfg.stft))[0]

    mix_mag = train_mag(mixture)
    ibm = ideal_binary_mask(train_mag(a), train_mag(b))
    normalized, scale = normalize_unit_scale(mix_mag)
    return Prepared(a, b, mixture, normalized, ibm, scale, cfg.window_len, cfg.hop,
                    cfg.train_samples, cfg.test_samples)


def training_pairs(prepared: Prepared, cfg: ExperimentConfig):
    return window_pairs(prepared.train_mix_mag, prepared.train_ibm, cfg.window, cfg.window.stride_train)


def train(prepared: Prepared, cfg: ExperimentConfig, progress=None):
    prepared.check_compatible(cfg)
    inputs, targets = training_pairs(prepared, cfg)
    log.info("training on %d windows of dim %d, layers %s", inputs.shape[0], inputs.shape[1], cfg.layer_dims)
    model = mlp.init_model(cfg.layer_dims, seed=cfg.seed)
    return mlp.train_sgd(model, (inputs, targets), cfg.train, progress=progress)


def scored_range(spec: Spectrogram) -> slice:
    """Samples whose overlap-add normalisation has reached steady state.

    Near either end fewer than ``window_len / hop`` frames overlap, so the
    squared-window sum is tiny and masked (inconsistent) frames get divided
    by it. Those ramps are excluded from output and scoring.
    """
    cfg = spec.config
    edge = cfg.window_len - cfg.hop
    stop = min(spec.origin_len, cfg.span(spec.frames) - edge)
    if stop <= edge:
        raise ValueError("test segment too short to leave a fully overlapped region")
    return slice(edge, stop)


@dataclass
class HeldOut:
    """Test mixture spectrogram with time-domain mixture and references.

    ``mixture`` and ``references`` are full-length; ``scored_*`` restrict them
    to ``scored_range`` of the spectrogram.
    """

    mix_spec: Spectrogram
    mixture: AudioClip
    references: tuple[AudioClip, AudioClip]

    @property
    def span(self) -> slice:
        return scored_range(self.mix_spec)

    def trim(self, clip: AudioClip) -> AudioClip:
        return AudioClip(clip.samples[self.span], clip.sample_rate)

    @property
    def scored_mixture(self) -> AudioClip:
        return self.trim(self.mixture)

    @property
    def scored_references(self) -> tuple[AudioClip, AudioClip]:
        return self.trim(self.references[0]), self.trim(self.references[1])

    def crop_frames(self, frames: int) -> HeldOut:
        spec = self.mix_spec.crop_frames(frames)
        n = spec.origin_len

        def cut(c):
            return AudioClip(c.samples[:n], c.sample_rate)

        return HeldOut(spec, cut(self.mixture), (cut(self.references[0]), cut(self.references[1])))


def held_out(prepared: Prepared) -> HeldOut:
    mixture = prepared.segment(prepared.mixture, "test")
    refs = (prepared.segment(prepared.source_a, "test"), prepared.segment(prepared.source_b, "test"))
    spec = stft(mixture, StftConfig(prepared.window_len, prepared.hop))
    return HeldOut(spec, mixture, refs)


class Evaluator:
    """Masks -> resynthesis -> BSS-EVAL against one fixed pair of references."""

    def __init__(self, segment: HeldOut, filter_len: int):
        self.segment = segment
        self.references = segment.scored_references
        self.projector = bss_eval.ReferenceProjector(self.references, filter_len)

    def resynthesize(self, mask_a: BinaryMask, mask_b: BinaryMask) -> tuple[AudioClip, AudioClip]:
        spec = self.segment.mix_spec
        return (self.segment.trim(istft(apply_mask(mask_a, spec))),
                self.segment.trim(istft(apply_mask(mask_b, spec))))

    def score(self, estimates) -> list[float]:
        first, second, mean = bss_eval.bss_eval_pair(estimates, self.references,
                                                     projector=self.projector)
        return [*mean.as_tuple(), *first.as_tuple(), *second.as_tuple()]

    def evaluate_masks(self, mask_a: BinaryMask, mask_b: BinaryMask):
        estimates = self.resynthesize(mask_a, mask_b)
        return estimates, self.score(estimates)


def predict_field(model: mlp.MlpModel, prepared: Prepared, cfg: ExperimentConfig,
                  segment: HeldOut = None) -> tuple[PredictionField, HeldOut]:
    """One network pass over every stride-``stride_test`` window of the test mixture.

    The returned field and segment are cropped to frames covered by at least
    one window.
    """
    prepared.check_compatible(cfg)
    segment = segment or held_out(prepared)
    mag, _ = split_magnitude_phase(segment.mix_spec)
    stride = cfg.window.stride_test
    windows = extract_windows(prepared.norm_scale.apply(mag), cfg.window, stride)
    predictions = mlp.predict(model, windows)
    field = accumulate_predictions(predictions, cfg.window, stride, segment.mix_spec.frames)
    covered = field.covered_frames()
    return field.crop_frames(covered), segment.crop_frames(covered)


def masks_at(field: PredictionField, alpha: float) -> tuple[BinaryMask, BinaryMask]:
    return threshold_mask_a(field, alpha), threshold_mask_b(field, alpha)


def separate(model, prepared: Prepared, cfg: ExperimentConfig, alpha: float):
    """Returns ``(estimate_a, estimate_b, metric_row)`` for one alpha."""
    field, segment = predict_field(model, prepared, cfg)
    evaluator = Evaluator(segment, cfg.filter_len)
    (est_a, est_b), row = evaluator.evaluate_masks(*masks_at(field, alpha))
    return est_a, est_b, row


def sweep(model, prepared: Prepared, cfg: ExperimentConfig, alphas=None) -> list[list[float]]:
    """Metric rows ``[alpha, *METRIC_COLUMNS]``, one per alpha, from a single forward pass."""
    alphas = cfg.alpha_grid if alphas is None else alphas
    field, segment = predict_field(model, prepared, cfg)
    evaluator = Evaluator(segment, cfg.filter_len)
    rows = []
    for alpha in alphas:
        _, row = evaluator.evaluate_masks(*masks_at(field, alpha))
        log.info("alpha=%.4f  SDR %.2f  SIR %.2f  SAR %.2f", alpha, *row[:3])
        rows.append([float(alpha), *row])
    return rows


def oracle_mask(prepared: Prepared, segment: HeldOut) -> BinaryMask:
    """Oracle mask from the true test-segment sources."""
    cfg = segment.mix_spec.config
    mag_a, _ = split_magnitude_phase(stft(prepared.segment(prepared.source_a, "test"), cfg))
    mag_b, _ = split_magnitude_phase(stft(prepared.segment(prepared.source_b, "test"), cfg))
    return ideal_binary_mask(mag_a, mag_b).crop_frames(segment.mix_spec.frames)


def ibm_baseline(prepared: Prepared, cfg: ExperimentConfig, segment: HeldOut = None):
    """Metric rows for the oracle IBM and for the unprocessed mixture.

    Returns ``{"ibm": row, "mixture": row}`` and the IBM estimates.
    """
    segment = segment or held_out(prepared)
    evaluator = Evaluator(segment, cfg.filter_len)
    ibm = oracle_mask(prepared, segment)
    estimates, ibm_row = evaluator.evaluate_masks(ibm, BinaryMask(1 - ibm.data))
    mix_row = evaluator.score([segment.scored_mixture, segment.scored_mixture])
    return {"ibm": ibm_row, "mixture": mix_row}, estimates
