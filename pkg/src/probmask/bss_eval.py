"""BSS-EVAL source metrics (SDR, SIR, SAR) for single-channel estimates.

An estimate is split into three mutually orthogonal parts:

* ``s_target``: projection onto the target reference and its delays
  ``0 .. filter_len - 1``;
* ``e_interf``: projection onto all references and their delays, minus
  ``s_target``;
* ``e_artif``: the remainder.

Delayed references are full linear convolutions, so every component has
``N + filter_len - 1`` samples. The estimate is zero-padded to the same
length before splitting, which makes the three parts sum to it exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .audio import AudioClip

DEFAULT_FILTER_LEN = 512
RCOND = 1e-10
# error energy below this fraction of the numerator is float64 rounding residue
# (a 200 dB ratio), reported as +inf
INF_RATIO = 1e-20


@dataclass(frozen=True)
class SeparationMetrics:
    sdr_db: float
    sir_db: float
    sar_db: float
    target_silent: bool = False

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.sdr_db, self.sir_db, self.sar_db)


def _samples(x) -> np.ndarray:
    if isinstance(x, AudioClip):
        return x.samples
    return np.asarray(x, dtype=np.float64).reshape(-1)


def _pinv_psd(gram: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(gram)
    keep = w > RCOND * max(w.max(), 0.0)
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / w[keep]
    return (v * inv) @ v.T


class ReferenceProjector:
    """Projection operators onto delayed copies of a fixed reference set.

    The Gram matrices depend only on the references, so scoring many
    estimates against the same references (an alpha sweep, say) reuses them.
    """

    def __init__(self, references, filter_len: int = DEFAULT_FILTER_LEN):
        refs = np.array([_samples(r) for r in references], dtype=np.float64)
        if refs.ndim != 2 or refs.shape[0] < 1:
            raise ValueError("need at least one reference of non-zero length")
        if filter_len < 1:
            raise ValueError("filter_len must be >= 1")
        if np.any(np.sum(refs ** 2, axis=1) == 0):
            raise ValueError("a reference signal is all zeros")
        rates = {r.sample_rate for r in references if isinstance(r, AudioClip)}
        if len(rates) > 1:
            raise ValueError("references have different sample rates")
        self.sample_rate = rates.pop() if rates else None
        self.refs = refs
        self.filter_len = filter_len
        nsrc, n = refs.shape
        self.length = n
        self.nfft = int(2 ** np.ceil(np.log2(n + filter_len - 1)))
        self._ref_fft = np.fft.rfft(refs, n=self.nfft, axis=1)

        lags = np.arange(filter_len)
        gram = np.empty((nsrc * filter_len, nsrc * filter_len))
        for i in range(nsrc):
            for j in range(nsrc):
                # corr[k] = sum_m ref_i[m] * ref_j[m + k], circular index
                corr = np.fft.irfft(np.conj(self._ref_fft[i]) * self._ref_fft[j], n=self.nfft)
                # block[d1, d2] = corr[d1 - d2]
                block = corr[(lags[:, None] - lags[None, :]) % self.nfft]
                gram[i * filter_len:(i + 1) * filter_len, j * filter_len:(j + 1) * filter_len] = block
        self.gram = gram
        self._pinv_all = _pinv_psd(gram)
        self._pinv_single = []
        for j in range(nsrc):
            sl = slice(j * filter_len, (j + 1) * filter_len)
            self._pinv_single.append(_pinv_psd(gram[sl, sl]))

    @property
    def num_sources(self) -> int:
        return self.refs.shape[0]

    def _correlations(self, est: np.ndarray) -> np.ndarray:
        """``D[j, d] = <ref_j delayed by d, est>``."""
        est_fft = np.fft.rfft(est, n=self.nfft)
        corr = np.fft.irfft(np.conj(self._ref_fft) * est_fft, n=self.nfft, axis=1)
        return corr[:, :self.filter_len]

    def _synthesize(self, coeffs: np.ndarray, sources) -> np.ndarray:
        out = np.zeros(self.length + self.filter_len - 1)
        for row, j in zip(coeffs, sources):
            out += fftconvolve(self.refs[j], row) if self.filter_len > 1 else self.refs[j] * row[0]
        return out

    def decompose(self, estimate, target_index: int):
        est = _samples(estimate)
        if est.shape[0] != self.length:
            raise ValueError(f"estimate has {est.shape[0]} samples, references have {self.length}")
        if isinstance(estimate, AudioClip) and self.sample_rate not in (None, estimate.sample_rate):
            raise ValueError("estimate and references differ in sample rate")
        if not 0 <= target_index < self.num_sources:
            raise IndexError(f"target_index {target_index} out of range")
        d = self._correlations(est)
        flen = self.filter_len

        c_target = self._pinv_single[target_index] @ d[target_index]
        s_target = self._synthesize(c_target[None, :], [target_index])

        c_all = (self._pinv_all @ d.reshape(-1)).reshape(self.num_sources, flen)
        p_all = self._synthesize(c_all, range(self.num_sources))

        padded = np.concatenate([est, np.zeros(flen - 1)])
        e_interf = p_all - s_target
        e_artif = padded - p_all
        return s_target, e_interf, e_artif

    def evaluate(self, estimates) -> list[SeparationMetrics]:
        if len(estimates) != self.num_sources:
            raise ValueError(f"expected {self.num_sources} estimates, got {len(estimates)}")
        return [metrics_from_decomposition(*self.decompose(e, k)) for k, e in enumerate(estimates)]


def decompose(estimate, references, target_index: int, filter_len: int = DEFAULT_FILTER_LEN):
    """Split ``estimate`` into ``(s_target, e_interf, e_artif)``."""
    return ReferenceProjector(references, filter_len).decompose(estimate, target_index)


def _ratio_db(num: float, den: float) -> float:
    if num == 0:
        return float("-inf")
    if den <= INF_RATIO * num:
        return float("inf")
    return float(10 * np.log10(num / den))


def metrics_from_decomposition(s_target, e_interf, e_artif) -> SeparationMetrics:
    """SDR, SIR and SAR in dB.

    Zero error energy gives ``+inf``; a ratio whose numerator energy is zero
    gives ``-inf``. An estimate with no target component has ``-inf`` SDR and
    SIR and sets ``target_silent``.
    """
    s_target, e_interf, e_artif = (np.asarray(v, dtype=np.float64) for v in (s_target, e_interf, e_artif))
    target = float(np.sum(s_target ** 2))
    interf = float(np.sum(e_interf ** 2))
    artif = float(np.sum(e_artif ** 2))
    distortion = float(np.sum((e_interf + e_artif) ** 2))
    sar = _ratio_db(float(np.sum((s_target + e_interf) ** 2)), artif)
    if target == 0:
        return SeparationMetrics(float("-inf"), float("-inf"), sar, target_silent=True)
    return SeparationMetrics(_ratio_db(target, distortion), _ratio_db(target, interf), sar)


def mean_metrics(metrics) -> SeparationMetrics:
    """Across-source arithmetic mean of each metric; infinities propagate."""
    arr = np.array([m.as_tuple() for m in metrics], dtype=np.float64)
    with np.errstate(invalid="ignore"):
        means = arr.mean(axis=0)
    return SeparationMetrics(*(float(v) for v in means),
                             target_silent=any(m.target_silent for m in metrics))


def bss_eval_pair(estimates, references, filter_len: int = DEFAULT_FILTER_LEN,
                  projector: ReferenceProjector = None):
    """Score estimate ``k`` against reference ``k`` for two sources.

    Returns ``(metrics_0, metrics_1, mean)``.
    """
    if len(estimates) != 2 or len(references) != 2:
        raise ValueError("bss_eval_pair expects exactly two estimates and two references")
    projector = projector or ReferenceProjector(references, filter_len)
    first, second = projector.evaluate(estimates)
    return first, second, mean_metrics([first, second])
