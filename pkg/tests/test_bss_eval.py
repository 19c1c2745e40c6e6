import math

import numpy as np
import pytest

from probmask.audio import AudioClip
from probmask.bss_eval import (ReferenceProjector, SeparationMetrics, bss_eval_pair, decompose, mean_metrics,
                               metrics_from_decomposition)

INF = float("inf")


def orthonormal_pair(n, seed):
    q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((n, 3)))
    return q[:, 0], q[:, 1], q[:, 2]


def delay_matrix(ref, filter_len):
    """Columns are ``ref`` delayed by 0 .. filter_len-1, full length."""
    n = len(ref)
    cols = np.zeros((n + filter_len - 1, filter_len))
    for d in range(filter_len):
        cols[d:d + n, d] = ref
    return cols


def lstsq_decompose(est, refs, target, filter_len):
    """Explicit least-squares oracle for small cases."""
    padded = np.concatenate([est, np.zeros(filter_len - 1)])
    a_t = delay_matrix(refs[target], filter_len)
    s_target = a_t @ np.linalg.lstsq(a_t, padded, rcond=None)[0]
    a_all = np.hstack([delay_matrix(r, filter_len) for r in refs])
    p_all = a_all @ np.linalg.lstsq(a_all, padded, rcond=None)[0]
    return s_target, p_all - s_target, padded - p_all


def db(x):
    return 10 * math.log10(x)


class TestAnalyticCases:
    def test_identity(self):
        r1, r2, _ = orthonormal_pair(200, 0)
        s, ei, ea = decompose(r1, [r1, r2], 0, filter_len=1)
        np.testing.assert_allclose(s, r1, atol=1e-12)
        assert np.max(np.abs(ei)) < 1e-12 and np.max(np.abs(ea)) < 1e-12
        assert metrics_from_decomposition(s, ei, ea).as_tuple() == (INF, INF, INF)
        m = metrics_from_decomposition(r1, np.zeros(200), np.zeros(200))
        assert m.as_tuple() == (INF, INF, INF)

    def test_orthogonal_interference(self):
        r1, r2, _ = orthonormal_pair(200, 1)
        s, ei, ea = decompose(r1 + r2, [r1, r2], 0, filter_len=1)
        np.testing.assert_allclose(s, r1, atol=1e-12)
        np.testing.assert_allclose(ei, r2, atol=1e-12)
        m = metrics_from_decomposition(s, ei, ea)
        assert abs(m.sir_db) < 1e-6 and abs(m.sdr_db) < 1e-6
        assert m.sar_db == INF  # e_artif is rounding residue only

    def test_orthogonal_artifact(self):
        r1, r2, w = orthonormal_pair(200, 2)
        est = r1 + 0.5 * w
        s, ei, ea = decompose(est, [r1, r2], 0, filter_len=1)
        np.testing.assert_allclose(ea, 0.5 * w, atol=1e-12)
        m = metrics_from_decomposition(s, ei, ea)
        expected = db(1 / 0.25)
        assert abs(m.sar_db - expected) < 1e-6 and abs(m.sdr_db - expected) < 1e-6
        assert m.sir_db == INF

    def test_sir_exactly_ten(self):
        s = np.array([math.sqrt(10.0), 0.0])
        ei = np.array([0.0, 1.0])
        m = metrics_from_decomposition(s, ei, np.zeros(2))
        assert abs(m.sir_db - 10.0) < 1e-12 and m.sar_db == INF

    def test_sentinels(self):
        m = metrics_from_decomposition(np.zeros(3), np.ones(3), np.ones(3))
        assert m.sdr_db == -INF and m.sir_db == -INF and m.target_silent
        zero = metrics_from_decomposition(np.zeros(3), np.zeros(3), np.zeros(3))
        assert zero.sar_db == -INF


class TestOracle:
    @pytest.mark.parametrize("filter_len", [1, 4, 16])
    def test_matches_lstsq(self, filter_len):
        rng = np.random.default_rng(filter_len)
        refs = rng.standard_normal((2, 120))
        est = 0.8 * refs[0] + 0.3 * np.roll(refs[1], 2) + 0.2 * rng.standard_normal(120)
        for target in (0, 1):
            ours = decompose(est, list(refs), target, filter_len)
            oracle = lstsq_decompose(est, refs, target, filter_len)
            scale = np.linalg.norm(est)
            for a, b in zip(ours, oracle):
                assert np.linalg.norm(a - b) < 1e-8 * scale

    def test_delayed_target_is_captured(self):
        rng = np.random.default_rng(3)
        refs = rng.standard_normal((2, 400))
        est = np.concatenate([np.zeros(5), refs[0][:-5]])
        m = bss_eval_pair([est, refs[1]], list(refs), filter_len=16)[0]
        # the 5 samples cut off the end are the only non-target part
        assert m.sir_db > 30 and m.sar_db > 15


class TestProperties:
    def setup_method(self):
        rng = np.random.default_rng(7)
        self.refs = [AudioClip(rng.standard_normal(800), 4000) for _ in range(2)]
        self.est = AudioClip(0.7 * self.refs[0].samples + 0.2 * self.refs[1].samples
                             + 0.1 * rng.standard_normal(800), 4000)

    def test_additivity(self):
        s, ei, ea = decompose(self.est, self.refs, 0, 32)
        padded = np.concatenate([self.est.samples, np.zeros(31)])
        assert np.linalg.norm(s + ei + ea - padded) <= 1e-10 * np.linalg.norm(padded)

    def test_orthogonality(self):
        s, ei, ea = decompose(self.est, self.refs, 0, 32)
        energy = np.sum(self.est.samples ** 2)
        for a, b in ((s, ei), (s, ea), (ei, ea)):
            assert abs(a @ b) < 1e-8 * energy

    def test_scale_invariance(self):
        base = bss_eval_pair([self.est, self.refs[1]], self.refs, 16)[0]
        for k in (0.01, 3.0, 250.0):
            scaled = AudioClip(self.est.samples * k, 4000)
            m = bss_eval_pair([scaled, self.refs[1]], self.refs, 16)[0]
            for a, b in zip(m.as_tuple()[:3], base.as_tuple()[:3]):
                assert abs(a - b) < 1e-9

    def test_sar_drops_with_orthogonal_noise(self):
        rng = np.random.default_rng(8)
        sars = []
        for level in (0.01, 0.1, 0.5):
            est = self.refs[0].samples + level * rng.standard_normal(800)
            sars.append(bss_eval_pair([est, self.refs[1]], self.refs, 8)[0].sar_db)
        assert sars[0] > sars[1] > sars[2]

    def test_sdr_bounded_by_sir_and_sar(self):
        m = bss_eval_pair([self.est, self.refs[1]], self.refs, 16)[0]
        assert m.sdr_db <= min(m.sir_db, m.sar_db) + 1e-9

    def test_projector_reuse_matches_fresh(self):
        proj = ReferenceProjector(self.refs, 16)
        first = bss_eval_pair([self.est, self.refs[1]], self.refs, 16, projector=proj)
        again = bss_eval_pair([self.est, self.refs[1]], self.refs, 16)
        assert [m.as_tuple() for m in first] == [m.as_tuple() for m in again]


class TestPair:
    def test_perfect_estimates(self):
        rng = np.random.default_rng(0)
        refs = list(rng.standard_normal((2, 300)))
        m0, m1, mean = bss_eval_pair(refs, refs, 8)
        assert m0.as_tuple() == m1.as_tuple() == mean.as_tuple() == (INF, INF, INF)

    def test_swapped_estimates(self):
        rng = np.random.default_rng(1)
        refs = list(rng.standard_normal((2, 600)))
        m0, m1, _ = bss_eval_pair([refs[1], refs[0]], refs, 8)
        assert m0.sir_db < -10 and m1.sir_db < -10

    def test_mean_is_arithmetic(self):
        rng = np.random.default_rng(2)
        refs = list(rng.standard_normal((2, 500)))
        ests = [refs[0] + 0.5 * refs[1] + 0.1 * rng.standard_normal(500),
                refs[1] + 0.2 * refs[0] + 0.3 * rng.standard_normal(500)]
        m0, m1, mean = bss_eval_pair(ests, refs, 4)
        for a, b, c in zip(m0.as_tuple(), m1.as_tuple(), mean.as_tuple()):
            assert abs(c - (a + b) / 2) < 1e-12

    def test_mean_propagates_infinity(self):
        m = mean_metrics([SeparationMetrics(1.0, INF, 2.0), SeparationMetrics(3.0, 5.0, 4.0)])
        assert m.as_tuple() == (2.0, INF, 3.0)

    def test_errors(self):
        rng = np.random.default_rng(3)
        refs = list(rng.standard_normal((2, 100)))
        with pytest.raises(ValueError):
            bss_eval_pair([refs[0]], refs)
        with pytest.raises(ValueError):
            decompose(refs[0][:50], refs, 0, 4)
        with pytest.raises(ValueError):
            decompose(refs[0], [refs[0], np.zeros(100)], 0, 4)
        with pytest.raises(ValueError):
            decompose(refs[0], refs, 0, 0)
        with pytest.raises(ValueError):
            decompose(AudioClip(refs[0], 8000), [AudioClip(r, 4000) for r in refs], 0, 4)
        with pytest.raises(IndexError):
            decompose(refs[0], refs, 2, 4)
