import math

import numpy as np
import pytest

from wavecoex.errors import ConfigurationError
from wavecoex.noma import NomaConfig, im_rate_lower_bound, rate_im_noma, rate_ofdm_noma
from wavecoex.numerics import qam_constellation
from wavecoex.waveforms import ImParams

IM = ImParams(k=4, m=3)


def test_qam_rates_telescope_to_sum_capacity():
    # equal unit gains: R1 + R2 = log2(1 + (p1+p2)/sigma2) exactly
    cfg = NomaConfig(p1=4.0, p2=1.0, sigma2=0.5)
    g = np.ones(48)
    rep = rate_ofdm_noma(cfg, g, g)
    total = math.log2(1.0 + (cfg.p1 + cfg.p2) / cfg.sigma2)
    assert abs(rep.r1 + rep.r2 - total) < 1e-10
    assert rep.scheme == "ofdm_ofdm"


def test_qam_rates_average_over_subcarriers():
    rng = np.random.default_rng(0)
    cfg = NomaConfig(p1=2.0, p2=1.0, sigma2=1.0)
    g1 = rng.exponential(size=64)
    g2 = rng.exponential(size=64)
    rep = rate_ofdm_noma(cfg, g1, g2)
    want_r1 = np.mean(np.log2(1 + cfg.p1 * g1 / (cfg.sigma2 + cfg.p2 * g1)))
    want_r2 = np.mean(np.log2(1 + cfg.p2 * g2 / cfg.sigma2))
    assert np.isclose(rep.r1, want_r1, rtol=1e-12)
    assert np.isclose(rep.r2, want_r2, rtol=1e-12)


def test_im_bound_vanishes_at_low_snr():
    cfg = NomaConfig(p1=10 ** (-60 / 10), p2=1.0, sigma2=1.0, scheme="im_ofdm")
    assert abs(im_rate_lower_bound(cfg, IM)) < 1e-3


def test_im_bound_saturates_at_high_snr():
    cfg = NomaConfig(p1=10 ** (60 / 10), p2=1.0, sigma2=1.0, scheme="im_ofdm")
    ceiling = (IM.m * 2 + math.log2(math.comb(IM.k, IM.m))) / IM.k
    assert ceiling == 2.0
    assert abs(im_rate_lower_bound(cfg, IM) - ceiling) < 0.05


def test_im_bound_monotone_and_below_ceiling():
    ceiling = (IM.m * 2 + math.log2(math.comb(IM.k, IM.m))) / IM.k
    prev = -np.inf
    for snr_db in range(-10, 41, 5):
        cfg = NomaConfig(p1=10 ** (snr_db / 10), p2=1.0, sigma2=1.0, scheme="im_ofdm")
        r1 = im_rate_lower_bound(cfg, IM)
        assert r1 <= ceiling + 1e-12
        assert r1 >= prev - 1e-12
        prev = r1


def test_im_bound_rejects_huge_hypothesis_spaces():
    cfg = NomaConfig(p1=1.0, p2=1.0, sigma2=1.0, order=64)
    with pytest.raises(ConfigurationError):
        im_rate_lower_bound(cfg, ImParams(k=8, m=4), qam_constellation(64))


def test_im_noma_rates_degenerate_without_active_tones():
    cfg = NomaConfig(p1=1.0, p2=1.0, sigma2=1.0, scheme="im_ofdm")
    g2 = np.full(8, 2.0)
    rep = rate_im_noma(cfg, ImParams(k=4, m=0), g2)
    assert rep.r1 == 0.0
    assert np.isclose(rep.r2, math.log2(1 + 2.0 / 1.0), rtol=1e-12)


def test_im_noma_r2_between_full_and_zero_interference():
    rng = np.random.default_rng(1)
    cfg = NomaConfig(p1=4.0, p2=1.0, sigma2=0.5, scheme="im_ofdm")
    g2 = rng.exponential(size=48)
    rep = rate_im_noma(cfg, IM, g2)
    amp2 = IM.active_amplitude(48) ** 2
    worst = np.mean(np.log2(1 + cfg.p2 * g2 / (cfg.sigma2 + amp2 * cfg.p1 * g2)))
    best = np.mean(np.log2(1 + cfg.p2 * g2 / cfg.sigma2))
    assert worst - 1e-12 <= rep.r2 <= best + 1e-12
    # with m of k tones active the mix sits at the m/k point exactly
    gi_rate = (IM.m * worst + (IM.k - IM.m) * best) / IM.k
    assert np.isclose(rep.r2, gi_rate, rtol=1e-12)


def test_im_noma_r1_tracks_power():
    g2 = np.ones(16)
    low = rate_im_noma(NomaConfig(p1=0.1, p2=1.0, sigma2=1.0, scheme="im_ofdm"), IM, g2)
    high = rate_im_noma(NomaConfig(p1=100.0, p2=1.0, sigma2=1.0, scheme="im_ofdm"), IM, g2)
    assert high.r1 > low.r1
