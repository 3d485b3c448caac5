"""End-to-end acceptance gate.

Six criteria, one test each, run against the desk-scale configuration.
Every test prints a single PASS/FAIL line with its measured numbers before
asserting, so a full run reads as a checklist.  Runtime budgets are part of
the contract and asserted alongside the metrics.
"""

import math
import time
from pathlib import Path

import numpy as np

from oracles import oracle_llr_im_subblock, oracle_llr_qam_qam, oracle_llr_qam_vs_im
from wavecoex.channel import RadarScene, ScenePath, apply_ltv
from wavecoex.fec import default_code
from wavecoex.harness.config import load_config
from wavecoex.harness.metrics import required_snr_db
from wavecoex.harness.runners import (
    required_snr_records,
    run_jrc_ber,
    run_noma_bler,
    run_radar_rd,
)
from wavecoex.noma import (
    NomaConfig,
    im_rate_lower_bound,
    llr_im_first,
    llr_ofdm_first,
    llr_ofdm_ofdm,
    rate_ofdm_noma,
)
from wavecoex.numerics import ComplexSignal, dft, idft, qam_constellation
from wavecoex.radar import (
    ChannelMatrixEstimate,
    TargetEstimate,
    estimate_gains,
    ofdm_channel_matrix,
)
from wavecoex.waveforms import FmcwParams, ImParams, OfdmParams, fmcw_generate, group_indices

REPO = Path(__file__).resolve().parents[1]
SCENE = str(REPO / "scenes" / "three_targets.json")
QPSK = qam_constellation(4)
IM = ImParams(k=4, m=3)
TARGET_BLER = 1e-2
TARGET_BER = 1e-2


def _report(num: int, ok: bool, detail: str) -> None:
    print(f"\n[acceptance {num}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def test_criterion_1_detector_oracle_equivalence():
    t0 = time.monotonic()
    rng = np.random.default_rng(101)
    worst = 0.0

    def draw_params():
        return (
            10.0 ** rng.uniform(-0.6, 0.6),
            10.0 ** rng.uniform(-0.6, 0.6),
            10.0 ** rng.uniform(-1.0, 0.3),
        )

    # joint QAM + QAM detection, one subcarrier per instance
    for i in range(1000):
        p1, p2, s2 = draw_params()
        cfg = NomaConfig(p1=p1, p2=p2, sigma2=s2)
        r = rng.normal(size=1) + 1j * rng.normal(size=1)
        h = rng.normal(size=1) + 1j * rng.normal(size=1)
        target = "u1" if i % 2 == 0 else "u2"
        got = llr_ofdm_ofdm(r, h, cfg, target)
        want = oracle_llr_qam_qam(r[0], h[0], p1, p2, s2, QPSK.points, target)
        worst = max(worst, float(np.max(np.abs(got - want))))

    # QAM detection against the augmented sparse interferer alphabet
    n_alloc = 8
    for _ in range(125):
        p1, p2, s2 = draw_params()
        cfg = NomaConfig(p1=p1, p2=p2, sigma2=s2, scheme="im_ofdm")
        r = rng.normal(size=n_alloc) + 1j * rng.normal(size=n_alloc)
        h = rng.normal(size=n_alloc) + 1j * rng.normal(size=n_alloc)
        got = llr_ofdm_first(r, h, cfg, IM).reshape(n_alloc, -1)
        amp = IM.active_amplitude(n_alloc) * math.sqrt(p1)
        alphabet = np.concatenate([[0.0 + 0.0j], amp * QPSK.points])
        for n in range(n_alloc):
            want = oracle_llr_qam_vs_im(r[n], h[n], p2, alphabet, s2, QPSK.points)
            worst = max(worst, float(np.max(np.abs(got[n] - want))))

    # index-modulated detection, whole-subblock hypothesis space
    for _ in range(1000):
        p1, p2, s2 = draw_params()
        cfg = NomaConfig(p1=p1, p2=p2, sigma2=s2, scheme="im_ofdm")
        r = rng.normal(size=IM.k) + 1j * rng.normal(size=IM.k)
        h = rng.normal(size=IM.k) + 1j * rng.normal(size=IM.k)
        got = llr_im_first(r, h, cfg, IM)
        want = oracle_llr_im_subblock(
            r,
            h,
            IM.active_amplitude(IM.k) * math.sqrt(p1),
            math.sqrt(p2),
            s2,
            QPSK.points,
            IM.used_patterns(),
            IM.index_bits,
        )
        worst = max(worst, float(np.max(np.abs(got - want))))

    dt = time.monotonic() - t0
    ok = worst < 1e-9 and dt < 60.0
    _report(
        1,
        ok,
        f"3 detectors x 1000 instances match brute-force enumeration, "
        f"max |deviation| {worst:.2e} (tol 1e-9), {dt:.1f}s (budget 60s)",
    )


def test_criterion_2_rate_formula_limits():
    t0 = time.monotonic()
    low = im_rate_lower_bound(NomaConfig(p1=1e-6, p2=1.0, sigma2=1.0, scheme="im_ofdm"), IM)
    high = im_rate_lower_bound(NomaConfig(p1=1e6, p2=1.0, sigma2=1.0, scheme="im_ofdm"), IM)
    cfg = NomaConfig(p1=4.0, p2=1.0, sigma2=0.5)
    g = np.ones(48)
    rep = rate_ofdm_noma(cfg, g, g)
    telescope = abs(rep.r1 + rep.r2 - math.log2(1.0 + (cfg.p1 + cfg.p2) / cfg.sigma2))
    dt = time.monotonic() - t0
    ok = abs(low) < 1e-3 and abs(high - 2.0) < 0.05 and telescope < 1e-10
    _report(
        2,
        ok,
        f"IM bound {low:.2e} at -60 dB (|.| < 1e-3), {high:.4f} at +60 dB "
        f"(target 2.0 +- 0.05), sum-rate identity residual {telescope:.2e} "
        f"(tol 1e-10), {dt:.1f}s",
    )


def test_criterion_3_bler_crossover():
    t0 = time.monotonic()
    grid = "0:28:2"
    base = {"scenario": "noma-bler", "seed": 1, "trials": 2000, "snr_db": grid}
    cfg_ofdm = load_config(
        None, {**base, "delta_p_db": (-6.0, 0.0, 6.0), "noma": {"scheme": "ofdm_ofdm"}}
    )
    cfg_im = load_config(None, {**base, "delta_p_db": (0.0,), "noma": {"scheme": "im_ofdm"}})
    rec_ofdm = run_noma_bler(cfg_ofdm).records
    rec_im = run_noma_bler(cfg_im).records

    def req_system(records, dp):
        rows = [
            r
            for r in required_snr_records(records, target=TARGET_BLER)
            if r.metric == "required_snr_system" and r.coords["delta_p_db"] == dp
        ]
        assert len(rows) == 1
        return rows[0].value, bool(rows[0].coords["censored"])

    req_m6, cen_m6 = req_system(rec_ofdm, -6.0)
    req_0, cen_0 = req_system(rec_ofdm, 0.0)
    req_p6, cen_p6 = req_system(rec_ofdm, 6.0)
    req_im, cen_im = req_system(rec_im, 0.0)

    # Wilson bound on the worst user's BLER per SNR point at delta_p = 0;
    # system BLER is max over users, so both bounds are the per-user maxima
    def system_ci(records, bound: str) -> dict:
        by_snr: dict = {}
        for r in records:
            if r.metric in ("bler_u1", "bler_u2") and r.coords["delta_p_db"] == 0.0:
                by_snr.setdefault(r.coords["snr_db"], []).append(r)
        pick = (lambda r: r.ci_lo) if bound == "lo" else (lambda r: r.ci_hi)
        return {s: max(pick(r) for r in rows) for s, rows in by_snr.items()}

    ofdm0_ci_lo = system_ci(rec_ofdm, "lo")
    im0_ci_hi = system_ci(rec_im, "hi")
    ofdm_stays_above = min(ofdm0_ci_lo.values()) > TARGET_BLER
    im_reaches_below = min(im0_ci_hi.values()) < TARGET_BLER

    dt = time.monotonic() - t0
    bump_ok = (req_0 - req_m6 >= 3.0) and (req_0 - req_p6 >= 3.0)
    order_ok = (req_im < req_0) and (not cen_im) and ofdm_stays_above and im_reaches_below
    ok = bump_ok and order_ok and not cen_m6 and not cen_p6 and dt < 1800.0
    _report(
        3,
        ok,
        f"required SNR at BLER 1e-2: dense+dense {req_m6:.1f} dB @ -6, "
        f"{'>' if cen_0 else ''}{req_0:.1f} dB @ 0, {req_p6:.1f} dB @ +6 "
        f"(bump >= 3 dB both sides); IM {req_im:.1f} dB @ 0 "
        f"(CI-separated: dense floor ci_lo {min(ofdm0_ci_lo.values()):.3f} > 1e-2, "
        f"IM ci_hi {min(im0_ci_hi.values()):.2e} < 1e-2); {dt:.0f}s (budget 1800s)",
    )


def test_criterion_4_radar_detection():
    t0 = time.monotonic()
    cfg = load_config(
        None,
        {
            "scenario": "radar-rd",
            "seed": 1,
            "trials": 200,
            "snr_db": (20.0,),
            "radar": {"scene_file": SCENE},
        },
    )
    records = run_radar_rd(cfg).records
    rate = next(r for r in records if r.metric == "detection_rate")
    dt = time.monotonic() - t0
    ok = rate.value >= 0.95 and dt < 300.0
    _report(
        4,
        ok,
        f"all-3-targets-within-1-bin rate {rate.value:.3f} over {rate.trials} trials "
        f"at 20 dB (threshold 0.95), {dt:.0f}s (budget 300s)",
    )


def test_criterion_5_jrc_ber_gap():
    t0 = time.monotonic()
    cfg = load_config(
        None,
        {
            "scenario": "jrc-ber",
            "seed": 1,
            "snr_db": "0:6:1",
            "jrc_frames_per_point": 10,
            "radar": {"scene_file": SCENE},
        },
    )
    records = run_jrc_ber(cfg).records
    bits_per_point = {r.trials for r in records}
    curves: dict = {"proposed": {}, "reference": {}}
    for r in records:
        if r.metric == "ber":
            curves[r.coords["pipeline"]][r.coords["snr_db"]] = r.value
    snrs = sorted(curves["proposed"])
    req = {}
    cen = {}
    for name in ("proposed", "reference"):
        req[name], cen[name] = required_snr_db(
            snrs, [curves[name][s] for s in snrs], TARGET_BER
        )
    gap = req["proposed"] - req["reference"]
    dt = time.monotonic() - t0
    ok = (
        min(bits_per_point) >= 100_000
        and not cen["proposed"]
        and not cen["reference"]
        and gap <= 1.5
        and dt < 1200.0
    )
    _report(
        5,
        ok,
        f"BER 1e-2 at {req['proposed']:.2f} dB with radar-estimated channel vs "
        f"{req['reference']:.2f} dB with the true channel: gap {gap:.2f} dB "
        f"(budget 1.5 dB), {min(bits_per_point)} info bits/point, {dt:.0f}s (budget 1200s)",
    )


def test_criterion_6_structural_invariants():
    t0 = time.monotonic()
    rng = np.random.default_rng(106)
    checks = {}

    x = rng.normal(size=(16, 64)) + 1j * rng.normal(size=(16, 64))
    checks["dft_unitary"] = bool(
        np.allclose(np.linalg.norm(dft(x), axis=1), np.linalg.norm(x, axis=1))
        and np.allclose(idft(dft(x)), x, atol=1e-12)
    )

    ofdm = OfdmParams(n_fft=64, n_alloc=48, cp_len=16, subcarrier_spacing_hz=15e3)
    est = ChannelMatrixEstimate(
        delays_samples=np.array([0, 3, 9], dtype=np.int64),
        dopplers_hz=np.zeros(3),
        gains=np.array([0.8 - 0.1j, 0.3 + 0.4j, -0.2 + 0.2j]),
        sample_rate=ofdm.sample_rate,
    )
    theta = ofdm_channel_matrix(est, ofdm, offset=200)
    off = theta - np.diag(np.diagonal(theta))
    checks["cp_circularization"] = bool(
        np.linalg.norm(off) < 1e-9 * np.linalg.norm(np.diagonal(theta))
    )

    fs = 1e6
    fmcw = FmcwParams(sweep_hz=fs / 2, chirp_duration_s=64e-6, n_chirps=16)
    tx = fmcw_generate(fmcw, fs)
    truth = [0.9 + 0.3j, -0.5 + 0.6j, 0.4 - 0.55j]
    scene = RadarScene(
        paths=[
            ScenePath(delay_samples=d, doppler_hz=0.0, gain=g)
            for d, g in zip((8, 14, 30), truth)
        ]
    )
    rx = ComplexSignal(apply_ltv(scene, tx.samples, fs), fs)
    detected = [
        TargetEstimate(range_bin=0, doppler_bin=0, delay_s=p.delay_samples / fs,
                       doppler_hz=0.0, peak_power=1.0)
        for p in scene.paths
    ]
    fitted = np.array([t.gain for t in estimate_gains(rx, detected, fmcw)])
    checks["ls_noiseless_exact"] = bool(np.max(np.abs(fitted - np.array(truth))) <= 1e-8)

    code = default_code()
    words = code.encode(rng.integers(0, 2, size=(200, code.k), dtype=np.uint8))
    checks["ldpc_parity"] = not np.any((words @ code.h.T) % 2)

    checks["grouping_bijective"] = all(
        np.array_equal(np.sort(group_indices(n, k).reshape(-1)), np.arange(n))
        for n, k in ((416, 4), (48, 4), (64, 8), (1664, 4))
    )

    run_cfg = load_config(
        None,
        {
            "scenario": "noma-bler",
            "seed": 5,
            "trials": 13,
            "snr_db": (10.0,),
            "delta_p_db": (6.0,),
        },
    )
    a = run_noma_bler(run_cfg).records
    b = run_noma_bler(run_cfg).records
    checks["seeded_determinism"] = all(
        ra.value == rb.value and ra.coords == rb.coords for ra, rb in zip(a, b)
    )

    dt = time.monotonic() - t0
    ok = all(checks.values()) and dt < 120.0
    failed = [k for k, v in checks.items() if not v]
    _report(
        6,
        ok,
        f"invariants {'all hold' if not failed else 'FAILED: ' + ', '.join(failed)} "
        f"({', '.join(checks)}), {dt:.1f}s (budget 120s)",
    )
