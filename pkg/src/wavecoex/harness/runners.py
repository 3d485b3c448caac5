"""Scenario runners: Monte Carlo loops that turn a config into metric records.

Every random draw comes from a substream keyed on (grid indices, trial
index), so results are independent of how trials are batched and rerunning
with the same config and seed reproduces every byte of output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..channel import (
    apply_ltv,
    channel_frequency_response,
    draw_fading,
    scene_from_spec,
)
from ..errors import ConfigurationError
from ..fec import BlockInterleaver, LdpcCode, conv_encode, default_code, viterbi_decode
from ..noma import (
    NomaConfig,
    llr_single_qam,
    rate_im_noma,
    rate_ofdm_noma,
    sic_receive,
    superimpose,
)
from ..numerics import ComplexSignal, SeededRng, awgn, qam_constellation, qam_map
from ..radar import (
    RangeDopplerMap,
    cancel_fmcw,
    dechirp,
    estimate_gains,
    extract_targets,
    ofdm_effective_channel,
    periodogram,
    reconstruct_channel,
    ChannelMatrixEstimate,
)
from ..waveforms import (
    FmcwParams,
    ImParams,
    OfdmParams,
    build_jrc_frame,
    fmcw_generate,
    im_bits_per_subblock,
    im_modulate,
    ofdm_demodulate,
    ofdm_modulate,
)
from .config import ExperimentConfig
from .metrics import MetricRecord, required_snr_db

__all__ = [
    "RunResult",
    "required_snr_records",
    "run_jrc_ber",
    "run_noma_bler",
    "run_radar_rd",
    "run_rates",
]


@dataclass
class RunResult:
    """Records plus any auxiliary artifacts a scenario wants persisted."""

    records: list[MetricRecord]
    rd_map: RangeDopplerMap | None = None
    artifacts: dict = field(default_factory=dict)


def _noma_frame_geometry(cfg: ExperimentConfig, code: LdpcCode):
    """Sizes of one NOMA frame; both users must pack whole codewords."""
    p = cfg.noma
    const = qam_constellation(p.order)
    im = ImParams(p.im_k, p.im_m, p.power_convention)
    if p.n_alloc % p.im_k:
        raise ConfigurationError(f"n_alloc={p.n_alloc} not divisible by k={p.im_k}")
    n_groups = p.n_alloc // p.im_k
    if p.scheme == "im_ofdm":
        bits_u1 = p.n_symbols * n_groups * im_bits_per_subblock(im, const)
    else:
        bits_u1 = p.n_symbols * p.n_alloc * const.bits_per_symbol
    bits_u2 = p.n_symbols * p.n_alloc * const.bits_per_symbol
    for name, bits in (("user 1", bits_u1), ("user 2", bits_u2)):
        if bits % code.n:
            raise ConfigurationError(
                f"{name} frame carries {bits} coded bits, not a multiple of n={code.n}; "
                f"adjust n_symbols or n_alloc"
            )
    return const, im, bits_u1 // code.n, bits_u2 // code.n


def _block_errors(decoded: np.ndarray, reference: np.ndarray) -> int:
    return int(np.any(decoded != reference, axis=1).sum())


def run_noma_bler(cfg: ExperimentConfig) -> RunResult:
    """Codeword BLER of both users over the (delta_p, snr) grid.

    SNR on the sweep axis is user 1's transmit power over the noise variance
    (sigma2 = 1); user 2 sits delta_p dB below.  ``trials`` counts decoded
    codewords per user per point, rounded up to whole frames.
    """
    p = cfg.noma
    code = default_code()
    const, im, cw1, cw2 = _noma_frame_geometry(cfg, code)
    ofdm = OfdmParams(p.n_fft, p.n_alloc, 0, 60e3)
    bins = ofdm.allocated_bins()
    frames = max(1, math.ceil(cfg.trials / min(cw1, cw2)))
    rng = SeededRng(cfg.seed)
    records: list[MetricRecord] = []

    for di, dp in enumerate(cfg.delta_p_db):
        for si, snr in enumerate(cfg.snr_db):
            p1 = 10.0 ** (snr / 10.0)
            p2 = p1 * 10.0 ** (-dp / 10.0)
            link = NomaConfig(
                p1=p1,
                p2=p2,
                sigma2=1.0,
                scheme=p.scheme,
                decode_order=p.decode_order,
                cancellation=p.cancellation,
                order=p.order,
            )
            err1 = err2 = 0
            for f in range(frames):
                sub = rng.substream(di, si, f)
                info1 = sub.integers(0, 2, size=(cw1, code.k), dtype=np.uint8)
                info2 = sub.integers(0, 2, size=(cw2, code.k), dtype=np.uint8)
                enc1 = code.encode(info1)
                enc2 = code.encode(info2)
                if p.scheme == "im_ofdm":
                    per_sym = enc1.reshape(p.n_symbols, -1)
                    grid1 = np.stack(
                        [im_modulate(row, im, const, p.n_alloc) for row in per_sym]
                    )
                else:
                    grid1 = qam_map(enc1.reshape(-1), const).reshape(p.n_symbols, p.n_alloc)
                grid2 = qam_map(enc2.reshape(-1), const).reshape(p.n_symbols, p.n_alloc)
                h1 = channel_frequency_response(
                    draw_fading(p.n_taps, sub, p.pdp_decay), p.n_fft
                )[bins]
                h2 = channel_frequency_response(
                    draw_fading(p.n_taps, sub, p.pdp_decay), p.n_fft
                )[bins]
                r1, r2 = superimpose(grid1, grid2, link, h1, h2, sub)
                truth = (grid1, grid2) if p.cancellation == "genie" else None
                res1 = sic_receive(r1, h1, link, code, im=im, true_grids=truth)
                res2 = sic_receive(r2, h2, link, code, im=im, true_grids=truth)
                err1 += _block_errors(res1.cw_u1, enc1)
                err2 += _block_errors(res2.cw_u2, enc2)
            coords = {
                "scheme": p.scheme,
                "decode_order": p.decode_order,
                "cancellation": p.cancellation,
                "delta_p_db": float(dp),
                "snr_db": float(snr),
            }
            records.append(MetricRecord.from_counts("bler_u1", err1, frames * cw1, coords))
            records.append(MetricRecord.from_counts("bler_u2", err2, frames * cw2, coords))
    return RunResult(records=records)


def required_snr_records(
    records: list[MetricRecord], target: float = 1e-2, metrics: tuple = ("bler_u1", "bler_u2")
) -> list[MetricRecord]:
    """Required-SNR summary rows derived from error-rate sweep records.

    For every group sharing all coordinates except ``snr_db``, interpolates
    the SNR where the curve crosses ``target``; also emits a "system" row,
    the worst user's requirement.  Censored values (curve never reaches the
    target inside the sweep) are lower bounds, flagged by the ``censored``
    coordinate.
    """
    groups: dict[tuple, dict] = {}
    for r in records:
        if r.metric not in metrics or "snr_db" not in r.coords:
            continue
        base = tuple(sorted((k, v) for k, v in r.coords.items() if k != "snr_db"))
        entry = groups.setdefault(base, {m: ([], [], 0) for m in metrics})
        snrs, rates, n = entry[r.metric]
        snrs.append(float(r.coords["snr_db"]))
        rates.append(r.value)
        entry[r.metric] = (snrs, rates, n + r.trials)

    out: list[MetricRecord] = []
    for base, per_metric in sorted(groups.items()):
        coords_base = dict(base)
        worst: tuple[float, bool] | None = None
        for m in metrics:
            snrs, rates, n = per_metric[m]
            if not snrs:
                continue
            snr, censored = required_snr_db(snrs, rates, target)
            out.append(
                MetricRecord(
                    metric=f"required_snr_{m.removeprefix('bler_')}",
                    value=snr,
                    trials=n,
                    coords={**coords_base, "target": target, "censored": int(censored)},
                    ci_lo=snr,
                    ci_hi=snr,
                )
            )
            if worst is None or (snr, censored) > worst:
                worst = (snr, censored)
        if worst is not None:
            out.append(
                MetricRecord(
                    metric="required_snr_system",
                    value=worst[0],
                    trials=sum(per_metric[m][2] for m in metrics),
                    coords={**coords_base, "target": target, "censored": int(worst[1])},
                    ci_lo=worst[0],
                    ci_hi=worst[0],
                )
            )
    return out


def _mean_record(metric: str, values: np.ndarray, coords: dict) -> MetricRecord:
    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    half = 1.96 * float(values.std(ddof=1)) / math.sqrt(values.size) if values.size > 1 else 0.0
    return MetricRecord(
        metric=metric,
        value=mean,
        trials=int(values.size),
        coords=dict(coords),
        ci_lo=mean - half,
        ci_hi=mean + half,
    )


def run_rates(cfg: ExperimentConfig) -> RunResult:
    """Achievable-rate curves for both schemes over the (delta_p, snr) grid.

    Channel power gains are drawn once and shared across grid points (common
    random numbers), so curves differ only through the powers.
    """
    p = cfg.noma
    const = qam_constellation(p.order)
    im = ImParams(p.im_k, p.im_m, p.power_convention)
    ofdm = OfdmParams(p.n_fft, p.n_alloc, 0, 60e3)
    bins = ofdm.allocated_bins()
    rng = SeededRng(cfg.seed)
    draws = cfg.rate_channel_draws
    g1 = np.empty((draws, p.n_alloc))
    g2 = np.empty((draws, p.n_alloc))
    for d in range(draws):
        sub = rng.substream(d)
        g1[d] = np.abs(channel_frequency_response(draw_fading(p.n_taps, sub, p.pdp_decay), p.n_fft)[bins]) ** 2
        g2[d] = np.abs(channel_frequency_response(draw_fading(p.n_taps, sub, p.pdp_decay), p.n_fft)[bins]) ** 2

    records: list[MetricRecord] = []
    for dp in cfg.delta_p_db:
        for snr in cfg.snr_db:
            p1 = 10.0 ** (snr / 10.0)
            p2 = p1 * 10.0 ** (-dp / 10.0)
            link = NomaConfig(p1=p1, p2=p2, sigma2=1.0, scheme="ofdm_ofdm", order=p.order)
            coords = {"delta_p_db": float(dp), "snr_db": float(snr)}
            per_draw_1 = np.array([rate_ofdm_noma(link, g1[d], g2[d]).r1 for d in range(draws)])
            per_draw_2 = np.array([rate_ofdm_noma(link, g1[d], g2[d]).r2 for d in range(draws)])
            records.append(_mean_record("rate_u1", per_draw_1, {**coords, "scheme": "ofdm_ofdm"}))
            records.append(_mean_record("rate_u2", per_draw_2, {**coords, "scheme": "ofdm_ofdm"}))

            im_link = NomaConfig(p1=p1, p2=p2, sigma2=1.0, scheme="im_ofdm", order=p.order)
            r1_bound = rate_im_noma(im_link, im, g2[0], const).r1
            per_draw_im2 = np.array(
                [rate_im_noma(im_link, im, g2[d], const).r2 for d in range(draws)]
            )
            records.append(
                MetricRecord(
                    metric="rate_u1",
                    value=float(r1_bound),
                    trials=1,
                    coords={**coords, "scheme": "im_ofdm"},
                    ci_lo=float(r1_bound),
                    ci_hi=float(r1_bound),
                )
            )
            records.append(_mean_record("rate_u2", per_draw_im2, {**coords, "scheme": "im_ofdm"}))
    return RunResult(records=records)


def _jrc_geometry(cfg: ExperimentConfig):
    """Frame layout shared by the radar and JRC scenarios."""
    j = cfg.jrc
    fs = j.sample_rate
    fmcw = FmcwParams(
        sweep_hz=j.sweep_hz,
        chirp_duration_s=j.chirp_duration_s,
        n_chirps=j.n_chirps,
        power=j.p_fmcw,
    )
    ofdm = OfdmParams(j.n_fft, j.n_alloc, j.cp_len, j.subcarrier_spacing_hz)
    n_c = fmcw.samples_per_chirp(fs)
    frame_len = n_c * j.n_chirps
    n_sym = (frame_len - n_c) // ofdm.symbol_len
    if n_sym < 1:
        raise ConfigurationError("frame too short for a single OFDM symbol after the first chirp")
    return fs, fmcw, ofdm, n_c, n_sym


def _scene_entries(cfg: ExperimentConfig) -> list[dict]:
    if cfg.radar.scene_file:
        return [dict(e) for e in _load_scene_entries(cfg.radar.scene_file)]
    return [dict(e) for e in cfg.radar.scene]


def _load_scene_entries(path: str) -> list[dict]:
    import json

    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read scene file {path}: {exc}") from exc
    entries = raw["targets"] if isinstance(raw, dict) else raw
    if not isinstance(entries, list):
        raise ConfigurationError(f"scene file {path} must hold a target list")
    return entries


def _wrapped_bin_error(est: float, truth: float, modulo: int) -> float:
    d = (est - truth) % modulo
    return min(d, modulo - d)


def run_radar_rd(cfg: ExperimentConfig) -> RunResult:
    """Detection statistics of the dechirp/periodogram chain.

    A trial succeeds when every scene target has a detected peak within one
    bin in both range and Doppler (wrap-aware, one detection per target).
    SNR is total frame transmit power (chirp plus OFDM) over noise variance.
    The returned result carries the last trial's range-Doppler map and the
    first trial's frame for I/Q dumping.
    """
    j = cfg.jrc
    fs, fmcw, ofdm, n_c, n_sym = _jrc_geometry(cfg)
    entries = _scene_entries(cfg)
    if not entries:
        raise ConfigurationError("radar scenario needs at least one scene target")
    const = qam_constellation(4)
    rng = SeededRng(cfg.seed)
    fmcw_sig = fmcw_generate(fmcw, fs)
    records: list[MetricRecord] = []
    last_map: RangeDopplerMap | None = None
    artifacts: dict = {}

    for si, snr in enumerate(cfg.snr_db):
        sigma2 = (j.p_fmcw + j.p_ofdm) / 10.0 ** (snr / 10.0)
        ok_trials = 0
        target_hits = 0
        for t in range(cfg.trials):
            sub = rng.substream(si, t)
            scene = scene_from_spec(entries, fs, j.carrier_hz, sub, cfg.radar.pdp_decay)
            payload = sub.integers(0, 2, size=n_sym * j.n_alloc * 2, dtype=np.uint8)
            grid = qam_map(payload, const).reshape(n_sym, j.n_alloc)
            frame = build_jrc_frame(fmcw_sig, ofdm_modulate(grid, ofdm, j.p_ofdm), n_c)
            y = apply_ltv(scene, frame.samples, fs) + awgn(len(frame), sigma2, sub)
            rd = periodogram(dechirp(ComplexSignal(y, fs), fmcw), fmcw)
            found = extract_targets(
                rd,
                max_targets=scene.n_paths,
                threshold_db=cfg.radar.threshold_db,
                guard=cfg.radar.guard_bins,
            )
            true_range = scene.delays() / fs * fmcw.sweep_hz
            true_doppler = scene.dopplers() * j.n_chirps * fmcw.chirp_duration_s
            taken = [False] * len(found)
            hits = 0
            for rb, db_ in zip(true_range, true_doppler):
                for i, est in enumerate(found):
                    if taken[i]:
                        continue
                    if (
                        _wrapped_bin_error(est.range_bin, rb, rd.n_range) <= 1.0 + 1e-9
                        and _wrapped_bin_error(est.doppler_bin, db_, rd.n_doppler) <= 1.0 + 1e-9
                    ):
                        taken[i] = True
                        hits += 1
                        break
            target_hits += hits
            ok_trials += hits == scene.n_paths
            if si == 0 and t == 0:
                artifacts["first_frame"] = ComplexSignal(samples=y, sample_rate=fs)
            last_map = rd
        coords = {"snr_db": float(snr)}
        records.append(MetricRecord.from_counts("detection_rate", ok_trials, cfg.trials, coords))
        records.append(
            MetricRecord.from_counts(
                "target_hit_rate", target_hits, cfg.trials * len(entries), coords
            )
        )
    return RunResult(records=records, rd_map=last_map, artifacts=artifacts)


def _pick_interleaver_rows(total: int, requested: int) -> int:
    for rows in range(min(requested, total), 0, -1):
        if total % rows == 0:
            return rows
    return 1


def run_jrc_ber(cfg: ExperimentConfig) -> RunResult:
    """Coded BER of the OFDM payload inside the shared radar frame.

    Two pipelines per trial, sharing channel, data and noise: "proposed"
    estimates the channel from the radar chain (dechirp, peaks, LS gains),
    cancels the chirp train and demaps through the estimated DFT-domain
    channel; "reference" sees the OFDM burst alone through the true channel
    with the same noise, the no-self-interference bound.
    """
    j = cfg.jrc
    fs, fmcw, ofdm, n_c, n_sym = _jrc_geometry(cfg)
    entries = _scene_entries(cfg)
    if not entries:
        raise ConfigurationError("jrc scenario needs at least one scene target")
    const = qam_constellation(4)
    coded_len = n_sym * j.n_alloc * const.bits_per_symbol
    n_info = coded_len // 2 - 6  # rate-1/2 with 6 tail bits
    if n_info <= 0:
        raise ConfigurationError("frame too small for the tail-terminated code")
    interleaver = BlockInterleaver(_pick_interleaver_rows(coded_len, j.interleaver_rows))
    rng = SeededRng(cfg.seed)
    fmcw_sig = fmcw_generate(fmcw, fs)
    ofdm_span = slice(n_c, n_c + n_sym * ofdm.symbol_len)
    scale = ofdm.amplitude_scale(j.p_ofdm)
    records: list[MetricRecord] = []

    def demap_decode(z: np.ndarray, theta: np.ndarray, sigma2: float, info: np.ndarray) -> int:
        llr = llr_single_qam(z, theta, 1.0, sigma2 / scale**2, const)
        decoded = viterbi_decode(interleaver.deinterleave(llr), n_info)
        return int(np.count_nonzero(decoded != info))

    for si, snr in enumerate(cfg.snr_db):
        sigma2 = (j.p_fmcw + j.p_ofdm) / 10.0 ** (snr / 10.0)
        errs = {"proposed": 0, "reference": 0}
        for f in range(cfg.jrc_frames_per_point):
            sub = rng.substream(si, f)
            scene = scene_from_spec(entries, fs, j.carrier_hz, sub, cfg.radar.pdp_decay)
            info = sub.integers(0, 2, size=n_info, dtype=np.uint8)
            coded = interleaver.interleave(conv_encode(info))
            grid = qam_map(coded, const).reshape(n_sym, j.n_alloc)
            ofdm_samples = ofdm_modulate(grid, ofdm, j.p_ofdm)
            frame = build_jrc_frame(fmcw_sig, ofdm_samples, n_c)
            noise = awgn(len(frame), sigma2, sub)
            y = apply_ltv(scene, frame.samples, fs) + noise

            rd = periodogram(dechirp(ComplexSignal(y, fs), fmcw), fmcw)
            found = extract_targets(
                rd,
                max_targets=scene.n_paths,
                threshold_db=cfg.radar.threshold_db,
                guard=cfg.radar.guard_bins,
            )
            found = estimate_gains(ComplexSignal(y, fs), found, fmcw, j.n_bar)
            est = reconstruct_channel(found, fs)
            resid = cancel_fmcw(y, est, fmcw_sig.samples)
            z = ofdm_demodulate(resid[ofdm_span], ofdm, j.p_ofdm)
            theta = ofdm_effective_channel(est, ofdm, n_c, n_sym)
            errs["proposed"] += demap_decode(z, theta, sigma2, info)

            ofdm_only = np.zeros(len(frame), dtype=np.complex128)
            ofdm_only[ofdm_span] = ofdm_samples
            y_ref = apply_ltv(scene, ofdm_only, fs) + noise
            truth = ChannelMatrixEstimate(
                delays_samples=scene.delays(),
                dopplers_hz=scene.dopplers(),
                gains=scene.gains(),
                sample_rate=fs,
            )
            z_ref = ofdm_demodulate(y_ref[ofdm_span], ofdm, j.p_ofdm)
            theta_ref = ofdm_effective_channel(truth, ofdm, n_c, n_sym)
            errs["reference"] += demap_decode(z_ref, theta_ref, sigma2, info)
        total_bits = cfg.jrc_frames_per_point * n_info
        for pipeline, e in errs.items():
            records.append(
                MetricRecord.from_counts(
                    "ber", e, total_bits, {"pipeline": pipeline, "snr_db": float(snr)}
                )
            )
    return RunResult(records=records)
