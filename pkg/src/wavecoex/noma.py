"""Two-user waveform-domain NOMA: superposition, max-log detection, soft SIC.

The downlink model works per subcarrier after OFDM demodulation:

    r_n = h_n (sqrt(p1) u1_n + sqrt(p2) u2_n) + w_n,   w_n ~ CN(0, sigma2)

User 1 carries either plain QAM ("ofdm_ofdm" scheme) or index-modulated
subblocks ("im_ofdm"); user 2 always carries plain QAM.  All detectors are
max-log: an LLR is the difference of two minima of normalized Euclidean
distances over the competing aggregate-symbol hypothesis sets, with the
interfering user marginalized by including it in the hypothesis space.

LLR sign convention: positive favours bit 0, llr = log(P(0)/P(1)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .fec.ldpc import LdpcCode, soft_symbols
from .numerics import QamConstellation, awgn, qam_constellation, qam_map
from .waveforms import (
    ImParams,
    group_indices,
    im_bits_per_subblock,
    im_modulate,
    pattern_table,
)

_TINY = 1e-30

__all__ = [
    "NomaConfig",
    "RateReport",
    "SicResult",
    "im_posterior_mean",
    "im_rate_lower_bound",
    "llr_im_first",
    "llr_im_single",
    "llr_ofdm_first",
    "llr_ofdm_ofdm",
    "llr_single_qam",
    "rate_im_noma",
    "rate_ofdm_noma",
    "sic_receive",
    "superimpose",
]


@dataclass(frozen=True)
class NomaConfig:
    """Power split, noise level and receiver policy for the two-user link.

    ``scheme`` is "ofdm_ofdm" (QAM + QAM) or "im_ofdm" (index-modulated user 1
    over QAM user 2).  ``decode_order`` "auto" decodes user 1 first when
    p1 >= p2, otherwise user 2; "u1"/"u2" force the first-decoded user.
    ``cancellation`` picks the reconstruction used by the second stage:
    "soft" (posterior-mean symbols), "hard" (re-modulated decoder decisions)
    or "genie" (true transmitted grid, a diagnostic upper bound).
    """

    p1: float
    p2: float
    sigma2: float
    scheme: str = "ofdm_ofdm"
    decode_order: str = "auto"
    cancellation: str = "soft"
    order: int = 4

    def __post_init__(self) -> None:
        if self.p1 < 0 or self.p2 < 0:
            raise ConfigurationError("user powers must be non-negative")
        if self.sigma2 < 0:
            raise ConfigurationError("noise variance must be non-negative")
        if self.scheme not in ("ofdm_ofdm", "im_ofdm"):
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")
        if self.decode_order not in ("auto", "u1", "u2"):
            raise ConfigurationError(f"unknown decode order {self.decode_order!r}")
        if self.cancellation not in ("soft", "hard", "genie"):
            raise ConfigurationError(f"unknown cancellation mode {self.cancellation!r}")

    @property
    def delta_p_db(self) -> float:
        return 10.0 * math.log10(self.p1 / self.p2)

    def first_user(self) -> str:
        if self.decode_order != "auto":
            return self.decode_order
        return "u1" if self.p1 >= self.p2 else "u2"

    def constellation(self) -> QamConstellation:
        return qam_constellation(self.order)


def superimpose(
    u1: np.ndarray,
    u2: np.ndarray,
    cfg: NomaConfig,
    h1: np.ndarray,
    h2: np.ndarray,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-subcarrier superposition observed at the two receivers.

    ``u1``/``u2`` are unit-average-power grids, ``h1``/``h2`` per-subcarrier
    complex gains (broadcast against the grids).  Independent CN(0, sigma2)
    noise is drawn for each receiver.
    """
    u1 = np.asarray(u1, dtype=np.complex128)
    u2 = np.asarray(u2, dtype=np.complex128)
    if u1.shape != u2.shape:
        raise ConfigurationError(f"grid shapes differ: {u1.shape} vs {u2.shape}")
    agg = math.sqrt(cfg.p1) * u1 + math.sqrt(cfg.p2) * u2
    r1 = h1 * agg + awgn(u1.shape, cfg.sigma2, rng)
    r2 = h2 * agg + awgn(u2.shape, cfg.sigma2, rng)
    return r1, r2


def _bit_partition_minima(dist: np.ndarray, constellation: QamConstellation):
    """Per-bit (min over bit=1 set) - (min over bit=0 set) along the last axis.

    ``dist`` has the hypothesis label of interest on its last axis; any other
    hypothesis axes must already be reduced.  Returns (..., bits_per_symbol).
    """
    b = constellation.bits_per_symbol
    out = np.empty(dist.shape[:-1] + (b,))
    for i in range(b):
        ones = constellation.labels_with_bit(i, 1)
        zeros = constellation.labels_with_bit(i, 0)
        out[..., i] = dist[..., ones].min(axis=-1) - dist[..., zeros].min(axis=-1)
    return out


def llr_ofdm_ofdm(
    r: np.ndarray,
    h: np.ndarray,
    cfg: NomaConfig,
    target: str,
) -> np.ndarray:
    """Max-log LLRs for one user of a QAM+QAM superposition.

    Jointly enumerates both users' symbols (M^2 hypotheses per subcarrier)
    and marginalizes the other user inside each minimum.  Output is one LLR
    per coded bit, subcarrier-major, MSB first within a symbol.
    """
    if target not in ("u1", "u2"):
        raise ConfigurationError(f"target must be u1 or u2, got {target!r}")
    const = cfg.constellation()
    r = np.asarray(r, dtype=np.complex128)
    h = np.broadcast_to(np.asarray(h, dtype=np.complex128), r.shape).reshape(-1)
    r = r.reshape(-1)
    s2 = max(cfg.sigma2, _TINY)
    pts = const.points
    agg = math.sqrt(cfg.p1) * pts[:, None] + math.sqrt(cfg.p2) * pts[None, :]  # (M1, M2)
    dist = np.abs(r[:, None, None] - h[:, None, None] * agg[None, :, :]) ** 2 / s2
    # reduce the interferer axis, leaving the target's label axis last
    reduced = dist.min(axis=2) if target == "u1" else dist.min(axis=1)
    return _bit_partition_minima(reduced, const).reshape(-1)


def llr_single_qam(
    r: np.ndarray, h: np.ndarray, amplitude: float, sigma2: float, const: QamConstellation
) -> np.ndarray:
    """Single-user max-log QAM LLRs for r = h * amplitude * s + w."""
    r = np.asarray(r, dtype=np.complex128)
    h = np.broadcast_to(np.asarray(h, dtype=np.complex128), r.shape).reshape(-1)
    r = r.reshape(-1)
    s2 = max(sigma2, _TINY)
    dist = np.abs(r[:, None] - amplitude * h[:, None] * const.points[None, :]) ** 2 / s2
    return _bit_partition_minima(dist, const).reshape(-1)


def llr_ofdm_first(
    r: np.ndarray,
    h: np.ndarray,
    cfg: NomaConfig,
    im: ImParams,
) -> np.ndarray:
    """OFDM user's LLRs with the index-modulated interferer marginalized.

    The interferer contributes the augmented per-subcarrier alphabet
    {0} U amp * sqrt(p1) * S (the zero accounts for inactive subcarriers), so
    each bit minimum runs over (M+1) * M aggregate hypotheses.
    """
    const = cfg.constellation()
    r = np.asarray(r, dtype=np.complex128)
    n_alloc = r.shape[-1]
    h = np.broadcast_to(np.asarray(h, dtype=np.complex128), r.shape).reshape(-1)
    r = r.reshape(-1)
    s2 = max(cfg.sigma2, _TINY)
    amp = im.active_amplitude(n_alloc) * math.sqrt(cfg.p1)
    interferer = np.concatenate([[0.0], amp * const.points])  # (M+1,)
    agg = interferer[:, None] + math.sqrt(cfg.p2) * const.points[None, :]
    dist = np.abs(r[:, None, None] - h[:, None, None] * agg[None, :, :]) ** 2 / s2
    reduced = dist.min(axis=1)  # marginalize the augmented interferer alphabet
    return _bit_partition_minima(reduced, const).reshape(-1)


def _im_subblock_view(x: np.ndarray, im: ImParams, n_alloc: int) -> np.ndarray:
    """(..., n_alloc) -> (n_blocks_total, k) through the interleaved grouping."""
    x = np.asarray(x)
    gathered = x[..., group_indices(n_alloc, im.k)]  # (..., G, k)
    return gathered.reshape(-1, im.k)


def _im_llr_core(
    rs: np.ndarray,
    hs: np.ndarray,
    active_vals: np.ndarray,
    interferer_vals: np.ndarray | None,
    sigma2: float,
    im: ImParams,
    const: QamConstellation,
) -> np.ndarray:
    """Factored max-log LLRs over IM subblocks.

    For every subblock the joint hypothesis space is pattern x active-symbol
    tuple x interferer tuple.  Because distances add per subcarrier and the
    interferer/symbol choices are independent across positions given the
    pattern, each minimum factors into per-position minima; this computes the
    exact same minima as brute-force enumeration at O(k * M^2) per subblock.

    ``rs``/``hs`` are (n_blocks, k); returns (n_blocks, bits_per_subblock).
    """
    s2 = max(sigma2, _TINY)
    n_blocks = rs.shape[0]
    b = const.bits_per_symbol
    if interferer_vals is not None:
        d0 = (
            np.abs(rs[:, :, None] - hs[:, :, None] * interferer_vals[None, None, :]) ** 2 / s2
        ).min(axis=2)  # (n_blocks, k): inactive position, best interferer
        agg = active_vals[:, None] + interferer_vals[None, :]  # (M, Mi)
        grid = rs[:, :, None, None] - hs[:, :, None, None] * agg[None, None, :, :]
        da = (np.abs(grid) ** 2 / s2).min(axis=3)  # (n_blocks, k, M)
    else:
        d0 = np.abs(rs) ** 2 / s2
        da = np.abs(rs[:, :, None] - hs[:, :, None] * active_vals[None, None, :]) ** 2 / s2

    da_min = da.min(axis=2)  # (n_blocks, k): best active symbol per position
    patterns = im.used_patterns()  # (P, m)
    n_pat = patterns.shape[0]
    active_mask = np.zeros((n_pat, im.k), dtype=bool)
    np.put_along_axis(active_mask, patterns, True, axis=1)
    # total metric of the best hypothesis under each pattern
    per_pos = np.where(active_mask[None, :, :], da_min[:, None, :], d0[:, None, :])
    t_pat = per_pos.sum(axis=2)  # (n_blocks, P)

    bps = im_bits_per_subblock(im, const)
    out = np.empty((n_blocks, bps))
    pat_labels = np.arange(n_pat)
    for q in range(im.index_bits):
        bit = (pat_labels >> (im.index_bits - 1 - q)) & 1
        out[:, q] = t_pat[:, bit == 1].min(axis=1) - t_pat[:, bit == 0].min(axis=1)

    # QAM bits: swap the unconstrained per-position minimum for a constrained one
    for t in range(im.m):
        pos = patterns[:, t]  # (P,): subcarrier slot of tuple slot t under each pattern
        da_pos = da[:, pos, :]  # (n_blocks, P, M)
        t_base = t_pat - da_min[:, pos]  # (n_blocks, P)
        for i in range(b):
            ones = const.labels_with_bit(i, 1)
            zeros = const.labels_with_bit(i, 0)
            m1 = (t_base + da_pos[:, :, ones].min(axis=2)).min(axis=1)
            m0 = (t_base + da_pos[:, :, zeros].min(axis=2)).min(axis=1)
            out[:, im.index_bits + t * b + i] = m1 - m0
    return out


def llr_im_first(
    r: np.ndarray,
    h: np.ndarray,
    cfg: NomaConfig,
    im: ImParams,
) -> np.ndarray:
    """Index-modulated user's LLRs with the OFDM interferer marginalized.

    Exact max-log over the joint (pattern, QAM tuple, interferer tuple) space
    per subblock, computed in factored form.  Bit order per subblock: index
    bits MSB first, then the active slots' symbol bits in slot order.
    """
    if im.m < 1:
        raise ConfigurationError("detection needs at least one active subcarrier")
    const = cfg.constellation()
    r = np.asarray(r, dtype=np.complex128)
    n_alloc = r.shape[-1]
    h = np.broadcast_to(np.asarray(h, dtype=np.complex128), r.shape)
    rs = _im_subblock_view(r, im, n_alloc)
    hs = _im_subblock_view(h, im, n_alloc)
    active_vals = im.active_amplitude(n_alloc) * math.sqrt(cfg.p1) * const.points
    interferer_vals = math.sqrt(cfg.p2) * const.points
    return _im_llr_core(rs, hs, active_vals, interferer_vals, cfg.sigma2, im, const).reshape(-1)


def llr_im_single(
    r: np.ndarray,
    h: np.ndarray,
    p1: float,
    sigma2: float,
    im: ImParams,
    const: QamConstellation,
) -> np.ndarray:
    """IM user's LLRs after the OFDM layer has been removed."""
    if im.m < 1:
        raise ConfigurationError("detection needs at least one active subcarrier")
    r = np.asarray(r, dtype=np.complex128)
    n_alloc = r.shape[-1]
    h = np.broadcast_to(np.asarray(h, dtype=np.complex128), r.shape)
    rs = _im_subblock_view(r, im, n_alloc)
    hs = _im_subblock_view(h, im, n_alloc)
    active_vals = im.active_amplitude(n_alloc) * math.sqrt(p1) * const.points
    return _im_llr_core(rs, hs, active_vals, None, sigma2, im, const).reshape(-1)


def im_posterior_mean(
    app_llr: np.ndarray,
    im: ImParams,
    const: QamConstellation,
    n_alloc: int,
) -> np.ndarray:
    """Posterior-mean IM grid from decoder soft output.

    Treats the per-bit posteriors as independent: the pattern posterior is the
    product of index-bit probabilities and each active slot contributes its
    QAM posterior mean.  E[u_n] sums slot means over patterns that activate
    subcarrier n, weighted by the pattern posterior.  Amplitude convention
    matches :func:`wavecoex.waveforms.im_modulate`.
    """
    g = n_alloc // im.k
    bps = im_bits_per_subblock(im, const)
    app = np.asarray(app_llr, dtype=np.float64).reshape(-1, bps)
    n_blocks = app.shape[0]
    if n_blocks % g != 0:
        raise ConfigurationError(f"{n_blocks} subblocks do not tile a width-{n_alloc} grid")

    idx_llr = app[:, : im.index_bits]
    p0 = 1.0 / (1.0 + np.exp(-idx_llr))  # (n_blocks, Q1)
    patterns = im.used_patterns()
    n_pat = patterns.shape[0]
    pat_labels = np.arange(n_pat)
    q_bits = (
        (pat_labels[:, None] >> np.arange(im.index_bits - 1, -1, -1)[None, :]) & 1
    ).astype(bool)
    probs = np.where(q_bits[None, :, :], 1.0 - p0[:, None, :], p0[:, None, :])
    p_pat = probs.prod(axis=2) if im.index_bits else np.ones((n_blocks, 1))

    slot_mean = soft_symbols(app[:, im.index_bits :], const).reshape(n_blocks, im.m)

    mean_block = np.zeros((n_blocks, im.k), dtype=np.complex128)
    for j in range(n_pat):
        contrib = np.zeros((n_blocks, im.k), dtype=np.complex128)
        contrib[:, patterns[j]] = slot_mean
        mean_block += p_pat[:, j : j + 1] * contrib
    mean_block *= im.active_amplitude(n_alloc)

    n_symbols = n_blocks // g
    grid = np.zeros((n_symbols, n_alloc), dtype=np.complex128)
    grid[:, group_indices(n_alloc, im.k)] = mean_block.reshape(n_symbols, g, im.k)
    return grid


@dataclass
class SicDiagnostics:
    first_user: str
    cancellation: str
    converged_first: np.ndarray
    converged_second: np.ndarray
    iterations_first: np.ndarray
    iterations_second: np.ndarray


@dataclass
class SicResult:
    """Decoded codewords for both users plus stage diagnostics."""

    cw_u1: np.ndarray
    cw_u2: np.ndarray
    diagnostics: SicDiagnostics


def _decode_stream(llr: np.ndarray, code: LdpcCode):
    n_cw = llr.size // code.n
    if n_cw * code.n != llr.size:
        raise ConfigurationError(f"{llr.size} coded bits do not tile codewords of {code.n}")
    return code.decode(llr.reshape(n_cw, code.n))


def sic_receive(
    r: np.ndarray,
    h: np.ndarray,
    cfg: NomaConfig,
    code: LdpcCode,
    im: ImParams | None = None,
    true_grids: tuple[np.ndarray, np.ndarray] | None = None,
) -> SicResult:
    """Two-stage receiver: detect and decode one user, cancel, decode the other.

    ``r``/``h`` are (n_symbols, n_alloc) received grids and channel gains for
    the receiver running SIC (both users' data are recovered from this single
    observation).  Reconstruction for the cancellation step follows
    ``cfg.cancellation``; "genie" requires ``true_grids`` = (u1, u2) and
    subtracts the actual transmitted layer, bounding the error floor of the
    estimator-based modes.
    """
    r = np.atleast_2d(np.asarray(r, dtype=np.complex128))
    h = np.broadcast_to(np.asarray(h, dtype=np.complex128), r.shape)
    n_alloc = r.shape[-1]
    const = cfg.constellation()
    if cfg.scheme == "im_ofdm" and im is None:
        raise ConfigurationError("im parameters are required for the im_ofdm scheme")
    if cfg.cancellation == "genie" and true_grids is None:
        raise ConfigurationError("genie cancellation needs the true transmitted grids")
    first = cfg.first_user()

    def detect(user: str, obs: np.ndarray, stage: int) -> np.ndarray:
        joint = stage == 1
        if user == "u2":
            if cfg.scheme == "im_ofdm":
                return (
                    llr_ofdm_first(obs, h, cfg, im)
                    if joint
                    else llr_single_qam(obs, h, math.sqrt(cfg.p2), cfg.sigma2, const)
                )
            return (
                llr_ofdm_ofdm(obs, h, cfg, "u2")
                if joint
                else llr_single_qam(obs, h, math.sqrt(cfg.p2), cfg.sigma2, const)
            )
        if cfg.scheme == "im_ofdm":
            return (
                llr_im_first(obs, h, cfg, im)
                if joint
                else llr_im_single(obs, h, cfg.p1, cfg.sigma2, im, const)
            )
        return (
            llr_ofdm_ofdm(obs, h, cfg, "u1")
            if joint
            else llr_single_qam(obs, h, math.sqrt(cfg.p1), cfg.sigma2, const)
        )

    def reconstruct(user: str, decoded) -> np.ndarray:
        if cfg.cancellation == "genie":
            return np.atleast_2d(true_grids[0] if user == "u1" else true_grids[1])
        if user == "u1" and cfg.scheme == "im_ofdm":
            if cfg.cancellation == "hard":
                per_sym = np.asarray(decoded.hard).reshape(r.shape[0], -1)
                return np.stack(
                    [im_modulate(row, im, const, n_alloc) for row in per_sym], axis=0
                )
            return im_posterior_mean(decoded.app_llr.reshape(-1), im, const, n_alloc)
        if cfg.cancellation == "hard":
            bits = np.asarray(decoded.hard).reshape(-1)
            return qam_map(bits, const).reshape(r.shape)
        return soft_symbols(decoded.app_llr.reshape(-1), const).reshape(r.shape)

    second = "u2" if first == "u1" else "u1"
    dec_first = _decode_stream(detect(first, r, stage=1), code)
    layer = reconstruct(first, dec_first)
    power = cfg.p1 if first == "u1" else cfg.p2
    residual = r - h * math.sqrt(power) * layer
    dec_second = _decode_stream(detect(second, residual, stage=2), code)

    by_user = {first: dec_first, second: dec_second}
    diags = SicDiagnostics(
        first_user=first,
        cancellation=cfg.cancellation,
        converged_first=np.atleast_1d(dec_first.converged),
        converged_second=np.atleast_1d(dec_second.converged),
        iterations_first=np.atleast_1d(dec_first.iterations),
        iterations_second=np.atleast_1d(dec_second.iterations),
    )
    return SicResult(
        cw_u1=np.atleast_2d(by_user["u1"].hard),
        cw_u2=np.atleast_2d(by_user["u2"].hard),
        diagnostics=diags,
    )


@dataclass(frozen=True)
class RateReport:
    """Per-subcarrier average rates in bits/s/Hz plus the modelling caveats."""

    r1: float
    r2: float
    scheme: str
    assumptions: str = ""


def rate_ofdm_noma(cfg: NomaConfig, g1: np.ndarray, g2: np.ndarray) -> RateReport:
    """Achievable rates of the QAM+QAM split under SIC at user 1.

    ``g1``/``g2`` are per-subcarrier channel power gains.  User 1 is decoded
    first at its own receiver, so user 2's layer appears as noise for it;
    user 2 decodes interference-free after cancelling user 1.
    """
    g1 = np.asarray(g1, dtype=np.float64).reshape(-1)
    g2 = np.asarray(g2, dtype=np.float64).reshape(-1)
    s2 = max(cfg.sigma2, _TINY)
    r1 = float(np.mean(np.log2(1.0 + cfg.p1 * g1 / (s2 + cfg.p2 * g1))))
    r2 = float(np.mean(np.log2(1.0 + cfg.p2 * g2 / s2)))
    return RateReport(
        r1=r1,
        r2=r2,
        scheme="ofdm_ofdm",
        assumptions="per-subcarrier average; u1 treats u2 as noise, u2 after perfect SIC",
    )


def im_rate_lower_bound(cfg: NomaConfig, im: ImParams, const: QamConstellation | None = None) -> float:
    """Closed-form lower bound on the IM user's rate over Rayleigh fading.

    Averages the pairwise-ambiguity determinant over every (pattern, symbol
    tuple) hypothesis pair; the k x k ambiguity matrix is diagonal with
    entries (p1 k / (2 sigma2 m)) |e_i - e'_i|^2 where e is the sparse
    subblock vector of unit-energy symbols.  The bound vanishes as p1 -> 0
    and approaches (m log2 M + log2 C(k, m)) / k at high SNR.
    """
    const = const or cfg.constellation()
    m_order = const.order
    if im.m == 0:
        return 0.0
    n_pat = math.comb(im.k, im.m)
    n_hyp = n_pat * m_order**im.m
    if n_hyp > 100_000:
        raise ConfigurationError(
            f"hypothesis space {n_hyp} too large for the exact bound (cap 100000)"
        )
    patterns = pattern_table(im.k, im.m)  # full table, not the truncated one
    tuples = np.stack(
        np.meshgrid(*([np.arange(m_order)] * im.m), indexing="ij"), axis=-1
    ).reshape(-1, im.m)
    # sparse subblock vectors for all hypotheses
    e = np.zeros((n_hyp, im.k), dtype=np.complex128)
    idx = 0
    for j in range(n_pat):
        block = np.zeros((tuples.shape[0], im.k), dtype=np.complex128)
        block[:, patterns[j]] = const.points[tuples]
        e[idx : idx + tuples.shape[0]] = block
        idx += tuples.shape[0]
    factor = cfg.p1 * im.k / (2.0 * max(cfg.sigma2, _TINY) * im.m)
    inner = np.empty(n_hyp)
    chunk = max(1, 2**22 // (n_hyp * im.k))  # bound the pairwise table's memory
    for start in range(0, n_hyp, chunk):
        diff2 = np.abs(e[start : start + chunk, None, :] - e[None, :, :]) ** 2
        log_det = np.log1p(factor * diff2).sum(axis=2)  # log prod (1 + factor |d|^2)
        inner[start : start + chunk] = np.exp(-log_det).sum(axis=1)
    penalty = np.mean(np.log2(inner)) / im.k
    return im.m / im.k * math.log2(m_order) + math.log2(n_pat) / im.k - penalty


def rate_im_noma(
    cfg: NomaConfig,
    im: ImParams,
    g2: np.ndarray,
    const: QamConstellation | None = None,
) -> RateReport:
    """Rates of the IM + OFDM split.

    R2 conditions on the activation pattern and averages over the used
    patterns: active positions see interference power amp^2 p1 g, inactive
    positions are interference-free.  R1 is the Rayleigh-averaged lower
    bound from :func:`im_rate_lower_bound` (channel-independent by
    construction).
    """
    const = const or cfg.constellation()
    g2 = np.asarray(g2, dtype=np.float64).reshape(-1)
    n_alloc = g2.size
    s2 = max(cfg.sigma2, _TINY)
    if im.m == 0:
        r2 = float(np.mean(np.log2(1.0 + cfg.p2 * g2 / s2)))
        return RateReport(
            r1=0.0,
            r2=r2,
            scheme="im_ofdm",
            assumptions="degenerate m=0: no IM layer, u2 is interference-free OFDM",
        )
    blocks = g2[group_indices(n_alloc, im.k)]  # (G, k)
    interference = im.active_amplitude(n_alloc) ** 2 * cfg.p1 * blocks
    rate_active = np.log2(1.0 + cfg.p2 * blocks / (s2 + interference))
    rate_inactive = np.log2(1.0 + cfg.p2 * blocks / s2)
    patterns = im.used_patterns()
    mask = np.zeros((patterns.shape[0], im.k), dtype=bool)
    np.put_along_axis(mask, patterns, True, axis=1)
    per_pattern = np.where(mask[None, :, :], rate_active[:, None, :], rate_inactive[:, None, :])
    r2 = float(per_pattern.sum(axis=2).mean() / im.k)
    r1 = im_rate_lower_bound(cfg, im, const)
    return RateReport(
        r1=r1,
        r2=r2,
        scheme="im_ofdm",
        assumptions=(
            "per-subcarrier average; R2 averaged over used activation patterns, "
            "R1 is a Rayleigh-fading lower bound independent of the drawn channel"
        ),
    )
