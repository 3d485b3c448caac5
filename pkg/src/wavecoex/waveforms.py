"""Waveform construction: CP-OFDM, subcarrier index modulation, FMCW chirps.

The OFDM grid convention used everywhere: a frequency-domain grid has shape
(..., n_alloc) over the allocated subcarriers in ascending frequency order,
with the allocation centred on the carrier and the DC bin left empty.  Index
modulation operates on subblocks of k adjacent *logical* positions that are
spread over the band by interleaved grouping, so deep fades hit at most one
element per subblock.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .numerics import ComplexSignal, QamConstellation, idft, dft, qam_map

__all__ = [
    "FmcwParams",
    "ImParams",
    "OfdmParams",
    "build_jrc_frame",
    "fmcw_generate",
    "group_indices",
    "im_bits_per_subblock",
    "im_modulate",
    "ofdm_demodulate",
    "ofdm_modulate",
    "pattern_table",
    "read_iq",
    "write_iq",
]


@dataclass(frozen=True)
class OfdmParams:
    """CP-OFDM numerology; sample rate is n_fft * subcarrier_spacing_hz."""

    n_fft: int
    n_alloc: int
    cp_len: int
    subcarrier_spacing_hz: float

    def __post_init__(self) -> None:
        if self.n_alloc <= 0 or self.n_alloc >= self.n_fft:
            raise ConfigurationError(
                f"n_alloc={self.n_alloc} must lie in (0, n_fft={self.n_fft})"
            )
        if self.n_alloc % 2 != 0:
            raise ConfigurationError("n_alloc must be even for a centred allocation")
        if self.cp_len < 0 or self.cp_len >= self.n_fft:
            raise ConfigurationError(f"cp_len={self.cp_len} out of range")
        if self.subcarrier_spacing_hz <= 0:
            raise ConfigurationError("subcarrier spacing must be positive")

    @property
    def sample_rate(self) -> float:
        return self.n_fft * self.subcarrier_spacing_hz

    @property
    def symbol_len(self) -> int:
        return self.n_fft + self.cp_len

    def allocated_bins(self) -> np.ndarray:
        """FFT bin index per allocated subcarrier, ascending in frequency.

        Offsets run -n_alloc/2 .. -1, +1 .. +n_alloc/2 around DC (bin 0 unused).
        """
        half = self.n_alloc // 2
        offsets = np.concatenate([np.arange(-half, 0), np.arange(1, half + 1)])
        return np.mod(offsets, self.n_fft)

    def amplitude_scale(self, power: float) -> float:
        """Time-domain scale so a unit-average-power grid transmits ``power``."""
        return math.sqrt(power * self.n_fft / self.n_alloc)


def ofdm_modulate(grid: np.ndarray, params: OfdmParams, power: float = 1.0) -> np.ndarray:
    """Grid (n_symbols, n_alloc) or (n_alloc,) to serialized CP-OFDM samples.

    Mean output power equals ``power`` times the grid's average symbol energy.
    """
    grid = np.atleast_2d(np.asarray(grid, dtype=np.complex128))
    if grid.shape[-1] != params.n_alloc:
        raise ConfigurationError(f"grid width {grid.shape[-1]} != n_alloc {params.n_alloc}")
    spectrum = np.zeros((grid.shape[0], params.n_fft), dtype=np.complex128)
    spectrum[:, params.allocated_bins()] = grid
    body = idft(spectrum, axis=-1) * params.amplitude_scale(power)
    with_cp = np.concatenate([body[:, params.n_fft - params.cp_len :], body], axis=1)
    return with_cp.reshape(-1)


def ofdm_demodulate(samples: np.ndarray, params: OfdmParams, power: float = 1.0) -> np.ndarray:
    """Inverse of :func:`ofdm_modulate`; returns the (n_symbols, n_alloc) grid."""
    samples = np.asarray(samples, dtype=np.complex128)
    if samples.size % params.symbol_len != 0:
        raise ConfigurationError(
            f"sample count {samples.size} not a multiple of symbol length {params.symbol_len}"
        )
    blocks = samples.reshape(-1, params.symbol_len)[:, params.cp_len :]
    spectrum = dft(blocks, axis=-1) / params.amplitude_scale(power)
    return spectrum[:, params.allocated_bins()]


def pattern_table(k: int, m: int) -> np.ndarray:
    """All m-of-k activation patterns in lexicographic (combinadic) order."""
    if not 0 <= m <= k:
        raise ConfigurationError(f"need 0 <= m <= k, got m={m}, k={k}")
    combos = list(combinations(range(k), m))
    return np.array(combos, dtype=np.int64).reshape(len(combos), m)


@dataclass(frozen=True)
class ImParams:
    """Subcarrier index modulation: m of k subcarriers active per subblock.

    ``power_convention`` picks the active-subcarrier amplitude under a unit
    average power budget.  "matched" boosts active tones by sqrt(k/m) so the
    sparse grid keeps unit average power and the budget is fully spent;
    "literal" divides that by sqrt(n_alloc), the per-tone reading of the
    power constraint, which leaves the IM user heavily underpowered and is
    kept only for comparison.
    """

    k: int
    m: int
    power_convention: str = "matched"

    def __post_init__(self) -> None:
        if self.m < 0 or self.m > self.k:
            raise ConfigurationError(f"need 0 <= m <= k, got m={self.m}, k={self.k}")
        if self.power_convention not in ("matched", "literal"):
            raise ConfigurationError(f"unknown power convention {self.power_convention!r}")

    @property
    def n_patterns_used(self) -> int:
        return 1 << self.index_bits

    @property
    def index_bits(self) -> int:
        return int(math.floor(math.log2(math.comb(self.k, self.m))))

    def used_patterns(self) -> np.ndarray:
        """The first 2**index_bits patterns in lexicographic order."""
        return pattern_table(self.k, self.m)[: self.n_patterns_used]

    def active_amplitude(self, n_alloc: int) -> float:
        if self.m == 0:
            return 0.0
        amp = math.sqrt(self.k / self.m)
        if self.power_convention == "literal":
            amp /= math.sqrt(n_alloc)
        return amp


def im_bits_per_subblock(im: ImParams, constellation: QamConstellation) -> int:
    return im.index_bits + im.m * constellation.bits_per_symbol


def group_indices(n_alloc: int, k: int) -> np.ndarray:
    """Interleaved grouping map, shape (G, k): subcarrier of subblock b, slot i.

    Slot i of subblock b sits on allocated subcarrier i*G + b, so one
    subblock's elements are spread G subcarriers apart.  The map is a
    bijection onto 0..n_alloc-1.
    """
    if n_alloc % k != 0:
        raise ConfigurationError(f"n_alloc={n_alloc} not divisible by subblock size k={k}")
    g = n_alloc // k
    b, i = np.meshgrid(np.arange(g), np.arange(k), indexing="ij")
    return i * g + b


def im_modulate(
    bits: np.ndarray,
    im: ImParams,
    constellation: QamConstellation,
    n_alloc: int,
) -> np.ndarray:
    """Map bits onto a sparse index-modulated grid of width ``n_alloc``.

    Per subblock the first ``index_bits`` bits select the activation pattern
    (MSB first into the lexicographic table) and the remaining m*log2(M) bits
    fill the active slots in ascending slot order.  The returned grid has the
    active-amplitude convention applied; with "matched" its average power is
    exactly 1 when symbols are unit energy.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    if n_alloc % im.k != 0:
        raise ConfigurationError(f"n_alloc={n_alloc} not divisible by k={im.k}")
    g = n_alloc // im.k
    bps = im_bits_per_subblock(im, constellation)
    if bits.size != g * bps:
        raise ConfigurationError(f"expected {g * bps} bits for {g} subblocks, got {bits.size}")
    per_block = bits.reshape(g, bps)
    idx_bits = per_block[:, : im.index_bits]
    weights = 1 << np.arange(im.index_bits - 1, -1, -1)
    pattern_idx = idx_bits @ weights if im.index_bits else np.zeros(g, dtype=np.int64)
    patterns = im.used_patterns()[pattern_idx]  # (G, m)
    symbols = qam_map(per_block[:, im.index_bits :].reshape(-1), constellation).reshape(g, im.m)

    blocks = np.zeros((g, im.k), dtype=np.complex128)
    np.put_along_axis(blocks, patterns, symbols * im.active_amplitude(n_alloc), axis=1)
    grid = np.zeros(n_alloc, dtype=np.complex128)
    grid[group_indices(n_alloc, im.k)] = blocks
    return grid


@dataclass(frozen=True)
class FmcwParams:
    """Linear up-chirp train: sweep bandwidth beta over duration tau, K chirps."""

    sweep_hz: float
    chirp_duration_s: float
    n_chirps: int
    power: float = 1.0

    def __post_init__(self) -> None:
        if self.sweep_hz <= 0 or self.chirp_duration_s <= 0:
            raise ConfigurationError("sweep and duration must be positive")
        if self.n_chirps < 1:
            raise ConfigurationError("need at least one chirp")
        if self.power <= 0:
            raise ConfigurationError("power must be positive")

    def samples_per_chirp(self, sample_rate: float) -> int:
        return int(math.floor(self.chirp_duration_s * sample_rate))


def fmcw_generate(params: FmcwParams, sample_rate: float) -> ComplexSignal:
    """Constant-envelope chirp train s(t) = sqrt(P) exp(j pi beta t^2 / tau).

    The instantaneous frequency sweeps 0..beta over each chirp, so beta must
    not exceed the sample rate or the sweep aliases.
    """
    if params.sweep_hz > sample_rate:
        raise ConfigurationError(
            f"sweep {params.sweep_hz} Hz exceeds sample rate {sample_rate} Hz"
        )
    n_c = params.samples_per_chirp(sample_rate)
    if n_c < 2:
        raise ConfigurationError("chirp shorter than two samples")
    t = np.arange(n_c) / sample_rate
    chirp = np.exp(1j * np.pi * params.sweep_hz * t**2 / params.chirp_duration_s)
    samples = math.sqrt(params.power) * np.tile(chirp, params.n_chirps)
    return ComplexSignal(samples=samples, sample_rate=sample_rate)


def reference_chirp(params: FmcwParams, sample_rate: float) -> np.ndarray:
    """One unit-amplitude chirp period, used for dechirping and gain fitting."""
    one = FmcwParams(
        sweep_hz=params.sweep_hz,
        chirp_duration_s=params.chirp_duration_s,
        n_chirps=1,
        power=1.0,
    )
    return fmcw_generate(one, sample_rate).samples


def build_jrc_frame(
    fmcw: ComplexSignal, ofdm_samples: np.ndarray, delay_samples: int
) -> ComplexSignal:
    """Superimpose a delayed OFDM burst on the chirp train.

    The first ``delay_samples`` (one chirp in the intended use) stay
    OFDM-free so the radar receiver gets a clean channel-sounding interval.
    """
    ofdm_samples = np.asarray(ofdm_samples, dtype=np.complex128)
    if delay_samples < 0:
        raise ConfigurationError("delay must be non-negative")
    if delay_samples + ofdm_samples.size > len(fmcw):
        raise ConfigurationError(
            f"OFDM burst of {ofdm_samples.size} samples at offset {delay_samples} "
            f"overflows the {len(fmcw)}-sample frame"
        )
    frame = fmcw.samples.copy()
    frame[delay_samples : delay_samples + ofdm_samples.size] += ofdm_samples
    return ComplexSignal(samples=frame, sample_rate=fmcw.sample_rate)


def write_iq(path: str | Path, signal: ComplexSignal, meta: dict | None = None) -> None:
    """Dump interleaved float32 I/Q plus a JSON sidecar describing the frame."""
    path = Path(path)
    inter = np.empty(2 * len(signal), dtype=np.float32)
    inter[0::2] = signal.samples.real
    inter[1::2] = signal.samples.imag
    inter.tofile(path)
    sidecar = {
        "format": "cf32_le_interleaved",
        "n_samples": int(len(signal)),
        "sample_rate_hz": float(signal.sample_rate),
    }
    sidecar.update(meta or {})
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def read_iq(path: str | Path) -> ComplexSignal:
    """Load a frame written by :func:`write_iq`."""
    path = Path(path)
    sidecar = json.loads(Path(str(path) + ".json").read_text())
    raw = np.fromfile(path, dtype=np.float32)
    samples = raw[0::2].astype(np.float64) + 1j * raw[1::2].astype(np.float64)
    if samples.size != sidecar["n_samples"]:
        raise ConfigurationError(f"sidecar expects {sidecar['n_samples']} samples")
    return ComplexSignal(samples=samples, sample_rate=sidecar["sample_rate_hz"])
