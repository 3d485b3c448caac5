"""Radar processing chain and pilot-free channel estimation for the JRC frame.

A frame is a train of K identical chirps with an OFDM burst superimposed from
the second chirp onward.  The radar side dechirps, forms a range-Doppler
periodogram over the chirp x fast-time matrix, extracts peaks, and fits
complex path gains by least squares on the OFDM-free first chirp.  The
resulting sparse channel estimate both cancels the chirp train from the
communication signal and equalizes the OFDM subcarriers through the
DFT-domain channel matrix.

Conventions: range bin n maps to delay n / beta seconds (the dechirped beat
of a delayed chirp lands there by construction), Doppler bin m to
m / (K tau) Hz with the upper half of the axis wrapping to negative
frequencies.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .channel import SPEED_OF_LIGHT
from .errors import ConfigurationError, SimulationError
from .numerics import ComplexSignal
from .waveforms import FmcwParams, OfdmParams, reference_chirp

__all__ = [
    "ChannelMatrixEstimate",
    "RangeDopplerMap",
    "TargetEstimate",
    "cancel_fmcw",
    "dechirp",
    "delay_doppler_to_physical",
    "equalize_ofdm",
    "estimate_gains",
    "extract_targets",
    "ofdm_channel_matrix",
    "ofdm_effective_channel",
    "periodogram",
    "reconstruct_channel",
]


def dechirp(received: ComplexSignal, fmcw: FmcwParams) -> np.ndarray:
    """Multiply each chirp interval by the conjugate reference chirp.

    Returns the CPI matrix, shape (n_chirps, samples_per_chirp): slow time
    down the rows, fast time along the columns.  Samples beyond the chirp
    train are ignored.
    """
    n_c = fmcw.samples_per_chirp(received.sample_rate)
    total = n_c * fmcw.n_chirps
    if len(received) < total:
        raise ConfigurationError(
            f"need {total} samples for {fmcw.n_chirps} chirps, got {len(received)}"
        )
    ref = reference_chirp(fmcw, received.sample_rate)
    blocks = received.samples[:total].reshape(fmcw.n_chirps, n_c)
    return blocks * np.conj(ref)[None, :]


@dataclass
class RangeDopplerMap:
    """Periodogram over (doppler bin m, range bin n) with its calibration."""

    power: np.ndarray  # (K, N_c) non-negative
    chirp_duration_s: float
    sweep_hz: float

    @property
    def n_doppler(self) -> int:
        return self.power.shape[0]

    @property
    def n_range(self) -> int:
        return self.power.shape[1]

    def delay_of_bin(self, n: int) -> float:
        """Seconds per range bin is 1 / beta."""
        return n / self.sweep_hz

    def doppler_of_bin(self, m: int) -> float:
        """Hz per Doppler bin is 1 / (K tau); upper half wraps negative."""
        k = self.n_doppler
        signed = m - k if m > k // 2 else m
        return signed / (k * self.chirp_duration_s)

    def to_csv(self, path: str | Path) -> None:
        """Rows (doppler_bin, range_bin, power_db), gnuplot-friendly."""
        floor = self.power.max() * 1e-30 + 1e-300
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["doppler_bin", "range_bin", "power_db"])
            for m in range(self.n_doppler):
                for n in range(self.n_range):
                    db = 10.0 * math.log10(max(self.power[m, n], floor))
                    writer.writerow([m, n, f"{db:.6f}"])


def periodogram(cpi: np.ndarray, fmcw: FmcwParams) -> RangeDopplerMap:
    """2-D power spectrum of the CPI matrix, normalized by K * N_c.

    Doppler uses the forward DFT along slow time, range the conjugate kernel
    along fast time so that positive delays land on positive range bins
    (a delayed chirp dechirps to a negative beat frequency).
    """
    cpi = np.asarray(cpi, dtype=np.complex128)
    k, n_c = cpi.shape
    spec = np.fft.fft(cpi, axis=0)
    spec = np.fft.ifft(spec, axis=1) * n_c
    power = np.abs(spec) ** 2 / (k * n_c)
    return RangeDopplerMap(
        power=power, chirp_duration_s=fmcw.chirp_duration_s, sweep_hz=fmcw.sweep_hz
    )


@dataclass
class TargetEstimate:
    """One detected scatterer in radar coordinates plus its fitted gain."""

    range_bin: int
    doppler_bin: int  # signed
    delay_s: float
    doppler_hz: float
    peak_power: float
    gain: complex | None = None

    def delay_samples(self, sample_rate: float) -> int:
        return int(round(self.delay_s * sample_rate))


def extract_targets(
    rd_map: RangeDopplerMap,
    max_targets: int | None = None,
    threshold_db: float = 12.0,
    guard: int = 1,
) -> list[TargetEstimate]:
    """Greedy peak extraction from the range-Doppler map.

    Repeatedly takes the strongest remaining cell, then blanks a guard
    neighbourhood of ``guard`` bins around it (wrapping at the edges).
    Stops at ``max_targets`` when given, and always when the next peak drops
    below median power plus ``threshold_db``.
    """
    work = rd_map.power.copy()
    median = float(np.median(work))
    floor = median * 10.0 ** (threshold_db / 10.0)
    found: list[TargetEstimate] = []
    k, n_c = work.shape
    while max_targets is None or len(found) < max_targets:
        flat = int(np.argmax(work))
        m, n = divmod(flat, n_c)
        peak = work[m, n]
        if peak <= floor or not np.isfinite(peak):
            break
        found.append(
            TargetEstimate(
                range_bin=n,
                doppler_bin=(m - k if m > k // 2 else m),
                delay_s=rd_map.delay_of_bin(n),
                doppler_hz=rd_map.doppler_of_bin(m),
                peak_power=float(peak),
            )
        )
        for dm in range(-guard, guard + 1):
            for dn in range(-guard, guard + 1):
                work[(m + dm) % k, (n + dn) % n_c] = -np.inf
        if len(found) >= k * n_c:
            break
    return found


def estimate_gains(
    received: ComplexSignal,
    targets: list[TargetEstimate],
    fmcw: FmcwParams,
    n_bar: int | None = None,
) -> list[TargetEstimate]:
    """Least-squares complex gains from the interference-free first chirp.

    Solves y[n_bar:N_c] ~ B h where column p of B is the transmitted chirp
    shifted by target p's delay.  Starting the window at ``n_bar`` (default
    N_c/4) keeps every shifted chirp fully inside it for delays up to n_bar
    samples, at the cost of maximum fittable range.  Doppler rotation over
    the window is not modelled; it is absorbed into the gain phase.
    """
    if not targets:
        return []
    n_c = fmcw.samples_per_chirp(received.sample_rate)
    if n_bar is None:
        n_bar = n_c // 4
    if not 0 <= n_bar < n_c:
        raise ConfigurationError(f"window offset {n_bar} outside chirp of {n_c} samples")
    delays = [t.delay_samples(received.sample_rate) for t in targets]
    if len(set(delays)) != len(delays):
        raise SimulationError(f"duplicate target delays {delays}: gain fit is rank deficient")
    ref = reference_chirp(fmcw, received.sample_rate) * math.sqrt(fmcw.power)
    window = np.arange(n_bar, n_c)
    basis = np.zeros((window.size, len(targets)), dtype=np.complex128)
    for p, d in enumerate(delays):
        src = window - d
        valid = (src >= 0) & (src < n_c)
        basis[valid, p] = ref[src[valid]]
    y = received.samples[window]
    gains, _, rank, _ = np.linalg.lstsq(basis, y, rcond=None)
    if rank < len(targets):
        raise SimulationError(f"gain fit rank {rank} < {len(targets)} targets")
    return [replace(t, gain=complex(g)) for t, g in zip(targets, gains)]


@dataclass
class ChannelMatrixEstimate:
    """Sparse LTV channel: per-path sample delay, Doppler and complex gain.

    Materializes the banded per-symbol channel matrix on demand; ``apply``
    runs the same channel over an arbitrary signal with an absolute sample
    offset so Doppler phase stays coherent across a whole frame.
    """

    delays_samples: np.ndarray
    dopplers_hz: np.ndarray
    gains: np.ndarray
    sample_rate: float

    @property
    def n_paths(self) -> int:
        return self.delays_samples.size

    def apply(self, x: np.ndarray, offset: int = 0) -> np.ndarray:
        """y[n] = sum_p g_p x[n - d_p] exp(2j pi (offset + n) psi_p / F_s)."""
        x = np.asarray(x, dtype=np.complex128)
        n = np.arange(x.size) + offset
        y = np.zeros_like(x)
        for d, psi, g in zip(self.delays_samples, self.dopplers_hz, self.gains):
            if d >= x.size:
                continue
            shifted = np.zeros_like(x)
            shifted[d:] = x[: x.size - d]
            y += g * shifted * np.exp(2j * np.pi * n * psi / self.sample_rate)
        return y

    def symbol_matrix(self, length: int, offset: int = 0) -> np.ndarray:
        """Dense banded matrix H with H[n, n - d_p] = g_p exp(2j pi (offset+n) psi_p / F_s)."""
        h = np.zeros((length, length), dtype=np.complex128)
        n = np.arange(length)
        for d, psi, g in zip(self.delays_samples, self.dopplers_hz, self.gains):
            rows = n[n >= d]
            phase = np.exp(2j * np.pi * (offset + rows) * psi / self.sample_rate)
            h[rows, rows - d] += g * phase
        return h


def reconstruct_channel(
    targets: list[TargetEstimate], sample_rate: float
) -> ChannelMatrixEstimate:
    """Assemble the sparse channel estimate from gain-fitted targets."""
    missing = [t for t in targets if t.gain is None]
    if missing:
        raise ConfigurationError("all targets need fitted gains; run estimate_gains first")
    return ChannelMatrixEstimate(
        delays_samples=np.array([t.delay_samples(sample_rate) for t in targets], np.int64),
        dopplers_hz=np.array([t.doppler_hz for t in targets], np.float64),
        gains=np.array([t.gain for t in targets], np.complex128),
        sample_rate=sample_rate,
    )


def cancel_fmcw(
    received: np.ndarray, estimate: ChannelMatrixEstimate, fmcw_signal: np.ndarray
) -> np.ndarray:
    """Subtract the estimated channel's response to the known chirp train."""
    received = np.asarray(received, dtype=np.complex128)
    fmcw_signal = np.asarray(fmcw_signal, dtype=np.complex128)
    if received.size != fmcw_signal.size:
        raise ConfigurationError(
            f"length mismatch: received {received.size}, chirp train {fmcw_signal.size}"
        )
    return received - estimate.apply(fmcw_signal, offset=0)


def _cp_unwrap_columns(ofdm: OfdmParams, delay: int) -> np.ndarray:
    """Column index hit by body row i for a path of ``delay`` samples.

    Row i of the CP-removed symbol reads transmitted sample cp_len + i - delay,
    which the CP maps back into the body circularly; -1 marks rows that would
    reach past the start of the symbol (only possible when delay > cp_len).
    """
    i = np.arange(ofdm.n_fft)
    src = ofdm.cp_len + i - delay
    cols = np.where(src >= ofdm.cp_len, src - ofdm.cp_len, ofdm.n_fft - ofdm.cp_len + src)
    cols = np.where(src < 0, -1, cols)
    return cols


def ofdm_channel_matrix(
    estimate: ChannelMatrixEstimate, ofdm: OfdmParams, offset: int
) -> np.ndarray:
    """DFT-domain channel matrix Theta of one OFDM symbol at sample ``offset``.

    Theta = F B H A F^H with F the unitary DFT, A the CP-add and B the
    CP-removal maps, H the banded time-domain matrix of this symbol.  For a
    static channel with all delays inside the CP, Theta is diagonal and its
    diagonal equals the taps' frequency response; Doppler spreads energy off
    the diagonal (inter-carrier interference).
    """
    n = ofdm.n_fft
    theta = np.zeros((n, n), dtype=np.complex128)
    body_abs = offset + ofdm.cp_len + np.arange(n)  # absolute index of each body sample
    for d, psi, g in zip(estimate.delays_samples, estimate.dopplers_hz, estimate.gains):
        cols = _cp_unwrap_columns(ofdm, int(d))
        rows = np.nonzero(cols >= 0)[0]
        c = np.zeros((n, n), dtype=np.complex128)
        c[rows, cols[rows]] = g * np.exp(
            2j * np.pi * body_abs[rows] * psi / estimate.sample_rate
        )
        theta += c
    theta = np.fft.fft(theta, axis=0, norm="ortho")
    theta = np.fft.ifft(theta, axis=1, norm="ortho")
    return theta


def ofdm_effective_channel(
    estimate: ChannelMatrixEstimate,
    ofdm: OfdmParams,
    frame_offset: int,
    n_symbols: int,
) -> np.ndarray:
    """Per-subcarrier channel coefficients for a run of CP-OFDM symbols.

    Returns the diagonal of each symbol's DFT-domain channel matrix,
    restricted to the allocated bins, shape (n_symbols, n_alloc).
    ``frame_offset`` is the absolute frame index of the first sample so
    Doppler phase stays coherent with the rest of the frame.

    The per-target matrices are computed once at the frame origin and
    rephased per symbol, which is exact because a symbol's offset only
    multiplies each target's matrix by a scalar.
    """
    bins = ofdm.allocated_bins()
    per_target_diag = np.zeros((estimate.n_paths, bins.size), dtype=np.complex128)
    for p in range(estimate.n_paths):
        single = ChannelMatrixEstimate(
            delays_samples=estimate.delays_samples[p : p + 1],
            dopplers_hz=estimate.dopplers_hz[p : p + 1],
            gains=np.ones(1, dtype=np.complex128),
            sample_rate=estimate.sample_rate,
        )
        per_target_diag[p] = np.diagonal(ofdm_channel_matrix(single, ofdm, offset=0))[bins]
    sym_offsets = frame_offset + np.arange(n_symbols) * ofdm.symbol_len
    rephase = estimate.gains[None, :] * np.exp(
        2j * np.pi * sym_offsets[:, None] * estimate.dopplers_hz[None, :] / estimate.sample_rate
    )
    return rephase @ per_target_diag


def equalize_ofdm(
    ofdm_samples: np.ndarray,
    estimate: ChannelMatrixEstimate,
    ofdm: OfdmParams,
    frame_offset: int,
    power: float = 1.0,
    erasure_tol: float = 1e-12,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-subcarrier equalization of serialized CP-OFDM symbols.

    Returns the equalized grid (n_symbols, n_alloc) in constellation units
    and a boolean erasure mask marking subcarriers whose channel coefficient
    magnitude falls below ``erasure_tol``.
    """
    samples = np.asarray(ofdm_samples, dtype=np.complex128)
    sym_len = ofdm.symbol_len
    if samples.size % sym_len != 0:
        raise ConfigurationError(
            f"sample count {samples.size} is not a whole number of {sym_len}-sample symbols"
        )
    n_sym = samples.size // sym_len
    bins = ofdm.allocated_bins()
    scale = ofdm.amplitude_scale(power)
    theta = ofdm_effective_channel(estimate, ofdm, frame_offset, n_sym)
    blocks = samples.reshape(n_sym, sym_len)[:, ofdm.cp_len :]
    z = np.fft.fft(blocks, axis=1, norm="ortho")[:, bins]
    erased = np.abs(theta) < erasure_tol
    safe = np.where(erased, 1.0, theta)
    grid = np.where(erased, 0.0, np.conj(safe) * z / np.abs(safe) ** 2 / scale)
    return grid, erased


def delay_doppler_to_physical(
    delay_s: float, doppler_hz: float, carrier_hz: float
) -> tuple[float, float]:
    """Map radar coordinates to range and radial velocity.

    Uses the one-way convention range = c * delay (delay measured as direct
    propagation time) and velocity = c * doppler / f_c.
    """
    return SPEED_OF_LIGHT * delay_s, SPEED_OF_LIGHT * doppler_hz / carrier_hz
