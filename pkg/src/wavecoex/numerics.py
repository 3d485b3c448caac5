"""Deterministic numeric kernels: transforms, constellations, noise, seeding.

Every stochastic routine takes an explicit ``numpy.random.Generator`` so that
experiment results are reproducible down to the sample.  ``SeededRng`` wraps a
counter-based Philox stream and hands out independent substreams addressed by
an integer path, which keeps Monte Carlo trials independent of execution
order and worker count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "ComplexSignal",
    "QamConstellation",
    "SeededRng",
    "awgn",
    "dft",
    "idft",
    "qam_constellation",
    "qam_demap_hard",
    "qam_map",
]


@dataclass
class ComplexSignal:
    """Complex baseband samples tagged with their sample rate in Hz."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.complex128)
        if self.sample_rate <= 0:
            raise ConfigurationError(f"sample_rate must be positive, got {self.sample_rate}")

    def __len__(self) -> int:
        return self.samples.shape[-1]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    def power(self) -> float:
        """Mean squared magnitude over all samples."""
        return float(np.mean(np.abs(self.samples) ** 2))


def dft(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Unitary DFT (1/sqrt(N) normalization), so energy is preserved."""
    return np.fft.fft(x, axis=axis, norm="ortho")


def idft(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Unitary inverse DFT, exact inverse of :func:`dft`."""
    return np.fft.ifft(x, axis=axis, norm="ortho")


def _gray_pam_levels(bits_per_axis: int) -> np.ndarray:
    """Amplitude levels for one axis indexed by the Gray-coded bit group.

    Levels run from +(L-1) down to -(L-1) in steps of 2 and are assigned along
    the binary-reflected Gray sequence, so bit groups that differ in one bit
    sit on adjacent levels and the all-zeros group takes the largest positive
    level.
    """
    n_levels = 1 << bits_per_axis
    desc = np.arange(n_levels - 1, -n_levels, -2, dtype=np.float64)
    out = np.empty(n_levels)
    for seq_pos in range(n_levels):
        gray_word = seq_pos ^ (seq_pos >> 1)
        out[gray_word] = desc[seq_pos]
    return out


@dataclass(frozen=True)
class QamConstellation:
    """Square Gray-labelled QAM with unit average symbol energy.

    ``points[label]`` is the complex symbol for the integer whose binary
    expansion (MSB first) is the bit label.  The first half of the bits picks
    the imaginary axis level and the second half the real axis level; with one
    bit per axis this reduces to the fixed QPSK map
    00 -> (+1+j)/sqrt(2), 01 -> (-1+j)/sqrt(2), 11 -> (-1-j)/sqrt(2),
    10 -> (+1-j)/sqrt(2).
    """

    order: int
    points: np.ndarray = field(repr=False)

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.order))

    def bits_of(self, label: int) -> np.ndarray:
        """Bit vector (MSB first) of an integer label."""
        b = self.bits_per_symbol
        return np.array([(label >> (b - 1 - i)) & 1 for i in range(b)], dtype=np.uint8)

    def labels_with_bit(self, bit_index: int, value: int) -> np.ndarray:
        """All labels whose ``bit_index``-th bit (MSB first) equals ``value``."""
        b = self.bits_per_symbol
        labels = np.arange(self.order)
        return labels[((labels >> (b - 1 - bit_index)) & 1) == value]


def qam_constellation(order: int) -> QamConstellation:
    """Build the unit-energy Gray-mapped constellation for ``order`` in {4, 16, 64}."""
    if order < 4 or (order & (order - 1)) != 0 or int(np.log2(order)) % 2 != 0:
        raise ConfigurationError(f"QAM order must be an even power of two >= 4, got {order}")
    bits_per_axis = int(np.log2(order)) // 2
    levels = _gray_pam_levels(bits_per_axis)
    n_axis = 1 << bits_per_axis
    labels = np.arange(order)
    imag_group = labels >> bits_per_axis
    real_group = labels & (n_axis - 1)
    points = levels[real_group] + 1j * levels[imag_group]
    scale = np.sqrt(np.mean(np.abs(points) ** 2))
    return QamConstellation(order=order, points=points / scale)


def qam_map(bits: np.ndarray, constellation: QamConstellation) -> np.ndarray:
    """Map a bit array (length divisible by bits/symbol) to symbols, MSB first."""
    bits = np.asarray(bits, dtype=np.uint8)
    b = constellation.bits_per_symbol
    if bits.size % b != 0:
        raise ConfigurationError(f"bit count {bits.size} not divisible by {b}")
    groups = bits.reshape(-1, b)
    weights = 1 << np.arange(b - 1, -1, -1)
    labels = groups @ weights
    return constellation.points[labels]


def qam_demap_hard(symbols: np.ndarray, constellation: QamConstellation) -> np.ndarray:
    """Nearest-neighbour hard demap back to a flat bit array."""
    symbols = np.asarray(symbols).ravel()
    d = np.abs(symbols[:, None] - constellation.points[None, :])
    labels = np.argmin(d, axis=1)
    b = constellation.bits_per_symbol
    shifts = np.arange(b - 1, -1, -1)
    return ((labels[:, None] >> shifts[None, :]) & 1).astype(np.uint8).ravel()


def awgn(shape, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    """Circularly symmetric complex Gaussian noise with total variance ``sigma2``.

    Each real dimension carries ``sigma2 / 2``, so E[|w|^2] = sigma2.
    """
    if sigma2 < 0:
        raise ConfigurationError(f"noise variance must be non-negative, got {sigma2}")
    if sigma2 == 0:
        return np.zeros(shape, dtype=np.complex128)
    std = np.sqrt(sigma2 / 2.0)
    return rng.normal(0.0, std, shape) + 1j * rng.normal(0.0, std, shape)


@dataclass(frozen=True)
class SeededRng:
    """Root seed that derives independent Philox substreams per trial.

    ``substream(i, j, ...)`` keys a fresh counter-based generator off the path
    integers, so trial ``i`` sees the same draws no matter how trials are
    batched or distributed.
    """

    seed: int

    def substream(self, *path: int) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=tuple(int(p) for p in path))
        return np.random.Generator(np.random.Philox(ss))

    def root(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=self.seed)))
