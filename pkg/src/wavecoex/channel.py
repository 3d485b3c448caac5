"""Multipath fading and linear time-variant channel models.

Two channel views live here.  ``FadingChannel`` is a static tapped delay line
with an exponential power delay profile, used by the frequency-domain NOMA
link model.  ``RadarScene`` is a sparse list of point scatterers with delay,
Doppler and complex gain, applied sample by sample to a time-domain frame.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError

SPEED_OF_LIGHT = 299_792_458.0

__all__ = [
    "SPEED_OF_LIGHT",
    "FadingChannel",
    "PathLossParams",
    "RadarScene",
    "ScenePath",
    "apply_ltv",
    "channel_frequency_response",
    "draw_fading",
    "exponential_pdp",
    "path_loss",
]


@dataclass
class FadingChannel:
    """Static multipath channel given by complex taps on the sample grid."""

    taps: np.ndarray

    def __post_init__(self) -> None:
        self.taps = np.asarray(self.taps, dtype=np.complex128)
        if self.taps.ndim != 1 or self.taps.size == 0:
            raise ConfigurationError("taps must be a non-empty 1-D array")

    @property
    def n_taps(self) -> int:
        return self.taps.size


def exponential_pdp(n_taps: int, decay: float = 1.0) -> np.ndarray:
    """Tap powers eta * exp(-decay * l) normalized so they sum to one."""
    if n_taps < 1:
        raise ConfigurationError(f"n_taps must be >= 1, got {n_taps}")
    profile = np.exp(-decay * np.arange(n_taps))
    return profile / profile.sum()


def draw_fading(n_taps: int, rng: np.random.Generator, decay: float = 1.0) -> FadingChannel:
    """Draw Rayleigh taps h_l ~ CN(0, p_l) with an exponential profile p_l.

    Total average power sums to one, so the channel neither amplifies nor
    attenuates on average.
    """
    pdp = exponential_pdp(n_taps, decay)
    std = np.sqrt(pdp / 2.0)
    taps = rng.normal(0.0, std) + 1j * rng.normal(0.0, std)
    return FadingChannel(taps=taps)


def channel_frequency_response(channel: FadingChannel, n_fft: int) -> np.ndarray:
    """Per-subcarrier gains: the (non-unitary) N-point DFT of the zero-padded taps.

    A single unit tap gives an all-ones response; a pure one-sample delay
    gives exp(-2j*pi*n/N).
    """
    if channel.n_taps > n_fft:
        raise ConfigurationError(f"{channel.n_taps} taps exceed FFT size {n_fft}")
    return np.fft.fft(channel.taps, n=n_fft)


@dataclass
class ScenePath:
    """One point scatterer: integer sample delay, Doppler in Hz, complex gain."""

    delay_samples: int
    doppler_hz: float
    gain: complex


@dataclass
class RadarScene:
    """Sparse set of propagation paths used by the time-variant channel.

    Delays are stored on the receiver sample grid (rounded when built from
    seconds).  Gains fold antenna/path-loss scaling and all static phase terms
    into a single complex number per path.
    """

    paths: list[ScenePath] = field(default_factory=list)

    @property
    def n_paths(self) -> int:
        return len(self.paths)

    def delays(self) -> np.ndarray:
        return np.array([p.delay_samples for p in self.paths], dtype=np.int64)

    def dopplers(self) -> np.ndarray:
        return np.array([p.doppler_hz for p in self.paths], dtype=np.float64)

    def gains(self) -> np.ndarray:
        return np.array([p.gain for p in self.paths], dtype=np.complex128)


def scene_from_spec(
    entries: list[dict],
    sample_rate: float,
    carrier_hz: float,
    rng: np.random.Generator | None = None,
    pdp_decay: float = 1.0,
) -> RadarScene:
    """Build a scene from plain dict entries.

    Each entry gives a delay (``delay_s`` seconds or ``range_m`` one-way
    metres with delay = range / c), a Doppler (``doppler_hz`` or
    ``velocity_mps`` with doppler = f_c * v / c) and a ``gain`` that is either
    a number, a [re, im] pair, or the string ``"rayleigh"``.  Rayleigh gains
    are drawn CN(0, p_i) with exponential profile p_i over the entry order and
    a uniform random phase folded in, which needs ``rng``.
    """
    paths: list[ScenePath] = []
    pdp = exponential_pdp(len(entries), pdp_decay) if entries else np.array([])
    for i, entry in enumerate(entries):
        if "delay_s" in entry:
            delay_s = float(entry["delay_s"])
        elif "range_m" in entry:
            delay_s = float(entry["range_m"]) / SPEED_OF_LIGHT
        else:
            raise ConfigurationError(f"scene entry {i} has neither delay_s nor range_m")
        if delay_s < 0:
            raise ConfigurationError(f"scene entry {i} has negative delay")
        if "doppler_hz" in entry:
            doppler = float(entry["doppler_hz"])
        elif "velocity_mps" in entry:
            doppler = carrier_hz * float(entry["velocity_mps"]) / SPEED_OF_LIGHT
        else:
            raise ConfigurationError(f"scene entry {i} has neither doppler_hz nor velocity_mps")
        gain_spec = entry.get("gain", "rayleigh")
        if isinstance(gain_spec, str):
            if gain_spec != "rayleigh":
                raise ConfigurationError(f"unknown gain spec {gain_spec!r} in scene entry {i}")
            if rng is None:
                raise ConfigurationError("rayleigh gains require an rng")
            std = np.sqrt(pdp[i] / 2.0)
            gain = complex(rng.normal(0.0, std) + 1j * rng.normal(0.0, std))
        elif isinstance(gain_spec, (list, tuple)):
            gain = complex(float(gain_spec[0]), float(gain_spec[1]))
        else:
            gain = complex(gain_spec)
        paths.append(
            ScenePath(
                delay_samples=int(round(delay_s * sample_rate)),
                doppler_hz=doppler,
                gain=gain,
            )
        )
    return RadarScene(paths=paths)


def load_scene(
    path: str | Path,
    sample_rate: float,
    carrier_hz: float,
    rng: np.random.Generator | None = None,
) -> RadarScene:
    """Load a scene description from a JSON file.

    Expected shape: ``{"targets": [{...}, ...]}`` with entries as accepted by
    :func:`scene_from_spec`; a top-level list of entries also works.
    """
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read scene file {path}: {exc}") from exc
    entries = raw["targets"] if isinstance(raw, dict) else raw
    if not isinstance(entries, list):
        raise ConfigurationError(f"scene file {path} must hold a target list")
    pdp_decay = raw.get("pdp_decay", 1.0) if isinstance(raw, dict) else 1.0
    return scene_from_spec(entries, sample_rate, carrier_hz, rng=rng, pdp_decay=pdp_decay)


def apply_ltv(scene: RadarScene, x: np.ndarray, sample_rate: float) -> np.ndarray:
    """Pass samples through the linear time-variant channel.

    y[n] = sum_p g_p * x[n - d_p] * exp(2j*pi*n*psi_p / F_s), with x taken as
    zero outside its support.  The Doppler phase ramp uses the absolute output
    sample index n, so concatenated blocks stay phase coherent.
    """
    x = np.asarray(x, dtype=np.complex128)
    n = np.arange(x.size)
    y = np.zeros_like(x)
    for p in scene.paths:
        if p.delay_samples >= x.size:
            continue
        shifted = np.zeros_like(x)
        if p.delay_samples == 0:
            shifted[:] = x
        else:
            shifted[p.delay_samples :] = x[: x.size - p.delay_samples]
        y += p.gain * shifted * np.exp(2j * np.pi * n * p.doppler_hz / sample_rate)
    return y


@dataclass(frozen=True)
class PathLossParams:
    """Antenna gains, carrier and exponent for the large-scale loss model."""

    tx_gain: float
    rx_gain: float
    carrier_hz: float
    exponent: float = 2.0


def path_loss(params: PathLossParams, distance_m: float) -> float:
    """Power gain G = Gt * Gr * lambda^2 / ((4 pi)^2 * d^PL)."""
    if distance_m <= 0:
        raise ConfigurationError(f"distance must be positive, got {distance_m}")
    wavelength = SPEED_OF_LIGHT / params.carrier_hz
    return (
        params.tx_gain
        * params.rx_gain
        * wavelength**2
        / ((4.0 * np.pi) ** 2 * distance_m**params.exponent)
    )
