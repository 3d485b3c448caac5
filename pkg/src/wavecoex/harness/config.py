"""Experiment configuration: dataclass defaults, JSON loading, CLI overrides.

Two parameter scales are built in.  The desk scale keeps every scenario
runnable in minutes on one core (512-bin FFT, 64 chirps).  ``full_scale=True``
switches to the wideband numerology (2048-bin FFT at 122.88 MHz, 28 GHz
carrier, 2 ms chirp frame) for overnight runs; results files are tagged with
the resolved configuration either way.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError

__all__ = ["ExperimentConfig", "JrcParams", "NomaParams", "RadarParams", "parse_range"]


@dataclass(frozen=True)
class NomaParams:
    """Downlink NOMA link geometry and receiver policy."""

    n_fft: int = 512
    n_alloc: int = 416
    n_symbols: int = 4  # OFDM symbols per frame; 4 packs 13 codewords exactly
    n_taps: int = 10
    pdp_decay: float = 1.0
    order: int = 4
    im_k: int = 4
    im_m: int = 3
    power_convention: str = "matched"
    scheme: str = "im_ofdm"
    decode_order: str = "auto"
    cancellation: str = "soft"


@dataclass(frozen=True)
class JrcParams:
    """Shared radar/communication frame: chirp train plus delayed OFDM."""

    n_fft: int = 512
    n_alloc: int = 416
    cp_len: int = 64
    subcarrier_spacing_hz: float = 60e3
    carrier_hz: float = 28e9
    sweep_hz: float = 15.36e6
    chirp_samples: int = 256  # tau = chirp_samples / sample_rate
    n_chirps: int = 64
    p_ofdm: float = 1.0
    p_fmcw: float = 1.0
    interleaver_rows: int = 32
    n_bar: int | None = None  # gain-fit window offset; None -> N_c / 4

    @property
    def sample_rate(self) -> float:
        return self.n_fft * self.subcarrier_spacing_hz

    @property
    def chirp_duration_s(self) -> float:
        return self.chirp_samples / self.sample_rate


@dataclass(frozen=True)
class RadarParams:
    """Scene and detection settings for the range-Doppler scenario."""

    scene_file: str | None = None
    scene: tuple = (
        {"delay_s": 8 / 30.72e6, "doppler_hz": 3750.0, "gain": "rayleigh"},
        {"delay_s": 20 / 30.72e6, "doppler_hz": -5625.0, "gain": "rayleigh"},
        {"delay_s": 36 / 30.72e6, "doppler_hz": 1875.0, "gain": "rayleigh"},
    )
    pdp_decay: float = 1.0
    threshold_db: float = 12.0
    guard_bins: int = 1


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a scenario run needs, resolvable to a hashable dict."""

    scenario: str = "noma-bler"
    seed: int = 1
    trials: int = 2000
    snr_db: tuple = tuple(float(x) for x in np.arange(0.0, 25.0, 2.0))
    delta_p_db: tuple = (-6.0, 0.0, 6.0)
    rate_channel_draws: int = 200
    jrc_frames_per_point: int = 10
    full_scale: bool = False
    out_dir: str = "results"
    emit_plots: bool = False
    noma: NomaParams = field(default_factory=NomaParams)
    jrc: JrcParams = field(default_factory=JrcParams)
    radar: RadarParams = field(default_factory=RadarParams)

    def resolved_dict(self) -> dict:
        """Result-affecting fields only; where outputs land is not hashed."""
        d = asdict(self)
        del d["out_dir"]
        del d["emit_plots"]
        d["snr_db"] = [float(x) for x in self.snr_db]
        d["delta_p_db"] = [float(x) for x in self.delta_p_db]
        d["radar"]["scene"] = [dict(e) for e in self.radar.scene]
        return d

    def config_hash(self) -> str:
        canonical = json.dumps(self.resolved_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()


_FULL_SCALE_NOMA = dict(n_fft=2048, n_alloc=1664, n_symbols=1)
_FULL_SCALE_JRC = dict(
    n_fft=2048,
    n_alloc=1666,
    cp_len=160,
    subcarrier_spacing_hz=60e3,
    sweep_hz=100e6,
    chirp_samples=294,  # floor(2.4 us * 122.88 MHz)
    n_chirps=833,  # 2 ms frame of 2.4 us chirps
)


def apply_full_scale(cfg: ExperimentConfig) -> ExperimentConfig:
    """Swap in the wideband numerology, keeping subcarrier-count divisibility."""
    noma = replace(cfg.noma, **_FULL_SCALE_NOMA)
    jrc = replace(cfg.jrc, **_FULL_SCALE_JRC)
    return replace(cfg, noma=noma, jrc=jrc, full_scale=True)


def parse_range(spec: str) -> tuple:
    """Parse "start:stop:step" (inclusive stop) or a comma list into floats."""
    try:
        if ":" in spec:
            parts = [float(x) for x in spec.split(":")]
            if len(parts) == 2:
                start, stop, step = parts[0], parts[1], 1.0
            elif len(parts) == 3:
                start, stop, step = parts
            else:
                raise ValueError("expected start:stop[:step]")
            if step <= 0:
                raise ValueError("step must be positive")
            return tuple(float(x) for x in np.arange(start, stop + step / 2, step))
        return tuple(float(x) for x in spec.split(","))
    except ValueError as exc:
        raise ConfigurationError(f"bad range {spec!r}: {exc}") from exc


def _merge_section(cls, defaults, data: dict):
    unknown = set(data) - set(defaults.__dataclass_fields__)
    if unknown:
        raise ConfigurationError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    if "scene" in data:
        data = dict(data)
        data["scene"] = tuple(data["scene"])
    return replace(defaults, **data)


def load_config(path: str | Path | None, overrides: dict | None = None) -> ExperimentConfig:
    """Build a config from an optional JSON file plus CLI overrides.

    The JSON mirrors the dataclass layout: scalar fields at top level plus
    optional "noma" / "jrc" / "radar" sections.  Overrides win over the file,
    the file over defaults.  ``full_scale`` is applied last so its numerology
    replaces whatever the file set unless the file itself customized it.
    """
    cfg = ExperimentConfig()
    data: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigurationError(f"config {path} must hold a JSON object")
    merged = dict(data)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key in ("noma", "jrc", "radar"):
            section = dict(merged.get(key, {}))
            section.update(value)
            merged[key] = section
        else:
            merged[key] = value

    sections = {}
    for name, cls in (("noma", NomaParams), ("jrc", JrcParams), ("radar", RadarParams)):
        if name in merged:
            sections[name] = _merge_section(cls, getattr(cfg, name), merged.pop(name))
    scalar_fields = set(ExperimentConfig.__dataclass_fields__) - {"noma", "jrc", "radar"}
    unknown = set(merged) - scalar_fields
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    for key in ("snr_db", "delta_p_db"):
        if key in merged and isinstance(merged[key], str):
            merged[key] = parse_range(merged[key])
        elif key in merged:
            merged[key] = tuple(float(x) for x in merged[key])
    cfg = replace(cfg, **sections, **merged)
    if cfg.full_scale:
        cfg = apply_full_scale(cfg)
    return cfg
