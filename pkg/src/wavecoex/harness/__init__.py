from .config import ExperimentConfig, JrcParams, NomaParams, RadarParams, load_config, parse_range
from .metrics import MetricRecord, required_snr_db, wilson_interval, write_records
from .runners import (
    RunResult,
    required_snr_records,
    run_jrc_ber,
    run_noma_bler,
    run_radar_rd,
    run_rates,
)

__all__ = [
    "ExperimentConfig",
    "JrcParams",
    "MetricRecord",
    "NomaParams",
    "RadarParams",
    "RunResult",
    "load_config",
    "parse_range",
    "required_snr_db",
    "required_snr_records",
    "run_jrc_ber",
    "run_noma_bler",
    "run_radar_rd",
    "run_rates",
    "wilson_interval",
    "write_records",
]
