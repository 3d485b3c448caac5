"""Result records, Wilson intervals, deterministic CSV/JSON output.

Output files never embed timestamps or machine state: rerunning a scenario
with the same config and seed must produce byte-identical artifacts.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "MetricRecord",
    "required_snr_db",
    "wilson_interval",
    "write_records",
]


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion.

    Well behaved at 0 and n, unlike the normal approximation, which matters
    for error rates that hit zero observed events at high SNR.
    """
    if trials <= 0:
        return (0.0, 1.0)
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    p = successes / trials
    denom = 1.0 + z * z / trials
    centre = p + z * z / (2 * trials)
    spread = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials))
    return (max(0.0, (centre - spread) / denom), min(1.0, (centre + spread) / denom))


@dataclass(frozen=True)
class MetricRecord:
    """One scalar result at one grid point."""

    metric: str
    value: float
    trials: int
    coords: dict = field(default_factory=dict)
    ci_lo: float = 0.0
    ci_hi: float = 1.0

    @classmethod
    def from_counts(cls, metric: str, errors: int, trials: int, coords: dict) -> "MetricRecord":
        lo, hi = wilson_interval(errors, trials)
        value = errors / trials if trials else 0.0
        return cls(metric=metric, value=value, trials=trials, coords=dict(coords), ci_lo=lo, ci_hi=hi)

    @property
    def ci_halfwidth(self) -> float:
        return max(self.value - self.ci_lo, self.ci_hi - self.value)


def _fmt(x) -> str:
    if isinstance(x, float):
        if x == int(x) and abs(x) < 1e15:
            return str(int(x))
        return format(x, ".10g")
    return str(x)


def write_records(out_csv: Path, records: list[MetricRecord], config_dict: dict, config_hash: str) -> Path:
    """Write records as CSV plus a JSON sidecar carrying the resolved config.

    Column order is fixed by sorting coordinate names so identical runs
    serialize identically byte for byte.
    """
    out_csv = Path(out_csv)
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    coord_keys = sorted({k for r in records for k in r.coords})
    header = coord_keys + ["metric", "value", "trials", "ci_lo", "ci_hi"]
    with out_csv.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for r in records:
            row = [_fmt(r.coords.get(k, "")) for k in coord_keys]
            row += [r.metric, _fmt(float(r.value)), str(r.trials), _fmt(float(r.ci_lo)), _fmt(float(r.ci_hi))]
            writer.writerow(row)
    sidecar = {
        "config": config_dict,
        "config_sha256": config_hash,
        "records_file": out_csv.name,
        "n_records": len(records),
    }
    out_csv.with_suffix(".json").write_text(json.dumps(sidecar, sort_keys=True, indent=2) + "\n")
    return out_csv


def required_snr_db(snr_db, error_rate, target: float) -> tuple[float, bool]:
    """SNR where the error-rate curve first crosses ``target``.

    Interpolates linearly in (SNR, log10 rate) after forcing the curve onto
    its non-increasing envelope, which guards against Monte Carlo wiggle.
    Returns ``(snr, censored)``; censored means the curve never reached the
    target inside the sweep and the last SNR is reported as a lower bound.
    """
    snr = np.asarray(snr_db, dtype=float)
    rate = np.asarray(error_rate, dtype=float)
    if snr.shape != rate.shape or snr.ndim != 1 or snr.size == 0:
        raise ValueError("snr_db and error_rate must be equal-length 1-d arrays")
    order = np.argsort(snr)
    snr, rate = snr[order], rate[order]
    rate = np.minimum.accumulate(np.maximum(rate, 1e-12))
    if rate[0] <= target:
        return float(snr[0]), False
    below = np.nonzero(rate <= target)[0]
    if below.size == 0:
        return float(snr[-1]), True
    j = below[0]
    l0, l1 = math.log10(rate[j - 1]), math.log10(rate[j])
    t = (math.log10(target) - l0) / (l1 - l0)
    return float(snr[j - 1] + t * (snr[j] - snr[j - 1])), False
