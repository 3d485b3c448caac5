"""Command line front end: `sim <scenario> [options]`.

Exit codes: 0 on success, 2 on configuration errors (bad flags, malformed
config or scene files, inconsistent geometry), 3 on numerical failures
during a run.  Results land in ``--out`` as CSV plus a JSON sidecar with
the resolved config and its hash; identical (config, seed) runs produce
byte-identical files.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError, SimulationError
from ..waveforms import write_iq
from .config import ExperimentConfig, load_config, parse_range
from .metrics import write_records
from .runners import (
    RunResult,
    required_snr_records,
    run_jrc_ber,
    run_noma_bler,
    run_radar_rd,
    run_rates,
)

__all__ = ["build_parser", "main"]

_SCHEME_ALIASES = {"ofdm": "ofdm_ofdm", "im": "im_ofdm"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sim",
        description="Waveform-domain NOMA and radar/communication coexistence simulator",
    )
    sub = parser.add_subparsers(dest="scenario", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file (documented in the README)")
        p.add_argument("--seed", type=int, help="root seed for all substreams")
        p.add_argument("--trials", type=int, help="Monte Carlo trials per grid point")
        p.add_argument("--out", default="results", help="output directory")
        p.add_argument("--full-scale", action="store_true", help="wideband numerology")
        p.add_argument("--plot", action="store_true", help="also emit SVG plots")

    p = sub.add_parser("noma-bler", help="two-user downlink BLER sweep")
    common(p)
    p.add_argument("--scheme", choices=["ofdm", "im"], help="user-1 waveform")
    p.add_argument("--decode-order", choices=["u1", "u2", "auto"])
    p.add_argument("--cancellation", choices=["soft", "hard", "genie"])
    p.add_argument("--snr-db-range", help="user-1 SNR grid, start:stop:step or comma list")
    p.add_argument("--delta-p-db", help="power offsets p1/p2 in dB, start:stop:step or comma list")

    p = sub.add_parser("radar-rd", help="range-Doppler detection statistics")
    common(p)
    p.add_argument("--scene", help="JSON scene file with a targets list")
    p.add_argument("--snr-db", help="frame SNR values, single number or range")
    p.add_argument("--dump-iq", action="store_true", help="write one received frame as I/Q")

    p = sub.add_parser("jrc-ber", help="coded BER through the shared radar frame")
    common(p)
    p.add_argument("--scene", help="JSON scene file with a targets list")
    p.add_argument("--snr-db-range", help="frame SNR grid, start:stop:step or comma list")
    p.add_argument("--frames", type=int, help="frames per SNR point")

    p = sub.add_parser("rates", help="achievable-rate curves for both schemes")
    common(p)
    p.add_argument("--snr-db-range", help="user-1 SNR grid")
    p.add_argument("--delta-p-db", help="power offsets p1/p2 in dB")
    p.add_argument("--draws", type=int, help="channel realizations per point")
    return parser


def _overrides_from_args(args: argparse.Namespace) -> dict:
    ov: dict = {"scenario": args.scenario, "out_dir": args.out}
    if args.seed is not None:
        ov["seed"] = args.seed
    if args.trials is not None:
        ov["trials"] = args.trials
    if args.full_scale:
        ov["full_scale"] = True
    if args.plot:
        ov["emit_plots"] = True
    noma: dict = {}
    if getattr(args, "scheme", None):
        noma["scheme"] = _SCHEME_ALIASES[args.scheme]
    if getattr(args, "decode_order", None):
        noma["decode_order"] = args.decode_order
    if getattr(args, "cancellation", None):
        noma["cancellation"] = args.cancellation
    if noma:
        ov["noma"] = noma
    if getattr(args, "scene", None):
        ov["radar"] = {"scene_file": args.scene}
    if getattr(args, "snr_db_range", None):
        ov["snr_db"] = parse_range(args.snr_db_range)
    if getattr(args, "snr_db", None):
        ov["snr_db"] = parse_range(args.snr_db)
    if getattr(args, "delta_p_db", None):
        ov["delta_p_db"] = parse_range(args.delta_p_db)
    if getattr(args, "frames", None):
        ov["jrc_frames_per_point"] = args.frames
    if getattr(args, "draws", None):
        ov["rate_channel_draws"] = args.draws
    return ov


_RUNNERS = {
    "noma-bler": run_noma_bler,
    "radar-rd": run_radar_rd,
    "jrc-ber": run_jrc_ber,
    "rates": run_rates,
}


def _emit(cfg: ExperimentConfig, result: RunResult, args: argparse.Namespace) -> None:
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = list(result.records)
    if cfg.scenario == "noma-bler":
        records += required_snr_records(records)
    csv_path = write_records(
        out_dir / f"{cfg.scenario}.csv", records, cfg.resolved_dict(), cfg.config_hash()
    )
    print(f"wrote {len(records)} records to {csv_path}")
    if result.rd_map is not None:
        map_path = out_dir / "rd_map.csv"
        result.rd_map.to_csv(map_path)
        print(f"wrote range-Doppler map to {map_path}")
        if cfg.emit_plots:
            from .plots import plot_rd_map

            plot_rd_map(out_dir / "rd_map.svg", result.rd_map.power)
            print(f"wrote plot to {out_dir / 'rd_map.svg'}")
    if getattr(args, "dump_iq", False) and "first_frame" in result.artifacts:
        iq_path = out_dir / "frame0.iq"
        write_iq(iq_path, result.artifacts["first_frame"], meta={"scenario": cfg.scenario})
        print(f"wrote I/Q dump to {iq_path}")
    if cfg.emit_plots and records:
        from .plots import plot_curves

        log_y = cfg.scenario != "rates"
        plot_curves(out_dir / f"{cfg.scenario}.svg", result.records, log_y=log_y)
        print(f"wrote plot to {out_dir / f'{cfg.scenario}.svg'}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, _overrides_from_args(args))
        result = _RUNNERS[args.scenario](cfg)
        _emit(cfg, result, args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (SimulationError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
