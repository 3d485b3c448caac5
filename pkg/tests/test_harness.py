import hashlib
import json

import numpy as np
import pytest

from wavecoex.errors import ConfigurationError
from wavecoex.harness.cli import main
from wavecoex.harness.config import ExperimentConfig, load_config, parse_range
from wavecoex.harness.metrics import (
    MetricRecord,
    required_snr_db,
    wilson_interval,
    write_records,
)


def test_wilson_interval_known_values():
    lo, hi = wilson_interval(50, 100)
    assert np.isclose(lo, 0.40383, atol=1e-5)
    assert np.isclose(hi, 0.59617, atol=1e-5)
    lo, hi = wilson_interval(0, 100)
    assert lo == 0.0
    assert np.isclose(hi, 0.036996, atol=1e-5)
    lo, hi = wilson_interval(100, 100)
    assert np.isclose(lo, 1.0 - 0.036996, atol=1e-5)
    assert np.isclose(hi, 1.0, atol=1e-12) and hi <= 1.0
    assert wilson_interval(0, 0) == (0.0, 1.0)
    with pytest.raises(ValueError):
        wilson_interval(5, 4)


def test_wilson_interval_shrinks_with_sqrt_trials():
    r100 = MetricRecord.from_counts("e", 30, 100, {})
    r200 = MetricRecord.from_counts("e", 60, 200, {})
    ratio = r200.ci_halfwidth / r100.ci_halfwidth
    assert abs(ratio - 1 / np.sqrt(2)) < 0.2 / np.sqrt(2)


def test_required_snr_interpolates_in_log_rate():
    snr = [0.0, 2.0, 4.0]
    got, censored = required_snr_db(snr, [1e-1, 1e-2, 1e-3], 10**-1.5)
    assert not censored
    assert np.isclose(got, 1.0)


def test_required_snr_censors_unreached_targets():
    got, censored = required_snr_db([0.0, 2.0, 4.0], [0.9, 0.8, 0.7], 1e-2)
    assert censored
    assert got == 4.0


def test_required_snr_uses_monotone_envelope():
    got, censored = required_snr_db([0.0, 2.0, 4.0], [1e-1, 2e-1, 1e-3], 1e-2)
    assert not censored
    assert np.isclose(got, 3.0)


def test_required_snr_edge_cases():
    got, censored = required_snr_db([5.0, 10.0], [1e-3, 1e-4], 1e-2)
    assert (got, censored) == (5.0, False)
    with pytest.raises(ValueError):
        required_snr_db([1.0, 2.0], [0.1], 1e-2)


def test_write_records_is_byte_deterministic(tmp_path):
    cfg = ExperimentConfig()
    records = [
        MetricRecord.from_counts("bler_u1", 3, 100, {"snr_db": 4.0, "scheme": "im_ofdm"}),
        MetricRecord.from_counts("bler_u2", 0, 100, {"snr_db": 4.0, "scheme": "im_ofdm"}),
    ]
    a = write_records(tmp_path / "a.csv", records, cfg.resolved_dict(), cfg.config_hash())
    b = write_records(tmp_path / "b.csv", records, cfg.resolved_dict(), cfg.config_hash())
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text()
    assert text.splitlines()[0] == "scheme,snr_db,metric,value,trials,ci_lo,ci_hi"

    sidecar = json.loads((tmp_path / "a.json").read_text())
    canonical = json.dumps(sidecar["config"], sort_keys=True, separators=(",", ":"))
    assert sidecar["config_sha256"] == hashlib.sha256(canonical.encode()).hexdigest()
    assert sidecar["n_records"] == 2


def test_parse_range_forms():
    assert parse_range("0:6:2") == (0.0, 2.0, 4.0, 6.0)
    assert parse_range("0:3") == (0.0, 1.0, 2.0, 3.0)
    assert parse_range("1,2.5,7") == (1.0, 2.5, 7.0)
    assert parse_range("6") == (6.0,)
    for bad in ("a:b", "0:6:-1", "0:6:0", "foo", "1:2:3:4"):
        with pytest.raises(ConfigurationError):
            parse_range(bad)


def test_config_defaults_and_hash_stability():
    cfg = ExperimentConfig()
    assert cfg.trials == 2000
    assert cfg.snr_db[0] == 0.0 and cfg.snr_db[-1] == 24.0
    d = cfg.resolved_dict()
    assert "out_dir" not in d and "emit_plots" not in d
    # hash must not depend on where outputs land
    moved = load_config(None, {"out_dir": "elsewhere"})
    assert moved.config_hash() == cfg.config_hash()


def test_load_config_file_sections_and_overrides(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(
        json.dumps(
            {
                "seed": 7,
                "snr_db": "0:4:2",
                "noma": {"scheme": "ofdm_ofdm", "n_symbols": 2},
                "jrc": {"n_chirps": 32},
            }
        )
    )
    cfg = load_config(path, {"trials": 50, "noma": {"scheme": "im_ofdm"}})
    assert cfg.seed == 7
    assert cfg.trials == 50
    assert cfg.snr_db == (0.0, 2.0, 4.0)
    assert cfg.noma.scheme == "im_ofdm"  # override beats the file
    assert cfg.noma.n_symbols == 2
    assert cfg.jrc.n_chirps == 32


def test_load_config_rejects_unknown_keys(tmp_path):
    bad_top = tmp_path / "top.json"
    bad_top.write_text(json.dumps({"snr": [0, 2]}))
    with pytest.raises(ConfigurationError):
        load_config(bad_top)
    bad_section = tmp_path / "sec.json"
    bad_section.write_text(json.dumps({"noma": {"bandwidth": 1e6}}))
    with pytest.raises(ConfigurationError):
        load_config(bad_section)
    garbled = tmp_path / "garbled.json"
    garbled.write_text("{not json")
    with pytest.raises(ConfigurationError):
        load_config(garbled)


def test_full_scale_swaps_numerology(tmp_path):
    cfg = load_config(None, {"full_scale": True})
    assert cfg.noma.n_fft == 2048
    assert cfg.jrc.n_fft == 2048
    assert cfg.jrc.sweep_hz == 100e6
    assert cfg.noma.n_alloc % cfg.noma.im_k == 0
    desk = load_config(None)
    assert desk.noma.n_fft == 512


def test_cli_rejects_bad_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"nope": 1}))
    assert main(["noma-bler", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2


def test_cli_reports_numerical_failures(tmp_path):
    # two scatterers in the same range bin make the gain fit rank deficient
    scene = tmp_path / "degenerate.json"
    scene.write_text(
        json.dumps(
            {
                "targets": [
                    {"delay_s": 8 / 30.72e6, "doppler_hz": 3750.0, "gain": [1.0, 0.0]},
                    {"delay_s": 8 / 30.72e6, "doppler_hz": -5625.0, "gain": [0.8, 0.2]},
                ]
            }
        )
    )
    code = main(
        [
            "jrc-ber",
            "--scene",
            str(scene),
            "--snr-db-range",
            "6",
            "--frames",
            "1",
            "--out",
            str(tmp_path / "o"),
        ]
    )
    assert code == 3


def test_cli_noma_bler_end_to_end(tmp_path):
    out = tmp_path / "run"
    code = main(
        [
            "noma-bler",
            "--scheme",
            "ofdm",
            "--trials",
            "13",
            "--seed",
            "3",
            "--snr-db-range",
            "8,12",
            "--delta-p-db=6",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    csv_text = (out / "noma-bler.csv").read_text()
    assert "bler_u1" in csv_text and "bler_u2" in csv_text
    assert "required_snr_system" in csv_text
    assert "ofdm_ofdm" in csv_text
    sidecar = json.loads((out / "noma-bler.json").read_text())
    assert sidecar["config"]["trials"] == 13


def test_cli_radar_rd_with_iq_dump(tmp_path):
    out = tmp_path / "run"
    code = main(
        [
            "radar-rd",
            "--trials",
            "3",
            "--seed",
            "5",
            "--snr-db",
            "20",
            "--dump-iq",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    assert (out / "radar-rd.csv").exists()
    assert (out / "rd_map.csv").exists()
    assert (out / "frame0.iq").exists()
    assert json.loads((out / "frame0.iq.json").read_text())["scenario"] == "radar-rd"


def test_cli_rates_end_to_end(tmp_path):
    out = tmp_path / "run"
    code = main(
        ["rates", "--snr-db-range", "0:8:4", "--draws", "5", "--seed", "2", "--out", str(out)]
    )
    assert code == 0
    text = (out / "rates.csv").read_text()
    assert "rate_u1" in text and "rate_u2" in text


def test_cli_runs_are_byte_deterministic(tmp_path):
    args = [
        "noma-bler",
        "--scheme",
        "im",
        "--trials",
        "13",
        "--seed",
        "9",
        "--snr-db-range",
        "10",
        "--delta-p-db=0",
    ]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("noma-bler.csv", "noma-bler.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
