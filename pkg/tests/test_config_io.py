import json

import numpy as np
import pytest

from bicoh.bispectrum import bicoherence
from bicoh.config import ConfigError, ScenarioConfig, build_signal, parse_config
from bicoh.io import (
    SignalFileError,
    read_mask_csv,
    read_signal,
    sha256_file,
    verify_manifest,
    write_bicoherence_csv,
    write_manifest,
    write_mask_csv,
    write_signal_bin,
    write_signal_csv,
)
from bicoh.signal_model import SignalRecord, white_noise
from bicoh.spectral import SegmentationPlan, segment_spectra
from bicoh.surrogate import filter_bicoherence


def test_defaults_reproduce_reference_scenario():
    cfg = parse_config("")
    assert cfg == ScenarioConfig()
    assert cfg.centers == (3.0, 6.0, 9.0, 12.0)
    assert cfg.nonlinearity() == 0.0


def test_full_config_parses():
    cfg = parse_config(
        """
        mass = 2
        eigen_f1 = 40   # comment
        eigen_f2 = 120
        nonlinearity_mode = force_deviation:0.6
        duration = 5
        sample_rate = 1000
        noise_snr = 10
        burst_count = 2
        burst_sigma = 0.05
        burst_centers = 1.0, 4.0
        burst_snr = 0.25
        seed = 9
        """
    )
    assert cfg.mass == 2.0 and cfg.eigen_f1 == 40.0
    assert cfg.centers == (1.0, 4.0)
    assert cfg.seed == 9
    assert cfg.nonlinearity() > 0
    assert parse_config("nonlinearity_mode = explicit:123.5").nonlinearity() == 123.5


@pytest.mark.parametrize(
    "text, key",
    [
        ("duration = 0", "duration"),
        ("sample_rate = -1", "sample_rate"),
        ("mass = heavy", "mass"),
        ("colour = red", "colour"),
        ("burst_count = -1", "burst_count"),
        ("nonlinearity_mode = strong", "nonlinearity_mode"),
        ("nonlinearity_mode = force_deviation:0", "nonlinearity_mode"),
        ("burst_count = 2\nburst_centers = 1.0", "burst_centers"),
        ("burst_centers = 1, 2, 3, 99", "burst_centers"),
        ("eigen_f1 = 200", "eigen_f2"),
        ("sample_rate = 250", "eigen_f2"),
    ],
)
def test_config_errors_name_the_key(text, key):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.key == key


def test_build_signal_is_deterministic():
    cfg = parse_config("duration = 2\nburst_count = 1")
    a, info = build_signal(cfg)
    b, _ = build_signal(cfg)
    c, _ = build_signal(cfg, seed=1)
    assert len(a) == 4000 and info["seed"] == 0
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)


def test_signal_round_trips(tmp_path):
    sig = white_noise(1000, 0.3, seed=1, sample_rate=2000.0)
    write_signal_csv(tmp_path / "s.csv", sig)
    write_signal_bin(tmp_path / "s.f64", sig)
    from_csv = read_signal(tmp_path / "s.csv")
    from_bin = read_signal(tmp_path / "s.f64", sample_rate=2000.0)
    assert from_csv.sample_rate == 2000.0
    assert np.array_equal(from_csv.samples, sig.samples)
    assert np.array_equal(from_bin.samples, sig.samples)
    assert (tmp_path / "s.f64").stat().st_size == 8000


def test_signal_read_errors(tmp_path):
    with pytest.raises(SignalFileError):
        read_signal(tmp_path / "missing.csv")
    bad = tmp_path / "bad.csv"
    bad.write_text("time_s,value\n0,abc\n")
    with pytest.raises(SignalFileError):
        read_signal(bad)
    raw = tmp_path / "x.f64"
    raw.write_bytes(b"\0" * 12)
    with pytest.raises(SignalFileError):
        read_signal(raw, sample_rate=1.0)
    raw.write_bytes(b"\0" * 16)
    with pytest.raises(SignalFileError, match="sample rate"):
        read_signal(raw)


def test_result_csvs(tmp_path):
    sig = white_noise(64 * 20, 1.0, seed=2, sample_rate=64.0)
    plan = SegmentationPlan(64, 0.0, "hann", 64.0)
    spectra = segment_spectra(sig, plan)
    res = bicoherence(spectra)
    write_bicoherence_csv(tmp_path / "b.csv", res)
    rows = np.genfromtxt(tmp_path / "b.csv", delimiter=",", names=True)
    assert rows.size == res.region.size
    assert np.array_equal(rows["b2"], res.bicoherence_sq)
    assert np.array_equal(rows["f1_Hz"], res.f1)

    mask = filter_bicoherence(res, spectra, 0.9, 100, seed=0)
    write_mask_csv(tmp_path / "m.csv", mask)
    cols = read_mask_csv(tmp_path / "m.csv")
    assert cols["significant"].sum() == mask.survivor_count
    assert np.array_equal(cols["b_critical"], mask.critical[mask.tested])


def test_manifest_hashes(tmp_path):
    (tmp_path / "a.csv").write_text("x\n1\n")
    write_manifest(tmp_path / "manifest_t.json", "t", {"seed": 1}, {"n": 2}, ["a.csv"], "0")
    data = json.loads((tmp_path / "manifest_t.json").read_text())
    assert data["outputs"] == [{"path": "a.csv", "sha256": sha256_file(tmp_path / "a.csv"), "bytes": 4}]
    assert verify_manifest(tmp_path / "manifest_t.json") == []
    (tmp_path / "a.csv").write_text("x\n2\n")
    assert verify_manifest(tmp_path / "manifest_t.json") == ["a.csv"]


def test_signal_record_rejects_bad_rate():
    with pytest.raises(ValueError):
        SignalRecord(np.zeros(4), -1.0)
