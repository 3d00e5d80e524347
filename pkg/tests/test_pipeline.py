import json
import math
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import ks_2samp

from sqztomo import cli, pipeline
from sqztomo.config import RunConfig
from sqztomo.core import CalibrationError, OpaParams, TraceKind, to_decibel
from sqztomo.io import read_document, read_trace


def small_config(**kw):
    text = ("[acquisition]\nn_samples = 131072\nsweep_period = 0.002\n"
            "[tomography]\nn_max = 12\nwigner_points = 41\n")
    return RunConfig.loads(text).with_overrides(**kw)


@pytest.fixture(scope="module")
def default_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("default")
    cfg = RunConfig().with_overrides(output=str(out), workers=2)
    pipeline.run_all(cfg, out, deterministic=True)
    return cfg, out


def test_simulate_files_echo_config(tmp_path):
    cfg = RunConfig()
    sig_path, vac_path = pipeline.cmd_simulate(cfg, tmp_path)
    sig, vac = read_trace(sig_path), read_trace(vac_path)
    assert sig.kind == TraceKind.SIGNAL and vac.kind == TraceKind.VACUUM
    for tr in (sig, vac):
        assert tr.config.sample_rate == cfg.acquisition.sample_rate
        assert tr.config.n_samples == cfg.acquisition.n_samples
        assert tr.config.sweep_period == cfg.acquisition.sweep_period
    assert RunConfig.load(tmp_path / "config.cfg") == cfg


def test_simulate_same_seed_identical(tmp_path):
    cfg = small_config()
    a = pipeline.cmd_simulate(cfg, tmp_path / "a")
    b = pipeline.cmd_simulate(cfg, tmp_path / "b")
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()


def test_zero_pump_signal_looks_like_vacuum(tmp_path):
    from dataclasses import replace
    cfg = replace(RunConfig(), opa=OpaParams(0.0))
    sig_path, vac_path = pipeline.cmd_simulate(cfg, tmp_path)
    result = ks_2samp(read_trace(sig_path).samples, read_trace(vac_path).samples)
    assert result.pvalue > 0.01


def test_default_reconstruction(default_run):
    cfg, out = default_run
    index = read_document(out / "states" / "index.json")
    entries = {e["band_index"]: e for e in index["bands"]}
    assert entries[0]["discarded"] is True
    docs = sorted((out / "states").glob("band_*.json"))
    assert len(docs) == 15
    for path in docs:
        doc = read_document(path)
        assert 0.97 <= doc["trace"] <= 1.03
        assert doc["config_hash"] == cfg.hash()
        assert doc["density_matrix"]["conventions"]["vacuum_quadrature_variance"] == 0.5
    assert len(list((out / "tomograms").glob("*.csv"))) == 15
    assert len(list((out / "wigner").glob("*.csv"))) == 30


def test_default_report(default_run):
    cfg, out = default_run
    report = read_document(out / "report.json")
    assert report["gaps"] == []
    assert report["config_hash"] == cfg.hash()
    assert "created" not in report
    assert report["fit"]["pump_parameter"] == pytest.approx(cfg.opa.pump_parameter, abs=0.03)
    assert report["fit"]["efficiency"] == pytest.approx(cfg.opa.efficiency, abs=0.03)
    for row in report["spectrum"]:
        assert row["v_min_db"] == to_decibel(row["v_min"])
        assert row["v_max_db"] == to_decibel(row["v_max"])
    tv = report["total_variance"]
    assert tv["v_min_db"] == to_decibel(tv["v_min"])
    for name in ("spectrum", "total_variance", "g1", "photon_total"):
        assert (out / f"{name}.csv").exists()
    for name in ("spectrum", "total_variance", "g1", "photon_statistics", "wigner"):
        text = (out / f"{name}.svg").read_text()
        assert text.lstrip().startswith("<?xml") and "<svg" in text


def test_analyze_rerun_identical(default_run, tmp_path):
    cfg, out = default_run
    before = (out / "report.json").read_bytes()
    pipeline.cmd_analyze(cfg, out, deterministic=True)
    assert (out / "report.json").read_bytes() == before


def test_vacuum_as_signal(tmp_path):
    cfg = RunConfig().with_overrides(bands="1,8,15")
    pipeline.cmd_simulate(cfg, tmp_path)
    pipeline.cmd_reconstruct(cfg, tmp_path, signal=tmp_path / "vacuum.sqz",
                             vacuum=tmp_path / "vacuum.sqz", deterministic=True)
    for b in (1, 8, 15):
        doc = read_document(tmp_path / "states" / f"band_{b:02d}.json")
        assert doc["fidelity_to_vacuum"] > 0.99


def test_missing_vacuum_is_calibration_error(tmp_path):
    cfg = small_config()
    pipeline.cmd_simulate(cfg, tmp_path)
    (tmp_path / "vacuum.sqz").unlink()
    with pytest.raises(CalibrationError, match="vacuum"):
        pipeline.cmd_reconstruct(cfg, tmp_path)


def test_trace_config_mismatch(tmp_path):
    pipeline.cmd_simulate(small_config(), tmp_path)
    with pytest.raises(pipeline.DataError, match="do not match"):
        pipeline.cmd_reconstruct(RunConfig(), tmp_path)


def test_partial_inputs_flag_gaps(tmp_path):
    cfg = small_config(bands="1-3")
    pipeline.run_all(cfg, tmp_path, deterministic=True)
    (tmp_path / "states" / "band_02.json").unlink()
    report = read_document(pipeline.cmd_analyze(cfg, tmp_path, deterministic=True))
    gaps = {g["section"]: g for g in report["gaps"]}
    assert gaps["states"]["bands"] == [2]
    assert "photon_statistics" not in report
    assert "fit" in report
    (tmp_path / "signal.sqz").unlink()
    report = read_document(pipeline.cmd_analyze(cfg, tmp_path, deterministic=True))
    assert "traces" in {g["section"] for g in report["gaps"]}
    assert "spectrum" not in report


def test_timestamps_only_when_not_deterministic(tmp_path):
    cfg = small_config(bands="1")
    pipeline.cmd_simulate(cfg, tmp_path)
    report = read_document(pipeline.cmd_analyze(cfg, tmp_path))
    assert "created" in report


def test_workers_do_not_change_results(tmp_path):
    cfg = small_config(bands="1-4")
    for w in (1, 3):
        out = tmp_path / f"w{w}"
        pipeline.cmd_simulate(cfg, out)
        pipeline.cmd_reconstruct(cfg.with_overrides(workers=w), out, deterministic=True)
    for name in ("band_01.json", "band_04.json", "index.json"):
        assert (tmp_path / "w1" / "states" / name).read_bytes() == \
            (tmp_path / "w3" / "states" / name).read_bytes()


# --- command line ------------------------------------------------------------

def _write_small_config(tmp_path):
    path = tmp_path / "small.cfg"
    small_config().save(path)
    return path


def test_cli_all_and_overrides(tmp_path, capsys):
    cfg_path = _write_small_config(tmp_path)
    out = tmp_path / "run"
    code = cli.main(["all", "--config", str(cfg_path), "--out", str(out), "--seed", "3",
                     "--bands", "1,2", "--nmax", "10", "--kc", "4", "--workers", "2",
                     "--deterministic"])
    assert code == 0
    saved = RunConfig.load(out / "config.cfg")
    assert saved.seed == 3 and saved.tomography.n_max == 10 and saved.tomography.k_c == 4.0
    assert sorted(p.name for p in (out / "states").glob("band_*.json")) == \
        ["band_01.json", "band_02.json"]
    report = json.loads((out / "report.json").read_text())
    assert report["config_hash"] == saved.hash()
    assert "all:" in capsys.readouterr().out


def test_cli_usage_errors(tmp_path):
    with pytest.raises(SystemExit) as info:
        cli.main(["bogus"])
    assert info.value.code == cli.EXIT_USAGE
    with pytest.raises(SystemExit) as info:
        cli.main(["simulate", "--seed", "notanint"])
    assert info.value.code == cli.EXIT_USAGE
    assert cli.main(["simulate", "--config", str(tmp_path / "missing.cfg")]) == cli.EXIT_USAGE
    bad = tmp_path / "bad.cfg"
    bad.write_text("[opa]\npump_parameter = 1.5\n")
    assert cli.main(["simulate", "--config", str(bad)]) == cli.EXIT_USAGE


def test_cli_data_error(tmp_path, capsys):
    cfg_path = _write_small_config(tmp_path)
    code = cli.main(["reconstruct", "--config", str(cfg_path), "--out", str(tmp_path / "empty")])
    assert code == cli.EXIT_DATA
    assert "signal trace not found" in capsys.readouterr().err
    out = tmp_path / "novac"
    assert cli.main(["simulate", "--config", str(cfg_path), "--out", str(out)]) == 0
    (out / "vacuum.sqz").unlink()
    assert cli.main(["reconstruct", "--config", str(cfg_path), "--out", str(out)]) == \
        cli.EXIT_DATA


def test_cli_numeric_failure(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise FloatingPointError("overflow in reconstruction")

    monkeypatch.setattr(cli, "cmd_reconstruct", boom)
    cfg_path = _write_small_config(tmp_path)
    assert cli.main(["reconstruct", "--config", str(cfg_path), "--out", str(tmp_path)]) == \
        cli.EXIT_NUMERIC
