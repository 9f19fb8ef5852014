"""Command-line driver: schemas, determinism, precedence, exit codes."""

import json
import math

import numpy as np
import pytest

from levy_kac import ExperimentConfig, InputValidationError
from levy_kac.cli import main, run

# frozen engine outputs for the quartic model at N = 16 with default knobs
CLT16_SUP_ERR = 0.1819875700909856
CLT16_GAMMA0 = 0.98855483243399855
CLT16_BETA_N = 0.28357813054886566

STABLE_AT_ZERO_TEXT = "0.28735275145216443"  # Gamma(5/3)/pi printed at %.17g


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    monkeypatch.delenv("LEVY_KAC_THREADS", raising=False)


def _rows(path):
    lines = path.read_text(encoding="ascii").splitlines()
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


# ----------------------------------------------------------------------
# Config validation and programmatic entry
# ----------------------------------------------------------------------


def test_config_validation():
    with pytest.raises(InputValidationError):
        ExperimentConfig(model="quartic", n_values=(64, 16))
    with pytest.raises(InputValidationError):
        ExperimentConfig(model="quartic", n_values=(0,))
    with pytest.raises(InputValidationError):
        ExperimentConfig(model="quartic", grid_pow=8)
    with pytest.raises(InputValidationError):
        ExperimentConfig(model="quartic", grid_pow=23)
    with pytest.raises(InputValidationError):
        ExperimentConfig(model="quartic", tau=0.0)
    with pytest.raises(InputValidationError):
        ExperimentConfig(model="quartic", threads=0)


def test_run_rejects_unknown_subcommand(tmp_path):
    cfg = ExperimentConfig(model="quartic", out_dir=tmp_path)
    with pytest.raises(InputValidationError):
        run("nope", cfg)


# ----------------------------------------------------------------------
# Cheap subcommands: schema and value checks
# ----------------------------------------------------------------------


def test_stable_density_stdout(capsys):
    code = main([
        "stable-density", "--alpha", "1.5", "--sigma", "1.0",
        "--beta", "0.0", "--x", "0",
    ])
    assert code == 0
    assert capsys.readouterr().out.strip() == STABLE_AT_ZERO_TEXT


def test_stable_density_csv(tmp_path, capsys):
    code = main([
        "stable-density", "--alpha", "1.5", "--sigma", "1.0",
        "--beta", "1.0", "--x", "0,3,-3", "--out", str(tmp_path),
    ])
    assert code == 0
    header, rows = _rows(tmp_path / "stable_density.csv")
    assert header == ["x", "density"]
    assert [r[0] for r in rows] == ["0", "3", "-3"]
    vals = [float(r[1]) for r in rows]
    assert abs(vals[0] - 0.19751617184719186) < 1e-12
    assert abs(vals[1] - 0.027997317862926) < 1e-12
    assert abs(vals[2] - 0.063071442319811) < 1e-12


def test_stable_density_invalid_params(capsys):
    code = main([
        "stable-density", "--alpha", "2.5", "--sigma", "1.0",
        "--beta", "0.0", "--x", "0",
    ])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_density_info_schema(tmp_path, capsys):
    code = main(["density-info", "--model", "quartic", "--out", str(tmp_path)])
    assert code == 0
    assert "wrote" in capsys.readouterr().out
    header, rows = _rows(tmp_path / "density_info.csv")
    assert header == ["field", "value"]
    table = dict(rows)
    assert abs(float(table["mass"]) - 1.0) < 1e-10
    assert abs(float(table["second_moment"]) - 1.0) < 1e-10
    assert table["fourth_moment"] == "inf"
    assert float(table["tail_alpha"]) == 1.5
    assert abs(float(table["tail_amplitude"]) - math.sqrt(2.0) / math.pi) < 1e-12
    sidecar = json.loads((tmp_path / "density_info.meta.json").read_text())
    assert sidecar["subcommand"] == "density-info"
    assert sidecar["model"] == "quartic"
    assert "created_utc" in sidecar


def test_density_info_light_model_has_no_tail_rows(tmp_path):
    main(["density-info", "--model", "gauss", "--out", str(tmp_path)])
    _, rows = _rows(tmp_path / "density_info.csv")
    table = dict(rows)
    assert "tail_alpha" not in table
    assert float(table["mgf_strip"]) == 0.5


def test_highfreq_rerun_is_byte_identical(tmp_path):
    args = ["highfreq", "--model", "quartic", "--out", str(tmp_path)]
    assert main(args) == 0
    first = (tmp_path / "highfreq.csv").read_bytes()
    assert main(args) == 0
    assert (tmp_path / "highfreq.csv").read_bytes() == first
    header, rows = _rows(tmp_path / "highfreq.csv")
    assert header == ["beta", "gap"]
    assert [r[0] for r in rows] == ["0.25", "0.5", "1", "2"]
    gaps = [float(r[1]) for r in rows]
    assert abs(gaps[1] - 0.11088161360923843) < 1e-9
    assert all(b > a for a, b in zip(gaps, gaps[1:]))


def test_fda_default_ladder_decreases(tmp_path):
    assert main(["fda", "--model", "quartic", "--out", str(tmp_path)]) == 0
    header, rows = _rows(tmp_path / "fda.csv")
    assert header == ["beta", "omega"]
    assert [float(r[0]) for r in rows] == [1.0, 0.3, 0.1, 0.03]
    omegas = [float(r[1]) for r in rows]
    assert all(b < a for a, b in zip(omegas, omegas[1:]))


# ----------------------------------------------------------------------
# Engine-backed subcommands
# ----------------------------------------------------------------------


def test_clt_csv_frozen_row(tmp_path):
    code = main(["clt", "--model", "quartic", "--n", "16", "--out", str(tmp_path)])
    assert code == 0
    header, rows = _rows(tmp_path / "clt.csv")
    assert header == ["N", "sup_err", "gamma0_ratio", "xi_max", "beta_N", "trusted"]
    assert len(rows) == 1
    row = rows[0]
    assert row[0] == "16"
    assert abs(float(row[1]) - CLT16_SUP_ERR) < 1e-12
    assert abs(float(row[2]) - CLT16_GAMMA0) < 1e-12
    assert abs(float(row[4]) - CLT16_BETA_N) < 1e-12
    assert row[5] == "true"


def test_marginal_merges_sorted_unique_counts(tmp_path):
    code = main([
        "marginal", "--model", "quartic", "--n", "64,16,16",
        "--out", str(tmp_path),
    ])
    assert code == 0
    header, rows = _rows(tmp_path / "marginal.csv")
    assert header == ["N", "v", "pi1"]
    counts = [r[0] for r in rows]
    assert counts == ["16"] * 241 + ["64"] * 241
    pi1 = np.array([float(r[2]) for r in rows[:241]])
    v = np.array([float(r[1]) for r in rows[:241]])
    assert np.all(pi1 >= 0.0)
    assert abs(np.trapezoid(pi1, v) - 1.0) < 1e-2  # coarse plotting grid


def test_chaos_gauss_entropy_is_flat_zero(tmp_path):
    code = main(["chaos", "--model", "gauss", "--n", "16", "--out", str(tmp_path)])
    assert code == 0
    header, rows = _rows(tmp_path / "chaos.csv")
    assert header == [
        "N", "l1_k1", "l1_k2", "entropy_pp", "entropy_target",
        "w1", "pinsker_margin",
    ]
    row = rows[0]
    assert row[0] == "16"
    assert abs(float(row[3])) < 1e-6
    assert abs(float(row[4])) < 1e-12
    assert float(row[6]) >= -1e-9


# ----------------------------------------------------------------------
# Exit codes
# ----------------------------------------------------------------------


def test_exit_codes(tmp_path, capsys):
    assert main(["density-info", "--model", "nope"]) == 2
    assert "error:" in capsys.readouterr().err

    # light tails are not regularly varying: certification failure, not usage
    assert main(["clt", "--model", "gauss", "--n", "16"]) == 3
    assert "error:" in capsys.readouterr().err

    assert main(["clt", "--model", "quartic", "--bogus"]) == 2
    assert "usage:" in capsys.readouterr().err

    assert main([]) == 2
    capsys.readouterr()

    assert main(["sweep", "--model", "quartic", "--n", ""]) == 2
    assert "non-empty" in capsys.readouterr().err

    assert main(["clt", "--model", "quartic"]) == 2
    capsys.readouterr()

    assert main([
        "clt", "--model", "quartic", "--n", "16", "--grid-pow", "25",
    ]) == 2
    capsys.readouterr()

    assert main([
        "density-info", "--model", "quartic", "--out", "/proc/nope",
    ]) == 2
    capsys.readouterr()

    assert main(["density-info"]) == 2  # --model required
    assert "required" in capsys.readouterr().err


# ----------------------------------------------------------------------
# Configuration precedence
# ----------------------------------------------------------------------


def _sidecar_threads(out_dir) -> int:
    meta = json.loads((out_dir / "density_info.meta.json").read_text())
    return meta["threads"]


def test_config_file_supplies_values(tmp_path, capsys):
    conf = tmp_path / "run.conf"
    conf.write_text("# comment\nmodel = quartic\nthreads = 2\n")
    out = tmp_path / "a"
    code = main(["density-info", "--config", str(conf), "--out", str(out)])
    assert code == 0
    assert _sidecar_threads(out) == 2


def test_flag_beats_config_file(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("model = quartic\nthreads = 2\n")
    out = tmp_path / "b"
    main([
        "density-info", "--config", str(conf), "--threads", "4",
        "--out", str(out),
    ])
    assert _sidecar_threads(out) == 4


def test_config_file_beats_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("LEVY_KAC_THREADS", "5")
    conf = tmp_path / "run.conf"
    conf.write_text("model = quartic\nthreads = 2\n")
    out = tmp_path / "c"
    main(["density-info", "--config", str(conf), "--out", str(out)])
    assert _sidecar_threads(out) == 2


def test_environment_beats_default(tmp_path, monkeypatch):
    monkeypatch.setenv("LEVY_KAC_THREADS", "5")
    out = tmp_path / "d"
    main(["density-info", "--model", "quartic", "--out", str(out)])
    assert _sidecar_threads(out) == 5


def test_config_file_errors(tmp_path, capsys):
    bad_key = tmp_path / "bad.conf"
    bad_key.write_text("modle = quartic\n")
    assert main(["density-info", "--config", str(bad_key)]) == 2
    assert "unknown config key" in capsys.readouterr().err

    malformed = tmp_path / "malformed.conf"
    malformed.write_text("threads 2\n")
    assert main(["density-info", "--config", str(malformed)]) == 2
    assert "key = value" in capsys.readouterr().err

    assert main(["density-info", "--config", str(tmp_path / "missing.conf")]) == 2
    assert "cannot read" in capsys.readouterr().err


def test_bad_environment_value(monkeypatch, capsys):
    monkeypatch.setenv("LEVY_KAC_THREADS", "abc")
    assert main(["density-info", "--model", "quartic"]) == 2
    assert "LEVY_KAC_THREADS" in capsys.readouterr().err


def test_config_force_cutoff_parses_booleans(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("model = quartic\nforce-cutoff = yes\n")
    out = tmp_path / "e"
    main(["density-info", "--config", str(conf), "--out", str(out)])
    meta = json.loads((out / "density_info.meta.json").read_text())
    assert meta["force_cutoff"] is True
