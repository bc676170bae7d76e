import csv
import hashlib

import pytest

from vortexsym.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, main


def _digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_profile_check(tmp_path):
    assert main(["profile-check", "--out", str(tmp_path)]) == EXIT_OK
    for name in ("profile.csv", "assumptions.csv", "profile_plot.png", "profile_plot.plt", "profile_plot.csv"):
        assert (tmp_path / name).exists()
    rows = list(csv.DictReader(open(tmp_path / "assumptions.csv")))
    assert len(rows) > 10 and all(r["pass"] == "pass" for r in rows)


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("spectral.eps_ladder = 0.05\n")
    assert main(["profile-check", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "spectral.eps_ladder" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["profile-check", "--config", str(tmp_path / "nope.cfg")]) == EXIT_CONFIG


def test_unresolved_phase_is_a_config_error(tmp_path, capsys):
    cfg = tmp_path / "coarse.cfg"
    cfg.write_text("grid.n = 1025\nmode.k = 2\n")
    assert main(["observable", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "w_stride" in capsys.readouterr().err


def test_unknown_command():
    with pytest.raises(SystemExit):
        main(["frobnicate"])


def test_output_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["profile-check", "--out", str(d)]) == EXIT_OK
    for name in ("profile.csv", "assumptions.csv", "profile_plot.csv"):
        assert _digest(a / name) == _digest(b / name)


@pytest.mark.slow
def test_fit_k1_writes_result_row(tmp_path):
    cfg = tmp_path / "k1.cfg"
    cfg.write_text("mode.k = 1\n")
    status = main(["fit", "--config", str(cfg), "--out", str(tmp_path)])
    rows = list(csv.DictReader(open(tmp_path / "fit_results.csv")))
    spectral = [r for r in rows if r["route"] == "spectral"]
    assert len(spectral) == 1 and float(spectral[0]["expected"]) == 4.0
    passed = abs(float(spectral[0]["exponent"]) - 4.0) <= 0.2
    assert spectral[0]["pass"] == ("pass" if passed else "fail")
    assert status == (EXIT_OK if passed else EXIT_FAIL)
