import json
import subprocess
import sys

import pytest

from moentangle.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main
from moentangle.tables import read_csv

FAST = ["--set", "grid.points=401"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_spectrum_csv_has_meta_header(tmp_path, capsys):
    path = tmp_path / "s.csv"
    code, _, _ = run(capsys, "spectrum", *FAST, "--out", str(path))
    assert code == EXIT_OK
    meta, cols = read_csv(path)
    assert meta["command"] == "spectrum"
    assert meta["grid"]["points"] == 401
    assert {"omega_hz", "u", "v", "w"} <= set(cols)
    assert len(cols["u"]) == 401


def test_csv_is_byte_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "ef", *FAST, "--threads", "1", "--out", str(a))[0] == EXIT_OK
    assert run(capsys, "ef", *FAST, "--threads", "3", "--out", str(b))[0] == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_json_format(capsys):
    code, out, _ = run(capsys, "eigen", "--set", "run.eigen_points=11", "--format", "json")
    assert code == EXIT_OK
    payload = json.loads(out)
    assert set(payload) == {"meta", "columns"}


def test_set_and_config_file(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"C_om": 0.5, "n_ba": 0.0, "grid": {"points": 401}}))
    code, out, _ = run(capsys, "criterion", "--config", str(cfg), "--set", "n_ba=2", "--format", "json")
    assert code == EXIT_OK
    meta = json.loads(out)["meta"]
    assert meta["params"]["C_om"] == 0.5
    assert meta["params"]["n_ba"] == 2.0


@pytest.mark.parametrize(
    "argv",
    [
        ["spectrum", "--set", "bogus=1"],
        ["spectrum", "--set", "no_equals_sign"],
        ["spectrum", "--set", "run.unknown_key=3"],
        ["spectrum", "--set", "kappa_m_hz=-5"],
        ["spectrum", "--threads", "0"],
        ["not-a-command"],
        ["spectrum", "--config", "/nonexistent/cfg.json"],
    ],
)
def test_config_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == EXIT_CONFIG
    assert json.loads(err.strip().splitlines()[-1])["exit_code"] == EXIT_CONFIG


def test_unstable_config_exits_3(capsys):
    code, out, err = run(capsys, "ef", "--set", "C_om=500")
    assert code == EXIT_NUMERICAL
    assert out == ""
    info = json.loads(err)
    assert info["error"] == "numerical" and "Stability" in info["message"]


def test_console_script_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "moentangle.cli", "eigen", "--set", "run.eigen_points=5"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("# meta: ")
