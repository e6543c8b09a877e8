import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from bismooth.cli import main
from bismooth.experiment import ConfigError, ExperimentConfig, build_system, load_config, parse_verify
from bismooth.io import read_history_csv, write_matrix_market
from bismooth.linalg import toeplitz_test_matrix

CONFIG = Path(__file__).resolve().parents[1] / "configs" / "toeplitz200.cfg"


def test_default_experiment(tmp_path, capsys):
    assert main(["solve", "--config", str(CONFIG), "--out-dir", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.count("status=converged") == 3
    cols = {name: read_history_csv(tmp_path / f"{name}.csv") for name in ("bicr", "transform-orig", "transform-concise")}
    ref = cols["bicr"]["relative_residual_2norm"]
    for c in cols.values():
        rel = c["relative_residual_2norm"]
        assert rel[-1] < 1e-12
        for k in range(min(len(ref), len(rel))):
            if ref[k] < 1e-10 and rel[k] < 1e-10:
                break
            assert abs(ref[k] - rel[k]) <= 1e-6 * ref[k]
    assert (tmp_path / "summary.txt").read_text() == out


def test_tiny_toeplitz(tmp_path):
    args = ["solve", "--matrix", "builtin:toeplitz:3", "--max-iter", "3", "--solver", "bicg,bicr", "--out-dir", str(tmp_path)]
    assert main(args) == 0
    for name in ("bicg", "bicr"):
        rel = read_history_csv(tmp_path / f"{name}.csv")["relative_residual_2norm"]
        assert len(rel) <= 4 and rel[-1] < 1e-12


def test_missing_matrix_file(tmp_path, capsys):
    code = main(["solve", "--matrix", "file:unknown.mtx", "--out-dir", str(tmp_path)])
    assert code != 0
    assert "unknown.mtx" in capsys.readouterr().err


def test_bad_matrix_file_reports_line(tmp_path, capsys):
    bad = tmp_path / "bad.mtx"
    bad.write_text("%%MatrixMarket matrix coordinate real general\n2 2 1\n9 9 1\n")
    assert main(["solve", "--matrix", f"file:{bad}", "--out-dir", str(tmp_path)]) == 2
    assert f"{bad}:3:" in capsys.readouterr().err


def test_matrix_market_input(tmp_path):
    path = tmp_path / "t.mtx"
    write_matrix_market(toeplitz_test_matrix(20), path)
    assert main(["solve", "--matrix", f"file:{path}", "--solver", "transform-concise", "--out-dir", str(tmp_path)]) == 0
    assert read_history_csv(tmp_path / "transform-concise.csv")["relative_residual_2norm"][-1] < 1e-12


def test_flags_override_config(tmp_path):
    assert main(["solve", "--config", str(CONFIG), "--solver", "cg", "--matrix", "builtin:spd:12:3", "--out-dir", str(tmp_path)]) == 0
    assert sorted(p.name for p in tmp_path.glob("*.csv")) == ["cg.csv"]


def test_config_file_values(tmp_path):
    settings = load_config(CONFIG)
    assert settings["matrix"] == "builtin:toeplitz:200"
    assert settings["shadow"] == "equal-b"
    assert settings["solvers"] == ("bicr", "transform-orig", "transform-concise")


def test_unknown_solver(tmp_path, capsys):
    assert main(["solve", "--solver", "gmres", "--out-dir", str(tmp_path)]) == 2
    assert "gmres" in capsys.readouterr().err


def test_verify_output(tmp_path):
    args = ["solve", "--matrix", "builtin:toeplitz:60", "--solver", "bicg", "--verify", "window=15,tol=1e-8", "--out-dir", str(tmp_path)]
    assert main(args) == 0
    text = (tmp_path / "verification.txt").read_text()
    assert text.count("PASS") == 19 and "FAIL" not in text
    kv = (tmp_path / "verification.kv").read_text().splitlines()
    assert len(kv) == 19 and all("pass=true" in line for line in kv)
    assert "verification=pass" in (tmp_path / "summary.txt").read_text()


def test_breakdown_is_not_an_error(tmp_path):
    args = ["solve", "--matrix", "builtin:toeplitz:4", "--rhs", "explicit:1,0,0,0", "--shadow", "explicit:0,1,0,0",
            "--solver", "bicg", "--out-dir", str(tmp_path)]
    assert main(args) == 0
    assert "breakdown=(rt_k,r_k)" in (tmp_path / "summary.txt").read_text()


def test_deterministic_csvs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["solve", "--config", str(CONFIG), "--out-dir", str(d)]) == 0
    for f in a.glob("*.csv"):
        assert f.read_bytes() == (b / f.name).read_bytes()


def test_parse_verify():
    assert parse_verify("off") == {"verify": False}
    assert parse_verify("window=5,tol=1e-6") == {"verify": True, "verify_window": 5, "verify_tol": 1e-6}
    with pytest.raises(ConfigError):
        parse_verify("depth=3")


def test_shadow_rules():
    cfg = ExperimentConfig(matrix="builtin:toeplitz:5", x0="explicit:1,0,0,0,0", shadow="equal-r0")
    A, b, x0, rt0 = build_system(cfg)
    np.testing.assert_array_equal(rt0, b - A.apply(x0))
    with pytest.raises(ConfigError):
        build_system(ExperimentConfig(matrix="builtin:toeplitz:5", x0="explicit:1,2"))


def test_module_entry_point(tmp_path):
    out = subprocess.run(
        [sys.executable, "-m", "bismooth", "solve", "--matrix", "builtin:toeplitz:10", "--solver", "bicr", "--out-dir", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert out.returncode == 0, out.stderr
    assert "solver=bicr status=converged" in out.stdout
