import csv
import json
import subprocess
import sys
import time

import numpy as np
import pytest

from robsparse.cli import main, read_csv, InputError


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


@pytest.fixture
def data_csv(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.standard_normal((40, 3))
    y = 1 + 2 * X[:, 0] - X[:, 2] + 0.3 * rng.standard_normal(40)
    return write_csv(tmp_path / "data.csv", ["a", "b", "c", "resp"], np.column_stack([X, y]))


def test_missing_file_exits_2_and_names_path(tmp_path, capsys):
    missing = tmp_path / "nowhere.csv"
    assert main(["fit", "--input", str(missing)]) == 2
    assert str(missing) in capsys.readouterr().err


@pytest.mark.parametrize("body,lineno", [
    ("x,y\n1,2\n3,oops\n", 3),
    ("x,y\n1,2\n3\n", 3),
    ("x,y\n1,2\n2,3\nnan,1\n", 4),
])
def test_malformed_csv_reports_line(tmp_path, capsys, body, lineno):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    assert main(["fit", "--input", str(path), "--lambda", "0"]) == 2
    assert f"{path}:{lineno}:" in capsys.readouterr().err


def test_read_csv_response_column(tmp_path):
    path = write_csv(tmp_path / "d.csv", ["y", "x1", "x2"], [[1, 2, 3], [4, 5, 6]])
    X, y, names, resp = read_csv(path, "y")
    assert names == ["x1", "x2"] and resp == "y"
    np.testing.assert_array_equal(y, [1, 4])
    X, y, names, resp = read_csv(path)
    assert resp == "x2"
    X, y, names, resp = read_csv(path, "0")
    assert resp == "y"
    with pytest.raises(InputError):
        read_csv(path, "zzz")
    (tmp_path / "dup.csv").write_text("a,a\n1,2\n")
    with pytest.raises(InputError, match="duplicate"):
        read_csv(tmp_path / "dup.csv")


def test_toy_fit_matches_hand_computation(tmp_path):
    path = write_csv(tmp_path / "toy.csv", ["x", "y"], [[-1, -1], [0, 0.5], [1, 1]])
    out = tmp_path / "out"
    assert main(["fit", "--input", str(path), "--lambda", "0", "--gamma", "10",
                 "--output", str(out)]) == 0
    doc = json.loads((out / "fit.json").read_text())
    a, b, s = doc["intercept"], doc["coefficients"]["x"], doc["scale"]
    # the rows at x = -1 and x = 1 share a residual, so their weights agree and
    # the weighted normal equations force a unit slope
    assert b == pytest.approx(1.0, abs=1e-5)
    # intercept is the bisquare-weighted mean of y - x at the final scale
    c = 3.44369
    r = np.array([-1.0, 0.5, 1.0]) - np.array([-1.0, 0.0, 1.0]) - a
    w = (1 - np.minimum(np.abs(r / s) / c, 1) ** 2) ** 2
    assert a == pytest.approx(np.sum(w * np.array([0.0, 0.5, 0.0])) / w.sum(), abs=1e-5)
    assert doc["converged"] and doc["lambda"] == 0.0
    rows = list(csv.reader((out / "coefficients.csv").open()))
    assert rows[0] == ["term", "estimate"] and rows[2][0] == "x"


def test_degenerate_toy_exits_nonzero(tmp_path, capsys):
    path = write_csv(tmp_path / "toy.csv", ["x", "y"], [[0, 1], [1, 3], [2, 5]])
    assert main(["fit", "--input", str(path), "--lambda", "0", "--gamma", "0",
                 "--output", str(tmp_path)]) == 1
    assert "zero residual scale" in capsys.readouterr().err


def test_lambda_omitted_runs_cv(data_csv, tmp_path):
    out = tmp_path / "out"
    assert main(["fit", "--input", str(data_csv), "--gamma", "0.1", "--output", str(out)]) == 0
    doc = json.loads((out / "fit.json").read_text())
    assert doc["lambda"] is not None and doc["lambda"] >= 0
    assert set(doc["coefficients"]) == {"a", "b", "c"}


def test_cv_command(data_csv, tmp_path):
    assert main(["cv", "--input", str(data_csv), "--gamma", "0.1",
                 "--output", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "cv.json").read_text())
    lam = doc["lambda"]
    assert len(lam["candidates"]) == len(lam["criterion"])
    assert lam["selected"] in lam["candidates"]


@pytest.mark.parametrize("est", ["sridge", "lslasso", "adaptive-lslasso", "adaptive-mmlasso"])
def test_other_estimators(data_csv, tmp_path, est):
    extra = ["--gamma", "0.1"] if "mm" in est or est == "sridge" else []
    assert main(["fit", "--input", str(data_csv), "--estimator", est,
                 "--output", str(tmp_path)] + extra) == 0
    doc = json.loads((tmp_path / "fit.json").read_text())
    assert doc["estimator"] == est


def test_config_file_and_flag_override(data_csv, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"input": str(data_csv), "lam": 0.5, "gamma": 0.1,
                               "output": str(tmp_path / "o")}))
    assert main(["fit", "--config", str(cfg)]) == 0
    assert json.loads((tmp_path / "o" / "fit.json").read_text())["lambda"] == 0.5
    assert main(["fit", "--config", str(cfg), "--lambda", "0.25"]) == 0
    assert json.loads((tmp_path / "o" / "fit.json").read_text())["lambda"] == 0.25
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["fit", "--config", str(cfg)]) == 2


def test_simulate_smoke_and_determinism(tmp_path):
    argv = ["simulate", "--scenario", "1", "--M", "1", "--seed", "3", "--jobs", "1"]
    t0 = time.perf_counter()
    assert main(argv + ["--output", str(tmp_path / "a")]) == 0
    assert time.perf_counter() - t0 < 10
    assert main(argv + ["--output", str(tmp_path / "b")]) == 0
    names = sorted(f.name for f in (tmp_path / "a").iterdir())
    assert names == sorted(f.name for f in (tmp_path / "b").iterdir())
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_contaminated_simulate_writes_curve(tmp_path):
    argv = ["simulate", "--scenario", "1", "--M", "1", "--contaminate", "--y0-grid", "0,10",
            "--estimators", "lslasso,oracle-mm", "--jobs", "1"]
    assert main(argv + ["--output", str(tmp_path / "a")]) == 0
    assert main(argv + ["--output", str(tmp_path / "b")]) == 0
    for name in ("report.csv", "report.json", "curve.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_simulate_bad_inputs(tmp_path, capsys):
    assert main(["simulate", "--scenario", "9", "--M", "1", "--output", str(tmp_path)]) == 2
    assert main(["simulate", "--M", "1", "--output", str(tmp_path)]) == 2
    assert main(["simulate", "--scenario", "1", "--M", "1", "--estimators", "foo",
                 "--output", str(tmp_path)]) == 2
    capsys.readouterr()


def test_constants(tmp_path, capsys):
    out = tmp_path / "k.json"
    assert main(["constants", "--output", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["c0"] == pytest.approx(1.5476, abs=1e-3)
    assert doc["c1"] == pytest.approx(3.4437, abs=1e-3)
    assert doc["efficiency"] == pytest.approx(0.85, abs=5e-3)
    capsys.readouterr()
    assert main(["constants", "--errors", "t1"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert all(np.isfinite(doc[k]) for k in ("s0", "a", "bconst"))
    assert main(["constants", "--errors", "gamma(2)"]) == 2


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "robsparse.cli", "constants"],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["b"] == 0.5
