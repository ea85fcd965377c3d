import json

import numpy as np
import pytest
from scipy import stats

from robsparse.simbench import (DEFAULT_Y0_GRID, ContaminationSpec, Dataset, ErrorLaw,
                                ar_covariance, contaminate, draw_carriers, fnr, fpr,
                                generate_scenario, metrics, oracle_ls, oracle_mm, oracle_tml,
                                replication_stream, run_monte_carlo, scenario_config)
from robsparse.simbench import runner
from robsparse.simbench.scenarios import draw_errors


def test_scenario_one_design():
    cfg = scenario_config(1)
    assert (cfg.n, cfg.p, cfg.sigma) == (40, 8, 3.0)
    np.testing.assert_array_equal(cfg.beta, [3, 1.5, 0, 0, 0, 2, 0, 0])
    np.testing.assert_allclose(cfg.covariance, 0.5 ** np.abs(np.subtract.outer(range(8), range(8))))
    assert cfg.support.tolist() == [0, 1, 5]


def test_other_designs():
    s2, s3, s4, s5, s6 = (scenario_config(i) for i in (2, 3, 4, 5, 6))
    assert (s2.n, s2.p, s2.sigma) == (60, 8, 1.0)
    assert (s3.n, s3.p, s3.sigma) == (100, 30, 1.5)
    np.testing.assert_array_equal(s3.beta[:15], [2.5] * 5 + [1.5] * 5 + [0.5] * 5)
    assert not s3.beta[15:].any()
    assert (s4.n, s4.p) == (100, 200)
    assert s4.covariance[14, 15] == 0.0 and s4.covariance[15, 16] == 0.5
    # scenario 5 is scenario 4 with rho = 0.95
    assert s5.blocks == ((15, 0.95), (185, 0.95)) and s5.beta0 == s4.beta0
    assert (s6.n, s6.p) == (50, 250)
    np.testing.assert_array_equal(s6.beta[:8], scenario_config(1).beta)
    assert not s6.beta[8:].any()


def test_config_errors_and_overrides():
    with pytest.raises(ValueError):
        scenario_config(7)
    with pytest.raises(ValueError):
        scenario_config(1, "cauchy")
    assert scenario_config(1, "t1", n=400).n == 400
    assert scenario_config(1, "t1").error_law is ErrorLaw.T1
    assert ErrorLaw.T1.accuracy_metric == "MAD" and ErrorLaw.T3.accuracy_metric == "RMSE"


def test_carrier_covariance_by_simulation():
    cfg = scenario_config(1)
    X = draw_carriers(cfg, 100_000, np.random.default_rng(0))
    np.testing.assert_allclose(np.cov(X, rowvar=False), cfg.covariance, atol=0.02)


def test_block_independence_by_simulation():
    cfg = scenario_config(5)
    X = draw_carriers(cfg, 20_000, np.random.default_rng(1))[:, 10:20]
    C = np.corrcoef(X, rowvar=False)
    np.testing.assert_allclose(C[4, 5], 0.0, atol=0.03)   # columns 14 and 15
    np.testing.assert_allclose(C[5, 6], 0.95, atol=0.01)


@pytest.mark.parametrize("law,df", [("t1", 1), ("t3", 3)])
def test_t_errors_follow_student_law(law, df):
    cfg = scenario_config(1, law)
    e = draw_errors(cfg, 20_000, np.random.default_rng(2))
    assert stats.kstest(e, stats.t(df).cdf).pvalue > 1e-3


def test_normal_errors_have_sigma():
    e = draw_errors(scenario_config(1), 50_000, np.random.default_rng(3))
    assert np.std(e) == pytest.approx(3.0, rel=0.02)


def test_generation_is_deterministic_and_independent():
    cfg = scenario_config(2)
    tr1, te1 = generate_scenario(cfg, replication_stream(7, 2, 0, 0))
    tr2, te2 = generate_scenario(cfg, replication_stream(7, 2, 0, 0))
    np.testing.assert_array_equal(tr1.X, tr2.X)
    np.testing.assert_array_equal(te1.y, te2.y)
    assert not np.array_equal(tr1.X, te1.X)
    tr3, _ = generate_scenario(cfg, replication_stream(7, 2, 1, 0))
    assert not np.array_equal(tr1.X, tr3.X)
    assert tr1.n == 60 and te1.n == 60


def test_contamination_rows():
    train, _ = generate_scenario(scenario_config(1), np.random.default_rng(4))
    before = train.X.copy()
    dirty = contaminate(train, 2.0)
    assert ContaminationSpec().count(40) == 4
    np.testing.assert_array_equal(dirty.X[:4], [[5.0] + [0.0] * 7] * 4)
    np.testing.assert_array_equal(dirty.y[:4], 10.0)
    np.testing.assert_array_equal(dirty.X[4:], train.X[4:])
    np.testing.assert_array_equal(train.X, before)  # input untouched
    zero = contaminate(train, 0.0)
    np.testing.assert_array_equal(zero.y[:4], 0.0)
    assert zero.X[0, 0] == 5.0
    assert ContaminationSpec().count(55) == 5
    with pytest.raises(ValueError):
        contaminate(train, -1.0)
    with pytest.raises(ValueError):
        ContaminationSpec(fraction=1.0)
    assert DEFAULT_Y0_GRID == (0, 0.5, 1, 1.5, 2, 2.5, 3, 5, 10)


def test_metric_examples():
    beta0 = np.array([3, 1.5, 0, 0, 0, 2, 0, 0], dtype=float)
    assert fnr(beta0, beta0) == 0 and fpr(beta0, beta0) == 0
    assert fnr(np.zeros(8), beta0) == 1 and fpr(np.zeros(8), beta0) == 0
    est = np.array([3, 0, 0.1, 0, 0, 2, 0, -1.0])
    assert fnr(est, beta0) == pytest.approx(1 / 3)
    assert fpr(est, beta0) == pytest.approx(2 / 5)
    test = Dataset(np.eye(4, 8), np.array([1.0, -1.0, 3.0, 0.0]))
    m = metrics(0.0, np.zeros(8), test, beta0)
    assert m.accuracy == pytest.approx(np.sqrt(11 / 4))
    m = metrics(0.0, np.zeros(8), test, beta0, ErrorLaw.T1)
    assert m.accuracy == pytest.approx(1.0)
    with pytest.raises(ValueError):
        metrics(0.0, np.zeros(8), Dataset(np.empty((0, 8)), np.empty(0)), beta0)


def test_oracles():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((80, 4))
    y = 1 + X @ [2.0, 0.0, -1.0, 0.0] + 0.5 * rng.standard_normal(80)
    a, b = oracle_ls(X, y, np.arange(4))
    A = np.column_stack([np.ones(80), X])
    sol = np.linalg.lstsq(A, y, rcond=None)[0]
    np.testing.assert_allclose(np.r_[a, b], sol)
    a, b = oracle_ls(X, y, [0, 2])
    assert b[1] == 0 and b[3] == 0
    am, bm = oracle_mm(X, y, [0, 2], random_state=0)
    np.testing.assert_allclose(bm[[0, 2]], [2.0, -1.0], atol=0.2)
    yt = 1 + X @ [2.0, 0.0, -1.0, 0.0] + rng.standard_t(1, 80)
    at, bt = oracle_tml(X, yt, [0, 2], df=1.0, random_state=0)
    np.testing.assert_allclose(bt[[0, 2]], [2.0, -1.0], atol=0.5)
    with pytest.raises(ValueError):
        oracle_ls(X, y, [])
    with pytest.raises(np.linalg.LinAlgError):
        oracle_ls(np.column_stack([X[:, 0], X[:, 0]]), y, [0, 1])


def test_monte_carlo_is_reproducible_and_order_free():
    cfg = scenario_config(1)
    r1 = run_monte_carlo(cfg, ("lslasso", "oracle"), M=2, seed=11)
    r2 = run_monte_carlo(cfg, ("lslasso", "oracle"), M=2, seed=11)
    assert r1.to_json() == r2.to_json() and r1.to_csv() == r2.to_csv()
    r3 = run_monte_carlo(cfg, ("lslasso", "oracle"), M=2, seed=11, jobs=2)
    assert r3.to_json() == r1.to_json()
    r4 = run_monte_carlo(cfg, ("lslasso", "oracle"), M=2, seed=12)
    assert r4.to_json() != r1.to_json()


def test_contaminated_report_structure(tmp_path):
    cfg = scenario_config(1)
    rep = run_monte_carlo(cfg, ("lslasso", "oracle-mm"), M=2, y0_grid=(0.0, 10.0), seed=1)
    assert len(rep.records) == 2 * 2 * 2
    curve = rep.curve("lslasso")
    summary = rep.summary()
    # contaminated summaries are maxima of the replication-averaged curves
    assert summary["lslasso"]["accuracy"] == max(v["accuracy"] for v in curve.values())
    paths = rep.write(tmp_path)
    assert sorted(p.name for p in paths) == ["curve.csv", "report.csv", "report.json"]
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["contaminated"] and doc["y0_grid"] == [0.0, 10.0]
    lines = (tmp_path / "curve.csv").read_text().splitlines()
    assert lines[0] == "y0,estimator,mean_RMSE,mean_FNR,mean_FPR" and len(lines) == 5
    assert "Max. RMSE" in rep.format_table()
    for row in rep.records:
        assert 0 <= row["fnr"] <= 1 and 0 <= row["fpr"] <= 1


def test_failures_are_recorded(monkeypatch):
    def boom(*args, **kwargs):
        raise np.linalg.LinAlgError("singular")

    monkeypatch.setattr(runner, "oracle_ls", boom)
    rep = run_monte_carlo(scenario_config(1), ("lslasso", "oracle"), M=1, seed=0)
    assert rep.failures("oracle") == 1 and rep.failures("lslasso") == 0
    assert not rep.all_converged
    assert np.isnan(rep.summary()["oracle"]["accuracy"])
    assert json.loads(rep.to_json())["summary"]["oracle"]["accuracy"] is None
    with pytest.raises(ValueError):
        rep.curve("oracle")


def test_runner_argument_checks():
    with pytest.raises(ValueError):
        run_monte_carlo(scenario_config(1), ("nope",), M=1)
    with pytest.raises(ValueError):
        run_monte_carlo(scenario_config(1), ("lslasso",), M=0)
    assert runner.default_jobs() >= 1


def test_streams_are_keyed():
    a = replication_stream(1, 2, 3).standard_normal(4)
    b = replication_stream(1, 2, 3).standard_normal(4)
    c = replication_stream(1, 2, 4).standard_normal(4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_ar_covariance():
    np.testing.assert_allclose(ar_covariance(3, 0.5), [[1, .5, .25], [.5, 1, .5], [.25, .5, 1]])
