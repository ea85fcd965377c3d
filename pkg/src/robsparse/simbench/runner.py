"""Monte Carlo driver: replications, outlier-size sweeps and reports."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..estimators import AdaptiveMMLasso, MMLasso
from ..exceptions import ConvergenceError, DegenerateDataError
from .baselines import AdaptiveLSLasso, LSLasso, oracle_ls, oracle_mm, oracle_tml
from .contamination import ContaminationSpec, contaminate
from .metrics import metrics
from .scenarios import ScenarioConfig, generate_scenario

logger = logging.getLogger(__name__)

__all__ = ["ESTIMATORS", "ScenarioReport", "run_monte_carlo", "replication_stream", "default_jobs"]

ESTIMATORS = ("mmlasso", "adaptive-mmlasso", "lslasso", "adaptive-lslasso",
              "oracle", "oracle-mm")
_FIT_ERRORS = (ConvergenceError, DegenerateDataError, np.linalg.LinAlgError,
               ValueError, FloatingPointError)


def replication_stream(seed: int, *key: int) -> np.random.Generator:
    """Counter-based stream for ``key`` (scenario, replication, ...).

    Streams depend only on ``(seed, key)``, so serial and parallel runs draw
    identical numbers.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def _fit_estimators(names, X, y, cfg: ScenarioConfig, rng_for):
    """Fit every requested estimator; returns {name: (intercept, coef, converged)}."""
    out = {}
    todo = list(names)
    if "adaptive-mmlasso" in todo:
        est = AdaptiveMMLasso(random_state=rng_for("adaptive-mmlasso")).fit(X, y)
        out["adaptive-mmlasso"] = (est.intercept_, est.coef_, bool(est.converged_))
        if "mmlasso" in todo:
            # the pilot of the adaptive fit is the MM-Lasso itself
            out["mmlasso"] = (est.pilot_intercept_, est.pilot_coef_,
                              bool(est.pilot_.converged))
    if "adaptive-lslasso" in todo:
        est = AdaptiveLSLasso(random_state=rng_for("adaptive-lslasso")).fit(X, y)
        out["adaptive-lslasso"] = (est.intercept_, est.coef_, True)
        if "lslasso" in todo:
            out["lslasso"] = (est.pilot_.intercept_, est.pilot_.coef_, True)
    for name in todo:
        if name in out:
            continue
        if name == "mmlasso":
            est = MMLasso(random_state=rng_for(name)).fit(X, y)
            out[name] = (est.intercept_, est.coef_, bool(est.converged_))
        elif name == "lslasso":
            est = LSLasso(random_state=rng_for(name)).fit(X, y)
            out[name] = (est.intercept_, est.coef_, True)
        elif name == "oracle":
            df = cfg.error_law.df
            if df is None:
                a, b = oracle_ls(X, y, cfg.support)
            else:
                a, b = oracle_tml(X, y, cfg.support, df, rng_for(name))
            out[name] = (a, b, True)
        elif name == "oracle-mm":
            a, b = oracle_mm(X, y, cfg.support, rng_for(name))
            out[name] = (a, b, True)
    return out


def _fit_one_by_one(names, X, y, cfg, rng_for):
    """Like ``_fit_estimators`` but isolating failures per estimator."""
    try:
        return _fit_estimators(names, X, y, cfg, rng_for), {}
    except _FIT_ERRORS:
        pass
    results, errors = {}, {}
    for name in names:
        try:
            results.update({name: _fit_estimators([name], X, y, cfg, rng_for)[name]})
        except _FIT_ERRORS as exc:
            logger.warning("%s failed: %s", name, exc)
            errors[name] = f"{type(exc).__name__}: {exc}"
    return results, errors


def _replication(task):
    cfg, names, seed, rep, y0_grid, spec = task
    train, test = generate_scenario(cfg, replication_stream(seed, cfg.id, rep, 0))
    beta0 = cfg.beta
    records = []
    points = [None] if y0_grid is None else list(enumerate(y0_grid))
    for point in points:
        if point is None:
            y0_idx, y0, data = 0, None, train
        else:
            y0_idx, y0 = point
            data = contaminate(train, y0, spec)

        def rng_for(name, _i=y0_idx):
            return replication_stream(seed, cfg.id, rep, 1, _i, ESTIMATORS.index(name))

        fits, errors = _fit_one_by_one(names, data.X, data.y, cfg, rng_for)
        for name in names:
            rec = {"rep": rep, "y0": y0, "estimator": name}
            if name in fits:
                a, b, conv = fits[name]
                m = metrics(a, b, test, beta0, cfg.error_law)
                rec.update(accuracy=m.accuracy, fnr=m.fnr, fpr=m.fpr, converged=conv,
                           failed=False, error=None)
            else:
                rec.update(accuracy=None, fnr=None, fpr=None, converged=False,
                           failed=True, error=errors.get(name))
            records.append(rec)
    return records


@dataclass
class ScenarioReport:
    scenario: int
    errors: str
    accuracy_metric: str
    n: int
    p: int
    M: int
    seed: int
    estimators: tuple
    y0_grid: tuple | None
    records: list = field(repr=False)

    @property
    def contaminated(self) -> bool:
        return self.y0_grid is not None

    def _values(self, name, key, y0=None):
        return np.array([r[key] for r in self.records
                         if r["estimator"] == name and not r["failed"]
                         and (y0 is None or r["y0"] == y0)], dtype=float)

    def failures(self, name) -> int:
        return sum(1 for r in self.records if r["estimator"] == name and r["failed"])

    def nonconverged(self, name) -> int:
        return sum(1 for r in self.records
                   if r["estimator"] == name and not r["failed"] and not r["converged"])

    @property
    def all_converged(self) -> bool:
        return all(r["converged"] and not r["failed"] for r in self.records)

    def curve(self, name) -> dict:
        """Replication means per outlier size: {y0: {accuracy, fnr, fpr}}."""
        if not self.contaminated:
            raise ValueError("clean runs have no outlier-size curve")
        out = {}
        for y0 in self.y0_grid:
            out[y0] = {k: _mean(self._values(name, k, y0)) for k in ("accuracy", "fnr", "fpr")}
        return out

    def summary(self) -> dict:
        """Per estimator: mean metrics (clean) or maxima over y0 of the mean curves."""
        out = {}
        for name in self.estimators:
            if self.contaminated:
                cur = self.curve(name)
                row = {k: _nanmax([cur[y0][k] for y0 in self.y0_grid])
                       for k in ("accuracy", "fnr", "fpr")}
            else:
                row = {k: _mean(self._values(name, k)) for k in ("accuracy", "fnr", "fpr")}
            row["failures"] = self.failures(name)
            row["nonconverged"] = self.nonconverged(name)
            out[name] = row
        return out

    # -- serialisation ------------------------------------------------------

    def _header(self):
        return {"scenario": self.scenario, "errors": self.errors, "n": self.n, "p": self.p,
                "M": self.M, "seed": self.seed, "contaminated": self.contaminated,
                "accuracy_metric": self.accuracy_metric,
                "y0_grid": list(self.y0_grid) if self.contaminated else None,
                "estimators": list(self.estimators)}

    def to_json(self) -> str:
        doc = self._header()
        doc["summary"] = self.summary()
        if self.contaminated:
            doc["curves"] = {name: {_fmt(y0): v for y0, v in self.curve(name).items()}
                             for name in self.estimators}
        doc["records"] = self.records
        return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scenario", "errors", "contaminated", "estimator", "metric", "value"])
        kind = "max_" if self.contaminated else "mean_"
        for name, row in self.summary().items():
            for key, label in (("accuracy", self.accuracy_metric), ("fnr", "FNR"), ("fpr", "FPR")):
                w.writerow([self.scenario, self.errors, int(self.contaminated), name,
                            kind + label, _fmt(row[key])])
            w.writerow([self.scenario, self.errors, int(self.contaminated), name,
                        "failures", row["failures"]])
            w.writerow([self.scenario, self.errors, int(self.contaminated), name,
                        "nonconverged", row["nonconverged"]])
        return buf.getvalue()

    def curve_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["y0", "estimator", "mean_" + self.accuracy_metric, "mean_FNR", "mean_FPR"])
        for name in self.estimators:
            for y0, v in self.curve(name).items():
                w.writerow([_fmt(y0), name, _fmt(v["accuracy"]), _fmt(v["fnr"]), _fmt(v["fpr"])])
        return buf.getvalue()

    def write(self, directory) -> list[Path]:
        """Write ``report.csv``, ``report.json`` and (contaminated runs) ``curve.csv``."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        files = {"report.csv": self.to_csv(), "report.json": self.to_json()}
        if self.contaminated:
            files["curve.csv"] = self.curve_csv()
        paths = []
        for fname, text in files.items():
            path = d / fname
            path.write_text(text, encoding="utf-8")
            paths.append(path)
        return paths

    def format_table(self) -> str:
        title = (f"Scenario {self.scenario} (n={self.n}, p={self.p}), {self.errors} errors, "
                 + (f"contaminated, M={self.M}" if self.contaminated else f"M={self.M}"))
        acc = ("Max. " if self.contaminated else "") + self.accuracy_metric
        lines = [title, f"{'estimator':<20}{acc:>11}{'FNR':>8}{'FPR':>8}{'fail':>6}"]
        for name, row in self.summary().items():
            lines.append(f"{name:<20}{_num(row['accuracy']):>11}{_num(row['fnr']):>8}"
                         f"{_num(row['fpr']):>8}{row['failures']:>6}")
        return "\n".join(lines)


def _mean(v):
    return float(np.mean(v)) if v.size else float("nan")


def _nanmax(vals):
    vals = [v for v in vals if not math.isnan(v)]
    return max(vals) if vals else float("nan")


def _fmt(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return repr(float(x))


def _num(x):
    return "nan" if math.isnan(x) else f"{x:.2f}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def run_monte_carlo(scenario: ScenarioConfig, estimators=ESTIMATORS, M: int = 100,
                    y0_grid=None, seed: int = 0, jobs: int = 1,
                    contamination: ContaminationSpec | None = None) -> ScenarioReport:
    """Run ``M`` replications of ``scenario`` for the named estimators.

    With ``y0_grid`` each replication's training sample is contaminated at
    every outlier size in turn (the test sample never is).  Failed fits are
    recorded, not raised.  ``jobs > 1`` distributes replications over worker
    processes; results are merged in replication order, so the report does not
    depend on ``jobs``.
    """
    if M < 1:
        raise ValueError("M must be at least 1")
    names = tuple(estimators)
    unknown = set(names) - set(ESTIMATORS)
    if unknown:
        raise ValueError(f"unknown estimators {sorted(unknown)}; choose from {ESTIMATORS}")
    if y0_grid is not None:
        y0_grid = tuple(float(v) for v in y0_grid)
        spec = contamination or ContaminationSpec(y0_grid=y0_grid)
    else:
        spec = None
    tasks = [(scenario, names, seed, rep, y0_grid, spec) for rep in range(M)]
    jobs = max(1, min(int(jobs or 1), M))
    if jobs == 1:
        chunks = [_replication(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_replication, tasks))
    records = [r for chunk in chunks for r in chunk]
    return ScenarioReport(
        scenario=scenario.id, errors=scenario.error_law.value,
        accuracy_metric=scenario.error_law.accuracy_metric, n=scenario.n, p=scenario.p,
        M=M, seed=int(seed), estimators=names, y0_grid=y0_grid, records=records)


def default_jobs() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)
