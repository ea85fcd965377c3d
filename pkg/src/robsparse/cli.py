"""Command-line interface: ``robsparse {fit,cv,simulate,constants}``.

Exit codes: 0 success; 2 bad input or usage; 3 outputs written but some fit
did not converge (suppressed by ``--allow-nonconverged``); 1 anything else.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .asymptotics import asymptotic_constants, parse_error_dist
from .estimators import AdaptiveMMLasso, MMLasso, SRidge
from .exceptions import ConvergenceError, DegenerateDataError
from .kernels import RhoSpec, tune_for_efficiency, tune_for_scale_consistency
from .simbench import (DEFAULT_Y0_GRID, ESTIMATORS, AdaptiveLSLasso, LSLasso, default_jobs,
                       run_monte_carlo, scenario_config)

logger = logging.getLogger("robsparse")

EXIT_OK, EXIT_ERROR, EXIT_INPUT, EXIT_NONCONVERGED = 0, 1, 2, 3
FIT_ESTIMATORS = ("mmlasso", "adaptive-mmlasso", "sridge", "lslasso", "adaptive-lslasso")


class InputError(Exception):
    """Problem with user-supplied files or flags (exit code 2)."""


# -- CSV input ----------------------------------------------------------------

def read_csv(path, response_col=None):
    """Read a numeric CSV with a header row.

    Returns ``(X, y, feature_names, response_name)``.  The response is the last
    column unless ``response_col`` names a header or gives a 0-based index.
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"input file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InputError(f"{path}: file is empty (a header row is required)")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise InputError(f"{path}:1: duplicate column names in header")
    if len(header) < 2:
        raise InputError(f"{path}:1: need at least one carrier and a response column")
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise InputError(f"{path}:{lineno}: expected {len(header)} fields, found {len(row)}")
        values = []
        for name, cell in zip(header, row):
            try:
                v = float(cell)
            except ValueError:
                raise InputError(
                    f"{path}:{lineno}: column {name!r}: cannot parse {cell.strip()!r} as a number"
                ) from None
            if not math.isfinite(v):
                raise InputError(f"{path}:{lineno}: column {name!r}: value must be finite")
            values.append(v)
        data.append(values)
    if not data:
        raise InputError(f"{path}: no data rows")
    M = np.array(data)
    j = _response_index(header, response_col, path)
    X = np.delete(M, j, axis=1)
    names = [h for i, h in enumerate(header) if i != j]
    return X, M[:, j], names, header[j]


def _response_index(header, response_col, path):
    if response_col is None:
        return len(header) - 1
    if response_col in header:
        return header.index(response_col)
    try:
        j = int(response_col)
    except ValueError:
        raise InputError(f"{path}: response column {response_col!r} not in header") from None
    if not -len(header) <= j < len(header):
        raise InputError(f"{path}: response column index {j} out of range")
    return j % len(header)


# -- estimator construction ----------------------------------------------------

def _make_estimator(args):
    kind = args.estimator
    seed = args.seed
    if kind == "mmlasso":
        return MMLasso(lam=args.lam, gamma=args.gamma, random_state=seed)
    if kind == "adaptive-mmlasso":
        return AdaptiveMMLasso(iota=args.iota, lam=args.lam, gamma=args.gamma, random_state=seed)
    if kind == "sridge":
        return SRidge(gamma=args.gamma, random_state=seed)
    if kind == "lslasso":
        return LSLasso(lam=args.lam, random_state=seed)
    if kind == "adaptive-lslasso":
        return AdaptiveLSLasso(lam=args.iota, random_state=seed)
    raise InputError(f"unknown estimator {kind!r}")


def _fit_summary(est, names, response, kind):
    conv = bool(getattr(est, "converged_", True))
    return {
        "estimator": kind,
        "response": response,
        "intercept": float(est.intercept_),
        "coefficients": {nm: float(c) for nm, c in zip(names, est.coef_)},
        "scale": _opt_float(getattr(est, "scale_", None)),
        "lambda": _opt_float(getattr(est, "lambda_", None)),
        "iota": _opt_float(getattr(est, "iota_", None)),
        "gamma": _opt_float(getattr(est, "gamma_", None)),
        "iterations": getattr(est, "n_iter_", None),
        "converged": conv,
    }


def _opt_float(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def _cv_summary(est, kind):
    out = {"estimator": kind}
    for attr, label in (("gamma_cv_", "gamma"), ("cv_result_", "lambda"),
                        ("iota_cv_result_", "iota")):
        cv = getattr(est, attr, None)
        if cv is not None:
            out[label] = _jsonable(cv.as_dict())
    if hasattr(est, "cv_criterion_"):
        out["lambda"] = {"candidates": est.lambda_grid_.tolist(),
                         "criterion": est.cv_criterion_.tolist(),
                         "selected": est.lambda_}
    return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return _opt_float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _write_json(path: Path, doc):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# -- commands -----------------------------------------------------------------

def cmd_fit(args) -> int:
    X, y, names, response = read_csv(args.input, args.response_col)
    est = _make_estimator(args).fit(X, y)
    doc = _fit_summary(est, names, response, args.estimator)
    out = Path(args.output)
    _write_json(out / "fit.json", doc)
    with (out / "coefficients.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["term", "estimate"])
        w.writerow(["(intercept)", repr(float(est.intercept_))])
        for nm, c in zip(names, est.coef_):
            w.writerow([nm, repr(float(c))])
    print(json.dumps(doc, indent=2, sort_keys=True))
    return _convergence_exit(doc["converged"], args)


def cmd_cv(args) -> int:
    X, y, names, _ = read_csv(args.input, args.response_col)
    if args.estimator == "sridge":
        args.gamma = None
    elif args.estimator in ("mmlasso", "lslasso"):
        args.lam = None
    else:
        args.iota = None
    est = _make_estimator(args).fit(X, y)
    doc = _cv_summary(est, args.estimator)
    doc["converged"] = bool(getattr(est, "converged_", True))
    _write_json(Path(args.output) / "cv.json", doc)
    print(json.dumps(doc, indent=2, sort_keys=True))
    return _convergence_exit(doc["converged"], args)


def cmd_simulate(args) -> int:
    try:
        cfg = scenario_config(args.scenario, args.errors)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    y0_grid = None
    if args.contaminate:
        y0_grid = tuple(args.y0_grid) if args.y0_grid else DEFAULT_Y0_GRID
    if args.estimators:
        names = tuple(args.estimators)
    else:
        oracle = "oracle-mm" if args.contaminate else "oracle"
        names = ("mmlasso", "adaptive-mmlasso", "lslasso", "adaptive-lslasso", oracle)
    bad = [e for e in names if e not in ESTIMATORS]
    if bad:
        raise InputError(f"unknown estimators {bad}; choose from {list(ESTIMATORS)}")
    if args.M < 1:
        raise InputError("--M must be at least 1")
    jobs = args.jobs if args.jobs else default_jobs()
    report = run_monte_carlo(cfg, names, M=args.M, y0_grid=y0_grid, seed=args.seed, jobs=jobs)
    report.write(args.output)
    print(report.format_table())
    return _convergence_exit(report.all_converged, args)


def cmd_constants(args) -> int:
    try:
        dist = parse_error_dist(args.errors_dist)
        c0 = tune_for_scale_consistency(args.b)
        c1 = tune_for_efficiency(args.efficiency)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    k = asymptotic_constants(RhoSpec(c0), RhoSpec(c1), args.b, dist)
    doc = {"c0": c0, "c1": c1, "b": args.b, "target_efficiency": args.efficiency,
           "errors": args.errors_dist, "s0": k.s0, "a": k.a, "bconst": k.bconst,
           "efficiency": _opt_float(k.efficiency), "oracle_variance_factor": k.variance_factor}
    if args.output:
        _write_json(Path(args.output), doc)
    print(json.dumps(doc, indent=2, sort_keys=True))
    return EXIT_OK


def _convergence_exit(converged: bool, args) -> int:
    if converged or args.allow_nonconverged:
        return EXIT_OK
    logger.error("some fits did not converge (use --allow-nonconverged to accept)")
    return EXIT_NONCONVERGED


# -- argument parsing ---------------------------------------------------------

def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _names(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def _common(p):
    p.add_argument("--config", help="JSON file with option values; flags override it")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--allow-nonconverged", action="store_true")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robsparse", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    parser.commands = {}

    for name, helptext in (("fit", "fit an estimator to a CSV file"),
                           ("cv", "cross-validate the penalty of an estimator")):
        p = parser.commands[name] = sub.add_parser(name, help=helptext)
        _common(p)
        p.add_argument("--input", help="CSV with header; response in the last column")
        p.add_argument("--response-col", help="response column name or 0-based index")
        p.add_argument("--estimator", choices=FIT_ESTIMATORS, default="mmlasso")
        p.add_argument("--lambda", dest="lam", type=float,
                       help="MM-Lasso (or LS-Lasso) penalty; omitted means cross-validate")
        p.add_argument("--iota", type=float, help="adaptive-step penalty")
        p.add_argument("--gamma", type=float, help="S-Ridge penalty")
        p.add_argument("--output", default=".", help="output directory")

    p = parser.commands["simulate"] = sub.add_parser("simulate", help="run the Monte Carlo benchmark")
    _common(p)
    p.add_argument("--scenario", type=int, default=None)
    p.add_argument("--errors", choices=("normal", "t3", "t1"), default="normal")
    p.add_argument("--contaminate", action="store_true")
    p.add_argument("--y0-grid", type=_floats, default=None)
    p.add_argument("--M", type=int, default=None,
                   help="replications (default 100 clean, 50 contaminated)")
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
    p.add_argument("--estimators", type=_names, default=None,
                   help=f"comma-separated subset of {','.join(ESTIMATORS)}")
    p.add_argument("--output", default="simulation", help="output directory")

    p = parser.commands["constants"] = sub.add_parser("constants", help="tuning and asymptotic constants")
    _common(p)
    p.add_argument("--b", type=float, default=0.5)
    p.add_argument("--efficiency", type=float, default=0.85)
    p.add_argument("--errors", dest="errors_dist", default="normal",
                   help="normal, normal:SIGMA, t3, t1 or t:DF")
    p.add_argument("--output", default=None, help="optional JSON output file")
    return parser


def _load_config(path, command):
    p = Path(path)
    if not p.is_file():
        raise InputError(f"config file not found: {p}")
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{p}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise InputError(f"{p}: expected a JSON object")
    out = {}
    for key, value in raw.items():
        dest = key.replace("-", "_")
        if dest == "lambda":
            dest = "lam"
        elif dest == "errors" and command == "constants":
            dest = "errors_dist"
        elif dest == "y0_grid" and isinstance(value, str):
            value = _floats(value)
        elif dest == "estimators" and isinstance(value, str):
            value = _names(value)
        out[dest] = value
    return out


def parse_args(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        defaults = _load_config(args.config, args.command)
        sub = parser.commands[args.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(defaults) - known)
        if unknown:
            raise InputError(f"{args.config}: unknown option(s) {unknown}")
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    if args.command == "simulate":
        if args.scenario is None:
            raise InputError("--scenario is required")
        if args.M is None:
            args.M = 50 if args.contaminate else 100
    if args.command in ("fit", "cv") and not args.input:
        raise InputError("--input is required")
    return args


COMMANDS = {"fit": cmd_fit, "cv": cmd_cv, "simulate": cmd_simulate, "constants": cmd_constants}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="robsparse: %(levelname)s: %(message)s")
    try:
        args = parse_args(argv)
        if args.verbose:
            logging.getLogger().setLevel(logging.INFO)
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"robsparse: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ConvergenceError, DegenerateDataError, ValueError) as exc:
        print(f"robsparse: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
