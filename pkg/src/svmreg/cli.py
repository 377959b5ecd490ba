"""Command-line interface: ``svmreg {fit,predict,simulate,cv,check}``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
Every JSON report embeds a ``manifest``; the ``timing`` block (timestamp and
runtimes) is the only part that varies between identical runs.
"""
from __future__ import annotations

import argparse
import io
import json
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np
from scipy.special import expit

from .baselines import fit_logistic, logistic_sandwich
from .inference import IllConditionedError, check_existence, infer
from .model import Dataset, _log_density_t, margins, poly_feature_names, poly_features, sign_rule
from .optimizer import OptOptions, fit_approximate, fit_mle, fit_svm
from .simulate import (
    METHODS,
    AccConfig,
    MseConfig,
    cv_compare,
    format_mse_table,
    format_accuracy_table,
    make_folds,
    run_accuracy_experiment,
    run_mse_experiment,
)
from .tabular import CsvSchema, DataError, dumps_json, manifest, read_csv, timestamp, write_atomic

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

MODELS = ("svmreg", "logistic", "svm", "approx")


class UsageError(Exception):
    pass


def _schema(args) -> CsvSchema:
    feats = tuple(f.strip() for f in args.features.split(",")) if args.features else None
    return CsvSchema(args.label_column, feats, args.label_encoding)


def _expand(X, names, poly):
    if poly is None:
        return X, list(names)
    return (poly_features(X, poly["c"], poly["u"]),
            poly_feature_names(names, poly["c"], poly["u"]))


def _emit(obj, out, stdout):
    text = dumps_json(obj)
    if out:
        write_atomic(out, text)
    else:
        stdout.write(text)


def _warn_lines(caught) -> list[str]:
    return [str(w.message) for w in caught]


def cmd_fit(args, stdout) -> int:
    table = read_csv(args.input, _schema(args))
    poly = None
    if args.poly_u is not None:
        poly = {"c": args.poly_c, "u": args.poly_u}
    elif args.poly_c is not None:
        raise UsageError("--poly-c needs --poly-u")
    if poly is not None and poly["c"] is None:
        poly["c"] = 1.0
    X, names = _expand(table.X, table.feature_names, poly)
    data = Dataset(X, table.y)
    # the SVM objective is convex, one start is enough
    starts = args.starts or (1 if args.model == "svm" else OptOptions.n_starts)
    opts = OptOptions(n_starts=starts, seed=args.seed)
    existence = check_existence(data)
    names_all = ["(intercept)"] + names
    result = {"model": args.model}
    inference = None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if args.model == "svmreg":
            fit = fit_mle(data, opts)
            theta = fit.theta_hat
            result.update(loglik=fit.loglik, total_loglik=fit.total_loglik, converged=fit.converged,
                          fit={"n_iter": fit.n_iter, "grad_norm": fit.grad_norm,
                               "start_index": fit.start_index, "message": fit.message,
                               "all_start_logliks": fit.all_start_logliks})
            try:
                inference = infer(data, theta)
            except (IllConditionedError, ValueError) as err:
                result["inference_error"] = str(err)
        elif args.model == "logistic":
            if not existence.both_labels_present:
                raise DataError("logistic regression needs both label classes")
            fit = fit_logistic(data)
            theta = fit.theta_tilde
            result.update(loglik=fit.loglik / data.n, total_loglik=fit.loglik,
                          converged=fit.converged,
                          fit={"n_iter": fit.n_iter, "separated": fit.separated})
            try:
                inference = logistic_sandwich(data, fit)
            except (IllConditionedError, ValueError) as err:
                result["inference_error"] = str(err)
        else:
            if args.model == "svm":
                fit = fit_svm(data, args.lam, opts, full_output=True)
            else:
                fit = fit_approximate(data, opts)
            theta = fit.theta_hat
            result.update(objective=fit.objective, converged=fit.converged,
                          fit={"n_iter": fit.n_iter, "grad_norm": fit.grad_norm,
                               "start_index": fit.start_index, "message": fit.message,
                               "all_start_objectives": fit.all_start_objectives})
    v = theta.vector
    coefs = []
    for j, name in enumerate(names_all):
        row = {"name": name, "estimate": float(v[j])}
        if inference is not None:
            row.update(se=float(inference.se[j]), z=float(inference.z[j]), p=float(inference.p[j]))
        coefs.append(row)
    pred = sign_rule(margins(data.X, v))
    config = {"model": args.model, "starts": opts.n_starts, "lambda": args.lam, "poly": poly,
              "schema": table.schema.to_dict()}
    report = {
        "manifest": manifest("fit", config, args.seed, [args.input]),
        **result,
        "schema": table.schema.to_dict(),
        "poly": poly,
        "features": names,
        "n": data.n,
        "theta": v.tolist(),
        "coefficients": coefs,
        "in_sample_accuracy": float(np.mean(pred == data.y)),
        "existence": existence.to_dict(),
        "inference": None if inference is None else inference.to_dict(),
        "warnings": _warn_lines(caught),
        "timing": {"timestamp": timestamp()},
    }
    _emit(report, args.out, stdout)
    if args.out:
        _print_fit(report, stdout)
    return EXIT_OK


def _print_fit(report, stdout):
    stdout.write(f"model {report['model']}  n={report['n']}  "
                 f"in-sample accuracy {report['in_sample_accuracy']:.4f}\n")
    if "total_loglik" in report:
        stdout.write(f"log-likelihood {report['total_loglik']:.2f} (mean {report['loglik']:.6f})\n")
    for c in report["coefficients"]:
        extra = f"  se {c['se']:.4f}  z {c['z']:8.3f}  p {c['p']:.3g}" if "se" in c else ""
        stdout.write(f"  {c['name']:<20} {c['estimate']:10.4f}{extra}\n")
    for w in report["warnings"]:
        stdout.write(f"warning: {w}\n")


def cmd_predict(args, stdout) -> int:
    try:
        report = json.loads(Path(args.report).read_text(encoding="utf-8"))
        model = report["model"]
        schema_d = report["schema"]
        theta = np.asarray(report["theta"], dtype=float)
    except (OSError, ValueError, KeyError) as err:
        raise DataError(f"unreadable model report {args.report}: {err}") from None
    schema = CsvSchema(schema_d["label_column"], tuple(schema_d["feature_columns"]),
                       schema_d["label_encoding"])
    table = read_csv(args.input, schema, require_label=False)
    X, _ = _expand(table.X, table.feature_names, report.get("poly"))
    if X.shape[1] != theta.size - 1:
        raise DataError(f"expanded features ({X.shape[1]}) do not match the fitted model ({theta.size - 1})")
    t = margins(X, theta)
    labels = sign_rule(t)
    prob = None
    if model == "svmreg":
        prob = np.exp(_log_density_t(1, t))
    elif model == "logistic":
        prob = expit(t)
    buf = io.StringIO()
    buf.write("row,label" + (",prob" if prob is not None else "") + "\n")
    for i, lab in enumerate(labels):
        buf.write(f"{i},{int(lab)}" + (f",{float(prob[i])!r}" if prob is not None else "") + "\n")
    if args.out:
        write_atomic(args.out, buf.getvalue())
    else:
        stdout.write(buf.getvalue())
    if table.y is not None:
        acc = float(np.mean(labels == table.y))
        (sys.stderr if not args.out else stdout).write(f"accuracy {acc:.4f}\n")
    return EXIT_OK


def _grid(text, cast):
    return tuple(cast(v) for v in text.split(",")) if text else None


def cmd_simulate(args, stdout) -> int:
    cfg_cls = MseConfig if args.study == "mse" else AccConfig
    fields = {}
    if args.config:
        try:
            fields = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, ValueError) as err:
            raise UsageError(f"cannot read config {args.config}: {err}") from None
    overrides = {"R": args.R, "seed": args.seed, "n_grid": _grid(args.n_grid, int),
                 "d_grid": _grid(args.d_grid, int)}
    if args.study == "acc":
        overrides.update(omega_bar_grid=_grid(args.omega_bar_grid, float), N=args.N)
    fields.update({k: v for k, v in overrides.items() if v is not None})
    opts = OptOptions(**fields.pop("opts", {}))
    if args.starts is not None:
        opts = replace(opts, n_starts=args.starts)
    for key in ("n_grid", "d_grid", "omega_bar_grid"):
        if key in fields:
            fields[key] = tuple(fields[key])
    try:
        cfg = cfg_cls(opts=opts, **fields)
    except (TypeError, ValueError) as err:
        raise UsageError(f"invalid simulation config: {err}") from None
    progress = (lambda m: sys.stderr.write(m + "\n")) if args.verbose else None
    if args.study == "mse":
        rep = run_mse_experiment(cfg, workers=args.workers, progress=progress)
        table = format_mse_table(rep)
    else:
        rep = run_accuracy_experiment(cfg, workers=args.workers, progress=progress)
        table = format_accuracy_table(rep)
    body = rep.to_dict()
    out = {"manifest": manifest("simulate", body.pop("config"), cfg.seed), **body,
           "table": table.splitlines(),
           "timing": {"timestamp": timestamp(), "runtime_s": rep.runtime_s}}
    if args.out:
        write_atomic(args.out, dumps_json(out))
    if args.table_out:
        write_atomic(args.table_out, table + "\n")
    if args.out:
        stdout.write(table + "\n")
    else:
        # keep stdout parseable as JSON
        sys.stderr.write(table + "\n")
        stdout.write(dumps_json(out))
    return EXIT_OK


def cmd_cv(args, stdout) -> int:
    table = read_csv(args.input, _schema(args))
    data = table.dataset()
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise UsageError(f"unknown methods {unknown}; choose from {sorted(METHODS)}")
    if args.k < 2 or args.k > data.n:
        raise UsageError("--k must satisfy 2 <= k <= n")
    opts = OptOptions(n_starts=args.starts or OptOptions.n_starts, seed=args.seed)
    rng = np.random.default_rng(args.seed)
    fold_sizes = [len(f) for f in make_folds(data.n, args.k, np.random.default_rng(args.seed))]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = cv_compare(data, args.k, methods, rng, opts)
    out = {
        "manifest": manifest("cv", {"k": args.k, "methods": methods, "starts": args.starts,
                                    "schema": table.schema.to_dict()}, args.seed, [args.input]),
        "k": args.k,
        "fold_sizes": fold_sizes,
        "methods": res,
        "warnings": _warn_lines(caught),
        "timing": {"timestamp": timestamp()},
    }
    _emit(out, args.out, stdout)
    if args.out:
        for m, r in res.items():
            stdout.write(f"{m:<10} {r['mean']:.4f} ({r['sd']:.4f})\n")
    return EXIT_OK


def cmd_check(args, stdout) -> int:
    table = read_csv(args.input, _schema(args))
    rep = check_existence(table.dataset())
    out = {"manifest": manifest("check", {"schema": table.schema.to_dict()}, None, [args.input]),
           **rep.to_dict(), "timing": {"timestamp": timestamp()}}
    _emit(out, args.out, stdout)
    if args.out:
        stdout.write(f"{rep.details}\n")
    return EXIT_OK


def _add_schema_args(p):
    p.add_argument("--label-column", default="y")
    p.add_argument("--features", default=None, help="comma-separated feature columns (default: all others)")
    p.add_argument("--label-encoding", choices=("auto", "pm1", "01"), default="auto")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="svmreg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model to a CSV file")
    p.add_argument("input")
    p.add_argument("--model", choices=MODELS, default="svmreg")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--starts", type=int, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="SVM ridge penalty (default 1/n)")
    p.add_argument("--poly-c", type=float, default=None)
    p.add_argument("--poly-u", type=int, default=None)
    p.add_argument("--out", default=None)
    _add_schema_args(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict labels from a fitted report")
    p.add_argument("report")
    p.add_argument("input")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("simulate", help="run a Monte-Carlo study")
    p.add_argument("--study", choices=("mse", "acc"), required=True)
    p.add_argument("--config", default=None, help="JSON file with config fields")
    p.add_argument("--R", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--n-grid", default=None)
    p.add_argument("--d-grid", default=None)
    p.add_argument("--omega-bar-grid", default=None)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--starts", type=int, default=None)
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: $SVMREG_THREADS or 1)")
    p.add_argument("--out", default=None)
    p.add_argument("--table-out", default=None)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("cv", help="k-fold cross-validated accuracy")
    p.add_argument("input")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--methods", default="svmreg,svm")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--starts", type=int, default=None)
    p.add_argument("--out", default=None)
    _add_schema_args(p)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("check", help="existence diagnostics for a CSV file")
    p.add_argument("input")
    p.add_argument("--out", default=None)
    _add_schema_args(p)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, stdout)
    except UsageError as err:
        sys.stderr.write(f"svmreg: usage error: {err}\n")
        return EXIT_USAGE
    except DataError as err:
        sys.stderr.write(f"svmreg: data error: {err}\n")
        return EXIT_DATA
    except (IllConditionedError, np.linalg.LinAlgError, RuntimeError, FloatingPointError) as err:
        sys.stderr.write(f"svmreg: numerical failure: {err}\n")
        return EXIT_NUMERIC
    except ValueError as err:
        sys.stderr.write(f"svmreg: data error: {err}\n")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
