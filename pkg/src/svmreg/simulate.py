"""Data generators and the Monte-Carlo experiment drivers.

Every replication draws from its own RNG stream seeded by
``(seed, n, d, scenario, r)``, so cells can run in any order (or in worker
processes) and still produce identical reports.
"""
from __future__ import annotations

import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtri

from .baselines import fit_logistic, predict_logistic, predict_svm, train_svm
from .model import Dataset, _log_density_t, margins, predict_map
from .optimizer import OptOptions, fit_mle

__all__ = [
    "MseConfig",
    "AccConfig",
    "CellSummary",
    "ExperimentReport",
    "gen_model_data",
    "gen_mixture_data",
    "mixture_separation",
    "run_mse_experiment",
    "run_accuracy_experiment",
    "kfold_cv",
    "cv_compare",
    "make_folds",
    "METHODS",
    "format_mse_table",
    "format_accuracy_table",
]

THREADS_ENV = "SVMREG_THREADS"


@dataclass(frozen=True)
class MseConfig:
    n_grid: tuple[int, ...] = (100, 200, 500, 1000, 2000)
    d_grid: tuple[int, ...] = (1, 5, 10)
    R: int = 100
    theta0: float = 1.0
    seed: int = 20200315
    opts: OptOptions = OptOptions()

    def __post_init__(self):
        if self.R < 1 or min(self.n_grid) < 1 or min(self.d_grid) < 1:
            raise ValueError("grid values and R must be positive")


@dataclass(frozen=True)
class AccConfig:
    n_grid: tuple[int, ...] = (100, 1000)
    d_grid: tuple[int, ...] = (2, 5)
    omega_bar_grid: tuple[float, ...] = (0.05, 0.5)
    N: int = 1000
    R: int = 100
    seed: int = 20200315
    opts: OptOptions = OptOptions()

    def __post_init__(self):
        if self.R < 1 or self.N < 1 or min(self.n_grid) < 1 or min(self.d_grid) < 1:
            raise ValueError("grid values, N and R must be positive")
        if not all(0 < w < 1 for w in self.omega_bar_grid):
            raise ValueError("omega_bar must lie in (0, 1)")


@dataclass
class CellSummary:
    n: int
    d: int
    scenario: str
    method: str
    mean: float
    sd: float
    R_effective: int
    n_nonconverged: int = 0
    n_failed: int = 0
    values: list[float] = field(default_factory=list)


@dataclass
class ExperimentReport:
    study: str
    config: dict
    cells: list[CellSummary]
    runtime_s: dict[str, float] = field(default_factory=dict)

    def cell(self, n, d, scenario="", method="svmreg") -> CellSummary:
        for c in self.cells:
            if (c.n, c.d, c.scenario, c.method) == (n, d, scenario, method):
                return c
        raise KeyError((n, d, scenario, method))

    def to_dict(self) -> dict:
        return {
            "study": self.study,
            "config": self.config,
            "cells": [asdict(c) for c in self.cells],
        }


def _config_dict(cfg) -> dict:
    out = asdict(cfg)
    out["n_grid"] = list(cfg.n_grid)
    out["d_grid"] = list(cfg.d_grid)
    return out


def _rng(*keys) -> np.random.Generator:
    return np.random.default_rng([int(k) for k in keys])


def _fit_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2**63))


def gen_model_data(n: int, d: int, theta0, rng: np.random.Generator) -> Dataset:
    """Standard normal covariates with labels drawn from the model at ``theta0``."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    X = rng.standard_normal((n, d))
    p_pos = np.exp(_log_density_t(1, margins(X, theta0)))
    y = np.where(rng.random(n) < p_pos, 1, -1)
    return Dataset(X, y)


def mixture_separation(omega_bar: float) -> float:
    """Mean distance giving pairwise overlap ``omega_bar = 2 Phi(-delta/2)``."""
    if not 0 < omega_bar < 1:
        raise ValueError("omega_bar must lie in (0, 1)")
    return float(-2.0 * ndtri(omega_bar / 2.0))


def gen_mixture_data(n: int, d: int, omega_bar: float, rng: np.random.Generator) -> Dataset:
    """Equal-weight two-component spherical normal mixture with overlap ``omega_bar``.

    Components have identity covariance and means ``+-(delta/2) e_1``; the label
    is the component, so the Bayes accuracy is ``1 - omega_bar / 2``.
    """
    delta = mixture_separation(omega_bar)
    y = np.where(rng.random(n) < 0.5, 1, -1)
    X = rng.standard_normal((n, d))
    X[:, 0] += 0.5 * delta * y
    return Dataset(X, y)


def _mse_replication(args):
    n, d, r, cfg = args
    rng = _rng(cfg.seed, n, d, r)
    theta0 = np.full(d + 1, cfg.theta0)
    data = gen_model_data(n, d, theta0, rng)
    opts = replace(cfg.opts, seed=_fit_seed(rng))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        fit = fit_mle(data, opts)
    err = float(np.sum((fit.theta_hat.vector - theta0) ** 2))
    return err, fit.converged


def _workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get(THREADS_ENV, "1"))
    return max(1, workers)


def _map(fn, jobs, workers):
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=4))


def _summary(values, ddof=1):
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return float("nan"), float("nan")
    sd = float(np.std(arr, ddof=ddof)) if arr.size > 1 else 0.0
    return float(np.mean(arr)), sd


def run_mse_experiment(cfg: MseConfig = MseConfig(), workers: int | None = None,
                       progress: Callable[[str], None] | None = None) -> ExperimentReport:
    """Monte-Carlo mean squared error of the MLE over the (n, d) grid.

    Each replication simulates from the model at ``theta0 * ones(d + 1)``,
    fits by :func:`fit_mle` and records ``|theta_hat - theta0|^2``. Non-converged
    replications stay in the average and are counted in ``n_nonconverged``.
    """
    workers = _workers(workers)
    cells, timing = [], {}
    for d in cfg.d_grid:
        for n in cfg.n_grid:
            t0 = time.perf_counter()
            out = _map(_mse_replication, [(n, d, r, cfg) for r in range(cfg.R)], workers)
            errs = [e for e, _ in out]
            mean, sd = _summary(errs)
            cells.append(CellSummary(n, d, "", "svmreg", mean, sd, len(errs),
                                     n_nonconverged=sum(not c for _, c in out),
                                     values=errs))
            timing[f"n={n},d={d}"] = time.perf_counter() - t0
            if progress:
                progress(f"mse n={n} d={d}: {mean:.4g}")
    return ExperimentReport("mse", _config_dict(cfg), cells, timing)


def _fit_predict_svmreg(train: Dataset, X, opts: OptOptions):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        fit = fit_mle(train, opts)
    return predict_map(X, fit.theta_hat)


def _fit_predict_logistic(train: Dataset, X, opts: OptOptions):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        fit = fit_logistic(train)
    return predict_logistic(X, fit)


def _fit_predict_svm(train: Dataset, X, opts: OptOptions):
    return predict_svm(X, train_svm(train, opts=replace(opts, n_starts=1)))


METHODS = {
    "svmreg": _fit_predict_svmreg,
    "logistic": _fit_predict_logistic,
    "svm": _fit_predict_svm,
}


def _acc_replication(args):
    n, d, k, omega, r, cfg = args
    rng = _rng(cfg.seed, n, d, k, r)
    train = gen_mixture_data(n, d, omega, rng)
    test = gen_mixture_data(cfg.N, d, omega, rng)
    opts = replace(cfg.opts, seed=_fit_seed(rng))
    out = {}
    for name, fn in METHODS.items():
        try:
            out[name] = float(np.mean(fn(train, test.X, opts) == test.y))
        except (ValueError, RuntimeError, np.linalg.LinAlgError):
            out[name] = None
    return out


def run_accuracy_experiment(cfg: AccConfig = AccConfig(), workers: int | None = None,
                            progress: Callable[[str], None] | None = None) -> ExperimentReport:
    """Test-set accuracy of the MAP rule, logistic regression and the SVM.

    For each cell and replication, all three methods train on the same ``n``
    mixture draws and are scored on a fresh test set of size ``N``.
    """
    workers = _workers(workers)
    cells, timing = [], {}
    for n in cfg.n_grid:
        for d in cfg.d_grid:
            for k, omega in enumerate(cfg.omega_bar_grid):
                t0 = time.perf_counter()
                jobs = [(n, d, k, omega, r, cfg) for r in range(cfg.R)]
                out = _map(_acc_replication, jobs, workers)
                for name in METHODS:
                    accs = [o[name] for o in out if o[name] is not None]
                    mean, sd = _summary(accs)
                    cells.append(CellSummary(n, d, f"omega_bar={omega:g}", name, mean, sd,
                                             len(accs), n_failed=cfg.R - len(accs),
                                             values=accs))
                timing[f"n={n},d={d},omega_bar={omega:g}"] = time.perf_counter() - t0
                if progress:
                    progress(f"acc n={n} d={d} omega_bar={omega:g}")
    return ExperimentReport("acc", _config_dict(cfg) | {"omega_bar_grid": list(cfg.omega_bar_grid)},
                            cells, timing)


def make_folds(n: int, k: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Random partition of ``range(n)`` into ``k`` folds whose sizes differ by at most one."""
    if k < 2 or n < k:
        raise ValueError("need 2 <= k <= n")
    return [np.sort(f) for f in np.array_split(rng.permutation(n), k)]


def _resolve(method, opts):
    if callable(method):
        return method
    try:
        fn = METHODS[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}; choose from {sorted(METHODS)}") from None
    return lambda train, X: fn(train, X, opts)


def _cv_folds(data, folds, fit_predict):
    accs = []
    for i, test_idx in enumerate(folds):
        train_idx = np.concatenate([f for j, f in enumerate(folds) if j != i])
        train = data.subset(train_idx)
        if np.all(train.y == train.y[0]):
            warnings.warn(f"fold {i} training set has a single label class; excluded",
                          RuntimeWarning, stacklevel=3)
            continue
        pred = np.asarray(fit_predict(train, data.X[test_idx]))
        accs.append(float(np.mean(pred == data.y[test_idx])))
    return accs


def kfold_cv(data: Dataset, k: int, method, rng: np.random.Generator,
             opts: OptOptions = OptOptions()):
    """k-fold cross-validated accuracy; returns ``(mean, sd)`` over folds.

    ``method`` is a name from :data:`METHODS` or a callable
    ``fit_predict(train, X_test) -> labels``.
    """
    folds = make_folds(data.n, k, rng)
    return _summary(_cv_folds(data, folds, _resolve(method, opts)))


def cv_compare(data: Dataset, k: int, methods: Sequence, rng: np.random.Generator,
               opts: OptOptions = OptOptions()) -> dict:
    """Cross-validate several methods on one shared partition."""
    folds = make_folds(data.n, k, rng)
    out = {}
    for m in methods:
        accs = _cv_folds(data, folds, _resolve(m, opts))
        mean, sd = _summary(accs)
        out[m if isinstance(m, str) else getattr(m, "__name__", str(m))] = {
            "mean": mean, "sd": sd, "folds": accs}
    return out


def _sci(x: float) -> str:
    if not np.isfinite(x):
        return "nan"
    if x == 0:
        return "0.00(+0)"
    e = int(np.floor(np.log10(abs(x))))
    m = x / 10**e
    if round(m, 2) >= 10:
        m, e = m / 10, e + 1
    return f"{m:.2f}({e:+d})"


def format_mse_table(report: ExperimentReport) -> str:
    """MSE table laid out with rows n and columns d, entries as ``a(b) = a x 10^b``."""
    cfg = report.config
    head = "n \\ d".ljust(8) + "".join(f"{d:>12}" for d in cfg["d_grid"])
    lines = [head, "-" * len(head)]
    for n in cfg["n_grid"]:
        row = f"{n:<8}" + "".join(f"{_sci(report.cell(n, d).mean):>12}" for d in cfg["d_grid"])
        lines.append(row)
    return "\n".join(lines)


def format_accuracy_table(report: ExperimentReport) -> str:
    """Accuracy table: mean row then standard-deviation row per (n, d)."""
    cfg = report.config
    methods = list(METHODS)
    cols = [(w, m) for w in cfg["omega_bar_grid"] for m in methods]
    head = f"{'n':<6}{'d':<4}" + "".join(f"{m + '@' + format(w, 'g'):>16}" for w, m in cols)
    lines = [head, "-" * len(head)]
    for n in cfg["n_grid"]:
        for d in cfg["d_grid"]:
            cs = [report.cell(n, d, f"omega_bar={w:g}", m) for w, m in cols]
            lines.append(f"{n:<6}{d:<4}" + "".join(f"{c.mean:>16.3f}" for c in cs))
            lines.append(f"{'':<10}" + "".join(f"{'(' + format(c.sd, '.3f') + ')':>16}" for c in cs))
    return "\n".join(lines)
