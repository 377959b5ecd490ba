"""BFGS with a weak Wolfe line search, and the fitting routines built on it.

The line search is the bracketing/bisection scheme used for BFGS on nonsmooth
functions: expand the step while the curvature condition fails and no upper
bracket exists, bisect once bracketed. Only the one-sided (weak) curvature
condition is enforced, since strong Wolfe steps need not exist at kinks.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .model import (
    Dataset,
    Theta,
    _log_density_t,
    dlogf_ds,
    log_likelihood,
)

__all__ = [
    "OptOptions",
    "OptimizeInfo",
    "FitResult",
    "LineSearchError",
    "minimize_bfgs",
    "fit_mle",
    "fit_approximate",
    "fit_svm",
    "neg_loglik_objective",
    "hinge_objective",
    "svm_objective",
    "start_points",
]

_CURVATURE_EPS = 1e-12
_MAX_SKIPS = 3
_MAX_LS_STEPS = 50


class LineSearchError(RuntimeError):
    pass


@dataclass(frozen=True)
class OptOptions:
    max_iter: int = 500
    grad_tol: float = 1e-8
    f_tol: float = 1e-12
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    n_starts: int = 10
    init_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.wolfe_c1 < self.wolfe_c2 < 1:
            raise ValueError("need 0 < wolfe_c1 < wolfe_c2 < 1")
        if self.max_iter < 1 or self.n_starts < 1:
            raise ValueError("max_iter and n_starts must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass
class OptimizeInfo:
    fun: float
    grad_norm: float
    n_iter: int
    n_evals: int
    converged: bool
    message: str


@dataclass
class FitResult:
    """Outcome of a multi-start fit.

    For :func:`fit_mle`, ``loglik`` equals ``max(all_start_logliks)``. For the
    hinge-type fits the winning start is the one with the smallest
    ``objective``; ``all_start_logliks`` then holds the model log-likelihood at
    each start's terminal point for reference.
    """

    theta_hat: Theta
    loglik: float
    total_loglik: float
    converged: bool
    n_iter: int
    grad_norm: float
    start_index: int
    all_start_logliks: list[float]
    objective: float = float("nan")
    all_start_objectives: list[float] = field(default_factory=list)
    message: str = ""


def _weak_wolfe(fun, x, f0, g0, p, c1, c2):
    """Return (step, f, g, n_evals) satisfying weak Wolfe, or raise."""
    dg0 = g0 @ p
    lo, hi = 0.0, np.inf
    t = 1.0
    best = None
    for k in range(1, _MAX_LS_STEPS + 1):
        f, g = fun(x + t * p)
        if not np.isfinite(f) or f > f0 + c1 * t * dg0:
            hi = t
        else:
            if best is None or f < best[1]:
                best = (t, f, g)
            if g @ p < c2 * dg0:
                lo = t
            else:
                return t, f, g, k
        t = 0.5 * (lo + hi) if np.isfinite(hi) else 2.0 * lo
    err = LineSearchError("weak Wolfe line search failed")
    err.best = best
    err.n_evals = _MAX_LS_STEPS
    raise err


def minimize_bfgs(objective: Callable, x0, opts: OptOptions = OptOptions(),
                  callback: Callable | None = None):
    """Minimise ``objective`` (returning value and gradient) from ``x0``.

    ``callback(x, f)`` is called after every accepted step.

    Returns ``(x, info)``. The inverse-Hessian update is skipped when
    ``s'y <= 1e-12``; three consecutive skips reset it to the identity.
    Termination on gradient norm or a relative objective change of ``f_tol``
    counts as converged; running out of iterations or a failed line search
    does not, but the best point reached is still returned.
    """
    x = np.array(x0, dtype=float).ravel()
    f, g = objective(x)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise ValueError("objective is not finite at the starting point")
    m = x.size
    H = np.eye(m)
    skips = 0
    n_evals = 1
    first_update = True
    converged, message = False, "maximum iterations reached"
    it = 0
    gnorm = float(np.linalg.norm(g))
    if gnorm <= opts.grad_tol:
        return x, OptimizeInfo(float(f), gnorm, 0, n_evals, True, "gradient tolerance")
    while it < opts.max_iter:
        it += 1
        p = -H @ g
        if g @ p >= 0:
            H = np.eye(m)
            p = -g
        try:
            t, f_new, g_new, k = _weak_wolfe(objective, x, f, g, p,
                                             opts.wolfe_c1, opts.wolfe_c2)
            n_evals += k
        except LineSearchError as err:
            n_evals += err.n_evals
            if err.best is not None and err.best[1] < f:
                t, f_new, g_new = err.best
                x = x + t * p
                f, g = f_new, g_new
                if callback is not None:
                    callback(x, f)
            message = "line search failed"
            break
        s = t * p
        x_new = x + s
        yv = g_new - g
        sy = s @ yv
        stalled = abs(f - f_new) <= opts.f_tol * (abs(f) + opts.f_tol)
        x, f, g = x_new, f_new, g_new
        if callback is not None:
            callback(x, f)
        gnorm = float(np.linalg.norm(g))
        if gnorm <= opts.grad_tol:
            converged, message = True, "gradient tolerance"
            break
        if stalled:
            converged, message = True, "relative objective change below f_tol"
            break
        if sy <= _CURVATURE_EPS:
            skips += 1
            if skips >= _MAX_SKIPS:
                H = np.eye(m)
                skips = 0
                first_update = True
            continue
        skips = 0
        if first_update:
            H = (sy / (yv @ yv)) * np.eye(m)
            first_update = False
        rho = 1.0 / sy
        Hy = H @ yv
        H = (H - rho * (np.outer(s, Hy) + np.outer(Hy, s))
             + (rho * rho * (yv @ Hy) + rho) * np.outer(s, s))
    gnorm = float(np.linalg.norm(g))
    return x, OptimizeInfo(float(f), gnorm, it, n_evals, converged, message)


def neg_loglik_objective(data: Dataset):
    """Value and gradient of the negative mean log-likelihood."""
    X, y, n = data.X, data.y, data.n

    def fun(v):
        t = v[0] + X @ v[1:]
        f = -np.mean(_log_density_t(y, t))
        w = -y * dlogf_ds(y * t) / n
        return f, np.concatenate(([w.sum()], X.T @ w))

    return fun


def hinge_objective(data: Dataset):
    """Total hinge loss, i.e. the negated approximate log-likelihood."""
    X, y = data.X, data.y

    def fun(v):
        u = 1.0 - y * (v[0] + X @ v[1:])
        active = u > 0
        w = np.where(active, -y, 0.0)
        return float(np.sum(u[active])), np.concatenate(([w.sum()], X.T @ w))

    return fun


def svm_objective(data: Dataset, lam: float):
    """Mean hinge loss plus ``lam * beta'beta`` (intercept unpenalised)."""
    X, y, n = data.X, data.y, data.n

    def fun(v):
        u = 1.0 - y * (v[0] + X @ v[1:])
        active = u > 0
        w = np.where(active, -y, 0.0) / n
        beta = v[1:]
        f = float(np.sum(u[active])) / n + lam * beta @ beta
        return f, np.concatenate(([w.sum()], X.T @ w + 2.0 * lam * beta))

    return fun


def start_points(m: int, opts: OptOptions) -> list[np.ndarray]:
    """Zero vector first, then Gaussian draws from per-start RNG streams."""
    pts = [np.zeros(m)]
    for k in range(1, opts.n_starts):
        rng = np.random.default_rng([opts.seed, k])
        pts.append(opts.init_scale * rng.standard_normal(m))
    return pts


def _multistart(fun, data: Dataset, opts: OptOptions, loglik_of_objective: bool):
    runs = []
    for x0 in start_points(data.d + 1, opts):
        try:
            x, info = minimize_bfgs(fun, x0, opts)
        except ValueError:
            continue
        runs.append((x, info))
    if not runs:
        raise RuntimeError("objective not finite at any start")
    objectives = [info.fun for _, info in runs]
    best = int(np.argmin(objectives))
    x, info = runs[best]
    theta = Theta.from_vector(x)
    if loglik_of_objective:
        logliks = [-f for f in objectives]
    else:
        logliks = [log_likelihood(data, xr) for xr, _ in runs]
    ll = logliks[best] if loglik_of_objective else log_likelihood(data, x)
    return FitResult(
        theta_hat=theta,
        loglik=float(ll),
        total_loglik=float(ll * data.n),
        converged=info.converged,
        n_iter=info.n_iter,
        grad_norm=info.grad_norm,
        start_index=best,
        all_start_logliks=[float(v) for v in logliks],
        objective=float(info.fun),
        all_start_objectives=[float(v) for v in objectives],
        message=info.message,
    )


def _existence_gate(data: Dataset) -> bool:
    from .inference import check_existence

    rep = check_existence(data)
    if not rep.both_labels_present or not rep.full_rank:
        warnings.warn(f"maximum likelihood estimate may not exist: {rep.details}",
                      RuntimeWarning, stacklevel=3)
    return rep.both_labels_present


def fit_mle(data: Dataset, opts: OptOptions = OptOptions()) -> FitResult:
    """Maximum likelihood fit by multi-start BFGS on the negative mean log-likelihood.

    Single-class data triggers a warning and is reported as not converged,
    since the likelihood then increases without bound along the intercept.
    """
    ok = _existence_gate(data)
    res = _multistart(neg_loglik_objective(data), data, opts, True)
    if not ok:
        res.converged = False
        res.message = "single label class: no finite maximiser"
    return res


def fit_approximate(data: Dataset, opts: OptOptions = OptOptions()) -> FitResult:
    """Minimise the total hinge loss (the unnormalised, concave approximate MLE)."""
    return _multistart(hinge_objective(data), data, opts, False)


def fit_svm(data: Dataset, lam: float | None = None, opts: OptOptions = OptOptions(),
            full_output: bool = False):
    """Linear soft-margin SVM: mean hinge loss plus ``lam * |beta|^2``.

    ``lam`` defaults to ``1/n``. Returns the fitted :class:`Theta`, or the
    whole :class:`FitResult` when ``full_output`` is set.
    """
    if lam is None:
        lam = 1.0 / data.n
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    res = _multistart(svm_objective(data, lam), data, opts, False)
    return res if full_output else res.theta_hat
