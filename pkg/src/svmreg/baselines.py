"""Comparator classifiers: logistic regression and the linear soft-margin SVM."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .inference import InferenceReport, infer
from .model import Dataset, Theta, margins, sign_rule
from .optimizer import OptOptions, fit_svm

__all__ = [
    "LogisticFit",
    "SeparationWarning",
    "fit_logistic",
    "logistic_sandwich",
    "logistic_dlogf",
    "logistic_d2logf",
    "logistic_prob",
    "predict_logistic",
    "predict_svm",
    "train_svm",
]

SEPARATION_NORM = 1e3


class SeparationWarning(RuntimeWarning):
    pass


@dataclass
class LogisticFit:
    theta_tilde: Theta
    loglik: float
    converged: bool
    n_iter: int
    separated: bool = False


def logistic_dlogf(s):
    return expit(-np.asarray(s, dtype=float))


def logistic_d2logf(s):
    p = expit(np.asarray(s, dtype=float))
    return -p * (1.0 - p)


def _loglik(D, y, v):
    return -float(np.sum(np.logaddexp(0.0, -y * (D @ v))))


def fit_logistic(data: Dataset, tol: float = 1e-10, max_iter: int = 100) -> LogisticFit:
    """Maximise sum log sigma(y t) by Newton steps, halving on any decrease.

    A singular Newton system (e.g. a constant covariate) falls back to the
    minimum-norm step. Perfect separation is flagged (``separated`` set,
    warning issued, not converged) when the parameter norm exceeds 1e3 or the
    final fit classifies every sample with a strictly positive margin.
    """
    D, y = data.design, data.y
    if np.all(y == y[0]):
        raise ValueError("logistic regression needs both label classes")
    v = np.zeros(D.shape[1])
    ll = _loglik(D, y, v)
    converged = separated = False
    it = 0
    for it in range(1, max_iter + 1):
        s = y * (D @ v)
        g = D.T @ (y * expit(-s))
        if np.linalg.norm(g) <= tol:
            converged = True
            it -= 1
            break
        w = expit(s) * expit(-s)
        H = (D * w[:, None]).T @ D
        step = np.linalg.lstsq(H, g, rcond=None)[0]
        a = 1.0
        while True:
            v_new = v + a * step
            ll_new = _loglik(D, y, v_new)
            if ll_new >= ll or a < 1e-10:
                break
            a *= 0.5
        v, ll = v_new, ll_new
        if np.linalg.norm(v) > SEPARATION_NORM:
            separated = True
            break
    else:
        g = D.T @ (y * expit(-y * (D @ v)))
        converged = bool(np.linalg.norm(g) <= tol)
    if separated or np.all(y * (D @ v) > 0):
        separated, converged = True, False
        warnings.warn("logistic coefficients diverging: data look perfectly separated",
                      SeparationWarning, stacklevel=2)
    return LogisticFit(Theta.from_vector(v), ll, converged, it, separated)


def logistic_sandwich(data: Dataset, fit: LogisticFit) -> InferenceReport:
    """Misspecification-robust standard errors for a logistic fit."""
    return infer(data, fit.theta_tilde, dlogf=logistic_dlogf, d2logf=logistic_d2logf)


def logistic_prob(X, fit: LogisticFit) -> np.ndarray:
    return expit(margins(X, fit.theta_tilde))


def predict_logistic(X, fit: LogisticFit):
    return sign_rule(margins(X, fit.theta_tilde))


def predict_svm(X, theta):
    return sign_rule(margins(X, theta))


def train_svm(data: Dataset, lam: float | None = None, opts: OptOptions | None = None) -> Theta:
    """SVM baseline: a single BFGS start suffices for the convex objective."""
    if opts is None:
        opts = OptOptions(n_starts=1)
    return fit_svm(data, lam, opts)
