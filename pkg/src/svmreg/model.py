"""Density, derivatives and feature maps of the SVM-likelihood binary model.

The model assigns

    f(y | x; theta) = exp(-[1 - y t]_+) / (exp(-[1 - t]_+) + exp(-[1 + t]_+))

to a label y in {-1, +1}, where t = alpha + x'beta is the margin. Because the
normaliser is symmetric in t, log f depends on (y, t) only through s = y t, and
splits into three smooth pieces:

    s >= 1        log f = -log(1 + exp(-(1 + s)))
    |s| < 1       log f = s - log(2 cosh s)
    s <= -1       log f = s - 1 - log(1 + exp(s - 1))

The derivative code below works on these pieces. At the kinks |s| = 1 the
branch in which the vanishing hinge is treated as inactive is used (hinge
indicator is ``u > 0``), so s = 1 belongs to the upper branch and s = -1 to the
lower one.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.special import expit

__all__ = [
    "Theta",
    "LabeledSample",
    "Dataset",
    "HessianTerm",
    "KINK_TOL",
    "margin",
    "margins",
    "hinge",
    "log_density",
    "density",
    "log_likelihood",
    "dlogf_ds",
    "d2logf_ds2",
    "region_log_density",
    "grad_log_density",
    "grad_log_likelihood",
    "hessian_log_density",
    "predict_map",
    "sign_rule",
    "expected_neg_log_density",
    "poly_features",
    "poly_feature_names",
    "poly_dimension",
]

KINK_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Theta:
    """Intercept ``alpha`` and coefficient vector ``beta``."""

    alpha: float
    beta: np.ndarray

    def __post_init__(self):
        beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        if beta.ndim != 1 or beta.size < 1:
            raise ValueError("beta must be a non-empty vector")
        if not (np.isfinite(self.alpha) and np.all(np.isfinite(beta))):
            raise ValueError("theta entries must be finite")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", beta)

    def __eq__(self, other):
        if not isinstance(other, Theta):
            return NotImplemented
        return self.d == other.d and bool(np.array_equal(self.vector, other.vector))

    __hash__ = None

    @property
    def d(self) -> int:
        return self.beta.size

    @property
    def vector(self) -> np.ndarray:
        """The stacked parameter ``(alpha, beta_1, ..., beta_d)``."""
        return np.concatenate(([self.alpha], self.beta))

    @classmethod
    def from_vector(cls, v) -> "Theta":
        v = np.asarray(v, dtype=float).ravel()
        if v.size < 2:
            raise ValueError("parameter vector needs at least 2 entries")
        return cls(v[0], v[1:].copy())

    @classmethod
    def zeros(cls, d: int) -> "Theta":
        return cls(0.0, np.zeros(d))

    @classmethod
    def ones(cls, d: int) -> "Theta":
        return cls(1.0, np.ones(d))


class LabeledSample(NamedTuple):
    x: np.ndarray
    y: int


@dataclass(frozen=True)
class Dataset:
    """``n`` covariate rows ``X`` (n x d) with labels ``y`` in {-1, +1}."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(self.y).ravel()
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError("X must be a non-empty n x d array")
        if y.shape[0] != X.shape[0]:
            raise ValueError(f"{X.shape[0]} covariate rows but {y.shape[0]} labels")
        if not np.all(np.isin(y, (-1, 1))):
            raise ValueError("labels must be -1 or +1")
        if not np.all(np.isfinite(X)):
            raise ValueError("covariates must be finite")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y.astype(np.int64))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def design(self) -> np.ndarray:
        """Augmented design with a leading column of ones."""
        return np.column_stack((np.ones(self.n), self.X))

    def subset(self, idx) -> "Dataset":
        return Dataset(self.X[idx], self.y[idx])

    def samples(self) -> Iterable[LabeledSample]:
        for xi, yi in zip(self.X, self.y):
            yield LabeledSample(xi, int(yi))

    @classmethod
    def from_samples(cls, samples: Sequence[LabeledSample]) -> "Dataset":
        return cls(np.array([s.x for s in samples], dtype=float),
                   np.array([s.y for s in samples]))


def _theta_vector(theta) -> np.ndarray:
    if isinstance(theta, Theta):
        return theta.vector
    v = np.asarray(theta, dtype=float).ravel()
    if v.size < 2:
        raise ValueError("parameter vector needs at least 2 entries")
    return v


def _augment(x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return np.concatenate(([1.0], x))


def margin(x, theta) -> float:
    """Return ``alpha + x'beta`` for a single covariate vector."""
    v = _theta_vector(theta)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (v.size - 1,):
        raise ValueError(f"covariate dimension {x.size} does not match theta ({v.size - 1})")
    return float(v[0] + x @ v[1:])


def margins(X, theta) -> np.ndarray:
    """Row-wise margins for a covariate matrix."""
    v = _theta_vector(theta)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[1] != v.size - 1:
        raise ValueError(f"covariate dimension {X.shape[1]} does not match theta ({v.size - 1})")
    return v[0] + X @ v[1:]


def hinge(u):
    return np.maximum(u, 0.0) if np.ndim(u) else max(float(u), 0.0)


def _log_density_t(y, t):
    # Literal form of the density, normaliser via logaddexp.
    return -np.maximum(1.0 - y * t, 0.0) - np.logaddexp(
        -np.maximum(1.0 - t, 0.0), -np.maximum(1.0 + t, 0.0))


def log_density(y, x, theta) -> float:
    """Log of f(y | x; theta)."""
    if y not in (-1, 1):
        raise ValueError("label must be -1 or +1")
    return float(_log_density_t(y, margin(x, theta)))


def density(y, x, theta) -> float:
    return math.exp(log_density(y, x, theta))


def log_likelihood(data: Dataset, theta) -> float:
    """Mean log-likelihood over the sample (not the total)."""
    t = margins(data.X, theta)
    return float(np.mean(_log_density_t(data.y, t)))


def region_log_density(s):
    """Piecewise closed form of log f as a function of ``s = y t``."""
    s = np.asarray(s, dtype=float)
    a = np.abs(s)
    out = np.where(
        s >= 1.0,
        -np.logaddexp(0.0, -(1.0 + s)),
        np.where(s <= -1.0,
                 s - 1.0 - np.logaddexp(0.0, s - 1.0),
                 s - a - np.log1p(np.exp(-2.0 * a))))
    return out if out.ndim else float(out)


def dlogf_ds(s):
    """d log f / ds on each smooth piece, kink convention as in the module doc."""
    s = np.asarray(s, dtype=float)
    out = np.where(s >= 1.0, expit(-(1.0 + s)),
                   np.where(s <= -1.0, expit(1.0 - s), 1.0 - np.tanh(s)))
    return out if out.ndim else float(out)


def d2logf_ds2(s):
    s = np.asarray(s, dtype=float)
    hi = expit(-(1.0 + s))
    lo = expit(1.0 - s)
    mid = 1.0 / np.cosh(np.clip(s, -1.0, 1.0)) ** 2
    out = np.where(s >= 1.0, -hi * (1.0 - hi),
                   np.where(s <= -1.0, -lo * (1.0 - lo), -mid))
    return out if out.ndim else float(out)


def grad_log_density(y, x, theta) -> np.ndarray:
    """Gradient of log f(y | x; theta) with respect to (alpha, beta)."""
    t = margin(x, theta)
    return y * dlogf_ds(y * t) * _augment(x)


def grad_log_likelihood(data: Dataset, theta) -> np.ndarray:
    """Gradient of the mean log-likelihood."""
    s = data.y * margins(data.X, theta)
    w = data.y * dlogf_ds(s)
    return np.concatenate(([w.mean()], data.X.T @ w / data.n))


class HessianTerm(NamedTuple):
    matrix: np.ndarray
    near_kink: bool


def hessian_log_density(y, x, theta) -> HessianTerm:
    """Per-sample Hessian of log f.

    ``near_kink`` is set when the margin lies within ``KINK_TOL`` of +-1, where
    the one-sided branch convention decided the curvature.
    """
    t = margin(x, theta)
    xt = _augment(x)
    return HessianTerm(d2logf_ds2(y * t) * np.outer(xt, xt),
                       bool(abs(abs(t) - 1.0) < KINK_TOL))


def sign_rule(t):
    """sign(t) with ties resolved to +1."""
    return np.where(np.asarray(t) >= 0, 1, -1)


def predict_map(x, theta):
    """MAP label under the fitted model.

    f(+1 | t) is increasing in t and equals 1/2 at t = 0, so the MAP rule is the
    sign rule on the margin. Accepts a single vector or a matrix of rows.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim <= 1 and np.size(x) == _theta_vector(theta).size - 1:
        return int(sign_rule(margin(x, theta)))
    return sign_rule(margins(x, theta))


def expected_neg_log_density(p: float, t: float):
    """Split -E[log f(1 | x; theta)] = h1 + h2 for P(Y = 1) = p at margin t.

    Returns ``(h, h1, h2)``; h1 is the hinge part, h2 the bounded log-normaliser.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly between 0 and 1")
    h1 = p * np.maximum(1.0 - t, 0.0) + (1.0 - p) * np.maximum(1.0 + t, 0.0)
    h2 = np.logaddexp(-np.maximum(1.0 - t, 0.0), -np.maximum(1.0 + t, 0.0))
    h = h1 + h2
    if np.ndim(h) == 0:
        return float(h), float(h1), float(h2)
    return h, h1, h2


def _poly_terms(d: int, c: float, u: int):
    """Exponent tuples and weights of the non-constant monomials of (x'x' + c)^u."""
    terms = []
    for degree in range(1, u + 1):
        k0 = u - degree
        if k0 > 0 and c == 0:
            continue
        for combo in itertools.combinations_with_replacement(range(d), degree):
            powers = np.bincount(combo, minlength=d)
            coef = math.factorial(u) / math.factorial(k0)
            for k in powers:
                coef /= math.factorial(int(k))
            terms.append((powers, math.sqrt(coef * c ** k0)))
    return terms


def poly_dimension(d: int, u: int, c: float = 1.0) -> int:
    if c == 0:
        return math.comb(d + u - 1, u)
    return math.comb(d + u, u) - 1


def poly_features(x, c: float, u: int, max_dim: int = 10_000) -> np.ndarray:
    """Explicit feature map of the polynomial kernel ``(x'x' + c)^u``.

    The constant monomial is dropped (the model has its own intercept), so
    ``phi(x) @ phi(x') + c**u == (x @ x' + c)**u``. Monomials with zero weight
    (lower degrees when ``c == 0``) are omitted as well.

    Parameters
    ----------
    x : array_like
        A single covariate vector or an (n, d) matrix of rows.
    c : float
        Non-negative kernel offset.
    u : int
        Kernel degree, at least 1.
    max_dim : int
        Refuse expansions with more features than this.
    """
    if int(u) != u or u < 1:
        raise ValueError("degree u must be a positive integer")
    if c < 0:
        raise ValueError("c must be non-negative for a real feature map")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    d = X.shape[1]
    q = poly_dimension(d, int(u), c)
    if q > max_dim:
        raise ValueError(f"expanded dimension {q} exceeds cap {max_dim}")
    terms = _poly_terms(d, c, int(u))
    out = np.empty((X.shape[0], len(terms)))
    for j, (powers, w) in enumerate(terms):
        out[:, j] = w * np.prod(X ** powers, axis=1)
    return out[0] if single else out


def poly_feature_names(names: Sequence[str], c: float, u: int) -> list[str]:
    out = []
    for powers, _ in _poly_terms(len(names), c, int(u)):
        parts = [n if k == 1 else f"{n}^{k}" for n, k in zip(names, powers) if k]
        out.append("*".join(parts))
    return out
