"""Sandwich covariance, Wald tests and existence diagnostics."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from .model import KINK_TOL, Dataset, d2logf_ds2, dlogf_ds, margins

__all__ = [
    "InferenceReport",
    "ExistenceReport",
    "IllConditionedError",
    "estimate_A",
    "estimate_B",
    "count_kinks",
    "sandwich_cov",
    "wald_test",
    "infer",
    "check_existence",
]

MAX_CONDITION = 1e12


class IllConditionedError(np.linalg.LinAlgError):
    """The curvature matrix is singular or too ill-conditioned to invert."""


@dataclass
class InferenceReport:
    A_hat: np.ndarray
    B_hat: np.ndarray
    cov: np.ndarray
    se: np.ndarray
    z: np.ndarray
    p: np.ndarray
    kink_count: int = 0
    n: int = 0
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "A_hat": self.A_hat.tolist(),
            "B_hat": self.B_hat.tolist(),
            "cov": self.cov.tolist(),
            "se": self.se.tolist(),
            "z": self.z.tolist(),
            "p": self.p.tolist(),
            "kink_count": self.kink_count,
            "warnings": list(self.warnings),
        }


@dataclass
class ExistenceReport:
    both_labels_present: bool
    augmented_rank: int
    full_rank: bool
    opposite_label_pair_found: bool
    details: str

    @property
    def ok(self) -> bool:
        return self.both_labels_present and self.full_rank

    def to_dict(self) -> dict:
        return {
            "both_labels_present": self.both_labels_present,
            "augmented_rank": self.augmented_rank,
            "full_rank": self.full_rank,
            "opposite_label_pair_found": self.opposite_label_pair_found,
            "details": self.details,
        }


def _s(data: Dataset, theta):
    return data.y * margins(data.X, theta)


def estimate_A(data: Dataset, theta, d2logf=d2logf_ds2) -> np.ndarray:
    """Mean per-sample Hessian of the log-density at ``theta``.

    ``d2logf`` is the second derivative of log f in the signed margin; the
    default is the SVM-likelihood model, logistic regression passes its own.
    """
    w = d2logf(_s(data, theta))
    D = data.design
    A = (D * w[:, None]).T @ D / data.n
    return 0.5 * (A + A.T)


def estimate_B(data: Dataset, theta, dlogf=dlogf_ds) -> np.ndarray:
    """Mean outer product of per-sample score vectors."""
    G = data.design * (data.y * dlogf(_s(data, theta)))[:, None]
    B = G.T @ G / data.n
    return 0.5 * (B + B.T)


def count_kinks(data: Dataset, theta, tol: float = KINK_TOL) -> int:
    t = margins(data.X, theta)
    return int(np.sum(np.abs(np.abs(t) - 1.0) < tol))


def sandwich_cov(A, B, n: int) -> np.ndarray:
    """``A^-1 B A^-1 / n``, refusing singular or ill-conditioned ``A``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    U, sv, Vt = np.linalg.svd(A)
    if sv[-1] <= 0 or sv[0] / sv[-1] > MAX_CONDITION:
        cond = np.inf if sv[-1] <= 0 else sv[0] / sv[-1]
        raise IllConditionedError(f"curvature matrix condition number {cond:.3g} exceeds {MAX_CONDITION:.0e}")
    A_inv = (Vt.T / sv) @ U.T
    cov = A_inv @ B @ A_inv.T / n
    return 0.5 * (cov + cov.T)


def wald_test(theta_hat, se):
    """Coordinate-wise Wald statistics and two-sided normal p-values."""
    theta_hat = np.asarray(theta_hat, dtype=float)
    se = np.asarray(se, dtype=float)
    if np.any(se <= 0) or not np.all(np.isfinite(se)):
        raise ValueError("standard errors must be positive and finite")
    z = theta_hat / se
    p = erfc(np.abs(z) / np.sqrt(2.0))
    return z, p


def infer(data: Dataset, theta, dlogf=dlogf_ds, d2logf=d2logf_ds2,
          kink_tol: float = KINK_TOL) -> InferenceReport:
    """Robust (sandwich) standard errors and Wald tests at a fitted ``theta``."""
    v = theta.vector if hasattr(theta, "vector") else np.asarray(theta, dtype=float)
    A = estimate_A(data, v, d2logf)
    B = estimate_B(data, v, dlogf)
    cov = sandwich_cov(A, B, data.n)
    notes = []
    kinks = count_kinks(data, v, kink_tol) if d2logf is d2logf_ds2 else 0
    if kinks > 0.01 * data.n:
        msg = f"{kinks} of {data.n} margins lie on a kink; curvature may be unreliable"
        notes.append(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    z, p = wald_test(v, se)
    return InferenceReport(A, B, cov, se, z, p, kinks, data.n, notes)


def _proportional_pairs(P, N, rtol):
    """Whether some row of N is a positive multiple of some row of P."""
    Ph = P / np.linalg.norm(P, axis=1)[:, None]
    Nh = N / np.linalg.norm(N, axis=1)[:, None]
    for start in range(0, Nh.shape[0], 512):
        Q = Nh[start:start + 512]
        # cosine prefilter, then an exact check on the candidates
        qi, pi = np.nonzero(Q @ Ph.T > 1.0 - 1e-6)
        if qi.size and np.any(np.linalg.norm(Q[qi] - Ph[pi], axis=1) <= rtol):
            return True
    return False


def check_existence(data: Dataset) -> ExistenceReport:
    """Diagnostics for existence of the maximum likelihood estimate.

    Checks that both labels occur and that the augmented design has full
    column rank (the intersection of the null spaces of the rows is then
    trivial). Separately reports whether a positive and a negative sample have
    proportional augmented covariates, the explicit sufficient condition for
    coercivity of the sample negative log-likelihood.
    """
    y = data.y
    both = bool(np.any(y == 1) and np.any(y == -1))
    D = data.design
    sv = np.linalg.svd(D, compute_uv=False)
    thresh = max(D.shape) * np.finfo(float).eps * (sv[0] if sv.size else 0.0)
    rank = int(np.sum(sv > thresh))
    full = rank == D.shape[1]
    pair = False
    if both:
        pair = _proportional_pairs(D[y == 1], D[y == -1], 1e-9)
    notes = []
    if not both:
        notes.append("all labels equal")
    if not full:
        notes.append(f"augmented design rank {rank} < {D.shape[1]}")
    if pair:
        notes.append("proportional opposite-label pair present")
    return ExistenceReport(both, rank, full, pair, "; ".join(notes) or "ok")
