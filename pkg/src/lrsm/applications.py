"""Estimators layered on the low-rank-plus-sparse solver.

Covers multitask regression (reduced to the identity model by whitening with
the design's normal equations), Winsorized covariance estimation for
heavy-tailed data, the structured low-rank-plus-sparse covariance split, and
factor-loading extraction with sign alignment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError
from .matops import FactoredLowRank, SparseEntrySet, as_dense
from .solver import SolverConfig, SolverReport, solve

__all__ = [
    "MultitaskDiagnostics",
    "CovarianceEstimate",
    "multitask_fit",
    "winsorized_covariance",
    "structured_covariance",
    "estimate_loadings",
    "align_signs",
]


@dataclass(frozen=True)
class MultitaskDiagnostics:
    """Design-matrix quantities that control the whitened error bound."""

    sigma_max: float
    sigma_min: float
    max_column_norm: float
    report: SolverReport


@dataclass(frozen=True)
class CovarianceEstimate:
    """Winsorized covariance with the truncation levels it was built from."""

    sigma_hat: np.ndarray
    tau1: float
    tau2: float

    def __post_init__(self):
        A = as_dense(self.sigma_hat, "covariance")
        if A.shape[0] != A.shape[1]:
            raise ValueError("covariance must be square")
        if np.max(np.abs(A - A.T)) > 1e-12:
            raise ValueError("covariance must be symmetric")
        if self.tau1 <= 0 or self.tau2 <= 0:
            raise ValueError("truncation levels must be positive")
        object.__setattr__(self, "sigma_hat", A)


def multitask_fit(X, Y, config: SolverConfig,
                  ) -> tuple[FactoredLowRank, SparseEntrySet, MultitaskDiagnostics]:
    """Low-rank-plus-sparse fit of the coefficient matrix in ``Y = X Theta + W``.

    Whitens by the normal equations, ``Theta_tilde = (X^T X)^{-1} X^T Y``,
    then runs the identity-model solver on the whitened observation.  The
    diagnostics expose the design quantities (extreme singular values, largest
    column norm) that scale the whitened noise.

    Requires ``n >= p`` and a full-column-rank design
    (``sigma_min > 1e-10 * sigma_max``); rank-deficient designs are rejected
    because the reduction is not available for them.
    """
    Xd = as_dense(X, "design")
    Yd = as_dense(Y, "response")
    n, p = Xd.shape
    if Yd.shape[0] != n:
        raise ValueError(f"X has {n} rows but Y has {Yd.shape[0]}")
    if n < p:
        raise ValueError(f"need n >= p, got n={n}, p={p}")
    svals = np.linalg.svd(Xd, compute_uv=False)
    sigma_max, sigma_min = float(svals[0]), float(svals[-1])
    if sigma_min <= 1e-10 * sigma_max:
        raise ValueError("design matrix is rank deficient; whitening reduction not applicable")
    theta = np.linalg.solve(Xd.T @ Xd, Xd.T @ Yd)
    L, S, report = solve(theta, config)
    diag = MultitaskDiagnostics(
        sigma_max=sigma_max,
        sigma_min=sigma_min,
        max_column_norm=float(np.max(np.linalg.norm(Xd, axis=0))),
        report=report,
    )
    return L, S, diag


def _winsorize_sum(values: np.ndarray, tau: float, axis=0) -> np.ndarray:
    return np.sum(np.sign(values) * np.minimum(np.abs(values), tau), axis=axis)


def winsorized_covariance(data, tau1: float | None = None, tau2: float | None = None,
                          chunk: int = 2048) -> CovarianceEstimate:
    """Truncated moment covariance estimator for heavy-tailed samples.

    Entry ``(i, j)`` is ``m_ij - m_i * m_j`` where ``m_ij`` averages
    ``sign(x_i x_j) * min(|x_i x_j|, tau1)`` over samples and ``m_i`` averages
    ``sign(x_i) * min(|x_i|, tau2)``.  Defaults for both levels are
    ``sqrt(n)``, which balances truncation bias against tail variance.
    """
    X = as_dense(data, "data")
    n, p = X.shape
    if n < 2:
        raise ValueError("need at least two samples")
    if tau1 is None:
        tau1 = float(np.sqrt(n))
    if tau2 is None:
        tau2 = float(np.sqrt(n))
    if tau1 <= 0 or tau2 <= 0:
        raise ValueError("truncation levels must be positive")
    m1 = _winsorize_sum(X, tau2, axis=0) / n
    acc = np.zeros((p, p))
    for start in range(0, n, chunk):
        block = X[start:start + chunk]
        prods = block[:, :, None] * block[:, None, :]
        acc += _winsorize_sum(prods, tau1, axis=0)
    sigma = acc / n - np.outer(m1, m1)
    sigma = 0.5 * (sigma + sigma.T)
    return CovarianceEstimate(sigma_hat=sigma, tau1=float(tau1), tau2=float(tau2))


def structured_covariance(data, config: SolverConfig,
                          tau1: float | None = None, tau2: float | None = None,
                          ) -> tuple[FactoredLowRank, SparseEntrySet]:
    """Split the Winsorized covariance into low-rank and sparse parts."""
    pilot = winsorized_covariance(data, tau1, tau2)
    L, S, _ = solve(pilot.sigma_hat, config)
    return L, S


def estimate_loadings(sigma_L: FactoredLowRank, r: int) -> np.ndarray:
    """Factor loadings ``[sqrt(lam_1) v_1, ..., sqrt(lam_r) v_r]``.

    Eigen-pairs are taken from the symmetrized low-rank covariance estimate;
    a negative eigenvalue among the leading ``r`` means the input is not
    PSD-like and raises :class:`NumericError`.
    """
    if r < 1 or r > sigma_L.rank:
        raise ValueError(f"r must be in [1, {sigma_L.rank}], got {r}")
    M = sigma_L.to_dense()
    M = 0.5 * (M + M.T)
    evals, evecs = np.linalg.eigh(M)
    order = np.argsort(evals)[::-1][:r]
    lam = evals[order]
    if np.any(lam < 0):
        raise NumericError(f"leading eigenvalue is negative ({lam.min():.3e}); "
                           "low-rank covariance estimate is not PSD-like")
    return evecs[:, order] * np.sqrt(lam)


def align_signs(B, B_hat) -> np.ndarray:
    """Diagonal +-1 matrix ``H`` minimizing ``sum_l ||B[:,l] - H_ll B_hat[:,l]||^2``.

    Closed form per column: the sign of the inner product of matched columns,
    with zero mapped to +1.
    """
    A = as_dense(B, "B")
    Ah = as_dense(B_hat, "B_hat")
    if A.shape != Ah.shape:
        raise ValueError(f"shape mismatch: {A.shape} vs {Ah.shape}")
    inner = np.sum(A * Ah, axis=0)
    d = np.where(inner < 0, -1.0, 1.0)
    return np.diag(d)
