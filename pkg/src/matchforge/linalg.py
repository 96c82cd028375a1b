"""Dense small-p linear algebra and model fitting.

Everything here is a pure function over numpy arrays.  Matrices are tiny
(p <= ~50), so robustness is preferred over speed throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotSymmetric, OneClass, RankDeficient, TooFew

RANK_TOL = 1e-10
EIG_CUTOFF = 1e-10
SYMMETRY_TOL = 1e-10

IRLS_MAX_ITER = 100
IRLS_TOL = 1e-8
IRLS_MAX_NORM = 1e4


@dataclass(frozen=True, eq=False)
class FitResult:
    coefficients: np.ndarray  # intercept first when the design carries one
    converged: bool
    iterations: int


def _equilibrated_svd(design):
    norms = np.linalg.norm(design, axis=0)
    if np.any(norms == 0):
        raise RankDeficient("design has an all-zero column")
    U, s, Vt = np.linalg.svd(design / norms, full_matrices=False)
    return U, s, Vt, norms


def ols_fit(design, response) -> FitResult:
    """Least-squares coefficients of ``response`` on the columns of ``design``.

    Columns are scaled to unit norm before the SVD so the rank test
    (smallest / largest singular value < 1e-10) is insensitive to units.
    """
    D = np.asarray(design, dtype=float)
    y = np.asarray(response, dtype=float)
    if D.ndim != 2 or D.shape[0] != y.shape[0]:
        raise ValueError(f"design {D.shape} and response {y.shape} are incompatible")
    if D.shape[0] < D.shape[1]:
        raise RankDeficient(f"{D.shape[0]} rows cannot identify {D.shape[1]} coefficients")
    U, s, Vt, norms = _equilibrated_svd(D)
    if s[-1] < RANK_TOL * s[0]:
        raise RankDeficient(f"design is rank deficient (singular value ratio {s[-1] / s[0]:.2e})")
    coef = (Vt.T @ ((U.T @ y) / s)) / norms
    return FitResult(coef, True, 1)


def ols_standard_errors(design, response, coefficients) -> np.ndarray:
    """Classical (homoskedastic) standard errors for an OLS fit."""
    D = np.asarray(design, dtype=float)
    resid = np.asarray(response, dtype=float) - D @ coefficients
    dof = D.shape[0] - D.shape[1]
    sigma2 = resid @ resid / dof
    _, s, Vt, norms = _equilibrated_svd(D)
    cov_scaled = (Vt.T / s**2) @ Vt
    return np.sqrt(sigma2 * np.diag(cov_scaled)) / norms


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_fit(design, labels, l2_penalty: float = 0.0) -> FitResult:
    """Logit coefficients by iteratively reweighted least squares (Newton).

    ``design`` must carry the intercept in column 0.  With ``l2_penalty`` > 0
    the objective adds ``l2_penalty / 2 * ||slopes||^2`` (intercept unpenalised),
    the same objective as scikit-learn's default ``C = 1 / l2_penalty``.

    Divergence (perfect separation) is reported with ``converged=False`` and the
    coefficients rescaled to norm 1e4, keeping their direction.
    """
    D = np.asarray(design, dtype=float)
    y = np.asarray(labels, dtype=float)
    if D.ndim != 2 or D.shape[0] != y.shape[0]:
        raise ValueError(f"design {D.shape} and labels {y.shape} are incompatible")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be binary")
    if y.min() == y.max():
        raise OneClass("labels contain a single class")

    k = D.shape[1]
    penalty = np.full(k, float(l2_penalty))
    penalty[0] = 0.0
    beta = np.zeros(k)
    for it in range(1, IRLS_MAX_ITER + 1):
        p = _sigmoid(D @ beta)
        w = p * (1.0 - p)
        grad = D.T @ (y - p) - penalty * beta
        hess = (D * w[:, None]).T @ D + np.diag(penalty)
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(hess, grad, rcond=None)[0]
        new = beta + step
        if not np.all(np.isfinite(new)):
            return FitResult(_cap(beta), False, it)
        if np.linalg.norm(new) > IRLS_MAX_NORM:
            return FitResult(_cap(new), False, it)
        if np.max(np.abs(step)) < IRLS_TOL:
            return FitResult(new, True, it)
        beta = new
    return FitResult(beta, False, IRLS_MAX_ITER)


def _cap(beta):
    norm = np.linalg.norm(beta)
    if norm > IRLS_MAX_NORM:
        return beta * (IRLS_MAX_NORM / norm)
    return beta


def sample_covariance(covariates) -> np.ndarray:
    X = np.asarray(covariates, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] < 2:
        raise TooFew("sample covariance needs at least two rows")
    Xc = X - X.mean(axis=0)
    S = Xc.T @ Xc / (X.shape[0] - 1)
    return (S + S.T) / 2


def _check_symmetric(sigma):
    S = np.asarray(sigma, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {S.shape}")
    scale = max(1.0, float(np.max(np.abs(S)))) if S.size else 1.0
    if np.max(np.abs(S - S.T), initial=0.0) > SYMMETRY_TOL * scale:
        raise NotSymmetric("matrix is not symmetric")
    return (S + S.T) / 2


def _truncated_eigh(S):
    lam, U = np.linalg.eigh(S)
    top = np.max(np.abs(lam), initial=0.0)
    # subnormal eigenvalues count as zero so their reciprocals cannot overflow
    keep = np.abs(lam) > max(EIG_CUTOFF * top, np.finfo(float).tiny)
    return lam, U, keep


def pseudo_inverse(sigma) -> np.ndarray:
    """Moore-Penrose pseudo-inverse of a symmetric matrix.

    Eigenvalues with magnitude below 1e-10 * max|eigenvalue| are treated as zero.
    """
    S = _check_symmetric(sigma)
    lam, U, keep = _truncated_eigh(S)
    inv = np.zeros_like(lam)
    inv[keep] = 1.0 / lam[keep]
    P = (U * inv) @ U.T
    return (P + P.T) / 2


def inverse_cholesky_factor(sigma) -> np.ndarray:
    """R with R @ R.T equal to the pseudo-inverse of a symmetric PSD ``sigma``.

    Full rank: R is the lower Cholesky factor of sigma^-1.  Rank deficient:
    R = U diag(lambda^-1/2) over the retained eigenvectors, with zero columns for
    the null space, so d_R is a pseudo-metric.
    """
    S = _check_symmetric(sigma)
    lam, U, keep = _truncated_eigh(S)
    pos = keep & (lam > 0)
    if np.all(pos):
        inv = (U / lam) @ U.T
        try:
            return np.linalg.cholesky((inv + inv.T) / 2)
        except np.linalg.LinAlgError:
            pass
    scale = np.zeros_like(lam)
    scale[pos] = 1.0 / np.sqrt(lam[pos])
    return U * scale


def percentile_interval(values, level: float) -> tuple[float, float]:
    """Equal-tailed empirical interval with linear interpolation of order statistics."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size < 2 or not np.all(np.isfinite(v)):
        raise TooFew("percentile interval needs at least two finite values")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(v, [alpha, 1.0 - alpha], method="linear")
    return float(lo), float(hi)
