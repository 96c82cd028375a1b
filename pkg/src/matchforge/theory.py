"""Closed-form noise-folding distances and their Monte Carlo verification.

Setting: control covariates U[0,1]^p, treated covariates U[0,1]^p + omega, and
pairs perfectly matched on the outcome support K (coordinates in K are equal).
Each coordinate difference outside K has mean omega_j and variance 1/6.

Coordinate sets K are 0-based index collections.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NegativeWeight
from .linalg import _check_symmetric, ols_fit, ols_standard_errors, pseudo_inverse
from .scenarios import gen_gaussian_latent
from .seeding import derive_seed

UNIFORM_DIFF_VAR = 1.0 / 6.0
Z_GATE = 4.0
ABS_FLOOR = 1e-6


@dataclass(frozen=True)
class TheoremCheckReport:
    name: str
    formula_value: float
    monte_carlo_value: float
    mc_standard_error: float
    replications: int

    @property
    def passed(self) -> bool:
        return abs(self.formula_value - self.monte_carlo_value) <= Z_GATE * self.mc_standard_error + ABS_FLOOR


def _outside(p, K):
    mask = np.ones(p, dtype=bool)
    mask[list(K)] = False
    return mask


def _masked_shift(omega, K):
    w = np.array(omega, dtype=float)
    w[list(K)] = 0.0
    return w


def formula_mdm_perfect_match(sigma, K, omega) -> float:
    """E[d_R^2] = (1/6) sum_{j not in K} Sigma+_jj + omega_Kc' Sigma+ omega_Kc."""
    P = pseudo_inverse(sigma)
    out = _outside(P.shape[0], K)
    w = _masked_shift(omega, K)
    return float(UNIFORM_DIFF_VAR * np.trace(P[np.ix_(out, out)]) + w @ P @ w)


def _perfect_match_differences(p, K, omega, replications, seed):
    rng = np.random.default_rng(seed)
    control = rng.random((replications, p))
    treated = rng.random((replications, p)) + np.asarray(omega, dtype=float)
    treated[:, list(K)] = control[:, list(K)]
    return treated - control


def _report(name, formula, sq, replications):
    se = float(np.std(sq, ddof=1) / np.sqrt(replications)) if replications > 1 else 0.0
    return TheoremCheckReport(name, float(formula), float(np.mean(sq)), se, replications)


def mc_mdm_perfect_match(sigma, K, omega, replications: int, seed: int, name="mdm") -> TheoremCheckReport:
    """Monte Carlo mean of (x - y)' Sigma+ (x - y) over perfectly matched uniform pairs.

    ``sigma=None`` uses the covariance of the uniform generator, I/12.
    """
    omega = np.asarray(omega, dtype=float)
    p = omega.size
    if sigma is None:
        sigma = np.eye(p) / 12.0
    P = pseudo_inverse(sigma)
    Z = _perfect_match_differences(p, K, omega, replications, seed)
    sq = np.einsum("ij,jk,ik->i", Z, P, Z)
    return _report(name, formula_mdm_perfect_match(sigma, K, omega), sq, replications)


def _check_weights(weights):
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise NegativeWeight("ODM weights are |beta'_j| and must be non-negative")
    return w


def formula_odm_perfect_match(weights, K, omega) -> float:
    """sum over j outside K with omega_j != 0 of weight_j * (1/6 + omega_j^2).

    The sum skips coordinates outside K with omega_j = 0; in the intended setting
    the outcome weights vanish there.
    """
    w = _check_weights(weights)
    omega = np.asarray(omega, dtype=float)
    sel = _outside(w.size, K) & (omega != 0)
    return float(np.sum(w[sel] * (UNIFORM_DIFF_VAR + omega[sel] ** 2)))


def mc_odm_perfect_match(weights, K, omega, replications: int, seed: int, name="odm") -> TheoremCheckReport:
    """Monte Carlo mean of ||(x - y) B||^2 with B = diag(weight_j^(1/2))."""
    w = _check_weights(weights)
    Z = _perfect_match_differences(w.size, K, omega, replications, seed)
    sq = (Z**2) @ w
    return _report(name, formula_odm_perfect_match(w, K, omega), sq, replications)


@dataclass(frozen=True)
class BiasCheckReport:
    """Outcome-regression coefficient bias against its predicted direction."""

    estimated_bias: np.ndarray
    predicted_bias: np.ndarray
    standard_errors: np.ndarray
    cosine: float
    magnitude_ratio: float
    support_ok: bool
    n: int

    @property
    def predicted_is_zero(self) -> bool:
        return bool(np.all(np.abs(self.predicted_bias) <= Z_GATE * self.standard_errors))

    @property
    def passed(self) -> bool:
        if self.predicted_is_zero:
            return bool(np.all(np.abs(self.estimated_bias) <= Z_GATE * self.standard_errors))
        return self.cosine > 0.99 and abs(self.magnitude_ratio - 1.0) < 0.05 and self.support_ok


def mc_odm_coefficient_bias(p, sigma, beta, alpha, alpha0, tau, n, seed) -> BiasCheckReport:
    """Fit Y ~ 1 + X (no treatment) and compare beta_hat - beta with tau * (n1/n) * Sigma+ mu_hat_treated.

    ``support_ok`` checks that every coordinate with alpha_k != 0 and beta_k = 0
    gets a coefficient more than 4 standard errors from zero when tau != 0.
    """
    sample, _ = gen_gaussian_latent(p, sigma, beta, alpha, alpha0, tau, n, derive_seed(seed, 0))
    X, t, y = sample.covariates, sample.treatment, sample.outcome
    design = np.column_stack([np.ones(n), X])
    coef = ols_fit(design, y).coefficients
    se = ols_standard_errors(design, y, coef)[1:]
    est = coef[1:] - np.asarray(beta, dtype=float)
    mu_treated = X[t == 1].mean(axis=0) if t.any() else np.zeros(p)
    pred = tau * (t.sum() / n) * pseudo_inverse(_check_symmetric(sigma)) @ mu_treated

    denom = np.linalg.norm(est) * np.linalg.norm(pred)
    cosine = float(est @ pred / denom) if denom > 0 else float("nan")
    ratio = float(np.linalg.norm(est) / np.linalg.norm(pred)) if np.linalg.norm(pred) > 0 else float("nan")

    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    support_ok = True
    if tau != 0:
        targets = (alpha != 0) & (beta == 0)
        support_ok = bool(np.all(np.abs(coef[1:][targets]) > Z_GATE * se[targets]))
    return BiasCheckReport(est, pred, se, cosine, ratio, support_ok, n)


def default_mdm_grid():
    """(name, sigma, K, omega) configurations for the Mahalanobis noise-folding check."""
    rank1 = np.array([[1.0, 1.0], [1.0, 1.0]])
    corr = np.array([[1.0, 0.5, 0.2], [0.5, 2.0, -0.3], [0.2, -0.3, 1.5]])
    rank_def = np.diag([1.0, 1.0, 0.0, 2.0])
    return [
        ("mdm-identity5-K2-noshift", np.eye(5), [0, 1], np.zeros(5)),
        ("mdm-identity2-K1-shift", np.eye(2), [0], np.array([0.0, 1.0])),
        ("mdm-identity2-K1-masked", np.eye(2), [0], np.array([9.0, 0.5])),
        ("mdm-uniform-cov4-K1", np.eye(4) / 12.0, [0], np.array([0.0, 0.5, 0.0, 0.25])),
        ("mdm-correlated3-K0", corr, [0], np.array([0.0, 0.3, -0.4])),
        ("mdm-rank1-K-empty", rank1, [], np.array([0.2, 0.6])),
        ("mdm-rankdef4-K1", rank_def, [1], np.array([0.5, 0.0, 1.0, 0.2])),
        ("mdm-p1-K-all", np.eye(1), [0], np.array([0.7])),
    ]


def default_odm_grid():
    """(name, weights, K, omega); weights vanish outside K and supp(omega)."""
    return [
        ("odm-no-shift", np.array([1.0, 1.0, 0.0, 0.0]), [0, 1], np.zeros(4)),
        ("odm-one-shifted-noise", np.array([0.0, 2.0]), [0], np.array([0.0, 1.0])),
        ("odm-weights-on-K-only", np.array([4.0, 0.2, 0.0]), [0, 1], np.array([1.0, 1.0, 0.5])),
        ("odm-mixed", np.array([1.0, 0.5, 0.3, 0.0, 0.7]), [0], np.array([0.0, 0.4, 1.0, 0.0, -0.6])),
        ("odm-p10-two-shifted", np.r_[1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.25, 0.5], [0, 1],
         np.r_[1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5, 0.5]),
    ]


def default_bias_grid():
    """(name, p, sigma, beta, alpha, alpha0, tau)."""
    corr = np.array([[1.0, 0.4, 0.0], [0.4, 1.0, -0.3], [0.0, -0.3, 1.0]])
    return [
        ("bias-identity2", 2, np.eye(2), np.array([1.0, 0.0]), np.array([0.0, 3.0]), 0.0, 2.0),
        ("bias-identity4", 4, np.eye(4), np.array([1.0, 1.0, 0.0, 0.0]), np.array([1.0, 0.0, 1.0, -1.0]), 0.3, 1.5),
        ("bias-correlated3", 3, corr, np.array([0.5, 0.0, 0.0]), np.array([0.0, 1.0, 2.0]), -0.5, 3.0),
    ]


def run_theorem_checks(replications: int = 100_000, seed: int = 0, bias_n: int = 100_000):
    """Run the default grids; returns a list of (name, report) pairs in a fixed order."""
    out = []
    for i, (name, sigma, K, omega) in enumerate(default_mdm_grid()):
        out.append((name, mc_mdm_perfect_match(sigma, K, omega, replications, derive_seed(seed, 1, i), name)))
    for i, (name, w, K, omega) in enumerate(default_odm_grid()):
        out.append((name, mc_odm_perfect_match(w, K, omega, replications, derive_seed(seed, 2, i), name)))
    for i, (name, p, sigma, beta, alpha, alpha0, tau) in enumerate(default_bias_grid()):
        out.append((name, mc_odm_coefficient_bias(p, sigma, beta, alpha, alpha0, tau, bias_n, derive_seed(seed, 3, i))))
    return out
