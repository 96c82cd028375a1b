"""Balancing-score encoders and the pseudo-metric they induce.

Each encoder is a linear map X -> X A.  Matching then uses
d_A(x, y) = ||(x - y) A||_2.
"""

from __future__ import annotations

import numpy as np

from .core import Encoder, Sample, validate_sample
from .errors import DimensionMismatch
from .linalg import inverse_cholesky_factor, logistic_fit, ols_fit, sample_covariance


def _with_intercept(X):
    return np.column_stack([np.ones(X.shape[0]), X])


def identity_encoder(p: int) -> Encoder:
    if p < 1:
        raise ValueError("p must be at least 1")
    return Encoder(np.eye(p), "identity")


def propensity_encoder(sample: Sample) -> Encoder:
    """Rank-1 map onto the logit linear predictor (slopes only; the intercept cancels)."""
    validate_sample(sample)
    fit = logistic_fit(_with_intercept(sample.covariates), sample.treatment)
    return Encoder(fit.coefficients[1:, None], "propensity", converged=fit.converged)


def mahalanobis_encoder(sample: Sample) -> Encoder:
    validate_sample(sample)
    R = inverse_cholesky_factor(sample_covariance(sample.covariates))
    return Encoder(R, "mahalanobis")


def odm_weights(sample: Sample) -> np.ndarray:
    """OLS slopes of outcome on intercept + covariates (treatment deliberately omitted)."""
    validate_sample(sample)
    fit = ols_fit(_with_intercept(sample.covariates), sample.outcome)
    return fit.coefficients[1:]


def odm_encoder(sample: Sample) -> Encoder:
    """Outcome-weighted diagonal map B = diag(|beta'_j|^(1/2))."""
    return Encoder(np.diag(np.sqrt(np.abs(odm_weights(sample)))), "odm")


def diagonal_encoder(weights) -> Encoder:
    """ODM-style encoder from explicit non-negative squared weights (``|beta'_j|``)."""
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    return Encoder(np.diag(np.sqrt(w)), "odm")


BUILDERS = {
    "identity": lambda s: identity_encoder(s.p),
    "propensity": propensity_encoder,
    "mahalanobis": mahalanobis_encoder,
    "odm": odm_encoder,
}

# short names used by the CLI and in reports
ALIASES = {"psm": "propensity", "mdm": "mahalanobis", "exact": "identity"}


def build_encoder(kind: str, sample: Sample) -> Encoder:
    kind = ALIASES.get(kind, kind)
    try:
        builder = BUILDERS[kind]
    except KeyError:
        raise ValueError(f"unknown encoder kind {kind!r}; expected one of {sorted(BUILDERS)}") from None
    return builder(sample)


def pair_distance(encoder: Encoder, x, y) -> float:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape or x.shape[0] != encoder.p:
        raise DimensionMismatch(f"vectors of length {x.shape[0]}/{y.shape[0]} vs encoder p={encoder.p}")
    return float(_row_norms((x - y)[None, :], encoder.matrix)[0])


def distances_to(encoder: Encoder, x, Y) -> np.ndarray:
    """d_A between one point ``x`` and every row of ``Y``."""
    diff = np.asarray(Y, dtype=float) - np.asarray(x, dtype=float)
    return _row_norms(np.atleast_2d(diff), encoder.matrix)


def _row_norms(diff, A):
    # plain broadcast reductions rather than BLAS, so a row's value does not
    # depend on how many rows are computed together (exact ties stay ties)
    proj = (diff[:, :, None] * A[None, :, :]).sum(axis=1)
    return np.sqrt((proj * proj).sum(axis=1))
