"""ATT estimators over raw or matched samples.

Covers the difference-in-means and parallel-regression estimators on matched
pairs, the exact (one-to-mean) matching estimator, the logistic plug-in
estimator, the 512-specification model-dependence sweep and a unit-level
bootstrap.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .core import MatchedPairs, Sample, validate_sample
from .encoders import build_encoder
from .errors import (
    AllReplicationsFailed,
    DimensionMismatch,
    EmptyPairs,
    MatchForgeError,
    RankDeficient,
    UnmatchedTreated,
)
from .linalg import logistic_fit, ols_fit, percentile_interval
from .matcher import exact_one_to_one_match, greedy_match
from .seeding import derive_seed, ordered_map

# fixed monomial order over (X1, X2); bit j of a specification index selects MONOMIALS[j]
MONOMIALS = ((1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3))


@dataclass(frozen=True, eq=False)
class Specification:
    monomials: frozenset
    include_extra_linear: bool = True

    def __post_init__(self):
        mons = frozenset(tuple(m) for m in self.monomials)
        unknown = mons - set(MONOMIALS)
        if unknown:
            raise ValueError(f"unsupported monomials {sorted(unknown)}")
        object.__setattr__(self, "monomials", mons)

    @property
    def ordered(self) -> tuple:
        return tuple(m for m in MONOMIALS if m in self.monomials)

    def features(self, X) -> np.ndarray:
        """Feature columns (monomials of X1, X2, then X3..Xp if enabled); no intercept or T."""
        X = np.asarray(X, dtype=float)
        cols = [_monomial(X, m) for m in self.ordered]
        if self.include_extra_linear and X.shape[1] > 2:
            cols.extend(X[:, j] for j in range(2, X.shape[1]))
        if not cols:
            return np.zeros((X.shape[0], 0))
        return np.column_stack(cols)


def _monomial(X, m):
    a, b = m
    if b and X.shape[1] < 2:
        raise DimensionMismatch("specification uses X2 but the sample has a single covariate")
    return X[:, 0] ** a * (X[:, 1] ** b if b else 1.0)


def enumerate_specifications(include_extra_linear: bool = True) -> list[Specification]:
    """All 2^9 subsets of the monomials, in binary-counting order."""
    return [
        Specification(frozenset(m for j, m in enumerate(MONOMIALS) if code >> j & 1), include_extra_linear)
        for code in range(2 ** len(MONOMIALS))
    ]


def _require_pairs(pairs):
    if len(pairs) == 0:
        raise EmptyPairs("no matched pairs to estimate from")


def diff_means_estimate(sample: Sample, pairs: MatchedPairs) -> float:
    _require_pairs(pairs)
    y = sample.outcome
    return float(np.mean(y[pairs.treated] - y[pairs.control]))


def exact_match_estimate(sample: Sample) -> float:
    """Exact matching with each treated unit compared to the mean of all its exact controls."""
    validate_sample(sample)
    X, y = sample.covariates, sample.outcome
    control_means = {}
    for j in sample.control_indices:
        control_means.setdefault(X[j].tobytes(), []).append(y[j])
    diffs = []
    for i in sample.treated_indices:
        ys = control_means.get(X[i].tobytes())
        if ys is None:
            raise UnmatchedTreated(f"treated unit {i} has no control with identical covariates")
        diffs.append(y[i] - np.mean(ys))
    return float(np.mean(diffs))


def _treatment_coefficient(F, t, y) -> float:
    """OLS of y on [1, F, t, t * (F - mean F)]; returns the coefficient on t."""
    n, f = F.shape
    Fc = F - F.mean(axis=0)
    design = np.column_stack([np.ones(n), F, t, t[:, None] * Fc])
    return float(ols_fit(design, y).coefficients[1 + f])


def regression_estimate(sample: Sample, pairs: MatchedPairs, spec: Specification) -> float:
    """Parallel regressions on covariates over the pooled matched sample."""
    _require_pairs(pairs)
    idx = pairs.pooled_indices()
    return _treatment_coefficient(
        spec.features(sample.covariates[idx]), sample.treatment[idx], sample.outcome[idx]
    )


def simple_regression_estimate(sample: Sample, pairs: MatchedPairs) -> float:
    """Coefficient on T in Y ~ 1 + X + T over the pooled matched sample."""
    _require_pairs(pairs)
    idx = pairs.pooled_indices()
    X, t = sample.covariates[idx], sample.treatment[idx]
    design = np.column_stack([np.ones(len(idx)), X, t])
    return float(ols_fit(design, sample.outcome[idx]).coefficients[-1])


def plugin_estimate(sample: Sample, l2_penalty: float = 1.0) -> float:
    """Mean over all units of g(x, 1) - g(x, 0) for g = logistic(b0 + b x + g0 t).

    The default ridge strength of 1 on the slopes equals scikit-learn's default
    ``LogisticRegression(C=1)``; pass 0 for the unpenalised maximum-likelihood fit.
    """
    validate_sample(sample)
    X, t = sample.covariates, sample.treatment
    n = sample.n
    fit = logistic_fit(np.column_stack([np.ones(n), X, t]), sample.outcome, l2_penalty=l2_penalty)
    b = fit.coefficients
    base = b[0] + X @ b[1:-1]
    return float(np.mean(_logistic(base + b[-1]) - _logistic(base)))


def _logistic(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass(frozen=True, eq=False)
class ModelDependenceResult:
    estimates: np.ndarray  # length 512; NaN where the specification was not estimable
    variance: float
    max_abs: float

    @property
    def fitted(self) -> int:
        return int(np.sum(np.isfinite(self.estimates)))


def model_dependence(sample: Sample, pairs: MatchedPairs, include_extra_linear: bool = True) -> ModelDependenceResult:
    """Regression estimates under all 512 specifications on one matched sample.

    Rank-deficient specifications are skipped (NaN); the variance (ddof=0) and
    max |estimate| are taken over the fitted ones.
    """
    _require_pairs(pairs)
    idx = pairs.pooled_indices()
    X, t, y = sample.covariates[idx], sample.treatment[idx], sample.outcome[idx]
    full = Specification(frozenset(MONOMIALS), include_extra_linear)
    F_all = full.features(X)
    extra = list(range(len(MONOMIALS), F_all.shape[1]))
    estimates = np.full(2 ** len(MONOMIALS), np.nan)
    for code in range(estimates.size):
        cols = [j for j in range(len(MONOMIALS)) if code >> j & 1] + extra
        try:
            estimates[code] = _treatment_coefficient(F_all[:, cols], t, y)
        except RankDeficient:
            pass
    ok = estimates[np.isfinite(estimates)]
    if ok.size == 0:
        raise RankDeficient("no specification is estimable on this matched sample")
    return ModelDependenceResult(estimates, float(np.var(ok)), float(np.max(np.abs(ok))))


# estimator pipelines: f(sample, seed) -> float; any matching happens inside
Pipeline = Callable[[Sample, int], float]


def matched_plugin(sample: Sample, seed: int) -> float:
    pairs = exact_one_to_one_match(sample, seed)
    _require_pairs(pairs)
    return plugin_estimate(sample.subset(pairs.pooled_indices()))


def _matched(kind: str, estimator):
    def pipeline(sample, seed):
        pairs = greedy_match(sample, build_encoder(kind, sample), seed)
        return estimator(sample, pairs)

    return pipeline


PIPELINES: dict[str, Pipeline] = {
    "plugin": lambda s, seed: plugin_estimate(s),
    "matched-plugin": matched_plugin,
    "exact": lambda s, seed: exact_match_estimate(s),
}
for _kind in ("propensity", "mahalanobis", "odm"):
    PIPELINES[f"{_kind}-diff-means"] = _matched(_kind, diff_means_estimate)
    PIPELINES[f"{_kind}-regression"] = _matched(_kind, simple_regression_estimate)


@dataclass(frozen=True, eq=False)
class BootstrapInterval:
    lo: float
    hi: float
    used: int
    dropped: int

    @property
    def bounds(self) -> tuple[float, float]:
        return self.lo, self.hi


def bootstrap_interval(
    sample: Sample,
    estimator: Union[str, Pipeline],
    replications: int,
    level: float,
    seed: int,
    threads=None,
) -> BootstrapInterval:
    """Percentile interval over unit-level resamples, re-running the whole pipeline each time.

    Replication ``r`` draws from ``derive_seed(seed, r)`` regardless of worker
    count.  Replications whose pipeline raises a MatchForgeError are dropped.
    """
    if replications < 100:
        raise ValueError("bootstrap needs at least 100 replications")
    fn = PIPELINES[estimator] if isinstance(estimator, str) else estimator
    n = sample.n

    def one(r):
        s = derive_seed(seed, r)
        rng = np.random.default_rng(s)
        try:
            return fn(sample.subset(rng.integers(0, n, size=n)), derive_seed(s, 1))
        except MatchForgeError:
            return None

    values = [v for v in ordered_map(one, range(replications), threads) if v is not None]
    dropped = replications - len(values)
    if not values:
        raise AllReplicationsFailed(f"all {replications} bootstrap replications failed")
    if len(values) == 1:
        lo = hi = values[0]
    else:
        lo, hi = percentile_interval(values, level)
    return BootstrapInterval(lo, hi, len(values), dropped)
