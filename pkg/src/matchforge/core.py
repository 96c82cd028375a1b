"""Domain types shared by every stage of the matching pipeline.

All indices are 0-based.  Arrays held by these types are flagged read-only
at construction so instances can be shared between workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import BadTreatment, DimensionMismatch, EmptyGroup, NonFinite

ENCODER_KINDS = ("identity", "propensity", "mahalanobis", "odm")


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Sample:
    """N units with covariates (N x p), binary treatment and observed outcome.

    The intercept is never stored; consumers build their own design matrices.
    """

    covariates: np.ndarray
    treatment: np.ndarray
    outcome: np.ndarray
    column_names: Optional[tuple] = None

    def __post_init__(self):
        X = np.array(self.covariates, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        object.__setattr__(self, "covariates", _frozen(X))
        object.__setattr__(self, "treatment", _frozen(np.ravel(self.treatment)))
        object.__setattr__(self, "outcome", _frozen(np.ravel(self.outcome)))
        if self.column_names is None:
            names = tuple(f"x{j + 1}" for j in range(X.shape[1]))
        else:
            names = tuple(str(c) for c in self.column_names)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.covariates.shape[0]

    @property
    def p(self) -> int:
        return self.covariates.shape[1]

    @property
    def treated_indices(self) -> np.ndarray:
        return np.flatnonzero(self.treatment == 1)

    @property
    def control_indices(self) -> np.ndarray:
        return np.flatnonzero(self.treatment == 0)

    def subset(self, idx) -> "Sample":
        idx = np.asarray(idx, dtype=int)
        return Sample(self.covariates[idx], self.treatment[idx], self.outcome[idx], self.column_names)


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Analytic ATT of a generated population, plus per-unit effects when known."""

    att: float
    per_unit_effects: Optional[np.ndarray] = None

    def __post_init__(self):
        if not np.isfinite(self.att):
            raise NonFinite("ground-truth ATT must be finite")
        if self.per_unit_effects is not None:
            object.__setattr__(self, "per_unit_effects", _frozen(self.per_unit_effects))


@dataclass(frozen=True, eq=False)
class Encoder:
    """Linear map X -> X A inducing the pseudo-metric d_A(x, y) = ||(x - y) A||.

    ``matrix`` is p x k.  ``converged`` carries the fit status of the model the
    map was derived from (only meaningful for propensity encoders).
    """

    matrix: np.ndarray
    kind: str
    converged: bool = True

    def __post_init__(self):
        A = np.array(self.matrix, dtype=float)
        if A.ndim == 1:
            A = A[:, None]
        if A.ndim != 2 or A.shape[1] < 1 or A.shape[1] > A.shape[0]:
            raise DimensionMismatch(f"encoder matrix must be p x k with 1 <= k <= p, got {A.shape}")
        if not np.all(np.isfinite(A)):
            raise NonFinite("encoder matrix has non-finite entries")
        if self.kind not in ENCODER_KINDS:
            raise ValueError(f"unknown encoder kind {self.kind!r}")
        if self.kind == "identity" and not np.array_equal(A, np.eye(A.shape[0])):
            raise ValueError("identity encoder must hold the identity matrix")
        object.__setattr__(self, "matrix", _frozen(A))

    @property
    def p(self) -> int:
        return self.matrix.shape[0]

    def transform(self, X) -> np.ndarray:
        return np.atleast_2d(np.asarray(X, dtype=float)) @ self.matrix


@dataclass(frozen=True, eq=False)
class MatchedPairs:
    """Injective treated -> control assignment with per-pair distances.

    Pairs are kept in the order they were formed (the visit order for greedy
    matching).
    """

    treated: np.ndarray
    control: np.ndarray
    distance: np.ndarray
    encoder_kind: str = "identity"
    order_seed: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "treated", _frozen(self.treated, dtype=np.int64))
        object.__setattr__(self, "control", _frozen(self.control, dtype=np.int64))
        object.__setattr__(self, "distance", _frozen(self.distance))
        if not (self.treated.shape == self.control.shape == self.distance.shape):
            raise DimensionMismatch("treated, control and distance must have equal length")
        check_pairs(self)

    @classmethod
    def from_tuples(cls, pairs: Sequence[tuple], encoder_kind="identity", order_seed=None):
        pairs = list(pairs)
        if not pairs:
            return cls.empty(encoder_kind, order_seed)
        t, c, d = zip(*pairs)
        return cls(np.array(t), np.array(c), np.array(d, dtype=float), encoder_kind, order_seed)

    @classmethod
    def empty(cls, encoder_kind="identity", order_seed=None):
        return cls(np.zeros(0, int), np.zeros(0, int), np.zeros(0), encoder_kind, order_seed)

    def __len__(self) -> int:
        return len(self.treated)

    def __iter__(self) -> Iterator[tuple]:
        for t, c, d in zip(self.treated, self.control, self.distance):
            yield int(t), int(c), float(d)

    def select(self, mask_or_idx) -> "MatchedPairs":
        return MatchedPairs(
            self.treated[mask_or_idx],
            self.control[mask_or_idx],
            self.distance[mask_or_idx],
            self.encoder_kind,
            self.order_seed,
        )

    def pooled_indices(self) -> np.ndarray:
        """Unit indices of I_t^delta followed by their matched controls."""
        return np.concatenate([self.treated, self.control])


def check_pairs(pairs: MatchedPairs) -> None:
    """Assert the MatchedPairs invariants: injectivity and finite non-negative distances."""
    if len(np.unique(pairs.treated)) != len(pairs.treated):
        raise AssertionError("treated indices are not distinct")
    if len(np.unique(pairs.control)) != len(pairs.control):
        raise AssertionError("control indices are not distinct (matching is not injective)")
    d = pairs.distance
    if d.size and (not np.all(np.isfinite(d)) or np.any(d < 0)):
        raise AssertionError("pair distances must be finite and non-negative")


def validate_sample(sample: Sample) -> Sample:
    """Return ``sample`` unchanged if it satisfies every Sample invariant."""
    X, t, y = sample.covariates, sample.treatment, sample.outcome
    if X.ndim != 2 or len(t) != X.shape[0] or len(y) != X.shape[0]:
        raise DimensionMismatch(
            f"covariates {X.shape}, treatment {t.shape} and outcome {y.shape} disagree"
        )
    if len(sample.column_names) != X.shape[1]:
        raise DimensionMismatch("column_names length must equal the number of covariates")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y)) and np.all(np.isfinite(t))):
        raise NonFinite("sample contains NaN or infinite values")
    if not np.all((t == 0) | (t == 1)):
        raise BadTreatment("treatment entries must be 0 or 1")
    if X.shape[0] < 2:
        raise EmptyGroup("a sample needs at least two units")
    n_treated = int(t.sum())
    if n_treated == 0 or n_treated == len(t):
        raise EmptyGroup("sample needs at least one treated and one control unit")
    return sample
