"""Seeded synthetic populations with analytic ground truth.

King-Nielson style populations draw controls uniformly on [0, 5]^p and treated
units on the shifted box prod_j [eta_j, eta_j + 5], with outcome

    Y = beta0 + X beta + T (gamma0 + X gamma) + eps,   eps ~ N(0, sigma^2).

By default the ATT is reported on the common support prod_j [eta_j, 5], where
the treated X_j is uniform on [eta_j, 5] with mean (eta_j + 5) / 2.  With
``att_region="treated"`` it is the mean effect over the whole treated box,
where X_j has mean eta_j + 5/2.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core import GroundTruth, Sample
from .errors import CovarianceNotPSD, DimensionMismatch

BOX = 5.0
ATT_REGIONS = ("common_support", "treated")


def _vec(v, p, name):
    a = np.array(v, dtype=float).ravel()
    if a.shape != (p,):
        raise DimensionMismatch(f"{name} must have length p={p}, got {a.size}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ScenarioSpec:
    p: int
    eta: np.ndarray
    beta: np.ndarray
    gamma0: float
    gamma: np.ndarray = None
    beta0: float = 0.0
    sigma: float = 1.0
    n_control: int = 100
    n_treated: int = 100
    name: str = ""
    att_region: str = "common_support"

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be at least 1")
        object.__setattr__(self, "eta", _vec(self.eta, self.p, "eta"))
        object.__setattr__(self, "beta", _vec(self.beta, self.p, "beta"))
        gamma = np.zeros(self.p) if self.gamma is None else self.gamma
        object.__setattr__(self, "gamma", _vec(gamma, self.p, "gamma"))
        if np.any(self.eta < 0) or np.any(self.eta > BOX):
            raise ValueError("eta entries must lie in [0, 5] so the supports overlap")
        if not np.isfinite(self.sigma) or self.sigma < 0:
            raise ValueError("sigma must be finite and non-negative")
        if self.n_control < 1 or self.n_treated < 1:
            raise ValueError("both groups need at least one unit")
        if self.att_region not in ATT_REGIONS:
            raise ValueError(f"att_region must be one of {ATT_REGIONS}")

    def with_(self, **changes) -> "ScenarioSpec":
        return replace(self, **changes)

    @property
    def att(self) -> float:
        if self.att_region == "treated":
            return float(self.gamma0 + self.gamma @ (self.eta + BOX / 2.0))
        return float(self.gamma0 + self.gamma @ ((self.eta + BOX) / 2.0))


def common_support_fraction(spec: ScenarioSpec) -> float:
    """Share of treated units expected inside prod_j [eta_j, 5]."""
    # one division at the end keeps simple cases exact (16 / 25 == 0.64)
    return float(np.prod(BOX - spec.eta) / BOX**spec.p)


def in_common_support(spec: ScenarioSpec, X) -> np.ndarray:
    X = np.atleast_2d(X)
    return np.all((X >= spec.eta) & (X <= BOX), axis=1)


def gen_king_nielson(spec: ScenarioSpec, seed: int) -> tuple[Sample, GroundTruth]:
    """Controls first (indices 0..n_control-1), then treated units."""
    rng = np.random.default_rng(seed)
    Xc = rng.uniform(0.0, BOX, size=(spec.n_control, spec.p))
    Xt = spec.eta + rng.uniform(0.0, BOX, size=(spec.n_treated, spec.p))
    X = np.vstack([Xc, Xt])
    t = np.r_[np.zeros(spec.n_control), np.ones(spec.n_treated)]
    effect = spec.gamma0 + X @ spec.gamma
    y = spec.beta0 + X @ spec.beta + t * effect + spec.sigma * rng.standard_normal(len(t))
    return Sample(X, t, y), GroundTruth(spec.att, effect)


def king_nielson(p, outcome_beta, gamma0, gamma=None, eta=None, name="", **kw) -> ScenarioSpec:
    beta = np.zeros(p)
    beta[: len(outcome_beta)] = outcome_beta
    g = np.zeros(p)
    if gamma is not None:
        g[: len(gamma)] = gamma
    if eta is None:
        eta = np.r_[1.0, 1.0, np.zeros(p - 2)]
    return ScenarioSpec(p=p, eta=eta, beta=beta, gamma0=gamma0, gamma=g, name=name, **kw)


def builtin_scenarios() -> list[ScenarioSpec]:
    """Scenarios 1-9: every one has ATT 2 on the common support."""
    return [
        king_nielson(2, [1, 1], 2.0, name="1"),
        king_nielson(10, [1, 1], 2.0, name="2"),
        king_nielson(2, [2, 0.2], 2.0, name="3"),
        king_nielson(2, [1, 1], -1.0, gamma=[1], name="4"),
        king_nielson(10, [1, 1], -1.0, gamma=[1], name="5"),
        king_nielson(2, [2, 0.2], -1.0, gamma=[1], name="6"),
        king_nielson(5, [1, 1], 2.0, eta=np.ones(5), name="7"),
        king_nielson(10, [1, 1], 2.0, eta=np.ones(10), name="8"),
        king_nielson(15, [1, 1], 2.0, eta=np.ones(15), name="9"),
    ]


def builtin_scenario(number: int) -> ScenarioSpec:
    if not 1 <= number <= 9:
        raise KeyError(number)
    return builtin_scenarios()[number - 1]


def memo_scenario(shift: float, p: int = 2, **kw) -> ScenarioSpec:
    """Y = X1 + X2 + T(-3.5 + X1) + eps with treated shifted by ``shift`` along X1.

    The ATT here is taken over the whole treated box, so it equals shift - 1.
    Restricted to the common support it would be shift / 2 - 1.
    """
    eta = np.zeros(p)
    eta[0] = shift
    kw.setdefault("att_region", "treated")
    return king_nielson(p, [1, 1], -3.5, gamma=[1], eta=eta, name=f"memo-{shift:g}", **kw)


def gen_confounding_binary(n: int, seed: int) -> tuple[Sample, GroundTruth]:
    """Binary risk factor X confounding a placebo treatment T and a binary outcome Y."""
    if n < 10:
        raise ValueError("n must be at least 10")
    rng = np.random.default_rng(seed)
    x = (rng.random(n) < 0.25).astype(float)
    risk = np.where(x == 1, 0.95, 0.05)
    t = (rng.random(n) < risk).astype(float)
    y = (rng.random(n) < risk).astype(float)
    return Sample(x[:, None], t, y, ("x",)), GroundTruth(0.0, np.zeros(n))


HAINMUELLER_COV = np.array([[2.0, 1.0, -1.0], [1.0, 1.0, -0.5], [-1.0, -0.5, 1.0]])
HAINMUELLER_INDEX = np.array([1.0, 2.0, -2.0, -1.0, -0.5, 1.0])


def _psd_sqrt(sigma):
    S = np.asarray(sigma, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1] or not np.allclose(S, S.T, atol=1e-10):
        raise CovarianceNotPSD("covariance must be a symmetric square matrix")
    lam, U = np.linalg.eigh((S + S.T) / 2)
    if lam.size and lam.min() < -1e-10 * max(1.0, lam.max()):
        raise CovarianceNotPSD(f"covariance has negative eigenvalue {lam.min():.3g}")
    return U * np.sqrt(np.clip(lam, 0.0, None))


def gen_hainmueller(
    n: int,
    seed: int,
    beta0: float = 0.0,
    beta=(1.0, 1.0, 0.0, 0.0, 0.0, 0.0),
    gamma0: float = 2.0,
    gamma=None,
    sigma: float = 1.0,
) -> tuple[Sample, GroundTruth]:
    """Six mixed covariates; T = 1{X1 + 2X2 - 2X3 - X4 - 0.5X5 + X6 + w > 0}, w standard logistic.

    The outcome model is Y = beta0 + X beta + T (gamma0 + X gamma) + N(0, sigma^2)
    (default Y = X1 + X2 + 2T + eps).
    """
    if n < 10:
        raise ValueError("n must be at least 10")
    rng = np.random.default_rng(seed)
    L = _psd_sqrt(HAINMUELLER_COV)
    X = np.empty((n, 6))
    X[:, :3] = rng.standard_normal((n, 3)) @ L.T
    X[:, 3] = rng.uniform(-3.0, 3.0, n)
    X[:, 4] = rng.chisquare(1, n)
    X[:, 5] = (rng.random(n) < 0.5).astype(float)
    t = (X @ HAINMUELLER_INDEX + rng.logistic(0.0, 1.0, n) > 0).astype(float)
    beta = _vec(beta, 6, "beta")
    gamma = _vec(np.zeros(6) if gamma is None else gamma, 6, "gamma")
    effect = gamma0 + X @ gamma
    y = beta0 + X @ beta + t * effect + sigma * rng.standard_normal(n)
    att = float(effect[t == 1].mean()) if t.any() else float(gamma0)
    return Sample(X, t, y), GroundTruth(att, effect)


def gen_gaussian_latent(p, sigma_matrix, beta, alpha, alpha0, tau, n, seed) -> tuple[Sample, GroundTruth]:
    """X ~ N(0, Sigma); T = 1{alpha0 + X alpha + w > 0}, w standard logistic; Y = X beta + tau T + N(0, 1)."""
    rng = np.random.default_rng(seed)
    L = _psd_sqrt(sigma_matrix)
    if L.shape[0] != p:
        raise DimensionMismatch(f"sigma_matrix must be {p} x {p}")
    beta = _vec(beta, p, "beta")
    alpha = _vec(alpha, p, "alpha")
    X = rng.standard_normal((n, p)) @ L.T
    t = (alpha0 + X @ alpha + rng.logistic(0.0, 1.0, n) > 0).astype(float)
    y = X @ beta + tau * t + rng.standard_normal(n)
    return Sample(X, t, y), GroundTruth(float(tau), np.full(n, float(tau)))
