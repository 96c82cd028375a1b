"""Monte Carlo studies: pruning sweeps and the binary confounding experiment."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .encoders import ALIASES, build_encoder
from .errors import AllReplicationsFailed, MatchForgeError, SweepRunError
from .estimators import model_dependence, plugin_estimate, simple_regression_estimate
from .linalg import percentile_interval
from .matcher import PruningSchedule, exact_one_to_one_match, greedy_match
from .scenarios import ScenarioSpec, common_support_fraction, gen_confounding_binary, gen_king_nielson
from .seeding import derive_seed, ordered_map

log = logging.getLogger(__name__)

DEFAULT_METHODS = ("propensity", "mahalanobis", "odm")

# counter streams under a run's seed
_DATA, _ORDER = 0, 1


@dataclass(frozen=True)
class SweepRow:
    method: str
    pairs_pruned: int
    mean_estimate: float
    spec_variance: float
    mse: float
    runs: int

    @property
    def units_pruned(self) -> int:
        return 2 * self.pairs_pruned


@dataclass(frozen=True)
class SweepResult:
    rows: list = field(default_factory=list)
    # per-run detail, shape (runs, len(prune_grid)) for each method
    estimates: dict = field(default_factory=dict)
    spec_variances: dict = field(default_factory=dict)

    def row(self, method, pairs_pruned) -> SweepRow:
        for r in self.rows:
            if r.method == method and r.pairs_pruned == pairs_pruned:
                return r
        raise KeyError((method, pairs_pruned))


def common_support_level(spec: ScenarioSpec, min_pairs_kept: int | None = None) -> int:
    """Pairs to prune so roughly the common-support share of treated units stays.

    At least ``min_pairs_kept`` pairs are kept (default p + 2) so the linear
    outcome regression remains estimable.
    """
    n_pairs = min(spec.n_treated, spec.n_control)
    if min_pairs_kept is None:
        min_pairs_kept = spec.p + 2
    k = int(round(spec.n_treated * (1.0 - common_support_fraction(spec))))
    return max(0, min(k, n_pairs - min_pairs_kept))


def _one_run(spec, methods, levels, master_seed, run, with_variance, pool):
    seed = derive_seed(master_seed, run)
    sample, truth = gen_king_nielson(spec, derive_seed(seed, _DATA))
    out = {}
    for m, method in enumerate(methods):
        est = np.empty(len(levels))
        var = np.full(len(levels), np.nan)
        md_estimates = [None] * len(levels)
        k = None
        try:
            encoder = build_encoder(method, sample)
            pairs = greedy_match(sample, encoder, derive_seed(seed, _ORDER, m))
            for i, (k, kept) in enumerate(PruningSchedule.build(pairs, levels)):
                est[i] = simple_regression_estimate(sample, kept)
                if with_variance:
                    md = model_dependence(sample, kept)
                    var[i] = md.variance
                    if pool:
                        md_estimates[i] = md.estimates
        except MatchForgeError as exc:
            where = "" if k is None else f", pairs pruned {k}"
            raise SweepRunError(
                f"scenario {spec.name or '<inline>'}, run {run}, method {method}{where}: {exc}"
            ) from exc
        out[method] = (est, var, md_estimates)
    return truth.att, out


def run_pruning_sweep(
    spec: ScenarioSpec,
    methods=DEFAULT_METHODS,
    runs: int = 100,
    prune_grid=(0,),
    master_seed: int = 0,
    with_variance: bool = True,
    pool_variance: bool = False,
    threads=None,
) -> SweepResult:
    """Average simple-spec estimates, MSE and 512-spec variance over seeded runs.

    Run ``r`` uses ``derive_seed(master_seed, r)``, so results do not depend on
    the number of worker threads.  With ``pool_variance`` the specification variance at a
    level is computed over all runs' estimates pooled, instead of averaging the
    per-run variances.  ``with_variance=False`` skips the 512-spec sweep and
    reports NaN for spec_variance.
    """
    if runs < 1:
        raise ValueError("runs must be at least 1")
    methods = tuple(ALIASES.get(m, m) for m in methods)
    levels = tuple(int(k) for k in prune_grid)

    results = ordered_map(
        lambda r: _one_run(spec, methods, levels, master_seed, r, with_variance, pool_variance),
        range(runs),
        threads,
    )
    att = results[0][0]
    rows, estimates, variances = [], {}, {}
    for method in methods:
        est = np.vstack([res[method][0] for _, res in results])
        var = np.vstack([res[method][1] for _, res in results])
        estimates[method] = est
        variances[method] = var
        for i, k in enumerate(levels):
            if not with_variance:
                spec_var = float("nan")
            elif pool_variance:
                pooled = np.concatenate([res[method][2][i] for _, res in results])
                spec_var = float(np.var(pooled[np.isfinite(pooled)]))
            else:
                spec_var = float(var[:, i].mean())
            rows.append(
                SweepRow(
                    method=method,
                    pairs_pruned=k,
                    mean_estimate=float(est[:, i].mean()),
                    spec_variance=spec_var,
                    mse=float(np.mean((est[:, i] - att) ** 2)),
                    runs=runs,
                )
            )
    return SweepResult(rows, estimates, variances)


@dataclass(frozen=True)
class ConfoundingResult:
    unmatched: tuple
    matched: tuple
    unmatched_used: int
    matched_used: int
    runs: int

    @property
    def dropped(self) -> tuple:
        return self.runs - self.unmatched_used, self.runs - self.matched_used


def run_confounding_experiment(n: int = 200, runs: int = 1000, master_seed: int = 0, level: float = 0.95,
                               l2_penalty: float = 1.0, threads=None) -> ConfoundingResult:
    """Percentile intervals of the plug-in estimate, raw vs. after exact 1-1 matching.

    Runs that fail (a single outcome class, no exact pairs) are dropped and counted.
    """
    if runs < 100:
        raise ValueError("runs must be at least 100")

    def one(r):
        seed = derive_seed(master_seed, r)
        sample, _ = gen_confounding_binary(n, derive_seed(seed, _DATA))
        try:
            raw = plugin_estimate(sample, l2_penalty)
        except MatchForgeError:
            raw = None
        try:
            pairs = exact_one_to_one_match(sample, derive_seed(seed, _ORDER))
            matched = plugin_estimate(sample.subset(pairs.pooled_indices()), l2_penalty) if len(pairs) else None
        except MatchForgeError:
            matched = None
        return raw, matched

    results = ordered_map(one, range(runs), threads)
    raw = [a for a, _ in results if a is not None]
    matched = [b for _, b in results if b is not None]
    if len(raw) < 2 or len(matched) < 2:
        raise AllReplicationsFailed("too few successful confounding runs to form an interval")
    log.debug("confounding: %d raw and %d matched runs succeeded of %d", len(raw), len(matched), runs)
    return ConfoundingResult(
        percentile_interval(raw, level), percentile_interval(matched, level), len(raw), len(matched), runs
    )
