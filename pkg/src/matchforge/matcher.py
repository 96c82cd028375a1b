"""Greedy 1-1 matching without replacement, calipers and pruning."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Encoder, MatchedPairs, Sample, validate_sample
from .encoders import distances_to, pair_distance
from .errors import KTooLarge, NoControls


def visit_order(sample: Sample, order_seed: int) -> np.ndarray:
    """Uniformly random permutation of the treated units, fixed by ``order_seed``."""
    rng = np.random.default_rng(order_seed)
    return rng.permutation(sample.treated_indices)


def greedy_match(sample: Sample, encoder: Encoder, order_seed: int) -> MatchedPairs:
    """Match each treated unit (random visit order) to its nearest unused control.

    Ties go to the lowest control index.  When controls run out, the remaining
    treated units stay unmatched.
    """
    validate_sample(sample)
    controls = sample.control_indices
    if controls.size == 0:
        raise NoControls("no control units to match against")
    order = visit_order(sample, order_seed)
    pairs = _greedy(sample, encoder, order, controls)
    return MatchedPairs.from_tuples(pairs, encoder.kind, order_seed)


def _greedy(sample, encoder, order, controls):
    X = sample.covariates
    # distances from every treated unit to every control, computed once
    D = np.vstack([distances_to(encoder, X[i], X[controls]) for i in order])
    available = np.ones(controls.size, dtype=bool)
    pairs = []
    for row, i in enumerate(order):
        if not available.any():
            break
        d = np.where(available, D[row], np.inf)
        j = int(np.argmin(d))  # first minimum == lowest control index
        available[j] = False
        pairs.append((int(i), int(controls[j]), float(D[row, j])))
    return pairs


def brute_force_match(sample: Sample, encoder: Encoder, treated_order: Sequence[int]) -> MatchedPairs:
    """Reference implementation of greedy matching for small samples.

    Plain loops over an explicit visit order; kept free of the vectorised
    distance machinery so it can serve as an independent check.
    """
    validate_sample(sample)
    treated_order = [int(i) for i in treated_order]
    if sorted(treated_order) != sorted(int(i) for i in sample.treated_indices):
        raise ValueError("treated_order must be a permutation of the treated indices")
    if len(treated_order) > 12:
        raise ValueError("brute_force_match is limited to 12 treated units")
    controls = [int(j) for j in sample.control_indices]
    if not controls:
        raise NoControls("no control units to match against")
    used = set()
    pairs = []
    for i in treated_order:
        best, best_d = None, None
        for j in controls:
            if j in used:
                continue
            d = pair_distance(encoder, sample.covariates[i], sample.covariates[j])
            if best is None or d < best_d:
                best, best_d = j, d
        if best is None:
            break
        used.add(best)
        pairs.append((i, best, best_d))
    return MatchedPairs.from_tuples(pairs, encoder.kind)


def apply_caliper(pairs: MatchedPairs, delta: float) -> MatchedPairs:
    """Keep exactly the pairs with distance <= delta."""
    if delta < 0:
        raise ValueError("caliper must be non-negative")
    return pairs.select(pairs.distance <= delta)


def _removal_order(pairs: MatchedPairs) -> np.ndarray:
    # largest distance first; among equal distances the higher treated index goes first
    return np.lexsort((-pairs.treated, -pairs.distance))


def prune_worst(pairs: MatchedPairs, k: int) -> MatchedPairs:
    """Drop the ``k`` worst-matched pairs, preserving the order of the rest."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if k > len(pairs):
        raise KTooLarge(f"cannot prune {k} of {len(pairs)} pairs")
    keep = np.ones(len(pairs), dtype=bool)
    keep[_removal_order(pairs)[:k]] = False
    return pairs.select(keep)


@dataclass(frozen=True, eq=False)
class PruningSchedule:
    """Matched pairs ordered worst-first, with the pruning levels to evaluate."""

    ordered_pairs: MatchedPairs
    levels: tuple

    @classmethod
    def build(cls, pairs: MatchedPairs, levels) -> "PruningSchedule":
        levels = tuple(int(k) for k in levels)
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError("pruning levels must be strictly increasing")
        if levels and (levels[0] < 0 or levels[-1] >= len(pairs)):
            raise KTooLarge(f"pruning levels must lie in [0, {len(pairs)})")
        return cls(pairs.select(_removal_order(pairs)), levels)

    def __iter__(self):
        for k in self.levels:
            yield k, prune_worst(self.ordered_pairs, k)


def exact_one_to_one_match(sample: Sample, seed: int) -> MatchedPairs:
    """1-1 matching on identical covariates, drawing uniformly among unused exact controls.

    Treated units are visited in a seeded random order; those with no unused
    exact control are left out.
    """
    validate_sample(sample)
    rng = np.random.default_rng(seed)
    X = sample.covariates
    controls = sample.control_indices
    available = np.ones(controls.size, dtype=bool)
    pairs = []
    for i in rng.permutation(sample.treated_indices):
        cand = np.flatnonzero(available & np.all(X[controls] == X[i], axis=1))
        if cand.size == 0:
            continue
        j = cand[rng.integers(cand.size)]
        available[j] = False
        pairs.append((int(i), int(controls[j]), 0.0))
    return MatchedPairs.from_tuples(pairs, "identity", seed)
