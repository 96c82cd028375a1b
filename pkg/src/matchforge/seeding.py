"""Counter-based seed derivation and an order-preserving parallel map.

Every stochastic task gets its seed from ``derive_seed(master, *counters)``,
so results never depend on scheduling or on the number of workers.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

THREADS_ENV = "MATCHFORGE_THREADS"


def derive_seed(master: int, *keys: int) -> int:
    return int(np.random.SeedSequence([int(master), *map(int, keys)]).generate_state(1, np.uint64)[0])


def worker_count(threads=None) -> int:
    if threads is None:
        raw = os.environ.get(THREADS_ENV, "").strip()
        threads = int(raw) if raw else (os.cpu_count() or 1)
    return max(1, int(threads))


def ordered_map(fn, items, threads=None) -> list:
    """``list(map(fn, items))``, optionally on a thread pool; output order is input order."""
    items = list(items)
    n = worker_count(threads)
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
