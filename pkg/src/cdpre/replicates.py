"""Replicate-parallel map with a fixed reduction order."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def default_threads() -> int:
    return os.cpu_count() or 1


def map_replicates(fn, replicates: int, threads: int | None = 1, start: int = 0) -> list:
    """``[fn(i) for i in range(start, start + replicates)]``, possibly threaded.

    Results come back in replicate order whatever the thread count, so any
    reduction over them is scheduling independent.  The compiled kernels
    release the GIL, which is where threads pay off.
    """
    if replicates < 1:
        raise ValueError("replicate count must be positive")
    idx = range(start, start + replicates)
    threads = threads or default_threads()
    if threads <= 1 or replicates == 1:
        return [fn(i) for i in idx]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, idx))


def mean_stderr(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    m = float(x.mean())
    if len(x) < 2:
        return m, float("nan")
    return m, float(x.std(ddof=1) / math.sqrt(len(x)))


def binomial_stderr(p: float, n: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / n)
