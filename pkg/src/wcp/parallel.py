"""Replica scheduling.

Compiled kernels release the GIL, so a thread pool gives real parallelism.
Results always come back in replica order and every replica draws from its
own derived seed, so the worker count never changes the output.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def default_workers() -> int:
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)


def map_replicas(fn, indices, workers: int = 1) -> list:
    if workers < 1:
        raise ValueError("workers must be at least 1")
    indices = list(indices)
    if workers == 1 or len(indices) < 2:
        return [fn(r) for r in indices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, indices))
