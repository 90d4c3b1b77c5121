"""Deterministic replica scheduling.

Replicas are cut into fixed blocks ``[r0, r1)`` that do not depend on the
worker count.  Each block is evaluated by a kernel that derives replica ``r``'s
random streams from ``(seed, key, r)`` alone, and blocks are concatenated in
order, so the outcome array is identical for any number of threads.  The
compiled kernels release the GIL, which lets a thread pool use several cores.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

THREADS_ENV = "BOUNDFIRE_THREADS"
BLOCK = 4096


def default_threads() -> int:
    try:
        value = int(os.environ.get(THREADS_ENV, "1"))
    except ValueError:
        return 1
    return max(1, value)


def run_blocks(kernel, replicas: int, threads: int | None = None, block: int = BLOCK, start: int = 0):
    """Evaluate ``kernel(r0, r1)`` over ``[start, start + replicas)`` and concatenate.

    Parameters
    ----------
    kernel : callable
        Returns a 1-d array with one entry per replica of its block.
    replicas : int
    threads : int, optional
        Worker count; defaults to ``$BOUNDFIRE_THREADS`` or 1.
    block : int
        Replicas per task.  Part of the schedule only, never of the result.
    """
    if replicas <= 0:
        raise ValueError("replicas must be >= 1")
    threads = default_threads() if threads is None else max(1, int(threads))
    bounds = [(r, min(r + block, start + replicas)) for r in range(start, start + replicas, block)]
    if threads == 1 or len(bounds) == 1:
        parts = [kernel(r0, r1) for r0, r1 in bounds]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda b: kernel(*b), bounds))
    return np.concatenate(parts)
