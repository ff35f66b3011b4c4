"""Order-preserving process-pool map used for independent NMF fits."""

from __future__ import annotations

import atexit
import multiprocessing as mp
import os
from concurrent.futures import ProcessPoolExecutor

ENV_JOBS = "NMFCHANGE_NUM_THREADS"

_pools: dict[int, ProcessPoolExecutor] = {}


def resolve_jobs(n_jobs: int | None) -> int:
    """Worker count: explicit value, else the environment override, else 1.

    ``-1`` means one worker per CPU.
    """
    if n_jobs is None:
        n_jobs = int(os.environ.get(ENV_JOBS, "1"))
    if n_jobs < 0:
        n_jobs = os.cpu_count() or 1
    return max(1, int(n_jobs))


def _pool(n: int) -> ProcessPoolExecutor:
    pool = _pools.get(n)
    if pool is None:
        ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else None
        pool = ProcessPoolExecutor(max_workers=n, mp_context=ctx)
        _pools[n] = pool
    return pool


@atexit.register
def shutdown():
    for pool in _pools.values():
        pool.shutdown(wait=False, cancel_futures=True)
    _pools.clear()


def _in_worker() -> bool:
    return mp.parent_process() is not None


def parallel_map(func, items, n_jobs: int | None = 1) -> list:
    """``[func(x) for x in items]``, optionally spread over worker processes.

    Results come back in input order, so any reduction over them is
    independent of scheduling. Nested calls from inside a worker run
    sequentially.
    """
    items = list(items)
    n = resolve_jobs(n_jobs)
    if n == 1 or len(items) < 2 or _in_worker():
        return [func(x) for x in items]
    chunk = max(1, len(items) // (4 * n))
    return list(_pool(n).map(func, items, chunksize=chunk))
