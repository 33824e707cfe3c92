"""Worker-pool helper honoring ``HZPLAN_THREADS``."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count(requested: int | None = None) -> int:
    """Resolve the worker count; ``HZPLAN_THREADS=0`` (or unset) means one per CPU."""
    if requested is None:
        try:
            requested = int(os.environ.get("HZPLAN_THREADS", "0"))
        except ValueError:
            requested = 0
    if requested <= 0:
        requested = os.cpu_count() or 1
    return requested


def parallel_map(fn, items, workers: int | None = None) -> list:
    """``[fn(x) for x in items]`` evaluated on a thread pool, results in input order."""
    items = list(items)
    n = min(worker_count(workers), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
