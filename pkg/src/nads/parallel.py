"""Deterministic thread fan-out capped by ``NADS_THREADS``."""

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count():
    cap = os.environ.get("NADS_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return n


def ordered_map(fn, items):
    """``[fn(item) for item in items]``, possibly on worker threads; order is preserved."""
    items = list(items)
    n = worker_count()
    if n <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
