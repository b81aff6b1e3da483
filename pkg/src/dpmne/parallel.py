"""Optional per-view thread parallelism, capped by the DPMNE_THREADS variable."""

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count(num_tasks):
    """Workers to use for ``num_tasks`` independent jobs (0 / unset = auto)."""
    raw = os.environ.get("DPMNE_THREADS", "0")
    try:
        requested = int(raw)
    except ValueError:
        raise ValueError(f"DPMNE_THREADS must be an integer, got {raw!r}")
    if requested < 0:
        raise ValueError(f"DPMNE_THREADS must be >= 0, got {requested}")
    if requested == 0:
        requested = os.cpu_count() or 1
    return max(1, min(requested, num_tasks))


def map_views(fn, items):
    """Order-preserving map over independent per-view jobs."""
    items = list(items)
    workers = worker_count(len(items))
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
