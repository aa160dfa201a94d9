import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "INTERVAL_STATS_THREADS"


def default_workers() -> int:
    """Worker cap from ``INTERVAL_STATS_THREADS`` (default 1)."""
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


def map_indexed(fn, count: int, workers: int | None = None) -> list:
    """``[fn(0), ..., fn(count - 1)]``, evaluated on up to ``workers`` threads.

    Results are placed by index, so the output never depends on scheduling.
    """
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or count < 2:
        return [fn(i) for i in range(count)]
    chunks = [range(lo, min(lo + _chunk(count, workers), count))
              for lo in range(0, count, _chunk(count, workers))]
    out = [None] * count
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for idx, vals in zip(chunks, pool.map(lambda r: [fn(i) for i in r], chunks)):
            out[idx.start:idx.stop] = vals
    return out


def _chunk(count, workers):
    return max(1, -(-count // (4 * workers)))
