"""Order-preserving map over a process pool.

Results come back in input order whatever the worker count, so callers that
reduce them deterministically (first best wins) behave identically in serial
and parallel runs.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Sequence


def default_workers() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:  # pragma: no cover - platforms without affinity
        return os.cpu_count() or 1


def pmap(fn: Callable, items: Sequence, workers: int = 1, chunksize: int | None = None) -> list:
    """``[fn(x) for x in items]``, spread over ``workers`` processes when above one."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    if chunksize is None:
        chunksize = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunksize))


def chunks(seq: Iterable, size: int) -> list[list]:
    out: list[list] = []
    cur: list = []
    for x in seq:
        cur.append(x)
        if len(cur) == size:
            out.append(cur)
            cur = []
    if cur:
        out.append(cur)
    return out
