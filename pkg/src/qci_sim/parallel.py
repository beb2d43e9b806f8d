"""Ordered thread-pool map.

Work is split into chunks whose boundaries depend only on the data, never on
the thread count, so outputs are bit-identical for any ``threads`` value.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

ENV_THREADS = "QCI_SIM_THREADS"


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get(ENV_THREADS)
        threads = int(env) if env else (os.cpu_count() or 1)
    if threads < 1:
        raise ValueError("threads must be >= 1")
    return threads


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: int | None = None) -> list[R]:
    """``[fn(x) for x in items]``, possibly in parallel; order is preserved."""
    items = list(items)
    n = resolve_threads(threads)
    if n == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(fn, items))


def chunks(n: int, size: int) -> list[slice]:
    return [slice(i, min(i + size, n)) for i in range(0, n, size)]


def split(seq: Sequence[T], size: int) -> list[Sequence[T]]:
    return [seq[s] for s in chunks(len(seq), size)]
