"""Deterministic parallel map: ordered results, process-based workers."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> list[R]:
    """Map ``fn`` over ``items`` preserving order.

    With workers > 1 the tasks run in a process pool; ``fn`` and the items
    must be picklable. Results are identical to the sequential path because
    every task carries its own derived seed.
    """
    seq: Sequence[T] = list(items)
    if workers <= 1 or len(seq) <= 1:
        return [fn(item) for item in seq]
    chunk = max(1, len(seq) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, seq, chunksize=chunk))
