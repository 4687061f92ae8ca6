"""
Deterministic thread-pool helpers.

Work is split into fixed contiguous partitions and results come back in input
order, so reductions over them are bit-reproducible regardless of scheduling.
"""

from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

import structlog

from nlcf.config import get_settings

logger = structlog.get_logger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def partition(n_items: int, n_parts: int) -> list[range]:
    """Split range(n_items) into at most n_parts contiguous, non-empty chunks."""
    n_parts = max(1, min(n_parts, n_items))
    base, extra = divmod(n_items, n_parts)
    chunks = []
    start = 0
    for i in range(n_parts):
        size = base + (1 if i < extra else 0)
        chunks.append(range(start, start + size))
        start += size
    return [c for c in chunks if len(c) > 0]


def deterministic_map(
    fn: Callable[[T], R],
    items: Sequence[T],
    max_workers: int | None = None,
) -> list[R]:
    """
    Apply fn to every item on a thread pool; results keep input order.

    Args:
        fn: pure function of one item
        items: inputs
        max_workers: override for Settings.max_threads

    Returns:
        list of fn(item) in the order of items
    """
    if not items:
        return []
    workers = max_workers or get_settings().max_threads
    if workers <= 1 or len(items) == 1:
        return [fn(item) for item in items]

    chunks = partition(len(items), workers)

    def run_chunk(chunk: range) -> list[R]:
        return [fn(items[i]) for i in chunk]

    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        parts = list(pool.map(run_chunk, chunks))

    logger.debug("deterministic_map", items=len(items), chunks=len(chunks))
    return [result for part in parts for result in part]

