"""Ordered thread-pool map used by scans and Monte Carlo loops."""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

logger = logging.getLogger(__name__)

THREADS_ENV = "SYMPROTECT_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def get_thread_count() -> int:
    """Worker count from SYMPROTECT_THREADS (default 1)."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        count = int(raw)
    except ValueError:
        logger.warning(f"Ignoring non-integer {THREADS_ENV}={raw!r}")
        return 1
    return max(1, count)


def ordered_map(
    func: Callable[[T], R], items: Sequence[T], threads: Optional[int] = None
) -> List[R]:
    """Apply func to every item, returning results in input order.

    Args:
        func: Pure function of one item
        items: Work items
        threads: Worker count (default: SYMPROTECT_THREADS)
    """
    threads = get_thread_count() if threads is None else max(1, int(threads))
    if threads == 1 or len(items) < 2:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))
