"""Deterministic parallel map over independent work items."""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

from eikolab.core.config import get_settings

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(fn: Callable[[T], R], items: Sequence[T], threads: Optional[int] = None) -> List[R]:
    """Apply ``fn`` to every item; results keep the input order.

    Each item is reduced independently, so the output never depends on scheduling.
    """
    workers = threads if threads is not None else get_settings().threads
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
