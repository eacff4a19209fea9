# rdphase/utils/parallel.py

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

import psutil

from rdphase.utils.logging import get_logger

logger = get_logger(__name__)

T = TypeVar("T")


def default_workers() -> int:
    """Physical core count, falling back to 1 when psutil cannot tell."""
    return psutil.cpu_count(logical=False) or 1


def map_replicas(
    fn: Callable[[int], T], replica_ids: Sequence[int], workers: Optional[int] = None
) -> List[T]:
    """
    Applies `fn` to every replica id and returns the results in id order.

    Each replica owns its noise stream, so no state is shared between calls;
    the output order never depends on which thread finished first.
    """
    ids = list(replica_ids)
    workers = workers or default_workers()
    if workers <= 1 or len(ids) <= 1:
        return [fn(i) for i in ids]
    logger.debug("running %d replicas on %d threads", len(ids), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, ids))
