"""
Bounded worker pool
───────────────────
Per-trace stages and evaluation cells fan out over a thread pool. Results come
back in input order; work items carry their own seeds, so output never depends
on scheduling.
"""
from __future__ import annotations

from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

from ppgauth.config import get_settings
from ppgauth.utils.logger import get_logger

logger = get_logger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def run_parallel(fn: Callable[[T], R], items: Iterable[T], max_workers: int | None = None) -> list[R]:
    work = list(items)
    workers = max_workers if max_workers is not None else get_settings().PPG_MAX_WORKERS
    if workers <= 1 or len(work) <= 1:
        return [fn(item) for item in work]
    with ThreadPoolExecutor(max_workers=min(workers, len(work))) as pool:
        results = list(pool.map(fn, work))
    logger.debug("tasks.batch_done", items=len(work), workers=workers)
    return results
