"""Deterministic pair-level parallelism helpers."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

WORKERS_ENV = "SPANALIGN_WORKERS"

T = TypeVar("T")
R = TypeVar("R")


def default_workers() -> int:
    """Worker count from the environment, defaulting to 1 (sequential)."""
    value = os.environ.get(WORKERS_ENV, "")
    return int(value) if value.isdigit() and int(value) > 0 else 1


def map_ordered(fn: Callable[[T], R], items: Sequence[T] | Iterable[T],
                workers: int = 1) -> list[R]:
    """Map ``fn`` over ``items``, returning results in submission order.

    Results are collected positionally, so any reduction over them is
    independent of worker count and scheduling.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
