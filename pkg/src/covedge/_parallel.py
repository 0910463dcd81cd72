"""Replicate-level parallelism helper.

Per-replicate seeds make scheduling invisible to results: slot i of the
output always holds the value for replicate i, whatever thread computed it.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

T = TypeVar("T")


def map_indexed(fn: Callable[[int], T], count: int, threads: int = 1) -> list[T]:
    if threads <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, range(count)))
