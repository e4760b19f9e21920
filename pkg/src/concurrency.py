import asyncio
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")


async def _gather_bounded(fn: Callable[[T], R], items: list[T], workers: int) -> list[R]:
    semaphore = asyncio.Semaphore(workers)

    async def run_one(item: T) -> R:
        async with semaphore:
            return await asyncio.to_thread(fn, item)

    return list(await asyncio.gather(*(run_one(item) for item in items)))


def gather_in_threads(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> list[R]:
    """
    Apply fn to every item, at most `workers` at a time, preserving order.

    numpy releases the GIL inside its kernels, so independent offline work
    (leaf blocks, per-coil reductions, training scenarios) overlaps well on
    threads. With workers <= 1 the items run serially on the calling thread.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    return asyncio.run(_gather_bounded(fn, items, workers))
