"""Order-preserving fan-out of independent sweep points."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

ENV_VAR = "NONLOCAL_AMP_THREADS"


def worker_count(default: int | None = None) -> int:
    """Worker cap from ``NONLOCAL_AMP_THREADS``, else ``default`` or the CPU count."""
    raw = os.environ.get(ENV_VAR)
    if raw is not None and raw.strip():
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"{ENV_VAR} must be a positive integer, got {raw!r}") from None
        if n < 1:
            raise ValueError(f"{ENV_VAR} must be a positive integer, got {raw!r}")
        return n
    return default if default is not None else (os.cpu_count() or 1)


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> list[R]:
    """``[fn(x) for x in items]``, possibly concurrent; results keep input order.

    Each item is computed independently, so the output does not depend on
    the worker count or scheduling.
    """
    items = list(items)
    n = min(worker_count() if workers is None else workers, max(len(items), 1))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
