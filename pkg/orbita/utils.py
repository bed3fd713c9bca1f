"""
Orbita Utility Functions
========================

Small helpers shared by the numerical modules and the CLI: hashing of
configurations for output headers, timing, and the thread-capped parallel map.
"""

import json
import os
import time
import hashlib
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime
from typing import Any, Callable, Iterable, List, Optional, TypeVar

from loguru import logger

T = TypeVar("T")
R = TypeVar("R")


def stringify(obj: Any) -> str:
    """
    Convert an object to a canonical string for hashing.

    Dicts and lists are dumped as JSON with sorted keys, so two configs with
    the same content hash identically regardless of key order. Objects with a
    ``model_dump`` method (pydantic models) are dumped first.

    Args:
        obj: Object to stringify

    Returns:
        Canonical string representation

    Example:
        >>> stringify({"b": 1, "a": 2})
        '{"a": 2, "b": 1}'
    """
    if isinstance(obj, str):
        return obj
    if hasattr(obj, "model_dump"):
        obj = obj.model_dump(mode="json")
    if isinstance(obj, (dict, list, tuple)):
        return json.dumps(obj, sort_keys=True, ensure_ascii=False, default=str)
    return str(obj)


def compute_hash(data: Any) -> str:
    """
    Compute the SHA256 hash of data.

    Args:
        data: Data to hash (will be stringified first)

    Returns:
        Hex string of hash

    Example:
        >>> compute_hash({"z": 0.5}) == compute_hash({"z": 0.5})
        True
    """
    text = stringify(data)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def format_timestamp(timestamp: Optional[float] = None) -> str:
    """
    Format a Unix timestamp as "YYYY-MM-DD HH:MM:SS".

    Args:
        timestamp: Unix timestamp (seconds), defaults to now
    """
    if timestamp is None:
        timestamp = time.time()
    dt = datetime.fromtimestamp(timestamp)
    return dt.strftime("%Y-%m-%d %H:%M:%S")


def safe_divide(numerator: float, denominator: float, default: float = 0.0) -> float:
    """Divide, returning ``default`` when the denominator is zero."""
    if denominator == 0:
        return default
    return numerator / denominator


def thread_count() -> int:
    """
    Number of worker threads allowed by ``ORBITA_THREADS``.

    Falls back to the CPU count when the variable is unset or invalid.

    Returns:
        Positive integer thread cap
    """
    default = os.cpu_count() or 1
    raw = os.getenv("ORBITA_THREADS")
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        logger.warning(f"⚠️  Ignoring non-integer ORBITA_THREADS={raw!r}")
        return default
    if value < 1:
        logger.warning(f"⚠️  Ignoring non-positive ORBITA_THREADS={value}")
        return default
    return value


def parallel_map(fn: Callable[[T], R], items: Iterable[T], max_workers: Optional[int] = None) -> List[R]:
    """
    Apply ``fn`` to every item on a capped thread pool, preserving order.

    Args:
        fn: Callable applied to each item
        items: Inputs
        max_workers: Upper bound on threads (further capped by ``ORBITA_THREADS``)

    Returns:
        List of results in input order

    Example:
        >>> parallel_map(lambda x: x * x, [1, 2, 3])
        [1, 4, 9]
    """
    items = list(items)
    workers = thread_count()
    if max_workers is not None:
        workers = min(workers, max_workers)
    workers = max(1, min(workers, len(items)))
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


class Timer:
    """
    Context manager for timing code blocks.

    Example:
        >>> with Timer() as timer:
        ...     total = sum(range(1000))
        >>> timer.elapsed >= 0
        True
    """

    def __init__(self):
        self.start_time = None
        self.end_time = None
        self.elapsed = None

    def __enter__(self):
        self.start_time = time.time()
        return self

    def __exit__(self, *args):
        self.end_time = time.time()
        self.elapsed = self.end_time - self.start_time
