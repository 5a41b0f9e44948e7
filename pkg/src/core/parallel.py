"""
Chunked, seed-stable execution.

Work is split into fixed-size chunks whose generators are derived from
(master seed, chunk index), so results do not depend on the number of workers.
Results always come back in chunk order.
"""
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

import numpy as np

from src.config import settings

T = TypeVar("T")
R = TypeVar("R")

MC_CHUNK = 8192


def chunk_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(index)])


def stream_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    """Generator for chunk `index` of an independent named stream under the same seed."""
    return np.random.default_rng([int(seed), int(stream), int(index)])


def chunk_sizes(total: int, chunk: int = MC_CHUNK) -> List[int]:
    sizes = [chunk] * (total // chunk)
    if total % chunk:
        sizes.append(total % chunk)
    return sizes


def run_chunks(fn: Callable[[T], R], items: Sequence[T], workers: Optional[int] = None) -> List[R]:
    """Apply fn to every item, in a thread pool when more than one worker is configured."""
    workers = settings.workers if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, items))
