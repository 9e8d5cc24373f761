"""Counter-based random streams and block-parallel Monte Carlo reduction.

Every Monte Carlo estimator splits its sample budget into fixed-size blocks.
Block ``b`` of stream ``tag`` under ``seed`` always draws from the same Philox
counter range, so the per-block results do not depend on how blocks are
scheduled. The reduction runs over blocks in index order.
"""

import logging
import math
import zlib
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from asymptotic_invariants import config

logger = logging.getLogger(__name__)

BLOCK_SIZE = 65536

_UINT64 = (1 << 64) - 1


def stream_id(tag: str) -> int:
    """Stable 32-bit identifier for a named random stream."""
    return zlib.crc32(tag.encode())


def block_rng(seed: int, tag: str, block: int) -> np.random.Generator:
    """Generator for one block of one named stream.

    Args:
        seed: User seed (non-negative)
        tag: Stream name, e.g. ``"tripod"`` or ``"energy"``
        block: Block index

    Returns:
        Generator backed by Philox with key (seed, tag) and a block-specific counter
    """
    if seed < 0:
        msg = f"Seed must be non-negative, got {seed}"
        raise ValueError(msg)

    bit_generator = np.random.Philox(
        key=[seed & _UINT64, stream_id(tag)],
        counter=[0, 0, block, 0],
    )
    return np.random.Generator(bit_generator)


@dataclass(frozen=True)
class BlockResult:
    """Sums accumulated by one Monte Carlo block."""

    total: float
    total_sq: float
    count: int
    rejections: int = 0


@dataclass(frozen=True)
class MonteCarloSum:
    """Reduced Monte Carlo statistics."""

    mean: float
    std_error: float
    samples: int
    rejections: int


BlockFn = Callable[[np.random.Generator, int], BlockResult]


def summarize(values: NDArray[np.float64], rejections: int = 0) -> BlockResult:
    """Turn an array of weighted sample values into block sums."""
    return BlockResult(
        total=float(np.sum(values)),
        total_sq=float(np.sum(values * values)),
        count=int(values.size),
        rejections=rejections,
    )


def reduce_blocks(results: list[BlockResult]) -> MonteCarloSum:
    """Combine block sums in order into a mean and its standard error."""
    total = 0.0
    total_sq = 0.0
    count = 0
    rejections = 0
    for r in results:
        total += r.total
        total_sq += r.total_sq
        count += r.count
        rejections += r.rejections

    if count == 0:
        return MonteCarloSum(mean=0.0, std_error=0.0, samples=0, rejections=rejections)

    mean = total / count
    if count > 1:
        variance = max(total_sq / count - mean * mean, 0.0) * count / (count - 1)
        std_error = math.sqrt(variance / count)
    else:
        std_error = 0.0

    return MonteCarloSum(mean=mean, std_error=std_error, samples=count, rejections=rejections)


def block_sizes(n_samples: int, block_size: int = BLOCK_SIZE) -> list[int]:
    """Split a sample budget into full blocks plus a remainder."""
    if n_samples < 1:
        msg = f"Sample count must be positive, got {n_samples}"
        raise ValueError(msg)

    full, rest = divmod(n_samples, block_size)
    sizes = [block_size] * full
    if rest:
        sizes.append(rest)
    return sizes


def run_blocks(
    fn: BlockFn,
    n_samples: int,
    seed: int,
    tag: str,
    threads: int | None = None,
    block_size: int = BLOCK_SIZE,
) -> MonteCarloSum:
    """Evaluate ``fn`` over independent blocks and reduce in block order.

    Args:
        fn: Callable drawing ``size`` samples from the given generator
        n_samples: Total sample budget
        seed: User seed
        tag: Stream name separating estimators that share a seed
        threads: Worker cap; defaults to ``config.get_thread_count()``
        block_size: Samples per block

    Returns:
        Reduced statistics, identical for every thread count
    """
    sizes = block_sizes(n_samples, block_size)
    workers = min(threads or config.get_thread_count(), len(sizes))
    logger.debug("%s: %d samples in %d blocks on %d workers", tag, n_samples, len(sizes), workers)

    def run(block: int) -> BlockResult:
        return fn(block_rng(seed, tag, block), sizes[block])

    if workers <= 1:
        results = [run(b) for b in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(len(sizes))))

    return reduce_blocks(results)


def map_ordered[T, R](fn: Callable[[T], R], items: list[T], threads: int | None = None) -> list[R]:
    """Map ``fn`` over ``items`` on a thread pool, keeping input order."""
    workers = min(threads or config.get_thread_count(), max(len(items), 1))
    if workers <= 1:
        return [fn(item) for item in items]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
