"""Tests for random streams and Monte Carlo reduction."""

import math

import numpy as np
import pytest

from asymptotic_invariants import sampling


def test_block_rng_reproducible():
    """Test the same (seed, tag, block) gives the same draws."""
    a = sampling.block_rng(7, "energy", 3).random(5)
    b = sampling.block_rng(7, "energy", 3).random(5)
    np.testing.assert_array_equal(a, b)


def test_block_rng_streams_differ():
    """Test blocks, tags and seeds select different streams."""
    base = sampling.block_rng(7, "energy", 0).random(4)
    assert not np.array_equal(base, sampling.block_rng(7, "energy", 1).random(4))
    assert not np.array_equal(base, sampling.block_rng(7, "seeds", 0).random(4))
    assert not np.array_equal(base, sampling.block_rng(8, "energy", 0).random(4))


def test_block_rng_negative_seed():
    """Test negative seeds are rejected."""
    with pytest.raises(ValueError, match="non-negative"):
        _ = sampling.block_rng(-1, "x", 0)


def test_block_sizes():
    """Test a budget splits into full blocks plus a remainder."""
    assert sampling.block_sizes(10, 4) == [4, 4, 2]
    assert sampling.block_sizes(8, 4) == [4, 4]
    with pytest.raises(ValueError):
        _ = sampling.block_sizes(0)


def test_reduce_blocks_mean_and_error():
    """Test block sums reduce to the sample mean and standard error."""
    values = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    r = sampling.reduce_blocks([sampling.summarize(values[:2]), sampling.summarize(values[2:], 1)])

    assert r.mean == pytest.approx(3.0)
    assert r.std_error == pytest.approx(values.std(ddof=1) / math.sqrt(5))
    assert r.samples == 5
    assert r.rejections == 1


def test_reduce_blocks_empty():
    """Test an empty reduction is zero."""
    r = sampling.reduce_blocks([])
    assert r.mean == 0.0
    assert r.samples == 0


def _uniform_block(rng: np.random.Generator, size: int) -> sampling.BlockResult:
    return sampling.summarize(rng.random(size))


def test_run_blocks_uniform_mean():
    """Test a uniform Monte Carlo mean is near 1/2."""
    r = sampling.run_blocks(_uniform_block, 50_000, seed=1, tag="uniform", threads=1)
    assert r.samples == 50_000
    assert abs(r.mean - 0.5) < 4 * r.std_error


def test_run_blocks_thread_independent():
    """Test results are bit-identical for any thread count."""
    one = sampling.run_blocks(_uniform_block, 40_000, 3, "u", threads=1, block_size=4096)
    many = sampling.run_blocks(_uniform_block, 40_000, 3, "u", threads=4, block_size=4096)
    assert one == many


def test_map_ordered_keeps_order():
    """Test map_ordered returns results in input order."""
    items = list(range(20))
    assert sampling.map_ordered(lambda i: i * i, items, threads=4) == [i * i for i in items]
    assert sampling.map_ordered(lambda i: i, [], threads=4) == []
