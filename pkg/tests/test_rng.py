"""Seeded substream tests: reproducibility and stream separation."""

import numpy as np

from fedadapt.rng import substream


def test_same_key_same_stream():
    a = substream(0, "data", 1, 2).normal(size=8)
    b = substream(0, "data", 1, 2).normal(size=8)
    np.testing.assert_array_equal(a, b)


def test_different_names_diverge():
    a = substream(0, "data", 1).normal(size=8)
    b = substream(0, "sampling", 1).normal(size=8)
    assert not np.array_equal(a, b)


def test_different_indices_diverge():
    a = substream(0, "data", 1).normal(size=8)
    b = substream(0, "data", 2).normal(size=8)
    assert not np.array_equal(a, b)


def test_different_seeds_diverge():
    a = substream(0, "data").normal(size=8)
    b = substream(1, "data").normal(size=8)
    assert not np.array_equal(a, b)


def test_negative_seed_wraps_deterministically():
    a = substream(-1, "data").normal(size=4)
    b = substream(-1, "data").normal(size=4)
    np.testing.assert_array_equal(a, b)
