import numpy as np
import pytest
from scipy import stats

from fracmc.rng import (
    CH_JUMP,
    CH_TIME,
    RngStream,
    derive_key,
    derive_stream,
    raw_block,
    uniform_from_raw,
)


def test_stream_is_reproducible():
    a = derive_stream(42, 7).uniform(100)
    b = derive_stream(42, 7).uniform(100)
    assert np.array_equal(a, b)


def test_sequential_reads_match_one_block():
    s1 = derive_stream(3, 1)
    parts = np.concatenate([s1.uniform(3), s1.uniform(5)])
    assert np.array_equal(parts, derive_stream(3, 1).uniform(8))


def test_streams_differ_by_seed_index_and_channel():
    base = derive_stream(1, 0)
    draws = {
        "seed": derive_stream(2, 0).uniform(4).tobytes(),
        "index": derive_stream(1, 1).uniform(4).tobytes(),
        "time": base.step(0, CH_TIME).uniform(4).tobytes(),
        "jump": base.step(0, CH_JUMP).uniform(4).tobytes(),
        "next step": base.step(1, CH_TIME).uniform(4).tobytes(),
    }
    assert len(set(draws.values())) == len(draws)


def test_batch_keys_match_scalar_streams():
    root = derive_key(0, 11)
    keys = derive_key(root, np.arange(20, dtype=np.uint64))
    block = uniform_from_raw(raw_block(keys, 3))
    for j in range(20):
        assert np.array_equal(block[j], derive_stream(11, j).uniform(3))


def test_uniform_range_and_law():
    u = RngStream(derive_key(0, 5)).uniform(200_000)
    assert u.min() > 0.0 and u.max() <= 1.0
    assert stats.kstest(u, "uniform").pvalue > 0.01


def test_normals_and_signs():
    s = derive_stream(9, 0)
    z = s.normal(100_001)
    assert z.shape == (100_001,)
    assert stats.kstest(z, "norm").pvalue > 0.01
    r = s.rademacher(100_000)
    assert set(np.unique(r)) == {-1.0, 1.0}
    assert abs(r.mean()) < 4 / np.sqrt(r.size)


def test_child_keys_are_distinct():
    keys = derive_key(np.uint64(123), np.arange(100_000, dtype=np.uint64))
    assert np.unique(keys).size == keys.size


def test_large_seed_values_are_accepted():
    assert derive_stream(2**64 - 1, 2**63).uniform() == pytest.approx(
        derive_stream(-1, 2**63).uniform()
    )
