"""
Tests for the table cache, its keys and the deterministic thread pool.
"""

import threading

import numpy as np
import pytest

from nlcf.cache.cache_keys import CacheKeys
from nlcf.cache.table_cache import TableCache
from nlcf.schemas.kernel import FractionalKernelSpec
from nlcf.utils.parallel import deterministic_map, partition


class TestTableCache:
    """Build-once LRU behaviour."""

    def test_builds_once(self):
        cache = TableCache(max_entries=4)
        calls = []

        def build():
            calls.append(1)
            return np.arange(3.0)

        first = cache.get_or_build("a", build)
        second = cache.get_or_build("a", build)
        assert first is second
        assert len(calls) == 1
        assert (cache.hits, cache.misses) == (1, 1)

    def test_stored_arrays_read_only(self):
        cache = TableCache(max_entries=4)
        table = cache.get_or_build("a", lambda: np.zeros(4))
        with pytest.raises(ValueError):
            table[0] = 1.0

    def test_lru_eviction(self):
        cache = TableCache(max_entries=2)
        cache.get_or_build("a", lambda: np.zeros(1))
        cache.get_or_build("b", lambda: np.zeros(1))
        cache.get("a")
        cache.get_or_build("c", lambda: np.zeros(1))
        assert len(cache) == 2
        assert cache.get("b") is None
        assert cache.get("a") is not None

    def test_clear(self):
        cache = TableCache(max_entries=2)
        cache.get_or_build("a", lambda: np.zeros(1))
        cache.clear()
        assert len(cache) == 0
        assert cache.hits == cache.misses == 0

    def test_concurrent_callers_share_one_build(self):
        cache = TableCache(max_entries=2)
        calls = []

        def build():
            calls.append(1)
            return np.ones(8)

        threads = [threading.Thread(target=cache.get_or_build, args=("k", build)) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(calls) == 1


class TestCacheKeys:
    """Key formatting."""

    def test_same_spec_same_key(self):
        a = CacheKeys.cell_weights(FractionalKernelSpec(s=0.5), 0.125, 9)
        b = CacheKeys.cell_weights(FractionalKernelSpec(s=0.5), 0.125, 9)
        assert a == b
        assert a.startswith("weights:")

    def test_keys_separate_parameters(self):
        spec = FractionalKernelSpec(s=0.5)
        keys = {
            CacheKeys.cell_weights(spec, 0.125, 9),
            CacheKeys.cell_weights(spec, 0.0625, 9),
            CacheKeys.cell_weights(FractionalKernelSpec(s=0.3), 0.125, 9),
            CacheKeys.outside_mass(spec, 0.125, 9),
            CacheKeys.weight_spectrum(spec, 0.125, 9, 64),
        }
        assert len(keys) == 5


class TestParallel:
    """Partitioning and ordered mapping."""

    def test_partition_covers_range(self):
        chunks = partition(10, 3)
        assert [len(c) for c in chunks] == [4, 3, 3]
        assert [i for c in chunks for i in c] == list(range(10))

    def test_partition_more_parts_than_items(self):
        assert partition(2, 8) == [range(0, 1), range(1, 2)]

    def test_map_keeps_order(self):
        items = list(range(50))
        assert deterministic_map(lambda x: x * x, items, max_workers=4) == [x * x for x in items]

    def test_map_empty(self):
        assert deterministic_map(lambda x: x, []) == []
