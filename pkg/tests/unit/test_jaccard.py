"""
Tests for exact Jaccard mining against a brute-force oracle
"""

import numpy as np
import pytest

from src.kb.knowledge_base import build_kb, encode_all
from src.kb.models import Entity
from src.mining.jaccard import build_exact_table, jaccard, table_recall
from src.mining.models import InvalidSampleSizeError, MiningMethod, NegativeTable
from tests.conftest import random_kb


def oracle_table(kb, k):
    """O(N^2) set-based reference: score desc, ordinal asc"""
    sets = [entity.attribute_set for entity in kb.entities]
    lists = []
    for i, a in enumerate(sets):
        scored = []
        for j, b in enumerate(sets):
            if i == j:
                continue
            union = len(a | b)
            scored.append((j, len(a & b) / union if union else 0.0))
        scored.sort(key=lambda item: (-item[1], item[0]))
        lists.append(scored[:min(k, len(sets) - 1)])
    return lists


class TestJaccard:

    @pytest.mark.parametrize("a, b, expected", [
        ([1, 2, 3], [2, 3, 4], 0.5),
        ([1], [1], 1.0),
        ([1, 2], [3], 0.0),
        ([], [], 0.0),
        ([], [1], 0.0),
    ])
    def test_values(self, a, b, expected):
        assert jaccard(a, b) == expected

    def test_symmetric_and_bounded(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            a = rng.choice(20, size=int(rng.integers(0, 8)), replace=False)
            b = rng.choice(20, size=int(rng.integers(0, 8)), replace=False)
            assert jaccard(a, b) == jaccard(b, a)
            assert 0.0 <= jaccard(a, b) <= 1.0


class TestExactTable:

    def test_small_kb(self, small_kb):
        table = build_exact_table(small_kb, 2)
        # A = {red, round, fruit}: B shares 2 of 4, C shares 1 of 4
        assert table.lists[0] == ((1, 0.5), (2, 0.25))
        # D has no attributes: all zero, ordinal ascending
        assert table.lists[3] == ((0, 0.0), (1, 0.0))
        assert table.method == MiningMethod.EXACT
        assert table.kb_fingerprint == small_kb.fingerprint

    def test_duplicate_and_disjoint_sets(self):
        kb = build_kb([
            Entity(id="0", attributes=["a", "b"]),
            Entity(id="1", attributes=["a", "b"]),
            Entity(id="2", attributes=["a", "c"]),
            Entity(id="3", attributes=["d"]),
            Entity(id="4", attributes=["d", "e"]),
        ])
        table = build_exact_table(kb, 2)
        assert table.lists[0] == ((1, 1.0), (2, pytest.approx(1 / 3)))
        assert table.lists[3] == ((4, 0.5), (0, 0.0))

    def test_k_larger_than_kb(self, small_kb):
        table = build_exact_table(small_kb, 10)
        assert all(len(row) == small_kb.size - 1 for row in table.lists)

    def test_single_entity(self):
        table = build_exact_table(build_kb([Entity(id="only", attributes=["x"])]), 4)
        assert table.lists == ((),)

    def test_invalid_k(self, small_kb):
        with pytest.raises(InvalidSampleSizeError):
            build_exact_table(small_kb, 0)

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_oracle(self, seed):
        kb = random_kb(seed)
        table = build_exact_table(kb, 8, block_size=64)
        expected = oracle_table(kb, 8)
        for got, want in zip(table.lists, expected):
            assert [ordinal for ordinal, _ in got] == [ordinal for ordinal, _ in want]
            np.testing.assert_allclose([s for _, s in got], [s for _, s in want], rtol=0, atol=1e-12)

    @pytest.mark.parametrize("seed", range(3))
    def test_independent_of_kb_order(self, seed):
        kb = random_kb(seed, n=80)
        order = np.random.default_rng(100 + seed).permutation(kb.size)
        permuted = build_kb([kb.entities[i] for i in order])

        def by_id(source, table):
            ids = source.entity_ids
            return {ids[owner]: [(ids[ordinal], score) for ordinal, score in row] for owner, row in enumerate(table.lists)}

        # full lists: the same neighbours and scores, ties aside
        full = by_id(kb, build_exact_table(kb, kb.size - 1))
        full_permuted = by_id(permuted, build_exact_table(permuted, kb.size - 1))
        for entity_id, row in full.items():
            assert sorted(row) == sorted(full_permuted[entity_id])

        # truncated lists: identical score sequences and every neighbour strictly above the cutoff
        top = by_id(kb, build_exact_table(kb, 8))
        top_permuted = by_id(permuted, build_exact_table(permuted, 8))
        for entity_id, row in top.items():
            other = top_permuted[entity_id]
            assert [score for _, score in row] == [score for _, score in other]
            cutoff = row[-1][1]
            assert {n for n, s in row if s > cutoff} == {n for n, s in other if s > cutoff}

    def test_independent_of_threads_and_blocks(self):
        kb = random_kb(11)
        reference = build_exact_table(kb, 5, threads=1, block_size=512)
        assert build_exact_table(kb, 5, threads=4, block_size=17) == reference

    def test_scores_are_exact_pairwise_jaccard(self):
        kb = random_kb(4, n=60)
        encoded = encode_all(kb)
        table = build_exact_table(kb, 6)
        for owner, row in enumerate(table.lists):
            for ordinal, score in row:
                assert score == pytest.approx(jaccard(encoded[owner], encoded[ordinal]), abs=1e-12)


class TestTableRecall:

    def test_identical_tables(self, small_kb):
        table = build_exact_table(small_kb, 2)
        assert table_recall(table, table) == 1.0

    def test_partial_overlap(self):
        exact = NegativeTable(k=2, lists=(((1, 0.5), (2, 0.1)), ((0, 0.5), (2, 0.2)), ((1, 0.2), (0, 0.1))),
                              kb_fingerprint="f")
        approx = NegativeTable(k=2, lists=(((1, 0.5),), ((0, 0.5), (2, 0.2)), ((1, 0.2), (0, 0.1))),
                               kb_fingerprint="f", method=MiningMethod.MINHASH, seed=5)
        assert table_recall(approx, exact) == pytest.approx(5 / 6)
