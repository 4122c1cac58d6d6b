"""Pruning strategies: counts, determinism, tie rules, and subset uniformity."""

from itertools import combinations

import numpy as np
import pytest

from mvec import (
    CompressedIndex,
    Grid,
    PageAux,
    PageEmbeddings,
    PruneSpec,
    PruneStrategy,
    QueryEmbeddings,
    ValidationError,
    maxsim_score,
    prune_by_scores,
    prune_corpus,
    prune_page,
    prune_random,
)

from helpers import random_page, random_query


def rows_of(page):
    return {tuple(row) for row in page.vectors.tolist()}


class TestPruneRandom:
    def test_ratio_zero_is_identity(self):
        rng = np.random.default_rng(0)
        page = random_page(rng, 10, 4, grid=Grid(2, 5))
        out = prune_random(page, 0.0, seed=1)
        assert out is page

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(1)
        page = random_page(rng, 10, 4)
        a = prune_random(page, 0.5, seed=42)
        b = prune_random(page, 0.5, seed=42)
        assert a.n_vectors == 5
        assert np.array_equal(a.vectors, b.vectors)
        outcomes = {prune_random(page, 0.5, seed=s).vectors.tobytes() for s in range(10)}
        assert len(outcomes) > 1

    def test_survivors_keep_original_order_and_bits(self):
        rng = np.random.default_rng(2)
        page = random_page(rng, 20, 6)
        out = prune_random(page, 0.4, seed=7)
        # every surviving row appears in the original, in increasing position
        positions = []
        for row in out.vectors:
            matches = np.flatnonzero((page.vectors == row).all(axis=1))
            assert matches.size >= 1
            positions.append(matches[0])
        assert positions == sorted(positions)

    def test_grid_dropped(self):
        rng = np.random.default_rng(3)
        page = random_page(rng, 12, 4, grid=Grid(3, 4))
        assert prune_random(page, 0.25, seed=0).grid is None

    def test_rounding_half_to_even(self):
        rng = np.random.default_rng(4)
        page = random_page(rng, 10, 4)
        # 0.25 * 10 = 2.5 -> drop 2 (round half to even)
        assert prune_random(page, 0.25, seed=0).n_vectors == 8
        # 0.35 * 10 = 3.5 -> drop 4
        assert prune_random(page, 0.35, seed=0).n_vectors == 6

    def test_ratio_bounds(self):
        rng = np.random.default_rng(5)
        page = random_page(rng, 10, 4)
        with pytest.raises(ValidationError):
            prune_random(page, 1.0, seed=0)
        with pytest.raises(ValidationError):
            prune_random(page, -0.1, seed=0)

    def test_nothing_left_rejected(self):
        rng = np.random.default_rng(6)
        page = random_page(rng, 2, 4)
        with pytest.raises(ValidationError):
            prune_random(page, 0.9, seed=0)

    def test_subsets_uniform(self):
        # every 2-of-4 subset should appear with frequency 1/6 +- 0.02
        rng = np.random.default_rng(7)
        page = random_page(rng, 4, 3)
        all_pairs = list(combinations(range(4), 2))
        row_key = {tuple(page.vectors[i].tolist()): i for i in range(4)}
        counts = {pair: 0 for pair in all_pairs}
        trials = 10_000
        for seed in range(trials):
            out = prune_random(page, 0.5, seed=seed)
            kept = tuple(sorted(row_key[tuple(row.tolist())] for row in out.vectors))
            counts[kept] += 1
        for pair in all_pairs:
            assert abs(counts[pair] / trials - 1 / 6) <= 0.02


class TestPruneByScores:
    def test_lowest_importance_dropped(self):
        rng = np.random.default_rng(8)
        page = random_page(rng, 10, 4)
        importance = np.arange(10, dtype=np.float64)  # strictly increasing
        out = prune_by_scores(page, importance, 0.3)
        assert np.array_equal(out.vectors, page.vectors[3:])

    def test_tie_drops_lower_index_first(self):
        rng = np.random.default_rng(9)
        page = random_page(rng, 8, 4)
        out = prune_by_scores(page, np.zeros(8), 0.5)
        assert np.array_equal(out.vectors, page.vectors[4:])

    def test_matches_sort_oracle(self):
        rng = np.random.default_rng(10)
        page = random_page(rng, 50, 6)
        importance = rng.standard_normal(50)
        out = prune_by_scores(page, importance, 0.9)
        top5 = sorted(np.argsort(-importance, kind="stable")[:5])
        assert out.n_vectors == 5
        assert np.array_equal(out.vectors, page.vectors[top5])

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(11)
        page = random_page(rng, 30, 5)
        importance = rng.standard_normal(30)
        base = prune_by_scores(page, importance, 0.6)
        for transform in (lambda x: 3 * x + 11, np.exp, lambda x: x**3):
            other = prune_by_scores(page, transform(importance), 0.6)
            assert np.array_equal(base.vectors, other.vectors)

    def test_length_mismatch_rejected(self):
        rng = np.random.default_rng(12)
        page = random_page(rng, 10, 4)
        with pytest.raises(ValidationError):
            prune_by_scores(page, np.zeros(9), 0.5)

    def test_non_finite_importance_rejected(self):
        rng = np.random.default_rng(13)
        page = random_page(rng, 4, 4)
        with pytest.raises(ValidationError):
            prune_by_scores(page, np.array([1.0, np.nan, 0.0, 2.0]), 0.5)

    def test_ratio_zero_is_identity(self):
        rng = np.random.default_rng(14)
        page = random_page(rng, 6, 4)
        assert prune_by_scores(page, np.arange(6), 0.0) is page


class TestPrunePage:
    def test_score_strategy_uses_synth_queries(self):
        rng = np.random.default_rng(15)
        d = 8
        page = random_page(rng, 6, d)
        # a synth query aligned with row 2 makes it the most important row
        aligned = PageAux(
            page_id=page.page_id,
            synth_queries=(QueryEmbeddings("s0", page.vectors[2:3], normalized=True),),
        )
        spec = PruneSpec(strategy=PruneStrategy.SCORE_ORIENTED, ratio=0.5)
        out = prune_page(page, spec, aligned)
        assert any(np.array_equal(row, page.vectors[2]) for row in out.vectors)

    def test_score_strategy_requires_aux(self):
        rng = np.random.default_rng(16)
        page = random_page(rng, 6, 4)
        spec = PruneSpec(strategy=PruneStrategy.SCORE_ORIENTED, ratio=0.5)
        with pytest.raises(ValidationError):
            prune_page(page, spec, None)

    def test_attention_strategy(self):
        rng = np.random.default_rng(17)
        page = random_page(rng, 6, 4)
        attention = np.array([0.9, 0.1, 0.8, 0.2, 0.7, 0.3], dtype=np.float32)
        aux = PageAux(page_id=page.page_id, attention=attention)
        spec = PruneSpec(strategy=PruneStrategy.ATTENTION_ORIENTED, ratio=0.5)
        out = prune_page(page, spec, aux)
        assert np.array_equal(out.vectors, page.vectors[[0, 2, 4]])

    def test_attention_strategy_requires_aux(self):
        rng = np.random.default_rng(18)
        page = random_page(rng, 6, 4)
        spec = PruneSpec(strategy=PruneStrategy.ATTENTION_ORIENTED, ratio=0.5)
        with pytest.raises(ValidationError):
            prune_page(page, spec, None)


class TestPruneCorpus:
    def test_provenance_stamped(self):
        rng = np.random.default_rng(19)
        corpus = CompressedIndex.build(
            [random_page(rng, 8, 4, page_id=f"p{i}") for i in range(3)]
        )
        spec = PruneSpec(strategy=PruneStrategy.RANDOM, ratio=0.5, seed=5)
        out = prune_corpus(corpus, spec)
        prov = out.manifest.provenance
        assert prov is not None
        assert prov.strategy == "prune_random"
        assert prov.parameter == 0.5
        assert prov.seed == 5

    def test_pages_get_independent_draws(self):
        rng = np.random.default_rng(20)
        rows = rng.standard_normal((8, 4)).astype(np.float32)
        corpus = CompressedIndex.build(
            [PageEmbeddings(f"p{i}", rows) for i in range(6)]
        )
        out = prune_corpus(corpus, PruneSpec(strategy=PruneStrategy.RANDOM, ratio=0.5, seed=1))
        kept = {p.page_id: p.vectors.tobytes() for p in out}
        assert len(set(kept.values())) > 1  # identical pages pruned differently

    def test_thread_count_invariant(self):
        rng = np.random.default_rng(21)
        corpus = CompressedIndex.build(
            [random_page(rng, 10, 4, page_id=f"p{i}") for i in range(8)]
        )
        spec = PruneSpec(strategy=PruneStrategy.RANDOM, ratio=0.4, seed=3)
        single = prune_corpus(corpus, spec, threads=1)
        pooled = prune_corpus(corpus, spec, threads=8)
        for a, b in zip(single, pooled):
            assert np.array_equal(a.vectors, b.vectors)


class TestRowCountFormula:
    def test_every_strategy_obeys_the_count(self):
        rng = np.random.default_rng(30)
        page = random_page(rng, 17, 6)
        aux = PageAux(
            page_id=page.page_id,
            attention=rng.random(17).astype(np.float32),
            synth_queries=(QueryEmbeddings("s", page.vectors[:2], normalized=True),),
        )
        for ratio in (0.0, 0.1, 0.25, 0.5, 0.75, 0.9):
            expected = 17 - round(ratio * 17)
            for strategy in PruneStrategy:
                spec = PruneSpec(strategy=strategy, ratio=ratio, seed=1)
                out = prune_page(page, spec, aux)
                assert out.n_vectors == expected, (strategy, ratio)

    def test_rows_bitwise_subset(self):
        rng = np.random.default_rng(31)
        page = random_page(rng, 12, 5)
        original = {row.tobytes() for row in page.vectors}
        out = prune_random(page, 0.5, seed=2)
        assert {row.tobytes() for row in out.vectors} <= original


class TestScoreMonotonicityUnderPruning:
    def test_pruned_score_never_increases(self):
        rng = np.random.default_rng(22)
        for _ in range(20):
            page = random_page(rng, 12, 6)
            query = random_query(rng, 4, 6)
            full = maxsim_score(query, page)
            for ratio in (0.25, 0.5, 0.75):
                pruned = prune_random(page, ratio, seed=int(rng.integers(0, 1 << 32)))
                assert maxsim_score(query, pruned) <= full
