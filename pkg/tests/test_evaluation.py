"""NDCG hand cases, metric properties, and the sweep harness."""

import math

import numpy as np
import pytest

from mvec import (
    CompressedIndex,
    EvalReport,
    MergeApproach,
    MergeSpec,
    PruneSpec,
    PruneStrategy,
    Qrels,
    RankedList,
    ValidationError,
    ndcg_at_k,
    run_sweep,
)
from mvec.synthetic import generate

from helpers import duplicate_group_page, oracle_ndcg, random_query


def ranking(query_id, *page_ids):
    scores = np.linspace(1.0, 0.1, len(page_ids))
    return RankedList(query_id=query_id, hits=tuple(zip(page_ids, scores)))


class TestNdcg:
    def test_single_relevant_at_rank_one(self):
        qrels = Qrels.from_entries([("q", "a", 1)])
        assert ndcg_at_k(ranking("q", "a", "b", "c"), qrels, k=5) == 1.0

    def test_single_relevant_at_rank_two(self):
        qrels = Qrels.from_entries([("q", "a", 1)])
        got = ndcg_at_k(ranking("q", "b", "a"), qrels, k=5)
        assert got == pytest.approx(1 / math.log2(3), abs=1e-9)
        assert got == pytest.approx(0.6309, abs=1e-4)

    def test_graded_hand_case(self):
        # rel 3 at rank 2, rel 2 at rank 1:
        #   DCG  = 3/log2(2) + 7/log2(3),  IDCG = 7/log2(2) + 3/log2(3)
        qrels = Qrels.from_entries([("q", "high", 3), ("q", "low", 2)])
        got = ndcg_at_k(ranking("q", "low", "high"), qrels, k=5)
        want = (3 / 1 + 7 / math.log2(3)) / (7 / 1 + 3 / math.log2(3))
        assert got == pytest.approx(want, abs=1e-9)
        assert got == pytest.approx(0.8340, abs=1e-4)

    def test_unjudged_counts_as_zero(self):
        qrels = Qrels.from_entries([("q", "a", 2)])
        with_noise = ndcg_at_k(ranking("q", "a", "x", "y", "z"), qrels, k=5)
        assert with_noise == 1.0

    def test_matches_oracle_on_random_instances(self):
        rng = np.random.default_rng(0)
        pages = [f"p{i}" for i in range(12)]
        for _ in range(100):
            grades = {p: int(rng.integers(0, 4)) for p in rng.choice(pages, size=6, replace=False)}
            if max(grades.values()) == 0:
                grades[pages[0]] = 1
            qrels = Qrels.from_entries([("q", p, r) for p, r in grades.items()])
            order = list(rng.permutation(pages))
            k = int(rng.integers(1, 8))
            got = ndcg_at_k(ranking("q", *order), qrels, k=k)
            assert got == pytest.approx(oracle_ndcg(order, grades, k), abs=1e-12)

    def test_relabeling_invariance(self):
        qrels1 = Qrels.from_entries([("q", "a", 2), ("q", "b", 1)])
        qrels2 = Qrels.from_entries([("q", "x", 2), ("q", "y", 1)])
        r1 = ndcg_at_k(ranking("q", "b", "a", "c"), qrels1, k=5)
        r2 = ndcg_at_k(ranking("q", "y", "x", "z"), qrels2, k=5)
        assert r1 == r2

    def test_appending_below_k_changes_nothing(self):
        qrels = Qrels.from_entries([("q", "a", 1), ("q", "b", 2)])
        base = ndcg_at_k(ranking("q", "b", "a", "c"), qrels, k=3)
        extended = ndcg_at_k(ranking("q", "b", "a", "c", "d", "e", "f"), qrels, k=3)
        assert base == extended

    def test_perfect_iff_ideal_order(self):
        qrels = Qrels.from_entries([("q", "a", 3), ("q", "b", 2), ("q", "c", 1)])
        assert ndcg_at_k(ranking("q", "a", "b", "c"), qrels, k=5) == 1.0
        assert ndcg_at_k(ranking("q", "a", "c", "b"), qrels, k=5) < 1.0

    def test_missing_query_rejected(self):
        qrels = Qrels.from_entries([("other", "a", 1)])
        with pytest.raises(ValidationError):
            ndcg_at_k(ranking("q", "a"), qrels, k=5)

    def test_k_must_be_positive(self):
        qrels = Qrels.from_entries([("q", "a", 1)])
        with pytest.raises(ValidationError):
            ndcg_at_k(ranking("q", "a"), qrels, k=0)


class TestEvalReport:
    def test_json_round_trip(self, tmp_path):
        report = EvalReport(
            k=5,
            per_query={"q1": 1.0, "q2": 0.5},
            mean_ndcg=0.75,
            relative_performance=0.9,
            memory_ratio=0.2,
        )
        path = tmp_path / "report.json"
        path.write_text(report.to_json(), encoding="utf-8")
        back = EvalReport.from_json_file(path)
        assert back == report


class TestRunSweep:
    def small_dataset(self, seed=0):
        return generate(
            n_pages=12,
            n_patches=20,
            d=16,
            n_groups=5,
            noise=0.03,
            n_queries=8,
            aligned_tokens=2,
            random_tokens=2,
            query_noise=0.05,
            synth_queries_per_page=4,
            synth_tokens_per_query=2,
            seed=seed,
        )

    def test_identity_point_reproduces_baseline_bitwise(self):
        data = self.small_dataset()
        spec = PruneSpec(strategy=PruneStrategy.RANDOM, ratio=0.0, seed=1)
        report = run_sweep(data.corpus, data.queries, data.qrels, [spec], k=5)
        assert report.sweep[0].mean_ndcg == report.mean_ndcg
        assert report.sweep[0].memory_ratio == 1.0

    def test_duplicate_group_cluster_sweep_matches_baseline(self):
        rng = np.random.default_rng(1)
        pages = []
        for i in range(10):
            page, _ = duplicate_group_page(rng, n_groups=4, copies=5, d=12, page_id=f"p{i}")
            pages.append(page)
        corpus = CompressedIndex.build(pages)
        queries = [random_query(rng, 4, 12, query_id=f"q{i}") for i in range(6)]
        qrels = Qrels.from_entries([(q.query_id, f"p{i}", 1) for i, q in enumerate(queries)])
        spec = MergeSpec(approach=MergeApproach.CLUSTER, factor=5.0, renormalize=True)
        report = run_sweep(corpus, queries, qrels, [spec], k=5)
        assert report.sweep[0].mean_ndcg == pytest.approx(report.mean_ndcg, abs=1e-9)
        assert report.sweep[0].memory_ratio == pytest.approx(1 / 5, abs=1e-12)

    def test_score_pruning_monotonic_in_ratio(self):
        # statistical: heavy pruning should not beat light pruning
        wins = 0
        trials = 50
        for seed in range(trials):
            data = self.small_dataset(seed=seed)
            specs = [
                PruneSpec(strategy=PruneStrategy.SCORE_ORIENTED, ratio=0.5),
                PruneSpec(strategy=PruneStrategy.SCORE_ORIENTED, ratio=0.95),
            ]
            report = run_sweep(data.corpus, data.queries, data.qrels, specs, k=5, aux=data.aux)
            if report.sweep[1].mean_ndcg <= report.sweep[0].mean_ndcg:
                wins += 1
        assert wins >= 0.9 * trials

    def test_memory_ratio_tracks_row_counts(self):
        data = self.small_dataset()
        specs = [
            MergeSpec(approach=MergeApproach.CLUSTER, factor=f) for f in (2.0, 4.0, 10.0)
        ]
        report = run_sweep(data.corpus, data.queries, data.qrels, specs, k=5)
        for spec, point in zip(specs, report.sweep):
            expected = max(1, round(20 / spec.factor)) / 20
            assert point.memory_ratio == pytest.approx(expected, abs=1e-12)

    def test_sweep_deterministic(self):
        data = self.small_dataset()
        specs = [PruneSpec(strategy=PruneStrategy.RANDOM, ratio=0.5, seed=9)]
        r1 = run_sweep(data.corpus, data.queries, data.qrels, specs, k=5)
        r2 = run_sweep(data.corpus, data.queries, data.qrels, specs, k=5, threads=4)
        assert r1 == r2
