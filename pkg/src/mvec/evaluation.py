"""Retrieval quality metrics and compression sweep experiments.

NDCG@k uses exponential gain (2^rel - 1) with a log2(rank + 1) discount;
unjudged documents count as relevance 0. Sweeps re-compress the corpus at
each parameter point, evaluate every query, and record mean NDCG together
with the memory ratio against the uncompressed corpus.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence, Union

from .errors import ValidationError
from .merging import MergeSpec, merge_corpus
from .parallel import ordered_map
from .pruning import PruneSpec, prune_corpus
from .scoring import RankedList, retrieve_topk
from .store import CompressedIndex, PageAux, Qrels, QueryEmbeddings, relative_memory

CompressionSpec = Union[PruneSpec, MergeSpec]


def _gain(rel: int) -> float:
    return float(2**rel - 1)


def ndcg_at_k(ranking: RankedList, qrels: Qrels, k: int) -> float:
    """Normalized discounted cumulative gain over the top k of a ranking."""
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    grades = qrels.grades(ranking.query_id)
    dcg = 0.0
    for rank, (page_id, _) in enumerate(ranking.hits[:k], start=1):
        rel = grades.get(page_id, 0)
        dcg += _gain(rel) / math.log2(rank + 1)
    ideal = sorted(grades.values(), reverse=True)[:k]
    idcg = sum(_gain(rel) / math.log2(rank + 1) for rank, rel in enumerate(ideal, start=1))
    if idcg == 0.0:
        return 0.0
    return dcg / idcg


def evaluate_queries(
    corpus: CompressedIndex,
    queries: Sequence[QueryEmbeddings],
    qrels: Qrels,
    k: int,
    threads: int = 1,
) -> dict[str, float]:
    """NDCG@k per query, retrieval done exhaustively over the corpus."""

    def one(q: QueryEmbeddings) -> tuple[str, float]:
        ranking = retrieve_topk(q, corpus, k)
        return q.query_id, ndcg_at_k(ranking, qrels, k)

    return dict(ordered_map(one, queries, threads))


@dataclass(frozen=True)
class SweepPoint:
    """One compression setting: its parameter, quality, and cost."""

    strategy: str
    parameter: float
    mean_ndcg: float
    memory_ratio: float

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "parameter": self.parameter,
            "mean_ndcg": self.mean_ndcg,
            "memory_ratio": self.memory_ratio,
        }


@dataclass(frozen=True)
class EvalReport:
    """Evaluation output: per-query and mean NDCG@k plus optional comparisons."""

    k: int
    per_query: Mapping[str, float]
    mean_ndcg: float
    relative_performance: float | None = None
    memory_ratio: float | None = None
    sweep: tuple[SweepPoint, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "per_query": dict(self.per_query),
            "mean_ndcg": self.mean_ndcg,
            "relative_performance": self.relative_performance,
            "memory_ratio": self.memory_ratio,
            "sweep": [point.to_dict() for point in self.sweep],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: Mapping) -> "EvalReport":
        return cls(
            k=int(data["k"]),
            per_query={str(q): float(v) for q, v in data["per_query"].items()},
            mean_ndcg=float(data["mean_ndcg"]),
            relative_performance=(
                None if data.get("relative_performance") is None
                else float(data["relative_performance"])
            ),
            memory_ratio=None if data.get("memory_ratio") is None else float(data["memory_ratio"]),
            sweep=tuple(
                SweepPoint(
                    strategy=str(s["strategy"]),
                    parameter=float(s["parameter"]),
                    mean_ndcg=float(s["mean_ndcg"]),
                    memory_ratio=float(s["memory_ratio"]),
                )
                for s in data.get("sweep", ())
            ),
        )

    @classmethod
    def from_json_file(cls, path: str | Path) -> "EvalReport":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _mean(values: Mapping[str, float]) -> float:
    if not values:
        raise ValidationError("no queries evaluated")
    return sum(values.values()) / len(values)


def evaluate(
    corpus: CompressedIndex,
    queries: Sequence[QueryEmbeddings],
    qrels: Qrels,
    k: int,
    baseline_mean: float | None = None,
    memory_ratio: float | None = None,
    threads: int = 1,
) -> EvalReport:
    per_query = evaluate_queries(corpus, queries, qrels, k, threads)
    mean = _mean(per_query)
    relative = None if baseline_mean is None else (mean / baseline_mean if baseline_mean else None)
    return EvalReport(
        k=k,
        per_query=per_query,
        mean_ndcg=mean,
        relative_performance=relative,
        memory_ratio=memory_ratio,
    )


def apply_compression(
    corpus: CompressedIndex,
    spec: CompressionSpec,
    aux: Mapping[str, PageAux] | None = None,
    threads: int = 1,
) -> CompressedIndex:
    if isinstance(spec, PruneSpec):
        return prune_corpus(corpus, spec, aux=aux, threads=threads)
    return merge_corpus(corpus, spec, threads=threads)


def _strategy_name(spec: CompressionSpec) -> str:
    if isinstance(spec, PruneSpec):
        return f"prune_{spec.strategy.value}"
    return f"merge_{spec.approach.value}"


def run_sweep(
    corpus: CompressedIndex,
    queries: Sequence[QueryEmbeddings],
    qrels: Qrels,
    specs: Sequence[CompressionSpec],
    k: int,
    aux: Mapping[str, PageAux] | None = None,
    threads: int = 1,
) -> EvalReport:
    """Evaluate the uncompressed corpus, then each compression setting in turn."""
    baseline = evaluate_queries(corpus, queries, qrels, k, threads)
    baseline_mean = _mean(baseline)
    points = []
    for spec in specs:
        compressed = apply_compression(corpus, spec, aux=aux, threads=threads)
        per_query = evaluate_queries(compressed, queries, qrels, k, threads)
        points.append(
            SweepPoint(
                strategy=_strategy_name(spec),
                parameter=spec.parameter,
                mean_ndcg=_mean(per_query),
                memory_ratio=relative_memory(compressed, corpus),
            )
        )
    return EvalReport(
        k=k,
        per_query=baseline,
        mean_ndcg=baseline_mean,
        memory_ratio=1.0,
        sweep=tuple(points),
    )
