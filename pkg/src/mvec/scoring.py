"""Late-interaction relevance scoring and exact top-k retrieval.

The score of (query, page) is the sum over query tokens of the maximum dot
product against any page vector. Similarities are accumulated in float64 over
the float32 stored vectors, with the token sum taken in ascending token order,
so results are bit-identical across runs and thread counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .parallel import ordered_map
from .store import CompressedIndex, PageEmbeddings, QueryEmbeddings


@dataclass(frozen=True)
class RankedList:
    """Retrieval result: (page_id, score) pairs in descending score order."""

    query_id: str
    hits: tuple[tuple[str, float], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "hits", tuple((str(p), float(s)) for p, s in self.hits))
        scores = [s for _, s in self.hits]
        if any(a < b for a, b in zip(scores, scores[1:])):
            raise ValidationError(f"ranked list for {self.query_id!r} has increasing scores")
        ids = [p for p, _ in self.hits]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"ranked list for {self.query_id!r} repeats a page id")

    def page_ids(self) -> tuple[str, ...]:
        return tuple(p for p, _ in self.hits)


@dataclass(frozen=True)
class ResponsePotential:
    """Per-patch maximum similarity to any token of one query."""

    page_id: str
    query_id: str
    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if not np.isfinite(arr).all():
            raise ValidationError(
                f"response potential ({self.page_id!r}, {self.query_id!r}) is non-finite"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)


def _check_dims(q: QueryEmbeddings, p: PageEmbeddings) -> None:
    if q.dim != p.dim:
        raise ValidationError(
            f"dimension mismatch: query {q.query_id!r} has d={q.dim}, "
            f"page {p.page_id!r} has d={p.dim}"
        )


def _similarities(p: PageEmbeddings, q: QueryEmbeddings) -> np.ndarray:
    """Dot products, shape (n_page_vectors, n_query_tokens), float64."""
    return p.vectors.astype(np.float64) @ q.vectors.astype(np.float64).T


def maxsim_score(q: QueryEmbeddings, p: PageEmbeddings) -> float:
    """Sum over tokens of the best dot product against any page vector."""
    _check_dims(q, p)
    per_token = _similarities(p, q).max(axis=0)
    # cumulative sum pins the accumulation to ascending token order
    return float(np.cumsum(per_token)[-1])


def retrieve_topk(
    q: QueryEmbeddings, corpus: CompressedIndex, k: int, threads: int = 1
) -> RankedList:
    """Exact top-k pages by score; ties broken by ascending page id."""
    if len(corpus) == 0:
        raise ValidationError("cannot retrieve from an empty corpus")
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    scores = ordered_map(lambda page: maxsim_score(q, page), corpus.pages, threads)
    order = sorted(zip(corpus.page_ids(), scores), key=lambda hit: (-hit[1], hit[0]))
    return RankedList(query_id=q.query_id, hits=tuple(order[: min(k, len(order))]))


def response_potential(p: PageEmbeddings, q: QueryEmbeddings) -> ResponsePotential:
    """For each patch, its maximum dot product with any token of the query."""
    _check_dims(q, p)
    values = _similarities(p, q).max(axis=1)
    return ResponsePotential(page_id=p.page_id, query_id=q.query_id, values=values)


def aggregate_potential(p: PageEmbeddings, queries: Sequence[QueryEmbeddings]) -> np.ndarray:
    """Element-wise maximum of response potentials over a set of queries."""
    queries = tuple(queries)
    if not queries:
        raise ValidationError(f"aggregate_potential for page {p.page_id!r} needs >= 1 query")
    out = response_potential(p, queries[0]).values.copy()
    for q in queries[1:]:
        np.maximum(out, response_potential(p, q).values, out=out)
    out.setflags(write=False)
    return out
