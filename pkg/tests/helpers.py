"""Independent reference implementations and data builders for the tests.

Everything here deliberately avoids the library's vectorized code paths:
scores come from explicit double loops, clustering recomputes linkage from
the original distance matrix at every step, and NDCG is spelled out from
its formula. These are the oracles the engine is checked against.
"""

from __future__ import annotations

import math

import numpy as np

from mvec import Grid, PageEmbeddings, QueryEmbeddings


def oracle_maxsim(query_vectors: np.ndarray, page_vectors: np.ndarray) -> float:
    """Brute-force double loop over (patch, token) pairs in float64."""
    total = 0.0
    for j in range(query_vectors.shape[0]):
        token = query_vectors[j].astype(np.float64)
        best = -math.inf
        for i in range(page_vectors.shape[0]):
            s = float(np.dot(page_vectors[i].astype(np.float64), token))
            if s > best:
                best = s
        total += best
    return total


def oracle_response_potential(page_vectors: np.ndarray, query_vectors: np.ndarray) -> np.ndarray:
    out = np.empty(page_vectors.shape[0])
    for i in range(page_vectors.shape[0]):
        row = page_vectors[i].astype(np.float64)
        out[i] = max(
            float(np.dot(row, query_vectors[j].astype(np.float64)))
            for j in range(query_vectors.shape[0])
        )
    return out


def oracle_upgma(vectors: np.ndarray, n_clusters: int) -> np.ndarray:
    """Average-linkage agglomeration recomputed from the base distance matrix.

    Same documented tie rule as the engine: minimum mean pairwise cosine
    distance first, then the lexicographically smallest sorted pair of
    smallest member indices. Labels follow each cluster's smallest member.
    """
    n = vectors.shape[0]
    unit = vectors.astype(np.float64)
    unit = unit / np.linalg.norm(unit, axis=1, keepdims=True)
    dist0 = 1.0 - unit @ unit.T
    clusters: list[list[int]] = [[i] for i in range(n)]
    while len(clusters) > n_clusters:
        best_pair = None
        best_key = None
        for a in range(len(clusters)):
            for b in range(a + 1, len(clusters)):
                link = np.mean([dist0[i, j] for i in clusters[a] for j in clusters[b]])
                lo, hi = sorted((min(clusters[a]), min(clusters[b])))
                key = (link, lo, hi)
                if best_key is None or key < best_key:
                    best_key = key
                    best_pair = (a, b)
        a, b = best_pair
        merged = clusters[a] + clusters[b]
        clusters = [c for idx, c in enumerate(clusters) if idx not in (a, b)] + [merged]
    clusters.sort(key=min)
    labels = np.empty(n, dtype=np.int64)
    for label, members in enumerate(clusters):
        labels[members] = label
    return labels


def oracle_ndcg(ranked_page_ids, grades, k: int) -> float:
    """NDCG@k written out directly from the gain/discount definition."""
    dcg = 0.0
    for rank, page_id in enumerate(ranked_page_ids[:k], start=1):
        rel = grades.get(page_id, 0)
        dcg += (2**rel - 1) / math.log2(rank + 1)
    ideal = sorted(grades.values(), reverse=True)[:k]
    idcg = sum((2**rel - 1) / math.log2(rank + 1) for rank, rel in enumerate(ideal, start=1))
    return dcg / idcg if idcg > 0 else 0.0


def unit_rows(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    rows = rng.standard_normal((n, d))
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


def random_page(
    rng: np.random.Generator,
    n: int,
    d: int,
    page_id: str = "p",
    grid: Grid | None = None,
    unit: bool = True,
) -> PageEmbeddings:
    rows = unit_rows(rng, n, d) if unit else rng.standard_normal((n, d))
    return PageEmbeddings(
        page_id=page_id, vectors=rows.astype(np.float32), grid=grid, normalized=unit
    )


def random_query(
    rng: np.random.Generator, n: int, d: int, query_id: str = "q", unit: bool = True
) -> QueryEmbeddings:
    rows = unit_rows(rng, n, d) if unit else rng.standard_normal((n, d))
    return QueryEmbeddings(query_id=query_id, vectors=rows.astype(np.float32), normalized=unit)


def duplicate_group_page(
    rng: np.random.Generator, n_groups: int, copies: int, d: int, page_id: str = "p"
) -> tuple[PageEmbeddings, np.ndarray]:
    """Page whose rows are exact duplicates of n_groups distinct unit vectors.

    Returns the page and its distinct vectors (float32, one per group).
    Group g occupies the contiguous rows [g*copies, (g+1)*copies).
    """
    distinct = unit_rows(rng, n_groups, d).astype(np.float32)
    rows = np.repeat(distinct, copies, axis=0)
    page = PageEmbeddings(page_id=page_id, vectors=rows, normalized=True)
    return page, distinct
