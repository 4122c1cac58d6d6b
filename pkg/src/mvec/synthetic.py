"""Seeded synthetic corpora, queries, and judgments for tests and demos.

Pages are built from a small number of group directions: each group direction
is repeated over a contiguous block of patches with additive noise, which
plants the redundancy structure that clustering can exploit. Queries mix
tokens aligned with their target page's groups and pure-noise tokens, with
a one-positive qrel per query.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .store import (
    CompressedIndex,
    Grid,
    PageAux,
    PageEmbeddings,
    Qrels,
    QueryEmbeddings,
)


def near_square_grid(n: int) -> Grid:
    """Grid (rows, cols) with rows * cols = n and rows the largest divisor <= sqrt(n)."""
    rows = 1
    r = 1
    while r * r <= n:
        if n % r == 0:
            rows = r
        r += 1
    return Grid(rows, n // rows)


def group_labels(n_patches: int, n_groups: int) -> np.ndarray:
    """Contiguous group blocks of near-equal size covering 0..n_patches-1."""
    return np.minimum(np.arange(n_patches) * n_groups // n_patches, n_groups - 1)


def _unit_rows(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    rows = rng.standard_normal((n, d))
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


@dataclass(frozen=True)
class SyntheticDataset:
    corpus: CompressedIndex
    queries: tuple[QueryEmbeddings, ...]
    qrels: Qrels
    aux: dict[str, PageAux]
    n_groups: int


def synth_corpus(
    n_pages: int,
    n_patches: int,
    d: int,
    n_groups: int,
    noise: float,
    seed: int,
    corpus_id: str = "synthetic",
    with_grid: bool = True,
) -> CompressedIndex:
    if n_groups < 1 or n_groups > n_patches:
        raise ValidationError(f"n_groups must be in [1, {n_patches}], got {n_groups}")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0,)))
    labels = group_labels(n_patches, n_groups)
    grid = near_square_grid(n_patches) if with_grid else None
    pages = []
    for p in range(n_pages):
        directions = _unit_rows(rng, n_groups, d)
        rows = directions[labels]
        if noise > 0:
            rows = rows + noise * rng.standard_normal((n_patches, d))
        rows = rows / np.linalg.norm(rows, axis=1, keepdims=True)
        pages.append(
            PageEmbeddings(
                page_id=f"page{p:04d}",
                vectors=rows.astype(np.float32),
                grid=grid,
                normalized=True,
            )
        )
    return CompressedIndex.build(pages, corpus_id=corpus_id, dtype="f32")


def _aligned_query(
    rng: np.random.Generator,
    query_id: str,
    page: PageEmbeddings,
    labels: np.ndarray,
    n_groups: int,
    aligned_tokens: int,
    random_tokens: int,
    query_noise: float,
) -> QueryEmbeddings:
    tokens = []
    if aligned_tokens > 0:
        chosen = rng.choice(n_groups, size=min(aligned_tokens, n_groups), replace=False)
        for g in np.sort(chosen):
            rows_in_group = np.flatnonzero(labels == g)
            row = int(rng.choice(rows_in_group))
            tokens.append(page.vectors[row].astype(np.float64))
    for _ in range(random_tokens):
        tokens.append(_unit_rows(rng, 1, page.dim)[0])
    stacked = np.stack(tokens)
    if query_noise > 0:
        stacked = stacked + query_noise * rng.standard_normal(stacked.shape)
    stacked = stacked / np.linalg.norm(stacked, axis=1, keepdims=True)
    return QueryEmbeddings(query_id=query_id, vectors=stacked.astype(np.float32), normalized=True)


def synth_queries(
    corpus: CompressedIndex,
    n_groups: int,
    n_queries: int,
    aligned_tokens: int,
    random_tokens: int,
    query_noise: float,
    seed: int,
) -> tuple[tuple[QueryEmbeddings, ...], Qrels]:
    """Queries targeting pages round-robin, each judged relevant to its target."""
    if aligned_tokens + random_tokens < 1:
        raise ValidationError("queries need at least one token")
    if len(corpus) == 0:
        raise ValidationError("cannot build queries for an empty corpus")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(1,)))
    queries = []
    entries = []
    for i in range(n_queries):
        page = corpus.pages[i % len(corpus)]
        labels = group_labels(page.n_vectors, n_groups)
        query_id = f"query{i:04d}"
        queries.append(
            _aligned_query(
                rng, query_id, page, labels, n_groups, aligned_tokens, random_tokens, query_noise
            )
        )
        entries.append((query_id, page.page_id, 1))
    return tuple(queries), Qrels.from_entries(entries)


def synth_aux(
    corpus: CompressedIndex,
    n_groups: int,
    queries_per_page: int,
    tokens_per_query: int,
    query_noise: float,
    seed: int,
) -> dict[str, PageAux]:
    """Per-page sampled query sets plus a random non-negative attention signal."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(2,)))
    aux: dict[str, PageAux] = {}
    for page in corpus:
        labels = group_labels(page.n_vectors, n_groups)
        sampled = tuple(
            _aligned_query(
                rng,
                f"{page.page_id}#{k}",
                page,
                labels,
                n_groups,
                aligned_tokens=tokens_per_query,
                random_tokens=0,
                query_noise=query_noise,
            )
            for k in range(queries_per_page)
        )
        attention = rng.random(page.n_vectors).astype(np.float32)
        aux[page.page_id] = PageAux(
            page_id=page.page_id, attention=attention, synth_queries=sampled
        )
    return aux


def generate(
    n_pages: int = 50,
    n_patches: int = 96,
    d: int = 32,
    n_groups: int = 12,
    noise: float = 0.02,
    n_queries: int = 20,
    aligned_tokens: int = 2,
    random_tokens: int = 4,
    query_noise: float = 0.05,
    synth_queries_per_page: int = 5,
    synth_tokens_per_query: int = 3,
    seed: int = 0,
    corpus_id: str = "synthetic",
) -> SyntheticDataset:
    """One-stop generator for a self-consistent synthetic retrieval dataset."""
    corpus = synth_corpus(n_pages, n_patches, d, n_groups, noise, seed, corpus_id=corpus_id)
    queries, qrels = synth_queries(
        corpus, n_groups, n_queries, aligned_tokens, random_tokens, query_noise, seed
    )
    aux = synth_aux(
        corpus, n_groups, synth_queries_per_page, synth_tokens_per_query, query_noise, seed
    )
    return SyntheticDataset(corpus=corpus, queries=queries, qrels=qrels, aux=aux, n_groups=n_groups)
