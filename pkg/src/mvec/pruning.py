"""Token pruning: reduce a page to a subset of its patch embeddings.

Three strategies: uniform random dropping, and importance-ranked dropping
driven either by response potentials against sampled queries or by received
attention mass. All of them keep surviving rows bitwise intact and in their
original order; the count dropped is round(ratio * n) with ties rounded to
even. Grid geometry is discarded because survivors no longer tile the page.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import ValidationError
from .parallel import ordered_map
from .scoring import aggregate_potential
from .store import CompressedIndex, PageAux, PageEmbeddings, Provenance


class PruneStrategy(str, enum.Enum):
    RANDOM = "random"
    SCORE_ORIENTED = "score"
    ATTENTION_ORIENTED = "attention"


@dataclass(frozen=True)
class PruneSpec:
    """Pruning request: strategy, fraction of rows to drop, RNG seed (random only)."""

    strategy: PruneStrategy
    ratio: float
    seed: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "strategy", PruneStrategy(self.strategy))
        if not (0.0 <= self.ratio < 1.0):
            raise ValidationError(f"prune ratio must be in [0, 1), got {self.ratio}")

    @property
    def parameter(self) -> float:
        return self.ratio


def _n_dropped(n: int, ratio: float) -> int:
    dropped = round(ratio * n)
    if n - dropped < 1:
        raise ValidationError(f"ratio {ratio} would leave no rows of {n}")
    return dropped


def _keep_rows(p: PageEmbeddings, keep: np.ndarray) -> PageEmbeddings:
    return PageEmbeddings(
        page_id=p.page_id,
        vectors=p.vectors[keep],
        grid=None,
        normalized=p.normalized,
    )


def prune_random(
    p: PageEmbeddings, ratio: float, seed: int | np.random.SeedSequence | None
) -> PageEmbeddings:
    """Keep a uniformly random subset of rows, preserving their order."""
    if not (0.0 <= ratio < 1.0):
        raise ValidationError(f"prune ratio must be in [0, 1), got {ratio}")
    if ratio == 0.0:
        return p
    n_keep = p.n_vectors - _n_dropped(p.n_vectors, ratio)
    rng = np.random.default_rng(seed)
    keep = np.sort(rng.choice(p.n_vectors, size=n_keep, replace=False))
    return _keep_rows(p, keep)


def prune_by_scores(p: PageEmbeddings, importance: np.ndarray, ratio: float) -> PageEmbeddings:
    """Drop the lowest-importance rows; ties drop the lower patch index first."""
    if not (0.0 <= ratio < 1.0):
        raise ValidationError(f"prune ratio must be in [0, 1), got {ratio}")
    importance = np.asarray(importance, dtype=np.float64).reshape(-1)
    if importance.size != p.n_vectors:
        raise ValidationError(
            f"importance length {importance.size} != {p.n_vectors} rows of page {p.page_id!r}"
        )
    if not np.isfinite(importance).all():
        raise ValidationError(f"importance for page {p.page_id!r} has non-finite values")
    if ratio == 0.0:
        return p
    n_drop = _n_dropped(p.n_vectors, ratio)
    # stable ascending sort: equal importances surface lower indices first
    dropped = np.argsort(importance, kind="stable")[:n_drop]
    keep = np.setdiff1d(np.arange(p.n_vectors), dropped, assume_unique=True)
    return _keep_rows(p, keep)


def prune_page(
    p: PageEmbeddings,
    spec: PruneSpec,
    aux: PageAux | None = None,
    seed: int | np.random.SeedSequence | None = None,
) -> PageEmbeddings:
    """Apply one strategy to one page. `seed` overrides `spec.seed` (random only)."""
    if spec.strategy is PruneStrategy.RANDOM:
        return prune_random(p, spec.ratio, spec.seed if seed is None else seed)
    if spec.strategy is PruneStrategy.SCORE_ORIENTED:
        if aux is None or not aux.synth_queries:
            raise ValidationError(
                f"score-oriented pruning of page {p.page_id!r} needs synthesized queries"
            )
        importance = aggregate_potential(p, aux.synth_queries)
        return prune_by_scores(p, importance, spec.ratio)
    if aux is None or aux.attention is None:
        raise ValidationError(
            f"attention-oriented pruning of page {p.page_id!r} needs an attention vector"
        )
    if aux.attention.size != p.n_vectors:
        raise ValidationError(
            f"attention length {aux.attention.size} != {p.n_vectors} rows of page {p.page_id!r}"
        )
    return prune_by_scores(p, aux.attention, spec.ratio)


def prune_corpus(
    corpus: CompressedIndex,
    spec: PruneSpec,
    aux: Mapping[str, PageAux] | None = None,
    threads: int = 1,
) -> CompressedIndex:
    """Prune every page; page i of a random prune uses the derived seed (spec.seed, i)."""
    aux = aux or {}

    def one(indexed: tuple[int, PageEmbeddings]) -> PageEmbeddings:
        i, page = indexed
        seed = None
        if spec.strategy is PruneStrategy.RANDOM:
            base = 0 if spec.seed is None else spec.seed
            seed = np.random.SeedSequence(entropy=base, spawn_key=(i,))
        return prune_page(page, spec, aux.get(page.page_id), seed=seed)

    pages = ordered_map(one, enumerate(corpus.pages), threads)
    provenance = Provenance(
        strategy=f"prune_{spec.strategy.value}", parameter=spec.ratio, seed=spec.seed
    )
    return corpus.derive(pages, provenance)
