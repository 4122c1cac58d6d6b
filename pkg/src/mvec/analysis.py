"""Diagnostics for pruning feasibility: activation overlap and redundancy.

A patch is "activated" by a query when its response potential lands in the
top K% for that page. Comparing activation sets across query pairs shows how
query-dependent patch importance is; min-max normalized potentials show how
many patches respond near-equally (redundancy).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ValidationError
from .scoring import response_potential
from .store import CompressedIndex, PageEmbeddings, QueryEmbeddings


@dataclass(frozen=True)
class OverlapCurve:
    """Mean activated-patch overlap per prune ratio, vs the chance baseline."""

    points: tuple[tuple[float, float], ...]  # (prune_ratio, mean_overlap)

    def __post_init__(self) -> None:
        pts = tuple((float(r), float(o)) for r, o in self.points)
        ratios = [r for r, _ in pts]
        if sorted(ratios) != ratios:
            raise ValidationError("overlap points must be sorted by ratio")
        if any(not (0.0 <= o <= 1.0) for _, o in pts):
            raise ValidationError("overlaps must lie in [0, 1]")
        object.__setattr__(self, "points", pts)

    @staticmethod
    def random_baseline(ratio: float) -> float:
        """Expected overlap of two independent activation sets at this ratio."""
        return 1.0 - ratio

    def to_dict(self) -> dict:
        return {
            "points": [
                {
                    "prune_ratio": r,
                    "mean_overlap": o,
                    "random_baseline": self.random_baseline(r),
                }
                for r, o in self.points
            ]
        }


@dataclass(frozen=True)
class RedundancyStats:
    """Mean per-page counts of normalized potentials above each threshold."""

    mean_counts: Mapping[float, float]
    histogram_counts: tuple[int, ...]
    histogram_edges: tuple[float, ...]
    n_pairs: int

    def to_dict(self) -> dict:
        return {
            "mean_counts": {str(t): c for t, c in self.mean_counts.items()},
            "histogram_counts": list(self.histogram_counts),
            "histogram_edges": list(self.histogram_edges),
            "n_pairs": self.n_pairs,
        }


def activated_patches(
    p: PageEmbeddings, q: QueryEmbeddings, top_percent: float
) -> np.ndarray:
    """Indices of the ceil(top_percent% * n) highest-potential patches, ascending.

    Potential ties resolve toward the lower patch index.
    """
    if not (0.0 < top_percent <= 100.0):
        raise ValidationError(f"top_percent must be in (0, 100], got {top_percent}")
    values = response_potential(p, q).values
    count = math.ceil(top_percent / 100.0 * p.n_vectors)
    order = np.argsort(-values, kind="stable")  # stable: ties keep lower index first
    return np.sort(order[:count])


def pairwise_overlap(
    p: PageEmbeddings, q1: QueryEmbeddings, q2: QueryEmbeddings, top_percent: float
) -> float:
    """|activated(q1) ∩ activated(q2)| / |activated(q1)|; the sets have equal size."""
    a1 = activated_patches(p, q1, top_percent)
    a2 = activated_patches(p, q2, top_percent)
    shared = np.intersect1d(a1, a2, assume_unique=True).size
    return shared / a1.size


def normalized_potential(p: PageEmbeddings, q: QueryEmbeddings) -> np.ndarray:
    """Min-max normalized response potentials; a constant profile maps to zeros."""
    if p.n_vectors < 2:
        raise ValidationError(
            f"page {p.page_id!r}: normalization needs >= 2 patches, got {p.n_vectors}"
        )
    values = response_potential(p, q).values
    lo = values.min()
    hi = values.max()
    if hi == lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def redundancy_stats(
    pairs: Sequence[tuple[PageEmbeddings, QueryEmbeddings]],
    thresholds: Sequence[float],
    bins: int = 20,
) -> RedundancyStats:
    """Mean count of patches with normalized potential strictly above each threshold."""
    thresholds = [float(t) for t in thresholds]
    totals = {t: 0 for t in thresholds}
    hist = np.zeros(bins, dtype=np.int64)
    edges = np.linspace(0.0, 1.0, bins + 1)
    for page, query in pairs:
        norm = normalized_potential(page, query)
        for t in thresholds:
            totals[t] += int(np.count_nonzero(norm > t))
        hist += np.histogram(norm, bins=edges)[0]
    n = len(pairs)
    mean_counts = {t: (totals[t] / n if n else 0.0) for t in thresholds}
    return RedundancyStats(
        mean_counts=mean_counts,
        histogram_counts=tuple(int(c) for c in hist),
        histogram_edges=tuple(float(e) for e in edges),
        n_pairs=n,
    )


def overlap_curve(
    corpus: CompressedIndex,
    synth_queries: Mapping[str, Sequence[QueryEmbeddings]],
    ratios: Sequence[float],
) -> OverlapCurve:
    """Mean pairwise activation overlap across each page's query set, per ratio.

    A prune ratio r keeps the top (1 - r) fraction of patches, so the
    activation threshold is top_percent = 100 * (1 - r).
    """
    ratios = sorted(float(r) for r in ratios)
    if any(not (0.0 <= r < 1.0) for r in ratios):
        raise ValidationError("prune ratios must lie in [0, 1)")
    points = []
    for ratio in ratios:
        top_percent = 100.0 * (1.0 - ratio)
        overlaps: list[float] = []
        for page in corpus:
            queries = synth_queries.get(page.page_id, ())
            for i in range(len(queries)):
                for j in range(i + 1, len(queries)):
                    overlaps.append(pairwise_overlap(page, queries[i], queries[j], top_percent))
        if not overlaps:
            raise ValidationError("no query pairs available for overlap analysis")
        points.append((ratio, sum(overlaps) / len(overlaps)))
    return OverlapCurve(points=tuple(points))
