"""Token merging: collapse a page's patch embeddings into fewer vectors.

Three approaches over the stored (post-projection) vectors:

* 1-D pooling averages contiguous runs of rows in flattening order.
* 2-D pooling averages spatial windows tiled over the patch grid.
* Clustering groups rows by cosine similarity (agglomerative, average
  linkage) and represents each cluster by its mean.

Every rule that floating-point or ordering could make ambiguous is pinned:
counts round half-to-even, window search prefers square then taller windows,
cluster merges break linkage ties by the smallest (min member, min member)
pair, and output clusters are labeled by their smallest member index.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .parallel import ordered_map
from .store import CompressedIndex, Grid, PageEmbeddings, Provenance

_ZERO_NORM = 1e-12


class MergeApproach(str, enum.Enum):
    POOL1D = "pool1d"
    POOL2D = "pool2d"
    CLUSTER = "cluster"


@dataclass(frozen=True)
class MergeSpec:
    """Merging request: approach, reduction factor n/n', renormalization flag."""

    approach: MergeApproach
    factor: float
    renormalize: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "approach", MergeApproach(self.approach))
        if self.factor < 1.0:
            raise ValidationError(f"merge factor must be >= 1, got {self.factor}")

    @property
    def parameter(self) -> float:
        return self.factor


@dataclass(frozen=True)
class ClusterAssignment:
    """Cluster id per row; ids are 0..n_clusters-1 and each occurs at least once."""

    labels: np.ndarray
    n_clusters: int

    def __post_init__(self) -> None:
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        present = np.unique(labels)
        expected = np.arange(self.n_clusters)
        if present.size != self.n_clusters or np.any(present != expected):
            raise ValidationError("cluster labels must cover 0..n_clusters-1")


def merged_count(n: int, factor: float) -> int:
    """Target row count for a merge: max(1, round(n / factor)), half to even."""
    if factor < 1.0:
        raise ValidationError(f"merge factor must be >= 1, got {factor}")
    return max(1, round(n / factor))


def _finalize(
    p: PageEmbeddings, rows64: np.ndarray, grid: Grid | None, renormalize: bool
) -> PageEmbeddings:
    if renormalize:
        norms = np.linalg.norm(rows64, axis=1)
        if np.any(norms < _ZERO_NORM):
            raise ValidationError(
                f"page {p.page_id!r}: a merged vector has near-zero norm, cannot renormalize"
            )
        rows64 = rows64 / norms[:, None]
    return PageEmbeddings(
        page_id=p.page_id,
        vectors=rows64.astype(np.float32),
        grid=grid,
        normalized=renormalize,
    )


def merge_pool_1d(p: PageEmbeddings, factor: float, renormalize: bool = False) -> PageEmbeddings:
    """Average contiguous runs of rows; run lengths differ by <= 1, longer runs first."""
    n = p.n_vectors
    n_out = merged_count(n, factor)
    if n_out == n and not renormalize:
        return p
    base, rem = divmod(n, n_out)
    vec = p.vectors.astype(np.float64)
    rows = np.empty((n_out, p.dim), dtype=np.float64)
    start = 0
    for run in range(n_out):
        length = base + 1 if run < rem else base
        rows[run] = vec[start : start + length].mean(axis=0)
        start += length
    grid = p.grid if n_out == n else None
    return _finalize(p, rows, grid, renormalize)


def select_window(rows: int, cols: int, factor: float) -> tuple[int, int]:
    """Pooling window whose area is closest to `factor`; prefer square, then taller."""
    best: tuple[int, int] | None = None
    best_key: tuple[float, int, int] | None = None
    for w_r in range(1, rows + 1):
        for w_c in range(1, cols + 1):
            key = (abs(w_r * w_c - factor), abs(w_r - w_c), -w_r)
            if best_key is None or key < best_key:
                best_key = key
                best = (w_r, w_c)
    assert best is not None
    return best


def merge_pool_2d(p: PageEmbeddings, factor: float, renormalize: bool = False) -> PageEmbeddings:
    """Average spatial windows tiled from the grid's top-left; edge windows are ragged."""
    if factor < 1.0:
        raise ValidationError(f"merge factor must be >= 1, got {factor}")
    if p.grid is None:
        raise ValidationError(f"page {p.page_id!r} has no grid; 2-D pooling needs geometry")
    g = p.grid
    w_r, w_c = select_window(g.rows, g.cols, factor)
    if (w_r, w_c) == (1, 1) and not renormalize:
        return p
    out_rows = -(-g.rows // w_r)
    out_cols = -(-g.cols // w_c)
    vec = p.vectors.astype(np.float64)
    rows = np.empty((out_rows * out_cols, p.dim), dtype=np.float64)
    for a in range(out_rows):
        for b in range(out_cols):
            r0, r1 = a * w_r, min((a + 1) * w_r, g.rows)
            c0, c1 = b * w_c, min((b + 1) * w_c, g.cols)
            flat = [r * g.cols + c for r in range(r0, r1) for c in range(c0, c1)]
            rows[a * out_cols + b] = vec[flat].mean(axis=0)
    return _finalize(p, rows, Grid(out_rows, out_cols), renormalize)


def hierarchical_cluster(p: PageEmbeddings, n_clusters: int) -> ClusterAssignment:
    """Agglomerative clustering, cosine distance, average linkage.

    Merges the pair of clusters at minimum mean pairwise distance; ties pick
    the pair whose sorted (smallest member, smallest member) indices are
    lexicographically least. Stops at `n_clusters`; label order follows each
    cluster's smallest member index.
    """
    n = p.n_vectors
    if not (1 <= n_clusters <= n):
        raise ValidationError(f"n_clusters must be in [1, {n}], got {n_clusters}")
    vec = p.vectors.astype(np.float64)
    norms = np.linalg.norm(vec, axis=1)
    if np.any(norms < _ZERO_NORM):
        raise ValidationError(f"page {p.page_id!r} has a zero-norm row; cosine is undefined")
    unit = vec / norms[:, None]
    work = 1.0 - unit @ unit.T
    np.fill_diagonal(work, np.inf)

    sizes = np.ones(n, dtype=np.float64)
    min_member = np.arange(n)
    active = np.ones(n, dtype=bool)
    members: list[list[int]] = [[i] for i in range(n)]

    for _ in range(n - n_clusters):
        m = work.min()
        tied = np.argwhere(work == m)
        best: tuple[int, int] | None = None
        best_key: tuple[int, int] | None = None
        for i, j in tied:
            if i >= j:
                continue
            a, b = int(min_member[i]), int(min_member[j])
            key = (a, b) if a < b else (b, a)
            if best_key is None or key < best_key:
                best_key = key
                best = (int(i), int(j))
        assert best is not None
        i, j = best
        if min_member[j] < min_member[i]:
            i, j = j, i
        others = active.copy()
        others[i] = others[j] = False
        updated = (sizes[i] * work[i, others] + sizes[j] * work[j, others]) / (sizes[i] + sizes[j])
        work[i, others] = updated
        work[others, i] = updated
        work[j, :] = np.inf
        work[:, j] = np.inf
        active[j] = False
        sizes[i] += sizes[j]
        members[i].extend(members[j])

    slots = sorted((s for s in range(n) if active[s]), key=lambda s: min_member[s])
    labels = np.empty(n, dtype=np.int64)
    for label, slot in enumerate(slots):
        labels[members[slot]] = label
    return ClusterAssignment(labels=labels, n_clusters=n_clusters)


def merge_cluster(p: PageEmbeddings, factor: float, renormalize: bool = True) -> PageEmbeddings:
    """Cluster rows by cosine similarity and average each cluster."""
    n_out = merged_count(p.n_vectors, factor)
    assignment = hierarchical_cluster(p, n_out)
    vec = p.vectors.astype(np.float64)
    rows = np.empty((n_out, p.dim), dtype=np.float64)
    for label in range(n_out):
        rows[label] = vec[assignment.labels == label].mean(axis=0)
    return _finalize(p, rows, None, renormalize)


def merge_page(p: PageEmbeddings, spec: MergeSpec) -> PageEmbeddings:
    if spec.approach is MergeApproach.POOL1D:
        return merge_pool_1d(p, spec.factor, spec.renormalize)
    if spec.approach is MergeApproach.POOL2D:
        return merge_pool_2d(p, spec.factor, spec.renormalize)
    return merge_cluster(p, spec.factor, spec.renormalize)


def merge_corpus(corpus: CompressedIndex, spec: MergeSpec, threads: int = 1) -> CompressedIndex:
    pages = ordered_map(lambda page: merge_page(page, spec), corpus.pages, threads)
    provenance = Provenance(strategy=f"merge_{spec.approach.value}", parameter=spec.factor)
    return corpus.derive(pages, provenance)
