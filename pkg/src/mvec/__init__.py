"""Storage-efficient multi-vector document retrieval.

Pages are stored as many patch-level embedding vectors and scored against
token-level query embeddings by summed maximum similarity. This package
provides the binary storage format, exact scoring and retrieval, per-page
compression by pruning or merging, NDCG evaluation and sweep harnesses, and
diagnostics for how compressible a corpus is.
"""

__version__ = "0.1.0"

from .analysis import (
    OverlapCurve,
    RedundancyStats,
    activated_patches,
    normalized_potential,
    overlap_curve,
    pairwise_overlap,
    redundancy_stats,
)
from .errors import FormatError, MvecError, ValidationError
from .evaluation import EvalReport, SweepPoint, evaluate, evaluate_queries, ndcg_at_k, run_sweep
from .merging import (
    ClusterAssignment,
    MergeApproach,
    MergeSpec,
    hierarchical_cluster,
    merge_cluster,
    merge_corpus,
    merge_page,
    merge_pool_1d,
    merge_pool_2d,
    merged_count,
    select_window,
)
from .pruning import (
    PruneSpec,
    PruneStrategy,
    prune_by_scores,
    prune_corpus,
    prune_page,
    prune_random,
)
from .scoring import (
    RankedList,
    ResponsePotential,
    aggregate_potential,
    maxsim_score,
    response_potential,
    retrieve_topk,
)
from .store import (
    CompressedIndex,
    CorpusManifest,
    Grid,
    PageAux,
    PageEmbeddings,
    Provenance,
    Qrels,
    QueryEmbeddings,
    ingest_corpus,
    load_attention,
    load_aux,
    load_qrels,
    load_queries,
    load_synth_queries,
    manifest_path,
    mebibytes,
    megabytes_decimal,
    memory_footprint,
    relative_memory,
    write_attention,
    write_corpus,
    write_qrels,
    write_queries,
    write_synth_queries,
)

__all__ = [
    "ClusterAssignment",
    "CompressedIndex",
    "CorpusManifest",
    "EvalReport",
    "FormatError",
    "Grid",
    "MergeApproach",
    "MergeSpec",
    "MvecError",
    "OverlapCurve",
    "PageAux",
    "PageEmbeddings",
    "Provenance",
    "PruneSpec",
    "PruneStrategy",
    "Qrels",
    "QueryEmbeddings",
    "RankedList",
    "RedundancyStats",
    "ResponsePotential",
    "SweepPoint",
    "ValidationError",
    "activated_patches",
    "aggregate_potential",
    "evaluate",
    "evaluate_queries",
    "hierarchical_cluster",
    "ingest_corpus",
    "load_attention",
    "load_aux",
    "load_qrels",
    "load_queries",
    "load_synth_queries",
    "manifest_path",
    "maxsim_score",
    "mebibytes",
    "megabytes_decimal",
    "memory_footprint",
    "merge_cluster",
    "merge_corpus",
    "merge_page",
    "merge_pool_1d",
    "merge_pool_2d",
    "merged_count",
    "ndcg_at_k",
    "normalized_potential",
    "overlap_curve",
    "pairwise_overlap",
    "prune_by_scores",
    "prune_corpus",
    "prune_page",
    "prune_random",
    "redundancy_stats",
    "relative_memory",
    "response_potential",
    "retrieve_topk",
    "run_sweep",
    "select_window",
    "write_attention",
    "write_corpus",
    "write_qrels",
    "write_queries",
    "write_synth_queries",
]
