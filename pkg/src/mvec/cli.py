"""Command-line entry point.

Subcommands: ingest, validate, prune, merge, index, search, eval, sweep,
analyze (overlap | redundancy), mem, gen-synthetic.

Exit codes: 0 success, 1 validation/usage error, 2 I/O or file-format error.
Errors go to stderr. Reports are JSON; `--json` switches the remaining
summaries from human text to JSON. All output is deterministic for fixed
inputs and seeds; `--threads` (default from MVEC_THREADS) only changes wall
time. An optional `--config FILE` supplies flat `key=value` defaults that
explicit flags override.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .analysis import overlap_curve, redundancy_stats
from .errors import FormatError, MvecError, ValidationError
from .evaluation import EvalReport, evaluate, run_sweep
from .merging import MergeApproach, MergeSpec, merge_corpus
from .parallel import default_threads, ordered_map
from .pruning import PruneSpec, PruneStrategy, prune_corpus
from .scoring import retrieve_topk
from .store import (
    CompressedIndex,
    ingest_corpus,
    load_attention,
    load_aux,
    load_qrels,
    load_queries,
    load_synth_queries,
    memory_footprint,
    mebibytes,
    megabytes_decimal,
    relative_memory,
    write_attention,
    write_corpus,
    write_qrels,
    write_queries,
    write_synth_queries,
    manifest_path,
)
from .synthetic import generate

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2

PRUNE_STRATEGIES = tuple(s.value for s in PruneStrategy)
MERGE_APPROACHES = tuple(a.value for a in MergeApproach)


def _dump(data: dict) -> str:
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def _emit(args: argparse.Namespace, data: dict, human: str) -> None:
    if getattr(args, "json", False):
        sys.stdout.write(_dump(data))
    else:
        sys.stdout.write(human if human.endswith("\n") else human + "\n")


def _write_or_print(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _corpus_summary(corpus: CompressedIndex, path: str) -> dict:
    m = corpus.manifest
    return {
        "path": path,
        "corpus_id": m.corpus_id,
        "pages": len(corpus),
        "d": m.d,
        "dtype": m.dtype,
        "total_vectors": sum(p.n_vectors for p in corpus),
        "payload_bytes": memory_footprint(corpus),
        "provenance": None if m.provenance is None else m.provenance.to_dict(),
    }


def _floats_csv(raw: str) -> list[float]:
    try:
        return [float(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError as exc:
        raise ValidationError(f"expected comma-separated floats, got {raw!r}") from exc


def _load_prune_aux(corpus: CompressedIndex, strategy: PruneStrategy, aux_path: str | None):
    if strategy is PruneStrategy.RANDOM:
        return None
    if aux_path is None:
        raise ValidationError(f"strategy {strategy.value!r} requires --aux")
    if strategy is PruneStrategy.SCORE_ORIENTED:
        return load_aux(corpus, synth_path=aux_path)
    return load_aux(corpus, attention_path=aux_path)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_ingest(args: argparse.Namespace) -> int:
    corpus = ingest_corpus(args.input)
    info = _corpus_summary(corpus, args.input)
    human = (
        f"{info['path']}: {info['pages']} pages, d={info['d']}, dtype={info['dtype']}, "
        f"{info['total_vectors']} vectors, {info['payload_bytes']} payload bytes"
    )
    _emit(args, info, human)
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    kind = args.kind
    if kind == "corpus":
        ingest_corpus(args.input)
    elif kind == "queries":
        load_queries(args.input)
    elif kind == "attention":
        load_attention(args.input)
    else:
        load_synth_queries(args.input)
    _emit(args, {"path": args.input, "kind": kind, "valid": True}, f"{args.input}: OK ({kind})")
    return EXIT_OK


def cmd_prune(args: argparse.Namespace) -> int:
    corpus = ingest_corpus(args.input)
    strategy = PruneStrategy(args.strategy)
    spec = PruneSpec(strategy=strategy, ratio=args.ratio, seed=args.seed)
    aux = _load_prune_aux(corpus, strategy, args.aux)
    pruned = prune_corpus(corpus, spec, aux=aux, threads=args.threads)
    write_corpus(pruned, args.output)
    info = _corpus_summary(pruned, args.output)
    _emit(
        args,
        info,
        f"{args.output}: pruned {strategy.value} ratio={args.ratio} -> "
        f"{info['total_vectors']} vectors ({info['payload_bytes']} payload bytes)",
    )
    return EXIT_OK


def cmd_merge(args: argparse.Namespace) -> int:
    corpus = ingest_corpus(args.input)
    spec = MergeSpec(
        approach=MergeApproach(args.approach),
        factor=args.factor,
        renormalize=not args.no_renormalize,
    )
    merged = merge_corpus(corpus, spec, threads=args.threads)
    write_corpus(merged, args.output)
    info = _corpus_summary(merged, args.output)
    _emit(
        args,
        info,
        f"{args.output}: merged {spec.approach.value} factor={args.factor} -> "
        f"{info['total_vectors']} vectors ({info['payload_bytes']} payload bytes)",
    )
    return EXIT_OK


def cmd_index(args: argparse.Namespace) -> int:
    corpus = ingest_corpus(args.input)
    manifest = write_corpus(corpus, args.input) if args.rewrite else corpus.manifest
    sidecar = manifest_path(Path(args.input))
    if not args.rewrite:
        sidecar.write_text(_dump(manifest.to_dict()), encoding="utf-8")
    _emit(
        args,
        {"path": args.input, "manifest": manifest.to_dict(), "sidecar": str(sidecar)},
        f"{args.input}: manifest written to {sidecar}",
    )
    return EXIT_OK


def cmd_search(args: argparse.Namespace) -> int:
    corpus = ingest_corpus(args.corpus)
    queries = load_queries(args.queries)
    lines = []
    rankings = ordered_map(
        lambda q: retrieve_topk(q, corpus, args.k), queries, args.threads
    )
    for ranking in rankings:
        for rank, (page_id, score) in enumerate(ranking.hits, start=1):
            lines.append(f"{ranking.query_id}\t{rank}\t{page_id}\t{score:.6f}")
    _write_or_print("\n".join(lines) + ("\n" if lines else ""), args.output)
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    corpus = ingest_corpus(args.corpus)
    queries = load_queries(args.queries)
    qrels = load_qrels(args.qrels)
    baseline_mean = None
    if args.baseline:
        baseline_mean = EvalReport.from_json_file(args.baseline).mean_ndcg
    memory_ratio = None
    if args.baseline_corpus:
        memory_ratio = relative_memory(corpus, ingest_corpus(args.baseline_corpus))
    report = evaluate(
        corpus,
        queries,
        qrels,
        k=args.k,
        baseline_mean=baseline_mean,
        memory_ratio=memory_ratio,
        threads=args.threads,
    )
    _write_or_print(report.to_json(), args.output)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    corpus = ingest_corpus(args.corpus)
    queries = load_queries(args.queries)
    qrels = load_qrels(args.qrels)
    if not args.point:
        raise ValidationError("sweep needs at least one --point")
    specs: list[PruneSpec | MergeSpec] = []
    aux = None
    if args.strategy in PRUNE_STRATEGIES:
        strategy = PruneStrategy(args.strategy)
        aux = _load_prune_aux(corpus, strategy, args.aux)
        specs = [PruneSpec(strategy=strategy, ratio=p, seed=args.seed) for p in args.point]
    else:
        approach = MergeApproach(args.strategy)
        specs = [
            MergeSpec(approach=approach, factor=p, renormalize=not args.no_renormalize)
            for p in args.point
        ]
    report = run_sweep(corpus, queries, qrels, specs, k=args.k, aux=aux, threads=args.threads)
    _write_or_print(report.to_json(), args.output)
    return EXIT_OK


def cmd_analyze_overlap(args: argparse.Namespace) -> int:
    corpus = ingest_corpus(args.corpus)
    synth = load_synth_queries(args.synth_queries)
    curve = overlap_curve(corpus, synth, _floats_csv(args.ratios))
    _write_or_print(_dump(curve.to_dict()), args.output)
    if args.csv:
        rows = ["prune_ratio,mean_overlap,random_baseline"]
        rows += [
            f"{r},{o},{curve.random_baseline(r)}" for r, o in curve.points
        ]
        Path(args.csv).write_text("\n".join(rows) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_analyze_redundancy(args: argparse.Namespace) -> int:
    corpus = ingest_corpus(args.corpus)
    synth = load_synth_queries(args.synth_queries)
    pairs = [
        (page, query)
        for page in corpus
        for query in synth.get(page.page_id, ())
    ]
    if not pairs:
        raise ValidationError("no (page, query) pairs available")
    if len(pairs) > args.sample:
        rng = np.random.default_rng(args.seed)
        chosen = np.sort(rng.choice(len(pairs), size=args.sample, replace=False))
        pairs = [pairs[i] for i in chosen]
    stats = redundancy_stats(pairs, _floats_csv(args.thresholds), bins=args.bins)
    _write_or_print(_dump(stats.to_dict()), args.output)
    if args.csv:
        rows = ["threshold,mean_count"]
        rows += [f"{t},{c}" for t, c in stats.mean_counts.items()]
        Path(args.csv).write_text("\n".join(rows) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_mem(args: argparse.Namespace) -> int:
    corpus = ingest_corpus(args.input)
    n_bytes = memory_footprint(corpus)
    info = {
        "path": args.input,
        "dtype": corpus.manifest.dtype,
        "payload_bytes": n_bytes,
        "mb_decimal": megabytes_decimal(n_bytes),
        "mib_binary": mebibytes(n_bytes),
    }
    human = (
        f"{n_bytes} bytes ({info['mb_decimal']:.4f} MB decimal, "
        f"{info['mib_binary']:.4f} MiB binary)"
    )
    if args.baseline:
        ratio = relative_memory(corpus, ingest_corpus(args.baseline))
        info["relative_to_baseline"] = ratio
        human += f"\nrelative to {args.baseline}: {ratio:.6f}"
    _emit(args, info, human)
    return EXIT_OK


def cmd_gen_synthetic(args: argparse.Namespace) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = generate(
        n_pages=args.pages,
        n_patches=args.patches,
        d=args.dim,
        n_groups=args.groups,
        noise=args.noise,
        n_queries=args.queries,
        aligned_tokens=args.aligned_tokens,
        random_tokens=args.random_tokens,
        query_noise=args.query_noise,
        synth_queries_per_page=args.synth_queries,
        synth_tokens_per_query=args.synth_tokens,
        seed=args.seed,
        corpus_id=args.corpus_id,
    )
    write_corpus(data.corpus, out / "corpus.mvec", dtype=args.dtype)
    write_queries(data.queries, out / "queries.mvec")
    write_qrels(data.qrels, out / "qrels.tsv")
    write_synth_queries(
        {pid: aux.synth_queries for pid, aux in data.aux.items()}, out / "synth_queries.mvec"
    )
    write_attention(
        {pid: aux.attention for pid, aux in data.aux.items()}, out / "attention.mvec"
    )
    info = {
        "out_dir": str(out),
        "pages": args.pages,
        "patches": args.patches,
        "d": args.dim,
        "groups": args.groups,
        "queries": args.queries,
        "seed": args.seed,
    }
    _emit(
        args,
        info,
        f"{out}: wrote corpus.mvec ({args.pages} pages x {args.patches} patches, d={args.dim}), "
        f"queries.mvec ({args.queries}), qrels.tsv, synth_queries.mvec, attention.mvec",
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common(sub: argparse.ArgumentParser, threads: bool = True) -> None:
    sub.add_argument("--config", help="flat key=value defaults file; flags override")
    sub.add_argument("--json", action="store_true", help="machine-readable summary on stdout")
    if threads:
        sub.add_argument(
            "--threads", type=int, default=default_threads(), help="worker threads (MVEC_THREADS)"
        )


def build_parser() -> tuple[argparse.ArgumentParser, dict[tuple[str, ...], argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="mvec", description="Multi-vector retrieval with compressed page embeddings"
    )
    parser.add_argument("--version", action="version", version=f"mvec {__version__}")
    subs = parser.add_subparsers(dest="command")
    registry: dict[tuple[str, ...], argparse.ArgumentParser] = {}

    p = subs.add_parser("ingest", help="load a corpus and report its shape")
    p.add_argument("--input", required=True)
    _add_common(p, threads=False)
    p.set_defaults(func=cmd_ingest)
    registry[("ingest",)] = p

    p = subs.add_parser("validate", help="check a file against all invariants")
    p.add_argument("--input", required=True)
    p.add_argument("--kind", choices=("corpus", "queries", "attention", "synth"), default="corpus")
    _add_common(p, threads=False)
    p.set_defaults(func=cmd_validate)
    registry[("validate",)] = p

    p = subs.add_parser("prune", help="drop patch embeddings per page")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--strategy", choices=PRUNE_STRATEGIES, required=True)
    p.add_argument("--ratio", type=float, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--aux", help="synth-queries mvec (score) or attention mvec (attention)")
    _add_common(p)
    p.set_defaults(func=cmd_prune)
    registry[("prune",)] = p

    p = subs.add_parser("merge", help="merge patch embeddings per page")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--approach", choices=MERGE_APPROACHES, required=True)
    p.add_argument("--factor", type=float, required=True)
    p.add_argument("--no-renormalize", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_merge)
    registry[("merge",)] = p

    p = subs.add_parser("index", help="materialize the manifest sidecar for a corpus")
    p.add_argument("--input", required=True)
    p.add_argument("--rewrite", action="store_true", help="also rewrite the mvec payload")
    _add_common(p, threads=False)
    p.set_defaults(func=cmd_index)
    registry[("index",)] = p

    p = subs.add_parser("search", help="exact top-k retrieval")
    p.add_argument("--corpus", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--output", help="TSV destination (default stdout)")
    _add_common(p)
    p.set_defaults(func=cmd_search)
    registry[("search",)] = p

    p = subs.add_parser("eval", help="NDCG@k evaluation")
    p.add_argument("--corpus", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--baseline", help="baseline eval report JSON for relative performance")
    p.add_argument("--baseline-corpus", help="uncompressed corpus for the memory ratio")
    p.add_argument("--output", help="report destination (default stdout)")
    _add_common(p)
    p.set_defaults(func=cmd_eval)
    registry[("eval",)] = p

    p = subs.add_parser("sweep", help="compression sweep: quality vs memory per point")
    p.add_argument("--corpus", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument(
        "--strategy", choices=PRUNE_STRATEGIES + MERGE_APPROACHES, required=True
    )
    p.add_argument(
        "--point",
        type=float,
        action="append",
        default=[],
        help="ratio (prune) or factor (merge); repeatable",
    )
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--aux")
    p.add_argument("--no-renormalize", action="store_true")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--output", help="report destination (default stdout)")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)
    registry[("sweep",)] = p

    p = subs.add_parser("analyze", help="pruning-feasibility diagnostics")
    asubs = p.add_subparsers(dest="analysis")

    pa = asubs.add_parser("overlap", help="activated-patch overlap between query pairs")
    pa.add_argument("--corpus", required=True)
    pa.add_argument("--synth-queries", required=True)
    pa.add_argument("--ratios", required=True, help="comma-separated prune ratios")
    pa.add_argument("--output", help="JSON destination (default stdout)")
    pa.add_argument("--csv", help="optional CSV for plotting")
    _add_common(pa, threads=False)
    pa.set_defaults(func=cmd_analyze_overlap)
    registry[("analyze", "overlap")] = pa

    pa = asubs.add_parser("redundancy", help="normalized response-potential statistics")
    pa.add_argument("--corpus", required=True)
    pa.add_argument("--synth-queries", required=True)
    pa.add_argument("--thresholds", default="0.9,0.95", help="comma-separated thresholds")
    pa.add_argument("--sample", type=int, default=1000, help="max (page, query) pairs")
    pa.add_argument("--bins", type=int, default=20)
    pa.add_argument("--seed", type=int, default=0)
    pa.add_argument("--output", help="JSON destination (default stdout)")
    pa.add_argument("--csv", help="optional CSV of threshold counts")
    _add_common(pa, threads=False)
    pa.set_defaults(func=cmd_analyze_redundancy)
    registry[("analyze", "redundancy")] = pa

    p = subs.add_parser("mem", help="payload byte accounting")
    p.add_argument("--input", required=True)
    p.add_argument("--baseline", help="baseline corpus for a relative ratio")
    _add_common(p, threads=False)
    p.set_defaults(func=cmd_mem)
    registry[("mem",)] = p

    p = subs.add_parser("gen-synthetic", help="emit a seeded synthetic dataset")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--pages", type=int, default=50)
    p.add_argument("--patches", type=int, default=96)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--groups", type=int, default=12)
    p.add_argument("--noise", type=float, default=0.02)
    p.add_argument("--queries", type=int, default=20)
    p.add_argument("--aligned-tokens", type=int, default=2)
    p.add_argument("--random-tokens", type=int, default=4)
    p.add_argument("--query-noise", type=float, default=0.05)
    p.add_argument("--synth-queries", type=int, default=5)
    p.add_argument("--synth-tokens", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dtype", choices=("f32", "f16"), default="f32")
    p.add_argument("--corpus-id", default="synthetic")
    _add_common(p, threads=False)
    p.set_defaults(func=cmd_gen_synthetic)
    registry[("gen-synthetic",)] = p

    return parser, registry


# ---------------------------------------------------------------------------
# config file
# ---------------------------------------------------------------------------


def _parse_config_file(path: str) -> dict[str, str]:
    cfg: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read config {path}: {exc}") from exc
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{line_no}: expected key=value")
        key, value = line.split("=", 1)
        cfg[key.strip()] = value.strip()
    return cfg


def _find_config_path(argv: Sequence[str]) -> str | None:
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _apply_config(
    argv: Sequence[str], registry: dict[tuple[str, ...], argparse.ArgumentParser]
) -> None:
    path = _find_config_path(argv)
    if path is None:
        return
    words = [tok for tok in argv if not tok.startswith("-")]
    target: argparse.ArgumentParser | None = None
    for depth in (2, 1):
        key = tuple(words[:depth])
        if key in registry:
            target = registry[key]
            break
    if target is None:
        raise ValidationError("--config requires a subcommand")
    cfg = _parse_config_file(path)
    actions = {action.dest: action for action in target._actions}
    defaults: dict[str, object] = {}
    for key, raw in cfg.items():
        dest = key.replace("-", "_")
        action = actions.get(dest)
        if action is None:
            raise ValidationError(f"config key {key!r} is not a flag of this subcommand")
        if isinstance(action, argparse._StoreTrueAction):
            defaults[dest] = raw.lower() in ("1", "true", "yes", "on")
        elif isinstance(action, argparse._AppendAction):
            convert = action.type or str
            defaults[dest] = [convert(tok) for tok in raw.split(",") if tok.strip()]
        elif action.type is not None:
            defaults[dest] = action.type(raw)
        else:
            defaults[dest] = raw
    target.set_defaults(**defaults)


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, registry = build_parser()
    try:
        _apply_config(argv, registry)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_VALIDATION
    except MvecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO if isinstance(exc, FormatError) else EXIT_VALIDATION
    func = getattr(args, "func", None)
    if func is None:
        parser.print_help(sys.stderr)
        return EXIT_VALIDATION
    try:
        return func(args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
