"""Embedding collections: in-memory types, the MVEC binary format, and memory accounting.

MVEC layout (little-endian):
  header:  magic "MVEC", version u32 (=1), dtype u8 (0=f32, 1=f16),
           reserved 3 bytes (must be zero), page_count u64, d u32.
  record:  id_len u16, id bytes (UTF-8), n_vectors u32, grid_rows u16,
           grid_cols u16 (0,0 = no grid), normalized u8,
           payload n_vectors*d elements row-major in the header dtype.

f16 is a storage dtype only; everything is converted to float32 on load and
all in-memory matrices are float32. Loaded collections are immutable (the
arrays are marked read-only), so concurrent readers are safe.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import FormatError, ValidationError

MAGIC = b"MVEC"
VERSION = 1

DTYPE_CODES = {"f32": 0, "f16": 1}
DTYPE_NAMES = {code: name for name, code in DTYPE_CODES.items()}
DTYPE_BYTES = {"f32": 4, "f16": 2}
_NUMPY_DTYPES = {"f32": np.dtype("<f4"), "f16": np.dtype("<f2")}

_HEADER = struct.Struct("<4sIB3sQI")
_REC_ID_LEN = struct.Struct("<H")
_REC_META = struct.Struct("<IHHB")

# tolerance on row norms when a collection claims to be unit-normalized
NORM_TOL = 1e-4


def _as_matrix(values, what: str) -> np.ndarray:
    """Coerce to an immutable float32 matrix with at least one row/column."""
    try:
        arr = np.array(values, dtype=np.float32, order="C", copy=True)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{what}: not a numeric matrix ({exc})") from exc
    if arr.ndim != 2:
        raise ValidationError(f"{what}: expected a 2-D matrix, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(f"{what}: needs at least one row and one column")
    if not np.isfinite(arr).all():
        raise ValidationError(f"{what}: contains non-finite values")
    arr.setflags(write=False)
    return arr


def _check_normalized(vectors: np.ndarray, what: str) -> None:
    norms = np.linalg.norm(vectors.astype(np.float64), axis=1)
    if np.any(np.abs(norms - 1.0) > NORM_TOL):
        worst = float(np.abs(norms - 1.0).max())
        raise ValidationError(
            f"{what}: flagged normalized but a row norm deviates from 1 by {worst:.2e}"
        )


@dataclass(frozen=True)
class Grid:
    """2-D patch layout of a page: rows x cols patches, row-major."""

    rows: int
    cols: int

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValidationError(f"grid dimensions must be positive, got {self.rows}x{self.cols}")

    @property
    def size(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True)
class PageEmbeddings:
    """One page's patch-level embedding matrix (n_vectors x dim) plus geometry."""

    page_id: str
    vectors: np.ndarray
    grid: Grid | None = None
    normalized: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "vectors", _as_matrix(self.vectors, f"page {self.page_id!r}"))
        if self.grid is not None and self.grid.size != self.n_vectors:
            raise ValidationError(
                f"page {self.page_id!r}: grid {self.grid.rows}x{self.grid.cols} "
                f"does not cover {self.n_vectors} vectors"
            )
        if self.normalized:
            _check_normalized(self.vectors, f"page {self.page_id!r}")

    @property
    def n_vectors(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class QueryEmbeddings:
    """One query's token-level embedding matrix (n_tokens x dim)."""

    query_id: str
    vectors: np.ndarray
    normalized: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "vectors", _as_matrix(self.vectors, f"query {self.query_id!r}"))
        if self.normalized:
            _check_normalized(self.vectors, f"query {self.query_id!r}")

    @property
    def n_tokens(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class PageAux:
    """Per-page side inputs: received-attention mass and sampled query sets."""

    page_id: str
    attention: np.ndarray | None = None
    synth_queries: tuple[QueryEmbeddings, ...] | None = None

    def __post_init__(self) -> None:
        if self.attention is not None:
            att = np.array(self.attention, dtype=np.float32, copy=True).reshape(-1)
            if not np.isfinite(att).all():
                raise ValidationError(f"aux {self.page_id!r}: attention has non-finite values")
            if np.any(att < 0):
                raise ValidationError(f"aux {self.page_id!r}: attention must be non-negative")
            att.setflags(write=False)
            object.__setattr__(self, "attention", att)
        if self.synth_queries is not None:
            object.__setattr__(self, "synth_queries", tuple(self.synth_queries))


@dataclass(frozen=True)
class Provenance:
    """How a compressed corpus was produced from its parent."""

    strategy: str
    parameter: float
    seed: int | None = None

    def to_dict(self) -> dict:
        return {"strategy": self.strategy, "parameter": self.parameter, "seed": self.seed}

    @classmethod
    def from_dict(cls, data: Mapping) -> "Provenance":
        return cls(
            strategy=str(data["strategy"]),
            parameter=float(data["parameter"]),
            seed=None if data.get("seed") is None else int(data["seed"]),
        )


@dataclass(frozen=True)
class CorpusManifest:
    """Corpus-level metadata; persisted as a JSON sidecar next to the MVEC file."""

    corpus_id: str
    d: int
    page_count: int
    dtype: str = "f32"
    provenance: Provenance | None = None

    def __post_init__(self) -> None:
        if self.dtype not in DTYPE_CODES:
            raise ValidationError(f"unknown dtype {self.dtype!r}; expected one of {sorted(DTYPE_CODES)}")

    def to_dict(self) -> dict:
        return {
            "corpus_id": self.corpus_id,
            "d": self.d,
            "page_count": self.page_count,
            "dtype": self.dtype,
            "provenance": None if self.provenance is None else self.provenance.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "CorpusManifest":
        prov = data.get("provenance")
        return cls(
            corpus_id=str(data["corpus_id"]),
            d=int(data["d"]),
            page_count=int(data["page_count"]),
            dtype=str(data["dtype"]),
            provenance=None if prov is None else Provenance.from_dict(prov),
        )


@dataclass(frozen=True)
class CompressedIndex:
    """An ordered, immutable corpus of page embedding sets plus its manifest."""

    pages: tuple[PageEmbeddings, ...]
    manifest: CorpusManifest

    def __post_init__(self) -> None:
        object.__setattr__(self, "pages", tuple(self.pages))
        seen: set[str] = set()
        for page in self.pages:
            if page.page_id in seen:
                raise ValidationError(f"duplicate page id {page.page_id!r}")
            seen.add(page.page_id)
            if page.dim != self.manifest.d:
                raise ValidationError(
                    f"page {page.page_id!r} has dim {page.dim}, corpus d is {self.manifest.d}"
                )
        if self.manifest.page_count != len(self.pages):
            raise ValidationError(
                f"manifest page_count {self.manifest.page_count} != {len(self.pages)} pages"
            )
        object.__setattr__(self, "_by_id", {p.page_id: p for p in self.pages})

    @classmethod
    def build(
        cls,
        pages: Sequence[PageEmbeddings],
        corpus_id: str = "corpus",
        dtype: str = "f32",
        provenance: Provenance | None = None,
    ) -> "CompressedIndex":
        pages = tuple(pages)
        dims = {p.dim for p in pages}
        if len(dims) > 1:
            raise ValidationError(f"pages disagree on dim: {sorted(dims)}")
        d = dims.pop() if dims else 0
        manifest = CorpusManifest(
            corpus_id=corpus_id, d=d, page_count=len(pages), dtype=dtype, provenance=provenance
        )
        return cls(pages=pages, manifest=manifest)

    def derive(
        self,
        pages: Sequence[PageEmbeddings],
        provenance: Provenance | None,
        corpus_id: str | None = None,
    ) -> "CompressedIndex":
        """A new index sharing this corpus's identity with replaced pages/provenance."""
        return CompressedIndex.build(
            pages,
            corpus_id=corpus_id if corpus_id is not None else self.manifest.corpus_id,
            dtype=self.manifest.dtype,
            provenance=provenance,
        )

    @property
    def d(self) -> int:
        return self.manifest.d

    def __len__(self) -> int:
        return len(self.pages)

    def __iter__(self) -> Iterator[PageEmbeddings]:
        return iter(self.pages)

    def get(self, page_id: str) -> PageEmbeddings:
        try:
            return self._by_id[page_id]
        except KeyError:
            raise KeyError(f"no page {page_id!r} in corpus {self.manifest.corpus_id!r}") from None

    def page_ids(self) -> tuple[str, ...]:
        return tuple(p.page_id for p in self.pages)


@dataclass(frozen=True)
class Qrels:
    """Graded relevance judgments, keyed by query then page."""

    by_query: Mapping[str, Mapping[str, int]]

    def __post_init__(self) -> None:
        frozen = {q: dict(pages) for q, pages in self.by_query.items()}
        for query_id, grades in frozen.items():
            if not grades:
                raise ValidationError(f"query {query_id!r} has no judgments")
            for page_id, rel in grades.items():
                if not isinstance(rel, int) or rel < 0:
                    raise ValidationError(
                        f"relevance for ({query_id!r}, {page_id!r}) must be a non-negative int"
                    )
            if max(grades.values()) <= 0:
                raise ValidationError(f"query {query_id!r} has no positive judgment")
        object.__setattr__(self, "by_query", frozen)

    @classmethod
    def from_entries(cls, entries: Iterable[tuple[str, str, int]]) -> "Qrels":
        by_query: dict[str, dict[str, int]] = {}
        for query_id, page_id, rel in entries:
            grades = by_query.setdefault(query_id, {})
            if page_id in grades:
                raise ValidationError(f"duplicate judgment for ({query_id!r}, {page_id!r})")
            grades[page_id] = rel
        return cls(by_query=by_query)

    def queries(self) -> tuple[str, ...]:
        return tuple(self.by_query)

    def grades(self, query_id: str) -> Mapping[str, int]:
        if query_id not in self.by_query:
            raise ValidationError(f"query {query_id!r} not present in qrels")
        return self.by_query[query_id]

    def __contains__(self, query_id: str) -> bool:
        return query_id in self.by_query


# ---------------------------------------------------------------------------
# low-level MVEC records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Record:
    rec_id: str
    vectors: np.ndarray  # float32
    grid: Grid | None
    normalized: bool


def _write_mvec(path: Path, records: Sequence[_Record], d: int, dtype: str) -> None:
    if dtype not in DTYPE_CODES:
        raise ValidationError(f"unknown dtype {dtype!r}")
    np_dtype = _NUMPY_DTYPES[dtype]
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, DTYPE_CODES[dtype], b"\x00" * 3, len(records), d))
        for rec in records:
            id_bytes = rec.rec_id.encode("utf-8")
            if len(id_bytes) > 0xFFFF:
                raise ValidationError(f"record id too long ({len(id_bytes)} bytes)")
            if rec.vectors.shape[1] != d:
                raise ValidationError(
                    f"record {rec.rec_id!r} has dim {rec.vectors.shape[1]}, file d is {d}"
                )
            with np.errstate(over="ignore"):
                payload = np.ascontiguousarray(rec.vectors, dtype=np_dtype)
            if dtype == "f16" and not np.isfinite(payload).all():
                raise ValidationError(
                    f"record {rec.rec_id!r}: values exceed the f16 range; store as f32"
                )
            # f16 quantization perturbs norms beyond the normalized-flag tolerance
            normalized = rec.normalized and dtype != "f16"
            rows, cols = (rec.grid.rows, rec.grid.cols) if rec.grid is not None else (0, 0)
            fh.write(_REC_ID_LEN.pack(len(id_bytes)))
            fh.write(id_bytes)
            fh.write(_REC_META.pack(rec.vectors.shape[0], rows, cols, int(normalized)))
            fh.write(payload.tobytes())


def _read_mvec(path: Path) -> tuple[str, int, list[_Record]]:
    try:
        buf = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    if len(buf) < _HEADER.size:
        raise FormatError(f"{path}: file shorter than the {_HEADER.size}-byte header")
    magic, version, dtype_code, reserved, page_count, d = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if dtype_code not in DTYPE_NAMES:
        raise FormatError(f"{path}: unknown dtype code {dtype_code}")
    if reserved != b"\x00" * 3:
        raise FormatError(f"{path}: reserved header bytes are not zero")
    dtype = DTYPE_NAMES[dtype_code]
    elem_size = DTYPE_BYTES[dtype]

    records: list[_Record] = []
    offset = _HEADER.size
    for rec_index in range(page_count):
        where = f"{path}: record {rec_index}"
        if offset + _REC_ID_LEN.size > len(buf):
            raise FormatError(f"{where}: truncated before id length")
        (id_len,) = _REC_ID_LEN.unpack_from(buf, offset)
        offset += _REC_ID_LEN.size
        if offset + id_len > len(buf):
            raise FormatError(f"{where}: truncated inside id")
        try:
            rec_id = buf[offset : offset + id_len].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"{where}: id is not valid UTF-8") from exc
        offset += id_len
        if offset + _REC_META.size > len(buf):
            raise FormatError(f"{where}: truncated inside record metadata")
        n_vectors, grid_rows, grid_cols, normalized = _REC_META.unpack_from(buf, offset)
        offset += _REC_META.size
        if n_vectors < 1:
            raise ValidationError(f"{where} ({rec_id!r}): n_vectors must be >= 1")
        if normalized not in (0, 1):
            raise FormatError(f"{where}: normalized flag is {normalized}, expected 0 or 1")
        if (grid_rows == 0) != (grid_cols == 0):
            raise ValidationError(f"{where} ({rec_id!r}): half-specified grid")
        grid = Grid(grid_rows, grid_cols) if grid_rows else None
        need = n_vectors * d * elem_size
        if offset + need > len(buf):
            raise FormatError(
                f"{where} ({rec_id!r}): payload of {need} bytes exceeds remaining file"
            )
        flat = np.frombuffer(buf, dtype=_NUMPY_DTYPES[dtype], count=n_vectors * d, offset=offset)
        offset += need
        vectors = flat.astype(np.float32).reshape(n_vectors, d)
        records.append(_Record(rec_id=rec_id, vectors=vectors, grid=grid, normalized=bool(normalized)))
    if offset != len(buf):
        raise FormatError(f"{path}: {len(buf) - offset} trailing bytes after last record")
    return dtype, d, records


def manifest_path(path: str | Path) -> Path:
    """Location of the JSON manifest sidecar for an MVEC file."""
    return Path(str(path) + ".manifest.json")


# ---------------------------------------------------------------------------
# corpus persistence
# ---------------------------------------------------------------------------


def write_corpus(
    corpus: CompressedIndex | Sequence[PageEmbeddings],
    path: str | Path,
    dtype: str | None = None,
    manifest: CorpusManifest | None = None,
) -> CorpusManifest:
    """Write pages to an MVEC file plus a `.manifest.json` sidecar.

    Returns the manifest as written (page_count/d/dtype always reflect the data).
    """
    path = Path(path)
    if isinstance(corpus, CompressedIndex):
        pages: Sequence[PageEmbeddings] = corpus.pages
        if manifest is None:
            manifest = corpus.manifest
    else:
        pages = tuple(corpus)
    dims = {p.dim for p in pages}
    if len(dims) > 1:
        raise ValidationError(f"pages disagree on dim: {sorted(dims)}")
    if dtype is None:
        dtype = manifest.dtype if manifest is not None else "f32"
    if dtype not in DTYPE_CODES:
        raise ValidationError(f"unknown dtype {dtype!r}")
    d = dims.pop() if dims else (manifest.d if manifest is not None else 0)

    if manifest is None:
        manifest = CorpusManifest(corpus_id=path.stem, d=d, page_count=len(pages), dtype=dtype)
    else:
        manifest = replace(manifest, d=d, page_count=len(pages), dtype=dtype)

    records = [_Record(p.page_id, p.vectors, p.grid, p.normalized) for p in pages]
    try:
        _write_mvec(path, records, d, dtype)
    except OSError as exc:
        raise FormatError(f"cannot write {path}: {exc}") from exc
    manifest_path(path).write_text(
        json.dumps(manifest.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return manifest


def ingest_corpus(path: str | Path) -> CompressedIndex:
    """Load and validate a page corpus written by :func:`write_corpus`."""
    path = Path(path)
    dtype, d, records = _read_mvec(path)
    pages = tuple(
        PageEmbeddings(page_id=r.rec_id, vectors=r.vectors, grid=r.grid, normalized=r.normalized)
        for r in records
    )

    sidecar = manifest_path(path)
    if sidecar.exists():
        try:
            manifest = CorpusManifest.from_dict(json.loads(sidecar.read_text(encoding="utf-8")))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{sidecar}: malformed manifest ({exc})") from exc
        if (manifest.d, manifest.page_count, manifest.dtype) != (d, len(pages), dtype):
            raise ValidationError(
                f"{sidecar}: manifest ({manifest.d}, {manifest.page_count}, {manifest.dtype}) "
                f"disagrees with file ({d}, {len(pages)}, {dtype})"
            )
    else:
        manifest = CorpusManifest(corpus_id=path.stem, d=d, page_count=len(pages), dtype=dtype)
    return CompressedIndex(pages=pages, manifest=manifest)


# ---------------------------------------------------------------------------
# query / aux persistence
# ---------------------------------------------------------------------------


def write_queries(
    queries: Sequence[QueryEmbeddings], path: str | Path, dtype: str = "f32"
) -> None:
    dims = {q.dim for q in queries}
    if len(dims) > 1:
        raise ValidationError(f"queries disagree on dim: {sorted(dims)}")
    d = dims.pop() if dims else 0
    records = [_Record(q.query_id, q.vectors, None, q.normalized) for q in queries]
    _write_mvec(Path(path), records, d, dtype)


def load_queries(path: str | Path) -> tuple[QueryEmbeddings, ...]:
    _, _, records = _read_mvec(Path(path))
    return tuple(
        QueryEmbeddings(query_id=r.rec_id, vectors=r.vectors, normalized=r.normalized)
        for r in records
    )


def write_attention(attention: Mapping[str, np.ndarray], path: str | Path) -> None:
    """Attention aux file: one record per page, n_vectors=1, d = the page's patch count."""
    lengths = {int(np.asarray(v).size) for v in attention.values()}
    if len(lengths) > 1:
        raise ValidationError(
            f"attention vectors disagree on length {sorted(lengths)}; "
            "one aux file covers pages of a single patch count"
        )
    d = lengths.pop() if lengths else 0
    records = [
        _Record(page_id, np.asarray(vec, dtype=np.float32).reshape(1, -1), None, False)
        for page_id, vec in attention.items()
    ]
    _write_mvec(Path(path), records, d, "f32")


def load_attention(path: str | Path) -> dict[str, np.ndarray]:
    _, _, records = _read_mvec(Path(path))
    out: dict[str, np.ndarray] = {}
    for rec in records:
        if rec.rec_id in out:
            raise ValidationError(f"{path}: duplicate attention record {rec.rec_id!r}")
        if rec.vectors.shape[0] != 1:
            raise ValidationError(
                f"{path}: attention record {rec.rec_id!r} has {rec.vectors.shape[0]} rows, expected 1"
            )
        vec = rec.vectors.reshape(-1)
        if np.any(vec < 0):
            raise ValidationError(f"{path}: attention for {rec.rec_id!r} has negative values")
        vec.setflags(write=False)
        out[rec.rec_id] = vec
    return out


def write_synth_queries(
    synth: Mapping[str, Sequence[QueryEmbeddings]], path: str | Path, dtype: str = "f32"
) -> None:
    """Synthesized-query file: record ids are `page_id#k` for the k-th query of a page."""
    records: list[_Record] = []
    dims: set[int] = set()
    for page_id, queries in synth.items():
        for k, query in enumerate(queries):
            dims.add(query.dim)
            records.append(_Record(f"{page_id}#{k}", query.vectors, None, query.normalized))
    if len(dims) > 1:
        raise ValidationError(f"synthesized queries disagree on dim: {sorted(dims)}")
    d = dims.pop() if dims else 0
    _write_mvec(Path(path), records, d, dtype)


def load_synth_queries(path: str | Path) -> dict[str, tuple[QueryEmbeddings, ...]]:
    _, _, records = _read_mvec(Path(path))
    grouped: dict[str, list[tuple[int, QueryEmbeddings]]] = {}
    for rec in records:
        page_id, sep, k_str = rec.rec_id.rpartition("#")
        if not sep or not k_str.isdigit():
            raise ValidationError(
                f"{path}: record id {rec.rec_id!r} is not of the form 'page_id#k'"
            )
        query = QueryEmbeddings(query_id=rec.rec_id, vectors=rec.vectors, normalized=rec.normalized)
        grouped.setdefault(page_id, []).append((int(k_str), query))
    return {
        page_id: tuple(q for _, q in sorted(items, key=lambda item: item[0]))
        for page_id, items in grouped.items()
    }


def load_aux(
    corpus: CompressedIndex,
    attention_path: str | Path | None = None,
    synth_path: str | Path | None = None,
) -> dict[str, PageAux]:
    """Assemble per-page aux data, validating attention lengths against the corpus."""
    attention = load_attention(attention_path) if attention_path is not None else {}
    synth = load_synth_queries(synth_path) if synth_path is not None else {}
    aux: dict[str, PageAux] = {}
    for page in corpus:
        att = attention.get(page.page_id)
        if att is not None and att.size != page.n_vectors:
            raise ValidationError(
                f"attention for page {page.page_id!r} has length {att.size}, "
                f"page has {page.n_vectors} vectors"
            )
        sq = synth.get(page.page_id)
        if att is not None or sq is not None:
            aux[page.page_id] = PageAux(page_id=page.page_id, attention=att, synth_queries=sq)
    return aux


# ---------------------------------------------------------------------------
# qrels persistence
# ---------------------------------------------------------------------------


def load_qrels(path: str | Path) -> Qrels:
    """Read TSV judgments: `query_id<TAB>page_id<TAB>relevance` per line."""
    entries: list[tuple[str, str, int]] = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise FormatError(f"{path}:{line_no}: expected 3 tab-separated fields")
        query_id, page_id, rel_str = parts
        try:
            rel = int(rel_str)
        except ValueError as exc:
            raise FormatError(f"{path}:{line_no}: relevance {rel_str!r} is not an integer") from exc
        entries.append((query_id, page_id, rel))
    return Qrels.from_entries(entries)


def write_qrels(qrels: Qrels, path: str | Path) -> None:
    lines = []
    for query_id, grades in qrels.by_query.items():
        for page_id, rel in grades.items():
            lines.append(f"{query_id}\t{page_id}\t{rel}")
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


# ---------------------------------------------------------------------------
# memory accounting
# ---------------------------------------------------------------------------


def memory_footprint(
    pages: CompressedIndex | Iterable[PageEmbeddings], dtype: str | None = None
) -> int:
    """Stored vector payload in bytes: sum over pages of n_vectors * d * element size.

    Counts vectors only, never headers or ids.
    """
    if isinstance(pages, CompressedIndex):
        if dtype is None:
            dtype = pages.manifest.dtype
        pages = pages.pages
    if dtype is None:
        dtype = "f32"
    if dtype not in DTYPE_BYTES:
        raise ValidationError(f"unknown dtype {dtype!r}")
    pages = tuple(pages)
    dims = {p.dim for p in pages}
    if len(dims) > 1:
        raise ValidationError(f"pages disagree on dim: {sorted(dims)}")
    elem = DTYPE_BYTES[dtype]
    return sum(p.n_vectors * p.dim for p in pages) * elem


def relative_memory(
    candidate: CompressedIndex | Sequence[PageEmbeddings],
    baseline: CompressedIndex | Sequence[PageEmbeddings],
    dtype: str | None = None,
) -> float:
    """Ratio of stored vector payloads, candidate / baseline."""
    cand_dtype = candidate.manifest.dtype if isinstance(candidate, CompressedIndex) else dtype
    base_dtype = baseline.manifest.dtype if isinstance(baseline, CompressedIndex) else dtype
    if cand_dtype is not None and base_dtype is not None and cand_dtype != base_dtype:
        raise ValidationError(f"dtype mismatch: candidate {cand_dtype}, baseline {base_dtype}")
    if len(candidate) == 0 or len(baseline) == 0:
        raise ValidationError("relative_memory requires non-empty collections")
    base_bytes = memory_footprint(baseline, base_dtype)
    if base_bytes == 0:
        raise ValidationError("baseline footprint is zero")
    return memory_footprint(candidate, cand_dtype) / base_bytes


def megabytes_decimal(n_bytes: int) -> float:
    """Bytes expressed in decimal MB (10^6 bytes)."""
    return n_bytes / 1_000_000


def mebibytes(n_bytes: int) -> float:
    """Bytes expressed in binary MiB (2^20 bytes)."""
    return n_bytes / (1 << 20)
