"""Graph ingest, CSR construction, scale-up, and synthetic generators.

Edge lists are directed (u, v) pairs over ids [0, n).  Pipelines that
need an undirected graph symmetrize first; build_csr then gives the
row-blocked view the kernels consume.  Everything here is
single-threaded and returns immutable-by-convention numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .core import InvalidParams, ParseError

# per-task synthetic execution costs; strictly positive floats
CostVector = np.ndarray


@dataclass(frozen=True)
class EdgeList:
    """Directed edge pairs, shape (k, 2), ids in [0, n)."""

    n: int
    edges: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        object.__setattr__(self, "edges", e)
        if self.n < 0:
            raise InvalidParams(f"node count must be >= 0, got {self.n}")
        if e.size and (e.min() < 0 or e.max() >= self.n):
            raise InvalidParams("edge endpoint outside [0, n)")

    @property
    def edge_count(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class CsrMatrix:
    """Compressed sparse rows: adjacency offsets + sorted neighbor ids."""

    n: int
    row_ptr: np.ndarray
    col_idx: np.ndarray

    @property
    def nnz(self) -> int:
        return int(self.row_ptr[-1])

    def degrees(self) -> np.ndarray:
        return np.diff(self.row_ptr)

    def edges(self) -> EdgeList:
        """Enumerate stored (row, col) pairs; inverse of build_csr."""
        rows = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees())
        return EdgeList(self.n, np.column_stack([rows, self.col_idx]))

    def validate(self) -> None:
        rp, ci = self.row_ptr, self.col_idx
        if len(rp) != self.n + 1 or rp[0] != 0 or rp[-1] != len(ci):
            raise InvalidParams("row_ptr endpoints inconsistent")
        if np.any(np.diff(rp) < 0):
            raise InvalidParams("row_ptr must be non-decreasing")
        if ci.size and (ci.min() < 0 or ci.max() >= self.n):
            raise InvalidParams("col_idx outside [0, n)")
        for i in range(self.n):
            row = ci[rp[i] : rp[i + 1]]
            if row.size > 1 and np.any(np.diff(row) <= 0):
                raise InvalidParams(f"row {i} not strictly sorted / has duplicates")


def parse_edge_list(lines: Iterable[str]) -> EdgeList:
    """Read a SNAP-style text edge list.

    Comment lines start with '#'; a comment of the form '# Nodes: K ...'
    pins the node count (useful when trailing node ids are isolated).
    Data lines hold exactly two whitespace-separated non-negative
    integers.  n = 1 + max id, raised to the header count if larger.
    """
    rows: list[tuple[int, int]] = []
    header_n: Optional[int] = None
    for line_no, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            tokens = stripped[1:].split()
            for i, tok in enumerate(tokens):
                if tok.rstrip(":").lower() == "nodes" and i + 1 < len(tokens):
                    try:
                        header_n = int(tokens[i + 1])
                    except ValueError:
                        pass
            continue
        parts = stripped.split()
        if len(parts) != 2:
            raise ParseError(f"expected 2 fields, got {len(parts)}", line_no)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer endpoint in {stripped!r}", line_no) from None
        if u < 0 or v < 0:
            raise ParseError(f"negative node id in {stripped!r}", line_no)
        rows.append((u, v))
    edges = np.array(rows, dtype=np.int64).reshape(-1, 2)
    n = int(edges.max()) + 1 if edges.size else 0
    if header_n is not None:
        n = max(n, header_n)
    return EdgeList(n, edges)


def compact_ids(e: EdgeList) -> tuple[EdgeList, np.ndarray]:
    """Densely renumber ids that appear in edges.

    For files whose id space has gaps.  Returns the remapped list plus
    a mapping array where mapping[new_id] = original id.  Nodes with no
    edges vanish (they carry no information for edge-driven kernels).
    """
    if e.edge_count == 0:
        return EdgeList(0, np.empty((0, 2), dtype=np.int64)), np.empty(0, dtype=np.int64)
    mapping = np.unique(e.edges)
    remapped = np.searchsorted(mapping, e.edges)
    return EdgeList(len(mapping), remapped), mapping


def symmetrize_dedup(e: EdgeList) -> EdgeList:
    """Materialize both directions, drop self-loops and duplicates.

    Idempotent; output directed edge count is always even.
    """
    if e.edge_count == 0:
        return EdgeList(e.n, np.empty((0, 2), dtype=np.int64))
    both = np.concatenate([e.edges, e.edges[:, ::-1]])
    both = both[both[:, 0] != both[:, 1]]
    return EdgeList(e.n, np.unique(both, axis=0))


def scale_up(e: EdgeList, k: int) -> EdgeList:
    """Block-diagonal replication: k disjoint copies, copy j offset by j*n."""
    if k < 1:
        raise InvalidParams(f"scale factor must be >= 1, got {k}")
    if e.n * k > np.iinfo(np.int64).max:
        raise OverflowError(f"{e.n} nodes * {k} copies exceeds index width")
    if k == 1:
        return e
    copies = [e.edges + j * e.n for j in range(k)]
    return EdgeList(e.n * k, np.concatenate(copies))


def build_csr(e: EdgeList) -> CsrMatrix:
    """Sorted, per-row-deduplicated CSR from a directed edge list."""
    if e.edge_count == 0:
        return CsrMatrix(
            e.n, np.zeros(e.n + 1, dtype=np.int64), np.empty(0, dtype=np.int64)
        )
    src, dst = e.edges[:, 0], e.edges[:, 1]
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    keep = np.ones(len(src), dtype=bool)
    keep[1:] = (src[1:] != src[:-1]) | (dst[1:] != dst[:-1])
    src, dst = src[keep], dst[keep]
    counts = np.bincount(src, minlength=e.n)
    row_ptr = np.zeros(e.n + 1, dtype=np.int64)
    np.cumsum(counts, out=row_ptr[1:])
    return CsrMatrix(e.n, row_ptr, dst.astype(np.int64))


_RMAT_DEFAULTS = {"a": 0.57, "b": 0.19, "c": 0.19, "d": 0.05, "edge_factor": 8}


def _gen_rmat(n: int, seed: int, params: dict) -> EdgeList:
    levels = int(n).bit_length() - 1
    if n < 2 or (1 << levels) != n:
        raise InvalidParams(f"rmat needs a power-of-two node count >= 2, got {n}")
    opts = dict(_RMAT_DEFAULTS)
    opts.update(params)
    probs = np.array([opts["a"], opts["b"], opts["c"], opts["d"]], dtype=np.float64)
    if np.any(probs <= 0) or abs(probs.sum() - 1.0) > 1e-9:
        raise InvalidParams("rmat quadrant probabilities must be positive and sum to 1")
    m = int(n * opts["edge_factor"])
    rng = np.random.default_rng(seed)
    # one quadrant choice per (recursion level, edge); quadrant bits give
    # one source bit and one target bit per level
    quad = rng.choice(4, size=(levels, m), p=probs)
    weights = (1 << np.arange(levels - 1, -1, -1, dtype=np.int64))[:, None]
    u = ((quad >> 1) * weights).sum(axis=0)
    v = ((quad & 1) * weights).sum(axis=0)
    return EdgeList(n, np.column_stack([u, v]))


def gen_graph(kind: str, n: Optional[int] = None, seed: int = 0, **params) -> EdgeList:
    """Synthetic edge lists: rmat | path | complete | components.

    Deterministic for a fixed seed.  "components" takes sizes=[...] and
    builds one path per requested component over consecutive ids, so
    the expected component structure is known by construction.
    """
    if kind == "path":
        if n is None or n < 1:
            raise InvalidParams("path graph needs n >= 1")
        ids = np.arange(n - 1, dtype=np.int64)
        return EdgeList(n, np.column_stack([ids, ids + 1]))
    if kind == "complete":
        if n is None or n < 1:
            raise InvalidParams("complete graph needs n >= 1")
        u, v = np.triu_indices(n, k=1)
        return EdgeList(n, np.column_stack([u, v]).astype(np.int64))
    if kind == "components":
        sizes = params.get("sizes")
        if not sizes or any(s < 1 for s in sizes):
            raise InvalidParams("components kind needs sizes=[s1, s2, ...], all >= 1")
        total = int(sum(sizes))
        edges: list[np.ndarray] = []
        start = 0
        for s in sizes:
            if s > 1:
                ids = np.arange(start, start + s - 1, dtype=np.int64)
                edges.append(np.column_stack([ids, ids + 1]))
            start += s
        flat = np.concatenate(edges) if edges else np.empty((0, 2), dtype=np.int64)
        return EdgeList(total, flat)
    if kind == "rmat":
        if n is None:
            raise InvalidParams("rmat needs a node count")
        return _gen_rmat(n, seed, params)
    raise InvalidParams(f"unknown graph kind {kind!r}")


def gen_costs(dist: str, count: int, seed: int = 0, **params) -> CostVector:
    """Synthetic per-task costs: uniform(low, high) or shifted pareto.

    Pareto samples are (1 + standard pareto) * scale, so every cost is
    >= scale > 0; shape 1.5 gives the heavy tail used in experiments.
    """
    if count < 1:
        raise InvalidParams(f"cost count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    if dist == "uniform":
        low = float(params.get("low", 1.0))
        high = float(params.get("high", low))
        if low <= 0 or high < low:
            raise InvalidParams(f"need 0 < low <= high, got [{low}, {high}]")
        if high == low:
            return np.full(count, low, dtype=np.float64)
        return rng.uniform(low, high, count)
    if dist == "pareto":
        shape = float(params.get("shape", 1.5))
        scale = float(params.get("scale", 1.0))
        if shape <= 0 or scale <= 0:
            raise InvalidParams("pareto needs shape > 0 and scale > 0")
        return (1.0 + rng.pareto(shape, count)) * scale
    raise InvalidParams(f"unknown cost distribution {dist!r}")
