"""Adjacency-format graph files: streaming reader, edge-list converter, validator.

Format: line 1 is ``<|V|> <|E|>``; line ``i + 1`` lists the space-separated
neighbors of vertex ``i`` (1-based). Isolated vertices have an empty line.
"""

from __future__ import annotations

import os
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple

import numpy as np


class GraphFormatError(ValueError):
    """Raised for malformed adjacency or edge-list input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GraphHeader(NamedTuple):
    vertex_count: int
    edge_count: int


class VertexRecord(NamedTuple):
    id: int
    neighbors: list[int]


def _parse_header(line: str) -> GraphHeader:
    parts = line.split()
    if len(parts) != 2:
        raise GraphFormatError(f"expected '<|V|> <|E|>', got {line.strip()!r}", 1)
    try:
        n, m = int(parts[0]), int(parts[1])
    except ValueError:
        raise GraphFormatError(f"non-integer header {line.strip()!r}", 1) from None
    if n < 1 or m < 0:
        raise GraphFormatError(f"header needs |V| >= 1 and |E| >= 0, got {n} {m}", 1)
    return GraphHeader(n, m)


class GraphStream:
    """One-pass iterator over the vertex records of an adjacency file.

    The header is read on construction. Iterating yields exactly
    ``header.vertex_count`` records in file order and holds one line at a
    time. Self-loops, repeated neighbors, out-of-range ids, a wrong number
    of records and a degree sum different from ``2 * |E|`` raise
    :class:`GraphFormatError`.
    """

    def __init__(self, path: str | os.PathLike):
        self.path = os.fspath(path)
        self._fh = open(self.path, encoding="utf-8")
        first = self._fh.readline()
        if not first:
            self._fh.close()
            raise GraphFormatError("empty file", 1)
        self.header = _parse_header(first)
        self._consumed = False

    def __enter__(self) -> GraphStream:
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def close(self) -> None:
        self._fh.close()

    def __iter__(self) -> Iterator[VertexRecord]:
        if self._consumed:
            raise RuntimeError("GraphStream supports a single pass")
        self._consumed = True
        try:
            yield from self._records()
        finally:
            self.close()

    def _records(self) -> Iterator[VertexRecord]:
        n, m = self.header
        fh = self._fh
        total = 0
        for v in range(1, n + 1):
            line = fh.readline()
            if not line:
                raise GraphFormatError(f"expected {n} vertex records, file ends after {v - 1}", v + 1)
            try:
                nbrs = [int(tok) for tok in line.split()]
            except ValueError:
                raise GraphFormatError(f"non-integer neighbor id in {line.strip()!r}", v + 1) from None
            if nbrs:
                lo, hi = min(nbrs), max(nbrs)
                if lo < 1 or hi > n:
                    bad = lo if lo < 1 else hi
                    raise GraphFormatError(f"neighbor {bad} out of range 1..{n}", v + 1)
                if len(set(nbrs)) != len(nbrs):
                    raise GraphFormatError(f"duplicate neighbor in record of vertex {v}", v + 1)
                if v in nbrs:
                    raise GraphFormatError(f"self-loop on vertex {v}", v + 1)
            total += len(nbrs)
            yield VertexRecord(v, nbrs)
        lineno = n + 1
        for extra in fh:
            lineno += 1
            if extra.strip():
                raise GraphFormatError(f"more than {n} vertex records", lineno)
        if total != 2 * m:
            raise GraphFormatError(f"neighbor lists sum to {total}, header implies {2 * m}")


def open_stream(path: str | os.PathLike) -> GraphStream:
    return GraphStream(path)


def read_adjacency(path: str | os.PathLike) -> tuple[GraphHeader, list[list[int]]]:
    """Load a whole adjacency file; ``adj[v]`` for ``v`` in 1..|V| (``adj[0]`` empty).

    Only for small graphs: tests, oracles, and the validation tooling.
    """
    stream = open_stream(path)
    adj: list[list[int]] = [[]]
    for rec in stream:
        adj.append(rec.neighbors)
    return stream.header, adj


def write_adjacency(path: str | os.PathLike, adj: list[Iterable[int]]) -> GraphHeader:
    """Write ``adj`` (1-based, ``adj[0]`` ignored) as an adjacency file."""
    n = len(adj) - 1
    if n < 1:
        raise GraphFormatError("graph has no vertices")
    lines = [" ".join(map(str, nbrs)) for nbrs in adj[1:]]
    total = sum(len(a) for a in adj[1:])
    header = GraphHeader(n, total // 2)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{header.vertex_count} {header.edge_count}\n")
        fh.write("\n".join(lines))
        fh.write("\n")
    return header


def write_edge_arrays(path: str | os.PathLike, n: int, src: np.ndarray, dst: np.ndarray) -> GraphHeader:
    """Symmetrize, de-duplicate and de-loop 1-based edge arrays, then write the adjacency file.

    Vertex ids are kept as given (no compaction), so isolated ids in 1..n
    survive as empty lines.
    """
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    keep = src != dst
    lo = np.minimum(src[keep], dst[keep])
    hi = np.maximum(src[keep], dst[keep])
    if lo.size and (lo.min() < 1 or hi.max() > n):
        raise GraphFormatError(f"edge endpoint outside 1..{n}")
    pairs = np.unique(lo * (n + 1) + hi)
    lo, hi = pairs // (n + 1), pairs % (n + 1)
    heads = np.concatenate([lo, hi])
    tails = np.concatenate([hi, lo])
    order = np.lexsort((tails, heads))
    heads, tails = heads[order], tails[order]
    bounds = np.searchsorted(heads, np.arange(1, n + 2))
    tails_s = tails.astype(str)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{n} {len(pairs)}\n")
        for v in range(n):
            fh.write(" ".join(tails_s[bounds[v]:bounds[v + 1]]))
            fh.write("\n")
    return GraphHeader(n, int(len(pairs)))


def read_edge_list(src: str | os.PathLike) -> Iterator[tuple[int, int]]:
    with open(src, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split()
            if len(parts) < 2:
                raise GraphFormatError(f"expected 'u v', got {s!r}", lineno)
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise GraphFormatError(f"non-integer vertex id in {s!r}", lineno) from None
            if u < 1 or v < 1:
                raise GraphFormatError(f"vertex ids must be positive, got {s!r}", lineno)
            yield u, v


def convert_edge_list(src: str | os.PathLike, dst: str | os.PathLike) -> GraphHeader:
    """Convert a ``u v`` edge list to the adjacency format.

    Edges are symmetrized, duplicates collapsed and self-loops dropped.
    Vertex ids are compacted to 1..|V| in order of first appearance;
    a vertex that only ever appears in self-loops is dropped.
    """
    remap: dict[int, int] = {}
    us: list[int] = []
    vs: list[int] = []
    for u, v in read_edge_list(src):
        if u == v:
            continue
        a = remap.setdefault(u, len(remap) + 1)
        b = remap.setdefault(v, len(remap) + 1)
        us.append(a)
        vs.append(b)
    if not remap:
        raise GraphFormatError(f"no usable edges in {os.fspath(src)}")
    return write_edge_arrays(dst, len(remap), np.array(us), np.array(vs))


@dataclass
class ValidationReport:
    header: GraphHeader
    symmetry_violations: int = 0
    duplicate_edges: int = 0
    self_loops: int = 0
    degree_histogram: dict[int, int] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not (self.symmetry_violations or self.duplicate_edges or self.self_loops)

    def degree_cdf(self) -> list[tuple[int, float]]:
        """(degree, fraction of vertices with degree <= it), ascending."""
        n = sum(self.degree_histogram.values())
        out, acc = [], 0
        for d in sorted(self.degree_histogram):
            acc += self.degree_histogram[d]
            out.append((d, acc / n))
        return out

    def to_dict(self) -> dict:
        return {
            "vertex_count": self.header.vertex_count,
            "edge_count": self.header.edge_count,
            "symmetry_violations": self.symmetry_violations,
            "duplicate_edges": self.duplicate_edges,
            "self_loops": self.self_loops,
            "degree_histogram": {str(d): c for d, c in sorted(self.degree_histogram.items())},
            "degree_cdf": self.degree_cdf(),
        }


def validate(path: str | os.PathLike) -> ValidationReport:
    """Check symmetry, duplicate entries and self-loops; collect the degree histogram.

    Unlike :func:`open_stream` this reader tolerates the defects it counts.
    Range and record-count errors still raise :class:`GraphFormatError`.
    """
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first:
            raise GraphFormatError("empty file", 1)
        header = _parse_header(first)
        n = header.vertex_count
        report = ValidationReport(header)
        hist: Counter[int] = Counter()
        # bit 1: lower id lists higher id; bit 2: higher lists lower
        seen: dict[tuple[int, int], int] = {}
        for v in range(1, n + 1):
            line = fh.readline()
            if not line:
                raise GraphFormatError(f"expected {n} vertex records, file ends after {v - 1}", v + 1)
            try:
                nbrs = [int(tok) for tok in line.split()]
            except ValueError:
                raise GraphFormatError(f"non-integer neighbor id in {line.strip()!r}", v + 1) from None
            hist[len(nbrs)] += 1
            distinct = set()
            for u in nbrs:
                if u < 1 or u > n:
                    raise GraphFormatError(f"neighbor {u} out of range 1..{n}", v + 1)
                if u == v:
                    report.self_loops += 1
                    continue
                if u in distinct:
                    report.duplicate_edges += 1
                    continue
                distinct.add(u)
                key = (v, u) if v < u else (u, v)
                seen[key] = seen.get(key, 0) | (1 if v < u else 2)
    report.symmetry_violations = sum(1 for bits in seen.values() if bits != 3)
    report.degree_histogram = dict(hist)
    return report
