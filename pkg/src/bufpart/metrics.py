"""Partition quality from an adjacency file and a partition map, in one streaming pass."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass

from .graph_io import open_stream
from .streaming import capacity


class PartitionMapError(ValueError):
    pass


def read_partition_map(path: str | os.PathLike) -> list[int]:
    """One 1-based partition id per line; line i is vertex i."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s:
                continue
            try:
                out.append(int(s))
            except ValueError:
                raise PartitionMapError(f"line {lineno}: not a partition id: {s!r}") from None
    return out


def write_partition_map(path: str | os.PathLike, part_map: list[int]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(map(str, part_map)))
        fh.write("\n")


def _check_map(part_map: list[int], n: int, k: int | None) -> int:
    if len(part_map) != n:
        raise PartitionMapError(f"map covers {len(part_map)} of {n} vertices")
    lo, hi = min(part_map), max(part_map)
    if lo < 1:
        raise PartitionMapError(f"partition id {lo} < 1 (unassigned vertex?)")
    if k is None:
        return hi
    if hi > k:
        raise PartitionMapError(f"partition id {hi} out of range 1..{k}")
    return k


@dataclass
class QualityReport:
    lambda_ec: float
    lambda_cv: float
    vertex_imbalance: float
    edge_imbalance: float
    vcount: list[int]
    degsum: list[int]
    k: int
    epsilon_check: dict | None
    cut_edges: int
    comm_volume: int
    vertex_count: int
    edge_count: int

    def to_dict(self) -> dict:
        return asdict(self)


def imbalance(vcount: list[int], degsum: list[int], epsilon: float | None = None):
    """Max-over-average load ratios, plus balance flags when ``epsilon`` is given.

    A part may hold ``max((1+eps) * total / K, ceil(total / K))``: the
    ceiling keeps an exact split feasible when ``total`` is not divisible by K.
    """
    k = len(vcount)
    n, ends = sum(vcount), sum(degsum)
    vi = max(vcount) / (n / k) if n else 1.0
    ei = max(degsum) / (ends / k) if ends else 1.0
    flags = None
    if epsilon is not None:
        flags = {
            "epsilon": epsilon,
            "vertex_ok": max(vcount) <= capacity(n, k, epsilon),
            "edge_ok": max(degsum) <= capacity(ends, k, epsilon),
        }
    return vi, ei, flags


def evaluate(path: str | os.PathLike, part_map: list[int], k: int | None = None,
             epsilon: float | None = None) -> QualityReport:
    """All metrics in a single pass over the graph file.

    ``part_map[i]`` is the 1-based partition of vertex ``i + 1``. Only the
    map and per-partition counters are held in memory.
    """
    stream = open_stream(path)
    n, m = stream.header
    k = _check_map(part_map, n, k)
    vcount = [0] * k
    degsum = [0] * k
    cut = 0
    volume = 0
    for v, nbrs in stream:
        p = part_map[v - 1]
        vcount[p - 1] += 1
        degsum[p - 1] += len(nbrs)
        foreign = set()
        for u in nbrs:
            q = part_map[u - 1]
            if q != p:
                foreign.add(q)
                if u > v:
                    cut += 1
        volume += len(foreign)
    vi, ei, flags = imbalance(vcount, degsum, epsilon)
    return QualityReport(
        lambda_ec=cut / m if m else 0.0,
        lambda_cv=volume / (k * n),
        vertex_imbalance=vi,
        edge_imbalance=ei,
        vcount=vcount,
        degsum=degsum,
        k=k,
        epsilon_check=flags,
        cut_edges=cut,
        comm_volume=volume,
        vertex_count=n,
        edge_count=m,
    )


def edge_cut(path: str | os.PathLike, part_map: list[int]) -> float:
    return evaluate(path, part_map).lambda_ec


def communication_volume(path: str | os.PathLike, part_map: list[int], k: int) -> float:
    return evaluate(path, part_map, k).lambda_cv
