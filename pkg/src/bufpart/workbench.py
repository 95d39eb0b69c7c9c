"""Synthetic graphs and brute-force oracles for tests and desk-scale experiments.

The oracles deliberately share no code with the partitioner or the
refinement structures; they recompute everything from scratch.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .graph_io import GraphHeader, write_edge_arrays


@dataclass(frozen=True)
class RmatParams:
    scale: int
    edge_factor: int = 16
    a: float = 0.57
    b: float = 0.19
    c: float = 0.19
    d: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.scale < 1:
            raise ValueError("scale must be >= 1")
        if self.edge_factor < 1:
            raise ValueError("edge_factor must be >= 1")
        probs = (self.a, self.b, self.c, self.d)
        if min(probs) < 0 or abs(sum(probs) - 1.0) > 1e-9:
            raise ValueError(f"quadrant probabilities must be >= 0 and sum to 1, got {probs}")


def rmat_edges(params: RmatParams) -> tuple[np.ndarray, np.ndarray]:
    """Sample ``edge_factor * 2**scale`` directed R-MAT edges (0-based ids).

    Vertex labels are randomly permuted afterwards, as in Graph500, so the
    file order does not follow the recursive structure.
    """
    rng = np.random.default_rng(params.seed)
    n = 1 << params.scale
    m = params.edge_factor * n
    src = np.zeros(m, dtype=np.int64)
    dst = np.zeros(m, dtype=np.int64)
    ab = params.a + params.b
    abc = ab + params.c
    for bit in range(params.scale):
        r = rng.random(m)
        row = r >= ab
        col = ((r >= params.a) & (r < ab)) | (r >= abc)
        src |= row.astype(np.int64) << bit
        dst |= col.astype(np.int64) << bit
    perm = rng.permutation(n)
    return perm[src], perm[dst]


def gen_rmat(params: RmatParams, out: str | os.PathLike) -> GraphHeader:
    """Write a symmetrized, simple R-MAT graph with exactly ``2**scale`` vertices."""
    src, dst = rmat_edges(params)
    return write_edge_arrays(out, 1 << params.scale, src + 1, dst + 1)


# -- oracles ---------------------------------------------------------------


class OracleTooLarge(ValueError):
    pass


MAX_ASSIGNMENTS = 2**16


def _limit(total: int, k: int, epsilon: float) -> Fraction:
    share = Fraction(total, k)
    return max((1 + Fraction(str(epsilon))) * share, Fraction(math.ceil(share)))


def oracle_best_partition(adj: list[list[int]], k: int, epsilon: float, mode: str = "vertex"):
    """Minimum normalized edge-cut over every balanced assignment of a tiny graph.

    ``adj`` is 1-based (``adj[0]`` ignored). Returns ``(lambda_ec, witness)``
    with the witness a 1-based partition list, or ``(None, None)`` if no
    assignment satisfies the balance condition.
    """
    n = len(adj) - 1
    if k**n > MAX_ASSIGNMENTS:
        raise OracleTooLarge(f"{k}^{n} assignments exceeds {MAX_ASSIGNMENTS}")
    edges = [(u, v) for u in range(1, n + 1) for v in adj[u] if u < v]
    deg = [len(a) for a in adj]
    if mode == "vertex":
        weight, total = [1] * (n + 1), n
    else:
        weight, total = deg, 2 * len(edges)
    limit = _limit(total, k, epsilon)
    best, witness = None, None
    for assign in itertools.product(range(k), repeat=n):
        loads = [0] * k
        for v in range(1, n + 1):
            loads[assign[v - 1]] += weight[v]
        if max(loads) > limit:
            continue
        cut = sum(1 for u, v in edges if assign[u - 1] != assign[v - 1])
        if best is None or cut < best:
            best, witness = cut, [p + 1 for p in assign]
    if best is None:
        return None, None
    return (Fraction(best, len(edges)) if edges else Fraction(0)), witness


def oracle_enumerate_trades(weights, owner, sub_sizes, part_loads, cap):
    """Every feasible single sub-partition move that strictly lowers the edge-cut.

    ``weights``: iterable of ``(a, b, w)`` with ``a != b`` (each pair once);
    ``owner[s]``: partition of sub-partition ``s``; ``sub_sizes[s]`` and
    ``part_loads[p]`` in the active balance measure; ``cap``: partition
    capacity. Returns ``[(s, dst, decrease)]`` sorted by ``(-decrease, s, dst)``.
    """
    if len(owner) > 64:
        raise OracleTooLarge(f"{len(owner)} sub-partitions; the trade oracle takes at most 64")
    weights = list(weights)
    k = len(part_loads)
    owner = list(owner)

    def cut(own):
        return sum(w for a, b, w in weights if own[a] != own[b])

    base = cut(owner)
    moves = []
    for s in range(len(owner)):
        for dst in range(k):
            if dst == owner[s] or part_loads[dst] + sub_sizes[s] > cap:
                continue
            trial = owner.copy()
            trial[s] = dst
            gain = base - cut(trial)
            if gain > 0:
                moves.append((s, dst, gain))
    moves.sort(key=lambda t: (-t[2], t[0], t[1]))
    return moves
