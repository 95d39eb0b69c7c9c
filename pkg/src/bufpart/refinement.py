"""Phase 2: greedy trades of whole sub-partitions on the weighted sub-partition graph.

For every sub-partition ``s`` and partition ``d`` the table ``ecp[s][d]``
holds the edge-cut ``s`` would contribute if it sat in ``d``. The gain of
moving ``s`` from its owner to ``d`` is ``ecp[s][owner] - ecp[s][d]``. One
max segment tree per ordered partition pair keeps those gains so the best
trade is found by reading K*(K-1) roots, and a trade only rewrites the
entries of the moved sub-partition's neighbors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Iterable

from .segtree import NEG, MaxSegmentTree
from .streaming import PartitionState, RefinementInputs

UPDATE_COST_FACTOR = 4


class RefinementError(RuntimeError):
    pass


@dataclass
class TradeRecord:
    step: int
    subpartition: int
    src: int
    dst: int
    dec: int
    edge_cut: int

    def to_json(self) -> str:
        # external ids are 1-based
        return json.dumps(
            {
                "step": self.step,
                "subpartition": self.subpartition + 1,
                "src": self.src + 1,
                "dst": self.dst + 1,
                "dec": self.dec,
                "edge_cut": self.edge_cut,
            }
        )


class SubPartitionGraph:
    """Sub-partitions as vertices, inter-sub-partition edge counts as weights."""

    def __init__(self, k: int, k_prime: int, owner: list[int], sub_vcount: list[int], sub_degsum: list[int]):
        self.k = k
        self.k_prime = k_prime
        self.owner = owner
        self.sub_vcount = sub_vcount
        self.sub_degsum = sub_degsum
        self.adj: list[dict[int, int]] = [{} for _ in range(k_prime)]

    def add_weight(self, a: int, b: int, w: int) -> None:
        if a == b:
            raise RefinementError(f"internal weight on sub-partition {a}")
        adj = self.adj
        adj[a][b] = adj[a].get(b, 0) + w
        adj[b][a] = adj[b].get(a, 0) + w

    def weight(self, a: int, b: int) -> int:
        return self.adj[a].get(b, 0)

    def pairs(self) -> Iterable[tuple[int, int, int]]:
        for a, nb in enumerate(self.adj):
            for b, w in nb.items():
                if a < b:
                    yield a, b, w

    def edge_cut(self) -> int:
        """Sum of weights between sub-partitions owned by different partitions."""
        owner = self.owner
        return sum(w for a, b, w in self.pairs() if owner[a] != owner[b])


class MoveScoreSets:
    """One max segment tree per ordered partition pair ``(src, dst)``.

    Trees of the same source share a slot layout: sub-partition ``s`` owned
    by ``src`` sits in slot ``slot[s]`` of every ``trees[src][dst]``. Keys
    pack ``(dec, -s)`` into one integer so that the root holds the largest
    gain, ties going to the smaller sub-partition id.
    """

    def __init__(self, k: int, k_prime: int, weights: list[int]):
        self.k = k
        self.k_prime = k_prime
        self.weights = weights
        self.slot = [-1] * k_prime
        self.free: list[list[int]] = [[] for _ in range(k)]
        self.used = [0] * k
        self.trees: list[list[MaxSegmentTree | None]] = [[None] * k for _ in range(k)]
        self.updates = 0

    def encode(self, dec: int, s: int) -> int:
        return dec * self.k_prime + (self.k_prime - 1 - s)

    def decode(self, key: int) -> tuple[int, int]:
        dec, r = divmod(key, self.k_prime)
        return dec, self.k_prime - 1 - r

    def build(self, src: int, members: list[int], decs: dict[int, list[int]]) -> None:
        k = self.k
        for i, s in enumerate(members):
            self.slot[s] = i
        self.used[src] = len(members)
        self.free[src] = []
        cap = max(1, len(members))
        w = self.weights
        for dst in range(k):
            if dst == src:
                continue
            leaves = [(self.encode(decs[s][dst], s), w[s]) for s in members]
            self.trees[src][dst] = MaxSegmentTree.from_leaves(cap, leaves)

    def _grow(self, src: int) -> None:
        for dst in range(self.k):
            t = self.trees[src][dst]
            if t is not None:
                self.trees[src][dst] = MaxSegmentTree.from_leaves(2 * t.size, t.leaves())

    def insert(self, s: int, src: int, decs: list[int]) -> None:
        if self.free[src]:
            slot = self.free[src].pop()
        else:
            slot = self.used[src]
            self.used[src] += 1
            t = next((t for t in self.trees[src] if t is not None), None)
            if t is not None and slot >= t.size:
                self._grow(src)
        self.slot[s] = slot
        w = self.weights[s]
        for dst in range(self.k):
            if dst != src:
                self.trees[src][dst].set(slot, self.encode(decs[dst], s), w)
                self.updates += 1

    def remove(self, s: int, src: int) -> None:
        slot = self.slot[s]
        for dst in range(self.k):
            if dst != src:
                self.trees[src][dst].clear(slot)
                self.updates += 1
        self.slot[s] = -1
        self.free[src].append(slot)

    def update(self, s: int, src: int, dst: int, dec: int) -> None:
        self.trees[src][dst].set(self.slot[s], self.encode(dec, s), self.weights[s])
        self.updates += 1

    def get(self, s: int, src: int, dst: int) -> int:
        key = self.trees[src][dst].get(self.slot[s])
        return self.decode(key)[0]


class Refiner:
    """Refinement state: sub-partition graph, ECP table, move-score sets, partition loads."""

    def __init__(self, graph: SubPartitionGraph, *, vertex_mode: bool, capacity: int, epsilon: float,
                 part_vcount: list[int], part_degsum: list[int], threshold: int = 1):
        self.graph = graph
        self.k = graph.k
        self.k_prime = graph.k_prime
        self.vertex_mode = vertex_mode
        self.capacity = capacity
        self.epsilon = epsilon
        self.threshold = threshold
        self.part_vcount = list(part_vcount)
        self.part_degsum = list(part_degsum)
        self.sizes = graph.sub_vcount if vertex_mode else graph.sub_degsum
        self.ecp = self.compute_ecp()
        self.edge_cut = graph.edge_cut()
        self.ms = MoveScoreSets(self.k, self.k_prime, self.sizes)
        owner = graph.owner
        members: list[list[int]] = [[] for _ in range(self.k)]
        for s in range(self.k_prime):
            members[owner[s]].append(s)
        for p in range(self.k):
            self.ms.build(p, members[p], {s: self._decs(s) for s in members[p]})
        self.nonempty_count = [sum(1 for s in m if self.sizes[s]) for m in members]
        nonempty = {sz for sz in self.sizes if sz > 0}
        self._uniform_size = nonempty.pop() if len(nonempty) == 1 else None
        self.trades: list[TradeRecord] = []
        self.last_update_count = 0

    @property
    def loads(self) -> list[int]:
        return self.part_vcount if self.vertex_mode else self.part_degsum

    def compute_ecp(self) -> list[list[int]]:
        """ECP table from scratch: weight from ``s`` to sub-partitions outside ``d``."""
        k = self.k
        owner = self.graph.owner
        table = []
        for nb in self.graph.adj:
            into = [0] * k
            total = 0
            for t, w in nb.items():
                into[owner[t]] += w
                total += w
            table.append([total - x for x in into])
        return table

    def _decs(self, s: int) -> list[int]:
        row = self.ecp[s]
        here = row[self.graph.owner[s]]
        return [here - x for x in row]

    def dec(self, s: int, dst: int) -> int:
        src = self.graph.owner[s]
        if dst == src:
            raise ValueError(f"sub-partition {s} already in partition {dst}")
        return self.ecp[s][src] - self.ecp[s][dst]

    def find_best_trade(self) -> tuple[int, int, int] | None:
        """Feasible move with the largest gain, if that gain reaches the threshold.

        Ties: smaller sub-partition id, then smaller destination.
        """
        k = self.k
        loads = self.loads
        cap = self.capacity
        floor = self.threshold * self.k_prime - 1
        best_key, best_dst = NEG, -1
        trees = self.ms.trees
        for src in range(k):
            row = trees[src]
            for dst in range(k):
                if dst == src:
                    continue
                t = row[dst]
                if t.key[1] <= floor or t.key[1] < best_key:
                    continue
                key = t.best_fitting(cap - loads[dst], floor)
                if key > best_key or (key == best_key and key != NEG and dst < best_dst):
                    best_key, best_dst = key, dst
        if best_key == NEG:
            return None
        dec, s = self.ms.decode(best_key)
        return s, best_dst, dec

    def apply_trade(self, s: int, dst: int) -> TradeRecord:
        g = self.graph
        owner = g.owner
        src = owner[s]
        if dst == src:
            raise RefinementError(f"sub-partition {s} already in partition {dst}")
        if self.loads[dst] + self.sizes[s] > self.capacity:
            raise RefinementError(f"moving sub-partition {s} overfills partition {dst}")
        gain = self.ecp[s][src] - self.ecp[s][dst]
        ms = self.ms
        before = ms.updates
        k = self.k
        ecp = self.ecp

        ms.remove(s, src)
        owner[s] = dst
        self.part_vcount[src] -= g.sub_vcount[s]
        self.part_vcount[dst] += g.sub_vcount[s]
        self.part_degsum[src] -= g.sub_degsum[s]
        self.part_degsum[dst] += g.sub_degsum[s]
        if self.sizes[s]:
            self.nonempty_count[src] -= 1
            self.nonempty_count[dst] += 1
        ms.insert(s, dst, self._decs(s))

        for t, w in g.adj[s].items():
            row = ecp[t]
            row[src] += w
            row[dst] -= w
            o = owner[t]
            here = row[o]
            if o == src or o == dst:
                for j in range(k):
                    if j != o:
                        ms.update(t, o, j, here - row[j])
            else:
                ms.update(t, o, src, here - row[src])
                ms.update(t, o, dst, here - row[dst])

        self.edge_cut -= gain
        self.last_update_count = ms.updates - before
        bound = UPDATE_COST_FACTOR * self.k_prime + 2 * k
        if self.last_update_count > bound:
            raise RefinementError(f"trade touched {self.last_update_count} move-score entries, bound {bound}")
        self._check_subpartition_count(dst)
        rec = TradeRecord(len(self.trades) + 1, s, src, dst, gain, self.edge_cut)
        self.trades.append(rec)
        return rec

    def _check_subpartition_count(self, p: int) -> None:
        # equal-sized sub-partitions: capacity bounds how many one partition holds
        size = self._uniform_size
        if size is not None and self.nonempty_count[p] > self.capacity // size:
            raise RefinementError(
                f"partition {p} holds {self.nonempty_count[p]} sub-partitions, limit {self.capacity // size}"
            )

    def refine(self, max_trades: int | None = None) -> list[TradeRecord]:
        start_cut = self.edge_cut
        while max_trades is None or len(self.trades) < max_trades:
            move = self.find_best_trade()
            if move is None:
                break
            self.apply_trade(move[0], move[1])
        if len(self.trades) > start_cut // self.threshold:
            raise RefinementError("trade count exceeds initial edge-cut / threshold")
        return self.trades

    def check_consistency(self) -> None:
        """Compare every maintained structure with a from-scratch recomputation."""
        if self.ecp != self.compute_ecp():
            raise RefinementError("ECP table diverged from recomputation")
        if self.edge_cut != self.graph.edge_cut():
            raise RefinementError("maintained edge-cut diverged from the sub-partition graph")
        owner = self.graph.owner
        for s in range(self.k_prime):
            src = owner[s]
            for dst in range(self.k):
                if dst != src and self.ms.get(s, src, dst) != self.dec(s, dst):
                    raise RefinementError(f"stale move score for sub-partition {s} -> {dst}")

    def partition_of(self, subpart_of: list[int]) -> list[int]:
        owner = self.graph.owner
        return [owner[s] if s >= 0 else -1 for s in subpart_of]


def build(state: PartitionState, inputs: RefinementInputs) -> Refiner:
    """Assemble the refinement structures from a finished Phase-1 state."""
    cfg = state.config
    per = cfg.subparts_per_partition
    kp = inputs.k_prime
    if state.subpart_of is None or kp != cfg.k_prime:
        raise RefinementError("state carries no sub-partitioning matching the inputs")
    part_of, subpart_of = state.part_of, state.subpart_of
    for v in range(1, len(part_of)):
        if part_of[v] < 0 or subpart_of[v] < 0:
            raise RefinementError(f"vertex {v} is unassigned")
        if subpart_of[v] // per != part_of[v]:
            raise RefinementError(f"vertex {v}: sub-partition {subpart_of[v]} outside partition {part_of[v]}")
    owner = [s // per for s in range(kp)]
    g = SubPartitionGraph(cfg.k, kp, owner, list(state.sub_vcount), list(state.sub_degsum))
    for a, b, w in inputs.pairs():
        if not (0 <= a < kp and 0 <= b < kp):
            raise RefinementError(f"weight references unknown sub-partition ({a}, {b})")
        if g.sub_vcount[a] == 0 or g.sub_vcount[b] == 0:
            raise RefinementError(f"weight on empty sub-partition ({a}, {b})")
        g.add_weight(a, b, w)
    return Refiner(
        g,
        vertex_mode=cfg.balance_mode == "vertex",
        capacity=state.capacity,
        epsilon=cfg.epsilon,
        part_vcount=state.vcount,
        part_degsum=state.degsum,
        threshold=cfg.refine_threshold,
    )


def refine(state: PartitionState, refiner: Refiner) -> tuple[PartitionState, list[TradeRecord]]:
    """Run trades to a fixed point and expand the result back to vertices."""
    trades = refiner.refine()
    final = replace(
        state,
        part_of=refiner.partition_of(state.subpart_of),
        vcount=list(refiner.part_vcount),
        degsum=list(refiner.part_degsum),
    )
    return final, trades
