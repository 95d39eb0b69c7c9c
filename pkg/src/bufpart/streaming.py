"""Phase 1: prioritized buffered streaming partitioning.

Low-degree vertices wait in a bounded buffer ordered by buffer score and are
placed once they bubble to the top (or once every neighbor is placed). Each
placement picks a partition with a Fennel-style score whose penalty counts
both vertices and edge endpoints, then a sub-partition inside it, and
accumulates the sub-partition edge weights consumed by refinement.
"""

from __future__ import annotations

import heapq
import math
import queue
import random
import threading
import time
from collections import deque
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable

from .graph_io import GraphHeader, VertexRecord

ALGORITHMS = ("cuttana", "fennel", "ldg")
BALANCE_MODES = ("vertex", "edge")
GAMMA = 1.5
SCORE_RTOL = 1e-12


class ConfigError(ValueError):
    pass


@dataclass
class PartitionerConfig:
    k: int = 2
    subparts_per_partition: int = 4096
    epsilon: float = 0.10
    balance_mode: str = "edge"
    d_max: int = 1000
    max_qsize: int = 1_000_000
    theta: float = 5.0
    seed: int = 0
    refine_threshold: int = 1
    algorithm: str = "cuttana"
    # multiplier on the Fennel alpha used when choosing sub-partitions
    sub_penalty_scale: float = 0.01

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.subparts_per_partition < 1:
            raise ConfigError("subparts_per_partition must be >= 1")
        if self.epsilon < 0:
            raise ConfigError("epsilon must be >= 0")
        if self.balance_mode not in BALANCE_MODES:
            raise ConfigError(f"balance_mode must be one of {BALANCE_MODES}")
        if self.d_max < 1:
            raise ConfigError("d_max must be >= 1")
        if self.max_qsize < 0:
            raise ConfigError("max_qsize must be >= 0")
        if self.theta < 0:
            raise ConfigError("theta must be >= 0")
        if self.refine_threshold < 1:
            raise ConfigError("refine_threshold must be >= 1")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}")
        if self.sub_penalty_scale < 0:
            raise ConfigError("sub_penalty_scale must be >= 0")

    @property
    def k_prime(self) -> int:
        return self.k * self.subparts_per_partition

    def to_dict(self) -> dict:
        return asdict(self)


def capacity(total: int, parts: int, epsilon: float) -> int:
    """Largest integer load a part may hold: ``(1+eps) * total / parts``.

    Never below ``ceil(total / parts)``, the smallest share that is always
    feasible; epsilon is read from its decimal repr so 0.1 means 1/10.
    """
    share = Fraction(total, parts)
    return max(math.floor((1 + Fraction(str(epsilon))) * share), math.ceil(share))


def fennel_alpha(parts: int, n: int, m: int) -> float:
    return math.sqrt(parts) * m / n**GAMMA


def buffer_score(degree: int, assigned: int, d_max: int, theta: float) -> float:
    return degree / d_max + theta * assigned / degree


@dataclass
class StreamStats:
    stream_ms: float = 0.0
    drain_ms: float = 0.0
    peak_buffer: int = 0
    peak_buffer_slots: int = 0
    max_buffered_degree: int = 0
    buffered_total: int = 0
    full_knowledge_evictions: int = 0
    fallback_count: int = 0
    sub_fallback_count: int = 0
    cut_edges: int = 0

    @property
    def balance_violation(self) -> bool:
        return self.fallback_count > 0


@dataclass
class PartitionState:
    """Phase-1 assignment. Vertex ids are 1-based list indices; partitions are 0-based."""

    header: GraphHeader
    config: PartitionerConfig
    capacity: int
    part_of: list[int]
    vcount: list[int]
    degsum: list[int]
    assigned_nbrs: list[int]
    subpart_of: list[int] | None = None
    sub_vcount: list[int] | None = None
    sub_degsum: list[int] | None = None
    stats: StreamStats = field(default_factory=StreamStats)

    @property
    def k(self) -> int:
        return self.config.k

    def loads(self) -> list[int]:
        return self.vcount if self.config.balance_mode == "vertex" else self.degsum

    def partition_map(self) -> list[int]:
        """1-based partition id of vertices 1..|V|."""
        return [p + 1 for p in self.part_of[1:]]

    def subpartition_map(self) -> list[int]:
        if self.subpart_of is None:
            raise ValueError("no sub-partitions were computed")
        return [s + 1 for s in self.subpart_of[1:]]

    def balanced(self) -> bool:
        return max(self.loads()) <= self.capacity


@dataclass
class RefinementInputs:
    """Sub-partition edge weights accumulated while streaming.

    ``weights`` maps ``a * k_prime + b`` (``a < b``) to the number of edges
    between sub-partitions ``a`` and ``b``.
    """

    k_prime: int
    weights: dict[int, int]

    def pairs(self) -> Iterable[tuple[int, int, int]]:
        kp = self.k_prime
        for key, w in self.weights.items():
            yield key // kp, key % kp, w


class SubpartitionStage:
    """Chooses a sub-partition inside the chosen partition and accumulates W.

    Owns ``subpart_of``, the sub-partition sizes and the weight map. It
    only reads its own structures, so it can run in a separate thread as
    long as it consumes placements in decision order.
    """

    def __init__(self, cfg: PartitionerConfig, header: GraphHeader):
        n, m = header
        self.per = per = cfg.subparts_per_partition
        self.k_prime = kp = cfg.k_prime
        self.vertex_mode = cfg.balance_mode == "vertex"
        total = n if self.vertex_mode else 2 * m
        self.cap = capacity(total, kp, cfg.epsilon)
        self.mu = n / m if m else 1.0
        self.coef = GAMMA * fennel_alpha(kp, n, m) * cfg.sub_penalty_scale
        self.rng = random.Random(f"{cfg.seed}/subpartition")
        self.subpart_of = [-1] * (n + 1)
        self.sub_vcount = [0] * kp
        self.sub_degsum = [0] * kp
        self.weights: dict[int, int] = {}
        self.fallbacks = 0
        # per-partition lazy min-heaps: (combined load, tie-break, id, vcount at push)
        # for the penalty order, (active load, id, vcount at push) for the fallback
        self.heaps = []
        self.low_heaps = []
        for p in range(cfg.k):
            h = [(0.0, self.rng.random(), s, 0) for s in range(p * per, (p + 1) * per)]
            heapq.heapify(h)
            self.heaps.append(h)
            self.low_heaps.append([(0, s, 0) for s in range(p * per, (p + 1) * per)])

    def _penalty(self, s: int) -> float:
        return self.coef * math.sqrt(self.sub_vcount[s] + self.mu * self.sub_degsum[s])

    def select(self, p: int, nbrs: list[int], sus: list[int]) -> int:
        per = self.per
        if per == 1:
            return p
        base = p * per
        w = 1 if self.vertex_mode else len(nbrs)
        load = self.sub_vcount if self.vertex_mode else self.sub_degsum
        cap = self.cap
        cnt: dict[int, int] = {}
        for s in sus:
            if base <= s < base + per:
                cnt[s] = cnt.get(s, 0) + 1
        least = self._least_loaded(p)
        if load[least] + w > cap:
            self.fallbacks += 1
            return least
        scored = [(c - self._penalty(s), s) for s, c in cnt.items() if load[s] + w <= cap]
        free = self._best_free(p, cnt, w)
        if free is not None:
            scored.append((-self._penalty(free), free))
        if not scored:
            self.fallbacks += 1
            return least
        best = max(sc for sc, _ in scored)
        tol = SCORE_RTOL * max(1.0, abs(best))
        ties = sorted(s for sc, s in scored if sc >= best - tol)
        return ties[0] if len(ties) == 1 else self.rng.choice(ties)

    def _least_loaded(self, p: int) -> int:
        h = self.low_heaps[p]
        vc = self.sub_vcount
        while vc[h[0][1]] != h[0][2]:
            heapq.heappop(h)
        return h[0][1]

    def _best_free(self, p: int, has_nbr: dict[int, int], w: int) -> int | None:
        """Least combined-load sub-partition of ``p`` with no placed neighbor that fits ``w``."""
        h = self.heaps[p]
        vc = self.sub_vcount
        load = self.sub_vcount if self.vertex_mode else self.sub_degsum
        cap = self.cap
        aside = []
        found = None
        while h:
            entry = h[0]
            s = entry[2]
            if vc[s] != entry[3]:
                heapq.heappop(h)
                continue
            if load[s] + w > cap:
                heapq.heappop(h)
                # a full sub-partition never fits again in vertex mode
                if not (self.vertex_mode or load[s] >= cap):
                    aside.append(entry)
                continue
            if s in has_nbr:
                aside.append(heapq.heappop(h))
                continue
            found = s
            break
        for entry in aside:
            heapq.heappush(h, entry)
        return found

    def place(self, v: int, p: int, nbrs: list[int]) -> int:
        subpart_of = self.subpart_of
        sus = [subpart_of[u] for u in nbrs]
        s = self.select(p, nbrs, sus)
        subpart_of[v] = s
        self.sub_vcount[s] += 1
        self.sub_degsum[s] += len(nbrs)
        if self.per > 1:
            vc = self.sub_vcount[s]
            heapq.heappush(self.heaps[p], (vc + self.mu * self.sub_degsum[s], self.rng.random(), s, vc))
            active = vc if self.vertex_mode else self.sub_degsum[s]
            heapq.heappush(self.low_heaps[p], (active, s, vc))
        weights = self.weights
        kp = self.k_prime
        for t in sus:
            if t >= 0 and t != s:
                key = s * kp + t if s < t else t * kp + s
                weights[key] = weights.get(key, 0) + 1
        return s


class _PipelinedStage:
    """Runs a :class:`SubpartitionStage` in a worker thread behind a bounded FIFO."""

    _STOP = object()

    def __init__(self, stage: SubpartitionStage, maxsize: int = 8192):
        self.stage = stage
        self.q: queue.Queue = queue.Queue(maxsize=maxsize)
        self.error: BaseException | None = None
        self.thread = threading.Thread(target=self._work, name="subpartition-stage", daemon=True)
        self.thread.start()

    def _work(self) -> None:
        get = self.q.get
        place = self.stage.place
        try:
            while True:
                item = get()
                if item is self._STOP:
                    return
                place(*item)
        except BaseException as exc:  # surfaced in finish()
            self.error = exc
            while self.q.get() is not self._STOP:
                pass

    def place(self, v: int, p: int, nbrs: list[int]) -> None:
        self.q.put((v, p, nbrs))

    def finish(self) -> None:
        self.q.put(self._STOP)
        self.thread.join()
        if self.error is not None:
            raise self.error


class StreamingPartitioner:
    """Single-pass partitioner over a vertex stream.

    ``algorithm="cuttana"`` buffers vertices of degree < ``d_max`` and adds
    sub-partitioning; ``fennel`` and ``ldg`` place every vertex on arrival.
    """

    def __init__(self, cfg: PartitionerConfig, header: GraphHeader, *, pipeline: bool = False):
        self.cfg = cfg
        self.header = header
        n, m = header
        self.n, self.m = n, m
        k = cfg.k
        self.vertex_mode = cfg.balance_mode == "vertex"
        self.cap = capacity(n if self.vertex_mode else 2 * m, k, cfg.epsilon)
        self.mu = n / m if m else 1.0
        self.coef = GAMMA * fennel_alpha(k, n, m)
        self.rng = random.Random(f"{cfg.seed}/partition")
        self.part_of = [-1] * (n + 1)
        self.vcount = [0] * k
        self.degsum = [0] * k
        self.penalty = [0.0] * k
        self.stats = StreamStats()

        self.buffering = cfg.algorithm == "cuttana" and cfg.max_qsize > 0
        self.assigned_nbrs = [0] * (n + 1)
        self.in_buf = [False] * (n + 1)
        self.buf_nbrs: dict[int, list[int]] = {}
        self.heap: list[tuple[float, int, int, int]] = []
        self.seq = 0
        self.buf_slots = 0
        self.evicted: deque[tuple[int, list[int]]] = deque()

        self.stage: SubpartitionStage | None = None
        self._sink = None
        if cfg.algorithm == "cuttana":
            self.stage = SubpartitionStage(cfg, header)
            self._sink = _PipelinedStage(self.stage) if pipeline else self.stage

    # -- scoring -----------------------------------------------------------

    def _penalty_of(self, p: int) -> float:
        if self.cfg.algorithm == "fennel" and self.vertex_mode:
            x = self.vcount[p]
        else:
            x = self.vcount[p] + self.mu * self.degsum[p]
        return self.coef * math.sqrt(x)

    def _min_load(self, candidates: Iterable[int]) -> int:
        load, other = (self.vcount, self.degsum) if self.vertex_mode else (self.degsum, self.vcount)
        keyed = [((load[i], other[i]), i) for i in candidates]
        lo = min(key for key, _ in keyed)
        ties = [i for key, i in keyed if key == lo]
        return ties[0] if len(ties) == 1 else self.rng.choice(ties)

    def select_partition(self, nbrs: list[int]) -> tuple[int, list[int]]:
        """Best partition for a vertex with neighbors ``nbrs``.

        Returns the partition and the per-partition counts of placed
        neighbors. Partitions that cannot take the vertex without exceeding
        capacity are skipped; if none can, the least-loaded one is used and
        the fallback is counted.
        """
        k = self.cfg.k
        part_of = self.part_of
        ps = [part_of[u] for u in nbrs]
        cnt = [ps.count(i) for i in range(k)]
        deg = len(nbrs)
        if deg == 0:
            return self._min_load(range(k)), cnt
        load = self.vcount if self.vertex_mode else self.degsum
        w = 1 if self.vertex_mode else deg
        cap = self.cap
        feasible = [i for i in range(k) if load[i] + w <= cap]
        if not feasible:
            self.stats.fallback_count += 1
            return self._min_load(range(k)), cnt
        if self.cfg.algorithm == "ldg":
            scores = [cnt[i] * (1 - load[i] / cap) for i in feasible]
        else:
            pen = self.penalty
            scores = [cnt[i] - pen[i] for i in feasible]
        best = max(scores)
        tol = SCORE_RTOL * max(1.0, abs(best))
        ties = [i for i, sc in zip(feasible, scores) if sc >= best - tol]
        if len(ties) == 1:
            return ties[0], cnt
        if self.cfg.algorithm == "ldg":
            return self._min_load(ties), cnt
        return self.rng.choice(ties), cnt

    # -- placement and buffer ----------------------------------------------

    def partition_vertex(self, v: int, nbrs: list[int]) -> int:
        p, cnt = self.select_partition(nbrs)
        deg = len(nbrs)
        self.part_of[v] = p
        self.vcount[p] += 1
        self.degsum[p] += deg
        self.penalty[p] = self._penalty_of(p)
        self.stats.cut_edges += sum(cnt) - cnt[p]
        if self._sink is not None:
            self._sink.place(v, p, nbrs)
        if self.buffering:
            self.notify_assigned(nbrs)
        return p

    def notify_assigned(self, nbrs: list[int]) -> None:
        """Refresh buffer scores of buffered neighbors of a just-placed vertex.

        A buffered vertex whose neighbors are now all placed leaves the
        buffer and is queued for immediate placement.
        """
        in_buf = self.in_buf
        assigned = self.assigned_nbrs
        buf_nbrs = self.buf_nbrs
        d_max, theta = self.cfg.d_max, self.cfg.theta
        for w in nbrs:
            if in_buf[w]:
                a = assigned[w] + 1
                assigned[w] = a
                deg = len(buf_nbrs[w])
                if a == deg:
                    self.evicted.append((w, self._remove(w)))
                    self.stats.full_knowledge_evictions += 1
                else:
                    self.seq += 1
                    heapq.heappush(self.heap, (-(deg / d_max + theta * a / deg), self.seq, w, a))

    def _push(self, v: int, nbrs: list[int], a: int) -> None:
        deg = len(nbrs)
        assert deg < self.cfg.d_max, "vertex at or above d_max must not be buffered"
        self.in_buf[v] = True
        self.buf_nbrs[v] = nbrs
        self.assigned_nbrs[v] = a
        self.buf_slots += deg
        self.seq += 1
        heapq.heappush(self.heap, (-buffer_score(deg, a, self.cfg.d_max, self.cfg.theta), self.seq, v, a))
        st = self.stats
        st.buffered_total += 1
        size = len(self.buf_nbrs)
        assert size <= self.cfg.max_qsize, "buffer over capacity"
        if size > st.peak_buffer:
            st.peak_buffer = size
        if self.buf_slots > st.peak_buffer_slots:
            st.peak_buffer_slots = self.buf_slots
        if deg > st.max_buffered_degree:
            st.max_buffered_degree = deg

    def _remove(self, v: int) -> list[int]:
        self.in_buf[v] = False
        nbrs = self.buf_nbrs.pop(v)
        self.buf_slots -= len(nbrs)
        return nbrs

    def _pop_max(self) -> int:
        heap = self.heap
        in_buf = self.in_buf
        assigned = self.assigned_nbrs
        while True:
            _, _, v, a = heapq.heappop(heap)
            if in_buf[v] and assigned[v] == a:
                return v

    def _place_and_flush(self, v: int, nbrs: list[int]) -> None:
        self.partition_vertex(v, nbrs)
        ev = self.evicted
        while ev:
            self.partition_vertex(*ev.popleft())

    def feed(self, rec: VertexRecord) -> None:
        v, nbrs = rec
        deg = len(nbrs)
        if not self.buffering or deg >= self.cfg.d_max:
            self._place_and_flush(v, nbrs)
            return
        part_of = self.part_of
        a = deg - [part_of[u] for u in nbrs].count(-1)
        if a == deg:
            self.stats.full_knowledge_evictions += 1
            self._place_and_flush(v, nbrs)
            return
        self._push(v, nbrs, a)
        if len(self.buf_nbrs) >= self.cfg.max_qsize:
            t = self._pop_max()
            self._place_and_flush(t, self._remove(t))

    def drain(self) -> None:
        while self.buf_nbrs:
            t = self._pop_max()
            self._place_and_flush(t, self._remove(t))

    def run(self, records: Iterable[VertexRecord]) -> tuple[PartitionState, RefinementInputs | None]:
        t0 = time.perf_counter()
        count = 0
        for rec in records:
            self.feed(rec)
            count += 1
        if count != self.n:
            raise ValueError(f"stream yielded {count} records, header says {self.n}")
        t1 = time.perf_counter()
        self.drain()
        if isinstance(self._sink, _PipelinedStage):
            self._sink.finish()
        t2 = time.perf_counter()
        self.stats.stream_ms = (t1 - t0) * 1000
        self.stats.drain_ms = (t2 - t1) * 1000
        return self.state(), self.refinement_inputs()

    def state(self) -> PartitionState:
        st = PartitionState(
            header=self.header,
            config=self.cfg,
            capacity=self.cap,
            part_of=self.part_of,
            vcount=self.vcount,
            degsum=self.degsum,
            assigned_nbrs=self.assigned_nbrs,
            stats=self.stats,
        )
        if self.stage is not None:
            st.subpart_of = self.stage.subpart_of
            st.sub_vcount = self.stage.sub_vcount
            st.sub_degsum = self.stage.sub_degsum
            st.stats.sub_fallback_count = self.stage.fallbacks
        return st

    def refinement_inputs(self) -> RefinementInputs | None:
        if self.stage is None:
            return None
        return RefinementInputs(self.stage.k_prime, self.stage.weights)


def run_streaming_phase(stream, cfg: PartitionerConfig, *, pipeline: bool = False):
    """Partition every vertex of ``stream`` (a :class:`GraphStream`).

    Returns ``(PartitionState, RefinementInputs | None)``; the second item is
    ``None`` for the baselines, which do not sub-partition.
    """
    return StreamingPartitioner(cfg, stream.header, pipeline=pipeline).run(stream)


def run_baseline(stream, cfg: PartitionerConfig) -> PartitionState:
    if cfg.algorithm not in ("fennel", "ldg"):
        raise ConfigError(f"run_baseline needs algorithm fennel or ldg, got {cfg.algorithm}")
    state, _ = StreamingPartitioner(cfg, stream.header).run(stream)
    return state
