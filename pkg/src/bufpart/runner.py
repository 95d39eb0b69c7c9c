"""End-to-end run: stream, optionally refine, and collect a manifest."""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field

from .graph_io import open_stream
from .refinement import TradeRecord, build, refine
from .streaming import PartitionState, PartitionerConfig, StreamingPartitioner


@dataclass
class RunResult:
    phase1: PartitionState
    final: PartitionState
    trades: list[TradeRecord] = field(default_factory=list)
    manifest: dict = field(default_factory=dict)

    @property
    def partition_map(self) -> list[int]:
        return self.final.partition_map()


def partition_file(path: str | os.PathLike, cfg: PartitionerConfig, *, refine_phase: bool = True,
                   pipeline: bool = False) -> RunResult:
    stream = open_stream(path)
    header = stream.header
    state, inputs = StreamingPartitioner(cfg, header, pipeline=pipeline).run(stream)
    m = header.edge_count
    build_ms = refine_ms = 0.0
    final, trades = state, []
    post_cut = state.stats.cut_edges
    refined = refine_phase and inputs is not None and cfg.k > 1
    if refined:
        t0 = time.perf_counter()
        refiner = build(state, inputs)
        t1 = time.perf_counter()
        final, trades = refine(state, refiner)
        t2 = time.perf_counter()
        build_ms, refine_ms = (t1 - t0) * 1000, (t2 - t1) * 1000
        post_cut = refiner.edge_cut
    st = state.stats
    manifest = {
        "config": cfg.to_dict(),
        "pipeline": pipeline,
        "refine": refined,
        "input": {"path": os.fspath(path), "vertex_count": header.vertex_count, "edge_count": m},
        "timings_ms": {
            "stream": round(st.stream_ms, 3),
            "drain": round(st.drain_ms, 3),
            "build": round(build_ms, 3),
            "refine": round(refine_ms, 3),
        },
        "capacity": state.capacity,
        "peak_buffer": st.peak_buffer,
        "peak_buffer_slots": st.peak_buffer_slots,
        "max_buffered_degree": st.max_buffered_degree,
        "buffered_vertices": st.buffered_total,
        "full_knowledge_evictions": st.full_knowledge_evictions,
        "trade_count": len(trades),
        "edge_cut_pre": st.cut_edges,
        "edge_cut_post": post_cut,
        "lambda_ec_pre": st.cut_edges / m if m else 0.0,
        "lambda_ec_post": post_cut / m if m else 0.0,
        "violations": {
            "partition_fallbacks": st.fallback_count,
            "subpartition_fallbacks": st.sub_fallback_count,
            "balance_violated": not final.balanced(),
        },
    }
    return RunResult(state, final, trades, manifest)
