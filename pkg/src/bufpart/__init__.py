"""Buffered streaming vertex partitioner with sub-partition refinement."""

from .graph_io import GraphHeader, GraphStream, VertexRecord, convert_edge_list, open_stream, validate
from .metrics import QualityReport, evaluate
from .refinement import Refiner, build, refine
from .runner import RunResult, partition_file
from .streaming import PartitionerConfig, PartitionState, run_baseline, run_streaming_phase

__all__ = [
    "GraphHeader",
    "GraphStream",
    "VertexRecord",
    "convert_edge_list",
    "open_stream",
    "validate",
    "QualityReport",
    "evaluate",
    "Refiner",
    "build",
    "refine",
    "RunResult",
    "partition_file",
    "PartitionerConfig",
    "PartitionState",
    "run_baseline",
    "run_streaming_phase",
]

__version__ = "0.1.0"
