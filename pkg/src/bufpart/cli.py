"""Command line: ``bufpart {partition,evaluate,generate,convert,validate}``.

Exit codes: 0 success, 1 usage error, 2 input error, 3 internal invariant failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .graph_io import GraphFormatError, convert_edge_list, validate
from .metrics import PartitionMapError, evaluate, read_partition_map, write_partition_map
from .refinement import RefinementError
from .runner import partition_file
from .streaming import ALGORITHMS, ConfigError, PartitionerConfig
from .workbench import RmatParams, gen_rmat

EXIT_USAGE, EXIT_INPUT, EXIT_INTERNAL = 1, 2, 3
DEFAULT_EPSILON = {"edge": 0.10, "vertex": 0.05}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _dump(obj, fh=None) -> None:
    json.dump(obj, fh or sys.stdout, indent=2)
    (fh or sys.stdout).write("\n")


def cmd_partition(args) -> int:
    epsilon = args.epsilon if args.epsilon is not None else DEFAULT_EPSILON[args.balance]
    cfg = PartitionerConfig(
        k=args.k,
        subparts_per_partition=args.subparts,
        epsilon=epsilon,
        balance_mode=args.balance,
        d_max=args.dmax,
        max_qsize=0 if args.no_buffer else args.qsize,
        theta=args.theta,
        seed=args.seed,
        refine_threshold=args.thresh,
        algorithm=args.algo,
        sub_penalty_scale=args.sub_penalty_scale,
    )
    result = partition_file(args.input, cfg, refine_phase=not args.no_refine, pipeline=args.pipeline)
    os.makedirs(args.out_dir, exist_ok=True)
    outputs = {"partition_map": os.path.join(args.out_dir, "parts.txt")}
    write_partition_map(outputs["partition_map"], result.partition_map)
    if result.final.subpart_of is not None:
        outputs["subpartition_map"] = os.path.join(args.out_dir, "subparts.txt")
        write_partition_map(outputs["subpartition_map"], result.final.subpartition_map())
    if args.trade_log:
        outputs["trade_log"] = os.path.join(args.out_dir, "trades.jsonl")
        with open(outputs["trade_log"], "w", encoding="utf-8") as fh:
            for rec in result.trades:
                fh.write(rec.to_json() + "\n")
    manifest = dict(result.manifest, outputs=outputs)
    outputs["manifest"] = os.path.join(args.out_dir, "manifest.json")
    with open(outputs["manifest"], "w", encoding="utf-8") as fh:
        _dump(manifest, fh)
    if manifest["violations"]["balance_violated"]:
        print(
            f"warning: balance condition violated ({manifest['violations']['partition_fallbacks']} fallback "
            f"placements); raise --epsilon or use --balance vertex for graphs with very high-degree vertices",
            file=sys.stderr,
        )
    _dump({key: manifest[key] for key in ("lambda_ec_pre", "lambda_ec_post", "trade_count", "timings_ms")})
    return 0


def cmd_evaluate(args) -> int:
    part_map = read_partition_map(args.parts)
    epsilon = args.epsilon
    if epsilon is None and args.balance is not None:
        epsilon = DEFAULT_EPSILON[args.balance]
    report = evaluate(args.input, part_map, args.k, epsilon).to_dict()
    if report["epsilon_check"] is not None and args.balance is not None:
        report["epsilon_check"]["balance"] = args.balance
        report["epsilon_check"]["ok"] = report["epsilon_check"][f"{args.balance}_ok"]
    _dump(report)
    return 0


def cmd_generate(args) -> int:
    params = RmatParams(args.scale, args.edge_factor, args.a, args.b, args.c, args.d, args.seed)
    header = gen_rmat(params, args.out)
    _dump({"path": args.out, "vertex_count": header.vertex_count, "edge_count": header.edge_count})
    return 0


def cmd_convert(args) -> int:
    header = convert_edge_list(args.input, args.out)
    _dump({"path": args.out, "vertex_count": header.vertex_count, "edge_count": header.edge_count})
    return 0


def cmd_validate(args) -> int:
    report = validate(args.input)
    _dump(report.to_dict())
    return 0 if report.ok else EXIT_INPUT


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bufpart", description="Buffered streaming graph partitioner with sub-partition refinement.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("partition", help="partition an adjacency file")
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=_positive, required=True)
    p.add_argument("--epsilon", type=float, default=None, help="balance slack (default 0.10 edge / 0.05 vertex)")
    p.add_argument("--balance", choices=("edge", "vertex"), default="edge")
    p.add_argument("--algo", choices=ALGORITHMS, default="cuttana")
    p.add_argument("--dmax", type=_positive, default=1000)
    p.add_argument("--qsize", type=int, default=1_000_000)
    p.add_argument("--subparts", type=_positive, default=4096, help="sub-partitions per partition")
    p.add_argument("--theta", type=float, default=5.0)
    p.add_argument("--thresh", type=_positive, default=1, help="stop refining below this edge-cut gain")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sub-penalty-scale", type=float, default=PartitionerConfig.sub_penalty_scale)
    p.add_argument("--no-refine", action="store_true")
    p.add_argument("--no-buffer", action="store_true")
    p.add_argument("--pipeline", action="store_true", help="run sub-partitioning in a second thread")
    p.add_argument("--trade-log", action="store_true", help="write trades.jsonl")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_partition)

    e = sub.add_parser("evaluate", help="quality report for a partition map")
    e.add_argument("--input", required=True)
    e.add_argument("--parts", required=True)
    e.add_argument("--k", type=_positive, required=True)
    e.add_argument("--epsilon", type=float, default=None)
    e.add_argument("--balance", choices=("edge", "vertex"), default=None)
    e.set_defaults(func=cmd_evaluate)

    g = sub.add_parser("generate", help="write an R-MAT graph")
    g.add_argument("--scale", type=_positive, required=True)
    g.add_argument("--edge-factor", type=_positive, default=16)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--a", type=float, default=0.57)
    g.add_argument("--b", type=float, default=0.19)
    g.add_argument("--c", type=float, default=0.19)
    g.add_argument("--d", type=float, default=0.05)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser("convert", help="edge list to adjacency format")
    c.add_argument("--input", required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_convert)

    v = sub.add_parser("validate", help="check an adjacency file")
    v.add_argument("--input", required=True)
    v.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        if isinstance(exc, (GraphFormatError, PartitionMapError)):
            print(f"input error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        if isinstance(exc, ConfigError):
            print(f"usage error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (RefinementError, AssertionError) as exc:
        print(f"internal invariant failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
