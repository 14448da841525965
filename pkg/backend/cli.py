"""
Command-line entry point: fidelity and throughput experiments, resource
plans, graph and layout exports, tiling demos
"""
import argparse
import json
import logging
import sys
from typing import Dict, List, Optional

from pydantic import ValidationError

from modules.config import LOG_LEVELS, HarnessSettings, PlanRequest, resolve_config
from modules.decoding_graph import CodeFamily, CodeParams, build_graph, export_graph
from modules.errors import ConfigError, DecodingError, ParameterError
from modules.harness import cmd_fidelity, cmd_plan, cmd_throughput, result_schema, write_records
from modules.tiling import assign_boundaries, color_1d_time, color_hex_2d, extrude, partition_manifest, validate_coloring
from modules.windowing import WindowConfig, layout_manifest, sliding_layout, window_layout

logger = logging.getLogger("pwdec")


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _str_list(text: str) -> List[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _experiment_args(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="YAML experiment file")
    parser.add_argument("--family", choices=[f.value for f in CodeFamily])
    parser.add_argument("--distances", type=_int_list, help="e.g. 3,5,7")
    parser.add_argument("--p", type=float)
    parser.add_argument("--rounds", type=int)
    parser.add_argument("--rounds-per-d", type=int, dest="rounds_per_d")
    parser.add_argument("--shots", type=int)
    parser.add_argument("--workers", type=_int_list, help="e.g. 1,2,4,8")
    parser.add_argument("--w", type=int)
    parser.add_argument("--n-com", type=int, dest="n_com")
    parser.add_argument("--n-buf", type=int, dest="n_buf")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--decoder", choices=["uf", "oracle"])
    parser.add_argument("--growth", choices=["half", "full"])
    parser.add_argument("--modes", type=_str_list, help="subset of global,sliding,parallel,pipeline")
    parser.add_argument("--include-pipeline", action="store_true", default=None, dest="include_pipeline")
    parser.add_argument("--tau-rd", type=float, dest="tau_rd", help="seconds per round for r_gen and f (default 1e-6)")
    parser.add_argument("--output", help="JSON-lines output file (default stdout)")
    parser.add_argument("--csv", help="also write records as CSV")


EXPERIMENT_KEYS = (
    "family", "distances", "p", "rounds", "rounds_per_d", "shots", "workers", "w", "n_com",
    "n_buf", "seed", "decoder", "growth", "modes", "include_pipeline", "tau_rd", "output", "csv",
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pwdec", description="Parallel window decoding experiments")
    parser.add_argument(
        "--log-level", dest="log_level", type=str.upper, choices=LOG_LEVELS,
        help="default from PWDEC_LOG_LEVEL, else WARNING",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    _experiment_args(sub.add_parser("fidelity", help="logical error rates: global vs sliding vs parallel"))
    _experiment_args(sub.add_parser("throughput", help="decoding frequency against worker count"))

    plan = sub.add_parser("plan", help="workers, response time and qubit overhead")
    plan.add_argument("--d", type=int, required=True)
    plan.add_argument("--w", type=int)
    plan.add_argument("--tau-rd", type=float, required=True, dest="tau_rd")
    plan.add_argument("--tau-w", type=float, required=True, dest="tau_W")
    plan.add_argument("--tau-0", type=float, default=1e-9, dest="tau_0")
    plan.add_argument("--n-par", type=int, dest="n_par")
    plan.add_argument("--logical-qubits", type=int, default=100, dest="logical_qubits")
    plan.add_argument("--k", type=int, default=1)

    graph = sub.add_parser("export-graph", help="print the decoding graph as text records")
    graph.add_argument("--family", choices=[f.value for f in CodeFamily], default=CodeFamily.ROTATED_PLANAR.value)
    graph.add_argument("--d", type=int, required=True)
    graph.add_argument("--rounds", type=int, required=True)
    graph.add_argument("--p", type=float, default=0.0)

    tiling = sub.add_parser("tiling-demo", help="hexagonal or time-slice colouring with boundary kinds")
    tiling.add_argument("--kind", choices=["hex", "time"], default="hex")
    tiling.add_argument("--width", type=int, default=12)
    tiling.add_argument("--height", type=int, default=12)
    tiling.add_argument("--cell-size", type=float, default=2.0, dest="cell_size")
    tiling.add_argument("--rounds", type=int, default=0, help="extrude hex regions over this many rounds")
    tiling.add_argument("--w", type=int, default=3)

    layout = sub.add_parser("layout", help="print the window layout manifest")
    layout.add_argument("--rounds", type=int, required=True)
    layout.add_argument("--w", type=int, required=True)
    layout.add_argument("--sliding", action="store_true")
    layout.add_argument("--n-buf", type=int, dest="n_buf")

    sub.add_parser("schema", help="print the JSON schema of result records")
    return parser


def configure_logging(level: Optional[str]):
    logging.basicConfig(
        level=(level or "WARNING").upper(),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def _overrides(args: argparse.Namespace) -> Dict:
    return {key: getattr(args, key, None) for key in EXPERIMENT_KEYS}


def run(args: argparse.Namespace, out=None) -> int:
    out = out or sys.stdout
    if args.command in ("fidelity", "throughput"):
        cfg = resolve_config(args.config, _overrides(args))
        records = cmd_fidelity(cfg) if args.command == "fidelity" else cmd_throughput(cfg)
        write_records(records, cfg.output, cfg.csv, stream=out)
    elif args.command == "plan":
        req = PlanRequest(
            d=args.d, w=args.w, tau_rd=args.tau_rd, tau_W=args.tau_W, tau_0=args.tau_0,
            n_par=args.n_par, logical_qubits=args.logical_qubits, k=args.k,
        )
        out.write(cmd_plan(req).model_dump_json(indent=2) + "\n")
    elif args.command == "export-graph":
        params = CodeParams(family=args.family, distance=args.d, rounds=args.rounds, physical_error_rate=args.p)
        out.write(export_graph(build_graph(params)))
    elif args.command == "tiling-demo":
        if args.kind == "time":
            partition = color_1d_time(window_layout(args.rounds or 8 * args.w, args.w))
            order = ["A", "B"]
        else:
            partition = color_hex_2d((args.width, args.height), args.cell_size)
            if args.rounds:
                partition = extrude(partition, args.rounds)
            order = ["A", "B", "C"]
        order = [color for color in order if color in partition.colors]
        out.write(partition_manifest(partition, order))
        boundaries = assign_boundaries(partition, order)
        summary = {
            "valid": validate_coloring(partition),
            "colors": partition.colors,
            "rough_faces_by_color": {
                color: sum(b.rough_faces for b in boundaries.values() if b.color == color)
                for color in partition.colors
            },
        }
        out.write(json.dumps(summary) + "\n")
    elif args.command == "layout":
        if args.sliding:
            cfg = WindowConfig.sliding(args.w, args.n_buf)
            windows = sliding_layout(args.rounds, cfg)
        else:
            windows = window_layout(args.rounds, args.w)
        out.write(layout_manifest(windows))
    elif args.command == "schema":
        out.write(result_schema() + "\n")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = HarnessSettings.from_env()
    except ConfigError as exc:
        configure_logging(args.log_level)
        logger.error("%s", exc)
        return 2
    configure_logging(args.log_level or settings.log_level)
    try:
        return run(args)
    except (ConfigError, ValidationError, ParameterError) as exc:
        logger.error("%s", exc)
        return 2
    except (DecodingError, OSError) as exc:
        logger.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
