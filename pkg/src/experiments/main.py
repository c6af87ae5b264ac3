import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Union

from pydantic import TypeAdapter, ValidationError

from ..core.inequality import (evaluate, from_protocol_nn22, load_inequality,
                               named_inequality, nndd_from_protocol)
from ..core.infotheory import binary_symmetric, clock_from_biases
from ..core.nsbox import (NSBox, biases, box_from_file, from_collins_gisin,
                          nonsignaling_residual)
from ..core.oracle import fano_lhs, ic_lhs, lhopital_limit
from ..core.protocol import load_protocol
from ..shared.config import Config
from ..shared.errors import BellError
from ..shared.schemas import BoxFile, CollinsGisinFile, ExperimentResult
from .region import repro_fig2
from .runners import (repro_concavity, repro_correlated, repro_d2dd,
                      repro_oracle, repro_qbound, repro_result1, repro_uffink)
from .search3322 import repro_3322

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INVALID = 2

BOX_FILES = TypeAdapter(Union[CollinsGisinFile, BoxFile])


def _experiments(args: argparse.Namespace) -> Dict[str, Callable[[], ExperimentResult]]:
    return {
        "uffink": repro_uffink,
        "result1": lambda: repro_result1(args.n or 6),
        "qbound": lambda: repro_qbound(args.n or 6),
        "3322": lambda: repro_3322(args.jobs, progress=sys.stderr.isatty()),
        "fig2": lambda: repro_fig2(args.grid_step, args.jobs).as_result(),
        "d2dd": lambda: repro_d2dd(args.d or 5, args.trials or 200, args.seed),
        "correlated": lambda: repro_correlated(args.trials or 20, args.seed),
        "oracle": lambda: repro_oracle(args.trials, args.seed, args.jobs),
        "concavity": lambda: repro_concavity(args.trials or 10_000, args.seed),
    }


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
        logger.info(f"Wrote {out}")
    else:
        print(text)


def _checks_csv(results: List[ExperimentResult]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["experiment", "check", "expected", "actual", "tolerance", "provenance", "passed"])
    for result in results:
        for c in result.checks:
            writer.writerow([result.name, c.name, c.expected, c.actual, c.tolerance, c.provenance, c.passed])
    return buffer.getvalue()


def _load_any_box(path: str) -> NSBox:
    """Full tables or Collins-Gisin files"""
    data = BOX_FILES.validate_json(Path(path).read_text())
    if isinstance(data, CollinsGisinFile):
        return from_collins_gisin(data)
    return box_from_file(data)


def cmd_validate_box(args: argparse.Namespace) -> int:
    box = _load_any_box(args.box)
    report = {"shape": box.shape, "nonsignaling_residual": nonsignaling_residual(box)}
    if box.d_a == box.d_b:
        report["biases"] = biases(box).values.tolist()
    _emit(json.dumps(report, indent=2), args.out)
    return EXIT_OK


def _inequality(args: argparse.Namespace):
    if args.inequality:
        return load_inequality(args.inequality)
    if args.family == "protocol":
        protocol = load_protocol(args.protocol)
        if protocol.d == 2 and args.variant is None:
            return from_protocol_nn22(protocol)
        return nndd_from_protocol(protocol, args.t, args.variant or "difference")
    return named_inequality(args.family, n=args.n or 2, d=args.d or 2, t=args.t, eps=args.eps)


def cmd_derive(args: argparse.Namespace) -> int:
    _emit(_inequality(args).to_file().model_dump_json(indent=2), args.out)
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    evaluation = evaluate(_inequality(args), biases(_load_any_box(args.box)), args.tol)
    _emit(evaluation.to_response().model_dump_json(indent=2), args.out)
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    box = _load_any_box(args.box)
    protocol = load_protocol(args.protocol)
    if protocol.d == 2:
        channel = binary_symmetric(args.e_c)
    else:
        # symbol kept with probability (1 + (d - 1) e_c) / d, otherwise uniform
        channel = clock_from_biases(protocol.d, [-args.e_c] * (protocol.d // 2))
    evaluation = ic_lhs(box, protocol, channel)
    report = evaluation.to_response().model_dump()
    report["fano_lhs"] = fano_lhs(box, protocol, channel)
    if protocol.d == 2:
        report["lhopital_limit"] = lhopital_limit(box, protocol)
    _emit(json.dumps(report, indent=2), args.out)
    return EXIT_OK


def cmd_repro(args: argparse.Namespace) -> int:
    experiments = _experiments(args)
    names = list(experiments) if args.name == "all" else [args.name]

    if args.format == "csv" and names == ["fig2"]:
        scan = repro_fig2(args.grid_step, args.jobs)
        if args.out:
            scan.to_csv(args.out)
        else:
            scan.write_csv(sys.stdout)
        return EXIT_OK if scan.as_result().passed else EXIT_FAILED

    results = [experiments[name]() for name in names]
    if args.format == "csv":
        _emit(_checks_csv(results), args.out)
    else:
        payload = [r.model_dump() for r in results]
        _emit(json.dumps(payload[0] if len(payload) == 1 else payload, indent=2, default=str), args.out)

    failed = [r.name for r in results if not r.passed]
    if failed:
        logger.error(f"Failed experiments: {', '.join(failed)}")
        return EXIT_FAILED
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="icbounds",
        description="Quantum Bell inequalities from information causality",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--out", help="Write output to this path instead of stdout")

    def family(p: argparse.ArgumentParser) -> None:
        p.add_argument("--family", default="uffink", choices=["uffink", "result1", "d2dd", "correlated", "protocol"])
        p.add_argument("--inequality", help="Inequality file, overrides --family")
        p.add_argument("--protocol", help="Protocol file for --family protocol")
        p.add_argument("--variant", choices=["difference", "sum"], default=None)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--d", type=int, default=None)
        p.add_argument("--t", type=int, default=1)
        p.add_argument("--eps", type=float, default=0.0)

    p = sub.add_parser("validate-box", help="Validate a box file and print its biases")
    p.add_argument("box")
    common(p)
    p.set_defaults(handler=cmd_validate_box)

    p = sub.add_parser("derive", help="Print an inequality file")
    family(p)
    common(p)
    p.set_defaults(handler=cmd_derive)

    p = sub.add_parser("evaluate", help="Evaluate an inequality on a box")
    p.add_argument("--box", required=True)
    p.add_argument("--tol", type=float, default=None, help="Violation tolerance")
    family(p)
    common(p)
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("oracle", help="Exact IC evaluation of a box and protocol")
    p.add_argument("--box", required=True)
    p.add_argument("--protocol", required=True)
    p.add_argument("--e-c", dest="e_c", type=float, default=1.0)
    common(p)
    p.set_defaults(handler=cmd_oracle)

    p = sub.add_parser("repro", help="Run a named experiment, or all of them")
    p.add_argument("name", choices=["uffink", "result1", "qbound", "3322", "fig2", "d2dd", "correlated", "oracle", "concavity", "all"])
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--grid-step", dest="grid_step", type=float, default=0.005)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=Config.DEFAULT_SEED)
    p.add_argument("--jobs", type=int, default=Config.JOBS)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    common(p)
    p.set_defaults(handler=cmd_repro)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point for the icbounds CLI"""
    logging.basicConfig(
        level=getattr(logging, Config.LOG_LEVEL.upper()),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[
            logging.StreamHandler(),
        ],
    )
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (BellError, ValidationError) as e:
        logger.error(f"Invalid input: {e}")
        return EXIT_INVALID
    except FileNotFoundError as e:
        logger.error(f"File not found: {e}")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
