#!/usr/bin/env python3
"""
Command-line entry points

    reduce  --model <dir> --interval t1,t2 --orders a:b --methods tlbt,tlirka ...
    convert --mat beam.mat --out models/beam --name beam

Exit codes: 0 full grid success, 2 partial failure, 1 configuration error.
"""

import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from relmor.config import get_settings
from relmor.errors import RelmorError
from relmor.harness.experiment import ExperimentConfig, run_experiment
from relmor.harness.model_package import convert_benchmark

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PARTIAL = 2


def parse_orders(text: str) -> List[int]:
    """'5:10' (inclusive range) or '5,7,9'"""
    try:
        if ":" in text:
            low, high = (int(part) for part in text.split(":"))
            return list(range(low, high + 1))
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"orders must read 'a:b' or 'a,b,...', got {text!r}")


def parse_int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def parse_name_list(text: str) -> List[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relmor", description="Time-limited relative-error model order reduction")
    sub = parser.add_subparsers(dest="command", required=True)

    reduce = sub.add_parser("reduce", help="Run a method x order grid on one model package")
    reduce.add_argument("--model", required=True, help="Model package directory or manifest")
    reduce.add_argument("--interval", required=True, help="Time interval 't1,t2' in seconds")
    reduce.add_argument("--orders", required=True, type=parse_orders, help="Orders 'a:b' or 'a,b,...'")
    reduce.add_argument("--methods", default="tlbt,tlbst,tlirka,tlrhmora", type=parse_name_list,
                        help="Comma-separated subset of tlbt,tlbst,tlirka,tlrhmora")
    reduce.add_argument("--epsilon", type=float, default=1e-4, help="Feedthrough regularization")
    reduce.add_argument("--max-iter", type=int, default=50, help="Iteration cap for tlirka/tlrhmora")
    reduce.add_argument("--tol", type=float, default=1e-6, help="Relative eigenvalue-change tolerance")
    reduce.add_argument("--seeds", type=parse_int_list, default=[0], help="Comma-separated seeds")
    reduce.add_argument("--restarts", type=int, default=3, help="Automatic restarts per iterative run")
    reduce.add_argument("--init", default="random-stable", choices=["random-stable", "dominant-eigs"],
                        help="Initial guess strategy")
    reduce.add_argument("--convention", default="regularized", choices=["regularized", "original"],
                        help="Feedthrough convention for the relative error")
    reduce.add_argument("--orientation", default="right", choices=["left", "right"],
                        help="Spectral factor orientation")
    reduce.add_argument("--out", default=None, help="Report CSV path")
    reduce.add_argument("--impulse-out", default=None, help="Directory for impulse-error CSVs")
    reduce.add_argument("--impulse-samples", type=int, default=501, help="Samples per impulse-error CSV")
    reduce.add_argument("--workers", type=int, default=None, help="Parallel cells (default RELMOR_WORKERS)")

    convert = sub.add_parser("convert", help="Convert benchmark matrices to a model package")
    convert.add_argument("--mat", default=None, help="MATLAB .mat file holding A, B, C (and D)")
    for name in ("A", "B", "C", "D"):
        convert.add_argument(f"--{name}", dest=f"mtx_{name}", default=None, help=f"MatrixMarket file for {name}")
    convert.add_argument("--out", required=True, help="Output package directory")
    convert.add_argument("--name", required=True, help="Model name for the manifest")
    return parser


def run_reduce(args: argparse.Namespace) -> int:
    try:
        cfg = ExperimentConfig(
            model_path=args.model, interval=args.interval, orders=args.orders, methods=args.methods,
            epsilon=args.epsilon, max_iter=args.max_iter, conv_tol=args.tol, seeds=args.seeds,
            restarts=args.restarts, init_strategy=args.init, convention=args.convention,
            orientation=args.orientation, out=args.out, impulse_out=args.impulse_out,
            impulse_samples=args.impulse_samples, workers=args.workers,
        )
    except ValidationError as e:
        print(f"❌ Invalid configuration:\n{e}")
        return EXIT_CONFIG

    try:
        report = run_experiment(cfg)
    except (RelmorError, OSError) as e:
        logger.error(f"Experiment aborted: {e}")
        print(f"\n❌ Experiment aborted: {e}")
        return EXIT_CONFIG

    print("\n" + "=" * 50)
    print("REDUCTION REPORT")
    print("=" * 50)
    print(report.table())
    failed = report.failed()
    print(f"\nCells: {len(report.entries) - len(failed)}/{len(report.entries)} succeeded")
    for entry in failed:
        seed = "" if entry.seed is None else f" seed={entry.seed}"
        print(f"   ❌ {entry.method.value} r={entry.order}{seed}: {entry.error}")
    if cfg.out:
        print(f"Report: {cfg.out}")
    print("=" * 50)
    status = "✅" if report.complete else "❌"
    print(f"{status} {'Grid completed' if report.complete else 'Grid completed with failures'}")
    return EXIT_OK if report.complete else EXIT_PARTIAL


def run_convert(args: argparse.Namespace) -> int:
    if args.mat:
        sources = {"mat": args.mat}
    else:
        sources = {name: getattr(args, f"mtx_{name}") for name in ("A", "B", "C", "D")
                   if getattr(args, f"mtx_{name}")}
    if not args.mat and not all(name in sources for name in ("A", "B", "C")):
        print("❌ convert needs --mat or all of --A, --B, --C")
        return EXIT_CONFIG
    try:
        package = convert_benchmark(sources, args.out, args.name)
    except (RelmorError, OSError, ValueError) as e:
        print(f"❌ Conversion failed: {e}")
        return EXIT_CONFIG
    model = package.model
    print(f"✅ {package.name}: n={model.n}, m={model.m}, p={model.p} written to {args.out}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, get_settings().log_level),
        format="%(asctime)s - %(levelname)s - %(message)s",
    )
    if args.command == "reduce":
        return run_reduce(args)
    return run_convert(args)


if __name__ == "__main__":
    # Load environment variables
    from dotenv import load_dotenv
    load_dotenv()

    sys.exit(main())
