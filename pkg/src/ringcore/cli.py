"""Command-line interface: build, eval, bench and inspect."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from pydantic import ValidationError

from .data_models import BackendKind, ClusteringParams, RunConfig
from .exceptions import DataSourceError, RingcoreError, TupleLengthError
from .logging_utils import configure_logging, set_package_level
from .pipeline import coreset_summary, eval_summary, run_bench, run_build, run_eval, run_inspect

LOGGER = configure_logging(__name__)

EXIT_OK = 0
EXIT_THRESHOLD = 1
EXIT_PARSE = 2
EXIT_CONFIG = 3

BACKENDS = {
    "euclidean": BackendKind.EUCLIDEAN,
    "graph": BackendKind.GRAPH,
    "wasserstein": BackendKind.WASSERSTEIN,
    "frechet": BackendKind.FRECHET,
}


def _add_dataset_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", help="Dataset path or http(s) URL.")
    parser.add_argument("--points", default=None, help="Graph backend: file of data-point vertex ids.")
    parser.add_argument("--backend", choices=sorted(BACKENDS), default="euclidean")
    parser.add_argument("--p", type=float, default=1.0, help="Wasserstein power.")
    parser.add_argument("--l", dest="ell", type=int, default=None, help="Wasserstein tuple length.")
    parser.add_argument("--m-cap", type=int, default=None, help="Frechet: maximum curve length.")


def _add_params_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--k", type=int, required=True)
    parser.add_argument("--z", type=float, default=1.0)
    parser.add_argument("--eps", type=float, default=0.2)
    parser.add_argument("--delta", type=float, default=0.01)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--mode", choices=["vanilla", "assignment_preserving"], default="vanilla")
    parser.add_argument("--c0", dest="budget_c0", type=float, default=None)
    parser.add_argument("--c1", dest="budget_c1", type=float, default=None)
    parser.add_argument("--budget-form", choices=["eps5", "eps3_with_dim"], default=None)
    parser.add_argument("--alpha-budget", type=float, default=None)
    parser.add_argument("--out", dest="output", type=Path, default=None, help="Output JSON path.")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ringcore", description="Ring-decomposition coresets for (k, z)-clustering.")
    parser.add_argument("--threads", type=int, default=None, help="Worker cap (mirrors RINGCORE_THREADS).")
    parser.add_argument("--log-level", default=None)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    build = sub.add_parser("build", help="Build a coreset and write it as JSON.")
    _add_dataset_args(build)
    _add_params_args(build)
    build.add_argument("--fair", action="store_true", help="Partition by group labels first.")
    build.add_argument("--csv", action="store_true", help="Also write a CSV mirror.")

    evaluate = sub.add_parser("eval", help="Evaluate a coreset against its dataset.")
    _add_dataset_args(evaluate)
    _add_params_args(evaluate)
    evaluate.add_argument("--coreset", required=True)
    evaluate.add_argument("--trials", type=int, default=None)
    evaluate.add_argument("--threshold", type=float, default=None)
    evaluate.add_argument(
        "--constraint-mode", choices=["none", "induced", "random", "mixed"], default="none"
    )
    evaluate.add_argument("--constraint", default=None, help="Constraint JSON: {'centers': [...], 'masses': [...]}.")
    evaluate.add_argument("--plan-out", type=Path, default=None, help="CSV of the dataset's plan for --constraint.")

    bench = sub.add_parser("bench", help="Time builds on synthetic instances.")
    _add_params_args(bench)
    bench.add_argument(
        "--profile", choices=["gaussian", "rings", "tuples", "graph", "curves"], default="gaussian"
    )
    bench.add_argument("--sizes", type=int, nargs="+", default=[500, 1000, 2000, 4000, 8000])

    inspect = sub.add_parser("inspect", help="Dump the ring decomposition of every cluster.")
    _add_dataset_args(inspect)
    _add_params_args(inspect)
    return parser


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    return build_parser().parse_args(argv)


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = vars(args)
    params = ClusteringParams(k=args.k, z=args.z, eps=args.eps, delta=args.delta, seed=args.seed)
    fields = {name: values[name] for name in RunConfig.model_fields if name in values and values[name] is not None}
    fields.pop("params", None)
    if "backend" in fields:
        fields["backend"] = BACKENDS[fields["backend"]]
    return RunConfig(params=params, **fields)


def run_cli(argv: Sequence[str] | None = None) -> int:
    args = parse_args(argv)
    if args.log_level:
        set_package_level(args.log_level)
    try:
        config = config_from_args(args)
        if config.subcommand == "build":
            print(coreset_summary(run_build(config)))
        elif config.subcommand == "eval":
            report = run_eval(config)
            print(eval_summary(report))
            if not report.passed:
                return EXIT_THRESHOLD
        elif config.subcommand == "bench":
            print(run_bench(config).to_string(index=False))
        else:
            payload = run_inspect(config)
            print(f"inspected {len(payload['clusters'])} clusters")
    except (DataSourceError, TupleLengthError) as exc:
        LOGGER.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ValidationError, RingcoreError, ValueError) as exc:
        LOGGER.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    return run_cli(argv)


if __name__ == "__main__":
    sys.exit(main())
