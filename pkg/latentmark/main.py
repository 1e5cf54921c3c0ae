"""
Command-line entry point
run, ratio-table, bench-transform, print-config and plotdata subcommands
Exit codes: 0 success, 1 runtime failure, 2 invalid config or arguments
"""

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import pandas as pd

from . import __version__
from .config import load_config, render_config
from .errors import ConfigError, LatentMarkError
from .models import RngSeed
from .services.reporting import emit_plotdata, ratio_table
from .services.scenarios import run_scenario, transform_overhead_bench

logger = logging.getLogger("latentmark")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID = 2


def _number_list(kind):
    def parse(text: str) -> List:
        try:
            return [kind(part) for part in text.split(",") if part.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a comma-separated list of {kind.__name__}s, got {text!r}")

    return parse


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latentmark", description="Latent-space watermarking lab")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run a scenario config")
    run.add_argument("config", type=Path)
    run.add_argument("--seed", type=int, default=None, help="Override the master seed")
    run.add_argument("--workers", type=_positive_int, default=os.cpu_count() or 1, help="Trial worker processes")
    run.add_argument("--out", type=Path, default=None, help="Override the output directory")
    run.add_argument("--plotdata", action="store_true", help="Also write gnuplot data files")

    ratio = commands.add_parser("ratio-table", help="Whitenoise/stealthy budget ratios from a bits CSV")
    ratio.add_argument("csv", type=Path)
    ratio.add_argument("--targets", type=_number_list(float), default=[0.01, 0.05, 0.10])
    ratio.add_argument("--out", type=Path, default=None, help="Also write the table as CSV")

    bench = commands.add_parser("bench-transform", help="Storage and timing of the dense transform")
    bench.add_argument("--dims", type=_number_list(int), default=[1024, 4096])
    bench.add_argument("--element-bytes", type=int, choices=[4, 8], default=4)
    bench.add_argument("--repetitions", type=_positive_int, default=5)
    bench.add_argument("--seed", type=int, default=0)

    show = commands.add_parser("print-config", help="Print the fully resolved config")
    show.add_argument("config", type=Path)

    plot = commands.add_parser("plotdata", help="Split a scenario CSV into gnuplot data files")
    plot.add_argument("csv", type=Path)
    plot.add_argument("--out", type=Path, default=None)
    plot.add_argument("--series", type=lambda text: [part for part in text.split(",") if part], default=None)
    return parser


def _run(args) -> int:
    config = load_config(args.config)
    output_dir = str(args.out) if args.out is not None else None
    config = config.with_overrides(seed=args.seed, output_dir=output_dir)
    artifacts = run_scenario(config, workers=args.workers, plotdata=args.plotdata or None)
    print(artifacts.csv_path)
    print(artifacts.summary_path)
    for path in artifacts.plot_paths:
        print(path)
    return EXIT_OK


def _ratio_table(args) -> int:
    table = ratio_table(args.csv, args.targets)
    print(table.to_string(index=False, float_format=lambda value: f"{value:.4g}"))
    if args.out is not None:
        table.to_csv(args.out, index=False, lineterminator="\n", float_format="%.10g")
    return EXIT_OK


def _bench_transform(args) -> int:
    rows = transform_overhead_bench(args.dims, args.repetitions, args.element_bytes, RngSeed(master=args.seed))
    frame = pd.DataFrame([row.model_dump() for row in rows])
    print(frame.to_string(index=False))
    return EXIT_OK


def _print_config(args) -> int:
    print(render_config(load_config(args.config)), end="")
    return EXIT_OK


def _plotdata(args) -> int:
    for path in emit_plotdata(args.csv, args.out, series=args.series):
        print(path)
    return EXIT_OK


COMMANDS = {
    "run": _run,
    "ratio-table": _ratio_table,
    "bench-transform": _bench_transform,
    "print-config": _print_config,
    "plotdata": _plotdata,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    logging.basicConfig(level=args.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (LatentMarkError, OSError) as exc:
        logger.error("%s failed: %s", args.command, exc)
        return EXIT_FAILURE
    except Exception:
        logger.exception("%s failed unexpectedly", args.command)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
