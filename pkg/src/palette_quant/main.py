import argparse
import asyncio
import sys
from pathlib import Path

from .bench.pipeline import run_quantize
from .bench.runner import render_bench_summary, render_ndc_summary, run_bench, run_ndc_comparison, run_scaling
from .config import (
    LOG_NAME, BenchConfig, QuantConfig, ReportFormat, default_home, discover_images,
    parse_int_list, parse_token_list,
)
from .core.histogram import SamplingMode
from .core.kmeans import DEFAULT_EPSILON, DEFAULT_MAX_ITERATIONS, Termination
from .errors import QuantError
from .utils.logging import Icons, logger, pretty_log, setup_logging

SAMPLING_CHOICES = [m.value for m in SamplingMode]


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--sampling", choices=SAMPLING_CHOICES, default=SamplingMode.UNIQUE.value)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--max-iters", type=int, default=DEFAULT_MAX_ITERATIONS)
    p.add_argument("--fixed-iters", type=int, default=None)


def parse_args(argv=None):
    parser = argparse.ArgumentParser(description="Palette Quant: weighted sort-means color quantization")
    parser.add_argument("--debug", action="store_true")
    parser.add_argument("--quiet", "-q", action="store_true", help="Suppress progress output")
    parser.add_argument("--verbose", "-v", action="store_true", help="Disable log truncation for debugging")
    sub = parser.add_subparsers(dest="command", required=True)

    q = sub.add_parser("quantize", help="Quantize a single image")
    q.add_argument("--input", type=Path, required=True)
    q.add_argument("--colors", type=int, required=True)
    q.add_argument("--method", required=True)
    q.add_argument("--init", default=None)
    q.add_argument("--output", type=Path, required=True)
    q.add_argument("--palette-out", type=Path, default=None)
    q.add_argument("--histogram-out", type=Path, default=None)
    q.add_argument("--report", choices=[f.value for f in ReportFormat], default=ReportFormat.JSON.value)
    q.add_argument("--report-out", type=Path, default=None)
    _add_common(q)

    b = sub.add_parser("bench", help="Run every method on every image and K")
    b.add_argument("--images", type=Path, required=True)
    b.add_argument("--methods", required=True)
    b.add_argument("--colors", required=True)
    b.add_argument("--runs", type=int, default=1)
    b.add_argument("--csv", type=Path, required=True)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--no-time", action="store_true", help="Leave time_ms blank for reproducible CSVs")
    b.add_argument("--rendered-mse", action="store_true", help="Append the MSE of the 8-bit output image as a last column")
    _add_common(b)

    n = sub.add_parser("ndc", help="Compare distance calculations of k-means and WSM")
    n.add_argument("--images", type=Path, required=True)
    n.add_argument("--colors", default="4,16,64,256")
    n.add_argument("--iters", type=int, default=20)
    n.add_argument("--seed", type=int, default=0)
    n.add_argument("--sampling", choices=[SamplingMode.NONE.value, SamplingMode.TWO_TO_ONE.value],
                   default=SamplingMode.NONE.value)
    n.add_argument("--csv", type=Path, default=None)

    s = sub.add_parser("scaling", help="WSM wall time as K grows")
    s.add_argument("--input", type=Path, required=True)
    s.add_argument("--colors", default="16,32,64,128,256")
    s.add_argument("--runs", type=int, default=3)
    s.add_argument("--method", default="wsm-fgy")
    s.add_argument("--csv", type=Path, default=None)
    _add_common(s)
    return parser.parse_args(argv)


def _termination(args) -> Termination:
    return Termination(epsilon=args.epsilon, max_iterations=args.max_iters, fixed_iterations=args.fixed_iters)


def dispatch(args) -> int:
    if args.command == "quantize":
        config = QuantConfig(
            input=args.input, output=args.output, k=args.colors, method=args.method, init=args.init,
            sampling=args.sampling, seed=args.seed, termination=_termination(args),
            palette_out=args.palette_out, histogram_out=args.histogram_out,
            report=args.report, report_out=args.report_out,
        )
        run_quantize(config)
        return 0

    if args.command == "bench":
        config = BenchConfig(
            images=tuple(discover_images(args.images)), methods=parse_token_list(args.methods),
            ks=parse_int_list(args.colors), csv_path=args.csv, runs=args.runs, seed_base=args.seed,
            sampling=args.sampling, termination=_termination(args), jobs=args.jobs,
            record_times=not args.no_time, rendered_mse=args.rendered_mse,
        )
        result = asyncio.run(run_bench(config))
        print(render_bench_summary(result), flush=True)
        return 0

    if args.command == "ndc":
        rows = run_ndc_comparison(
            discover_images(args.images), parse_int_list(args.colors), iterations=args.iters,
            seed=args.seed, sampling=SamplingMode(args.sampling), out_path=args.csv,
        )
        print(render_ndc_summary(rows), flush=True)
        return 0

    rows = run_scaling(
        args.input, parse_int_list(args.colors), runs=args.runs, method=args.method, seed=args.seed,
        sampling=SamplingMode(args.sampling), term=_termination(args), out_path=args.csv,
    )
    for row in rows:
        print(f"K={row['k']:>4}  median={row['median_time_ms']} ms  x{row['ratio_to_first']}", flush=True)
    return 0


def main(argv=None):
    args = parse_args(argv)
    base_dir = default_home()
    setup_logging(str(base_dir / LOG_NAME), args.debug, args.quiet, args.verbose)
    pretty_log("System Boot", f"{args.command}", icon=Icons.SYSTEM_BOOT)
    pretty_log(args.command, special_marker="BEGIN")
    try:
        code = dispatch(args)
    except (QuantError, OSError) as e:
        pretty_log("Fatal", str(e), icon=Icons.FAIL, level="ERROR")
        logger.error(f"{type(e).__name__}: {e}")
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(1)
    pretty_log(args.command, special_marker="END")
    pretty_log("Done", f"{args.command} finished", icon=Icons.SYSTEM_SHUT)
    sys.exit(code)


if __name__ == "__main__":
    main()
