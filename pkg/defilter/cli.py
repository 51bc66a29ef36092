#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Command line interface for defilter.

Subcommands:
    filter   apply one filter spec to an image
    reverse  recover the pre-filter image by fixed-point iteration
    analyze  predict reversibility of a linear filter (DFT or SVD)
    bench    Init/Final/Best x GT/DT PSNR table over a folder of images
    sr       zero-order super-resolution
    deconv   zero-order nonblind deconvolution
"""

import os
import re
import sys
import argparse
import dataclasses
import logging
import time

from defilter import __version__
from defilter.analysis import (
    analyze_filter_spec, analyze_linear_operator, load_matrix, matrix_from_conv
)
from defilter.applications import DeconvConfig, SrConfig, deconvolve, super_resolve, sr_from_low_res
from defilter.batch import load_bench_file, run_bench
from defilter.config import ConfigManager
from defilter.core import BestCriterion, ReverseConfig, StopPolicy, reverse_filter
from defilter.exceptions import (
    DefilterError, DivergenceError, ParamError, SpecParseError
)
from defilter.filters import (
    BOUNDARIES, apply_filter, filter_spec, kernel_from_spec, parse_filter_spec
)
from defilter.filters.external import DEFAULT_TIMEOUT, EXCHANGE_FORMATS, FORMAT_ENV
from defilter.filters.resample import DOWN_METHODS, UP_METHODS
from defilter.output import (
    format_bench_table, format_summary, save_analysis_report, save_bench_report,
    save_bench_to_pdf, save_reverse_report, write_bench_csv, write_curves_csv, write_trace_csv
)
from defilter.utils.cache import CacheManager
from defilter.utils.image import (
    FORMATS, find_images_in_directory, infer_format, load_image, save_image
)

logger = logging.getLogger("defilter")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_INTERRUPTED = 130


def configure_logging(log_level, log_file=None):
    """Configure logging level and output file.

    Args:
        log_level (str): Logging level (debug, info, warning, error)
        log_file (str, optional): Path to log file
    """
    # Set log level
    numeric_level = getattr(logging, log_level.upper(), None)
    if not isinstance(numeric_level, int):
        numeric_level = logging.INFO

    # Configure root logger
    root_logger = logging.getLogger()
    root_logger.setLevel(numeric_level)

    # Clear existing handlers
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')

    # Add console handler
    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setLevel(numeric_level)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    # Add file handler if log file is specified
    if log_file:
        os.makedirs(os.path.dirname(os.path.abspath(log_file)), exist_ok=True)
        file_handler = logging.FileHandler(log_file, encoding='utf-8')
        file_handler.setLevel(numeric_level)
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)


def exit_code_for(error):
    """Map an exception to the CLI's exit code."""
    if isinstance(error, KeyboardInterrupt):
        return EXIT_INTERRUPTED
    return getattr(error, 'exit_code', EXIT_FAILURE)


def parse_grid(text):
    """Parse 'HxW' into (H, W)."""
    match = re.fullmatch(r'\s*(\d+)\s*[xX]\s*(\d+)\s*', text or '')
    if not match or int(match.group(1)) < 1 or int(match.group(2)) < 1:
        raise ParamError(f"Grid must look like HxW with positive sizes, got '{text}'")
    return int(match.group(1)), int(match.group(2))


def apply_config_defaults(spec, config):
    """Fill spec defaults that the configuration overrides.

    Only values the spec string left at their built-in default are touched:
    the Gaussian support and the external timeout.
    """
    params = dict(spec.params)
    changed = False
    if spec.kind == 'gaussian' and params.get('support') is None:
        support = config.get('filters.gaussian_default_support')
        if support is not None:
            params['support'] = support
            changed = True
    elif spec.kind == 'external':
        timeout = config.get('external.timeout_seconds', DEFAULT_TIMEOUT)
        if params['timeout'] == DEFAULT_TIMEOUT and timeout != DEFAULT_TIMEOUT:
            params['timeout'] = timeout
            changed = True
    return filter_spec(spec.kind, **params) if changed else spec


def output_format(path, requested=None):
    """Pick the format of an output image.

    An explicit --format wins. Otherwise the exchange format named in the
    environment is used when it agrees with the file extension (this is how
    an external-filter child learns its exchange precision), and finally the
    extension decides.
    """
    if requested:
        return requested
    by_extension = infer_format(path)
    exchange = os.environ.get(FORMAT_ENV)
    if exchange in FORMATS and (exchange == by_extension or {exchange, by_extension} <= {'pfm', 'pfm32', 'pfm64'}):
        return exchange
    return by_extension


def _add_common_arguments(parser):
    parser.add_argument(
        "--config",
        help="Path to a JSON configuration file (default: ~/.defilter_config.json)"
    )
    parser.add_argument(
        "--log-level",
        choices=["debug", "info", "warning", "error"],
        default="info",
        help="Set logging level"
    )
    parser.add_argument(
        "--log-file",
        help="Save log to file"
    )


def _add_result_arguments(parser):
    parser.add_argument("--gt", help="Ground-truth image for GT metrics")
    parser.add_argument("--out-final", help="Where to save the final iterate")
    parser.add_argument("--out-best", help="Where to save the best iterate")
    parser.add_argument("--trace-csv", help="Where to save the per-iteration trace")
    parser.add_argument("--report-json", help="Where to save a JSON summary")
    parser.add_argument("--format", choices=FORMATS, help="Format of saved images (default: by extension)")


def build_parser():
    """Build the argument parser.

    Returns:
        argparse.ArgumentParser: Parser with one subparser per command
    """
    parser = argparse.ArgumentParser(
        prog="defilter",
        description=f"defilter v{__version__}: zero-order reverse image filtering",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter
    )
    parser.add_argument(
        "-v", "--version",
        action="version",
        version=f"defilter v{__version__}"
    )
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True

    # filter
    p = subparsers.add_parser("filter", help="Apply a filter to an image",
                              formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("-i", "--input", required=True, help="Input image (PNG or PFM)")
    p.add_argument("-o", "--output", required=True, help="Output image")
    p.add_argument("-s", "--spec", required=True, help="Filter spec, e.g. gaussian:sigma=2,support=21")
    p.add_argument("--boundary", choices=BOUNDARIES, help="Override the spec's boundary rule")
    p.add_argument("--format", choices=FORMATS, help="Output format (default: $DEFILTER_FORMAT or extension)")
    _add_common_arguments(p)

    # reverse
    p = subparsers.add_parser("reverse", help="Reverse a filter by fixed-point iteration",
                              formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--filtered", required=True, help="Filtered image J*")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("-s", "--spec", help="Filter spec to iterate")
    source.add_argument("--external-cmd", help="External filter command with {IN} and {OUT} placeholders")
    p.add_argument("--external-format", choices=EXCHANGE_FORMATS, help="Exchange format for --external-cmd")
    p.add_argument("--external-timeout", type=float, help="Seconds per external filter call")
    p.add_argument("-n", "--iters", type=int, help="Number of iterations (default: reverse.iterations)")
    p.add_argument("--init", help="Starting image (default: the filtered image)")
    p.add_argument("--early-stop", action="store_true", help="Stop when the DT error keeps rising")
    p.add_argument("--patience", type=int, help="Consecutive DT rises tolerated by --early-stop")
    p.add_argument("--best-by", choices=[c.value for c in BestCriterion],
                   help="Criterion for --out-best (default: gt with --gt, else dt)")
    _add_result_arguments(p)
    _add_common_arguments(p)

    # analyze
    p = subparsers.add_parser("analyze", help="Predict reversibility of a linear filter",
                              formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("-k", "--kernel", help="Linear filter spec (conv, gaussian, box, disk, unsharp, tikhonov, ...)")
    source.add_argument("--matrix", help="Dense filter matrix (.npy or text), column-major vectorization")
    p.add_argument("--grid", help="Image grid HxW (default: size of --image)")
    p.add_argument("--image", help="Image for the Omega energy fraction")
    p.add_argument("--svd", action="store_true", help="Analyze --kernel through its dense matrix instead of the DFT")
    p.add_argument("--report-json", help="Where to save the report")
    p.add_argument("--dump-spectrum", action="store_true", help="Include the full spectrum in the JSON report")
    p.add_argument("--marginal-tol", type=float, help="Tolerance for marginal frequencies")
    _add_common_arguments(p)

    # bench
    p = subparsers.add_parser("bench", help="Benchmark filters over a folder of images",
                              formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--images", required=True, help="Directory of ground-truth images")
    p.add_argument("--filters", required=True, help="Bench file: one filter spec per line, '#' comments")
    p.add_argument("-n", "--iters", type=int, help="Iterations per run (default: bench.iterations)")
    p.add_argument("--out-csv", help="Where to save the six-column table")
    p.add_argument("--curves-csv", help="Where to save PSNR-vs-iteration curves")
    p.add_argument("--json", help="Where to save the JSON summary")
    p.add_argument("--pdf", help="Where to save a PDF table")
    p.add_argument("--traces-dir", help="Directory for per-image trace CSVs")
    p.add_argument("-j", "--jobs", type=int, help="Parallel jobs (default: number of CPU cores)")
    p.add_argument("--recursive", action="store_true", help="Search the image directory recursively")
    p.add_argument("--no-cache", action="store_true", help="Disable caching of per-image results")
    p.add_argument("--no-progress", action="store_true", help="Hide the progress bar")
    _add_common_arguments(p)

    # sr
    p = subparsers.add_parser("sr", help="Zero-order super-resolution",
                              formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--low-res", help="Low-resolution image")
    source.add_argument("--upsampled", help="Low-resolution image already upsampled to the target size (J*)")
    p.add_argument("--scale", type=int, help="Magnification (default: sr.scale)")
    p.add_argument("-n", "--iters", type=int, help="Iterations (default: sr.iterations)")
    p.add_argument("--init", choices=['bicubic', 'lanczos3'], default='bicubic', help="Starting image")
    p.add_argument("--init-image", help="Starting image from another method (overrides --init)")
    p.add_argument("--down", choices=DOWN_METHODS, default='box', help="Downsampling in the down-up filter")
    p.add_argument("--up", choices=UP_METHODS, help="Upsampling in the down-up filter (default: sr.up_method)")
    _add_result_arguments(p)
    _add_common_arguments(p)

    # deconv
    p = subparsers.add_parser("deconv", help="Zero-order nonblind deconvolution",
                              formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--blurred", required=True, help="Blurred image J*")
    p.add_argument("-k", "--kernel", required=True, help="Known blur as a linear filter spec, e.g. disk:r=3")
    p.add_argument("-n", "--iters", type=int, help="Iterations (default: deconv.iterations)")
    _add_result_arguments(p)
    _add_common_arguments(p)

    return parser


def parse_arguments(argv=None):
    """Parse command line arguments.

    Returns:
        argparse.Namespace: Parsed arguments
    """
    parser = build_parser()
    args = parser.parse_args(argv)

    for name in ('iters', 'patience', 'jobs', 'scale'):
        value = getattr(args, name, None)
        if value is not None and value < 1:
            parser.error(f"--{name} must be >= 1")
    return args


def _save_outputs(args, result, spec_text=None):
    """Write the images, trace and report a reverse-style command asks for."""
    if args.out_final:
        save_image(result.final_image, args.out_final, args.format)
        logger.info(f"Saved final iterate to {args.out_final}")
    if args.out_best:
        save_image(result.best_image, args.out_best, args.format)
        logger.info(f"Saved best iterate (index {result.trace.best_index}) to {args.out_best}")
    if args.trace_csv:
        write_trace_csv(result.trace, args.trace_csv)
    if args.report_json:
        save_reverse_report(result, args.report_json, spec_text)


def _print_summary(trace):
    summary = trace.summary()
    print(f"Iterations: {summary['iterations']}")
    print(format_summary(summary))


def _print_divergence(error, trace_csv=None):
    if trace_csv and error.trace is not None and len(error.trace):
        write_trace_csv(error.trace, trace_csv)
    print(f"Diverged at iteration {error.iteration}: {error}")


def cmd_filter(args, config):
    spec = apply_config_defaults(parse_filter_spec(args.spec), config)
    if args.boundary:
        if 'boundary' not in spec.params:
            raise ParamError(f"Filter kind '{spec.kind}' has no boundary parameter")
        spec = filter_spec(spec.kind, **dict(spec.params, boundary=args.boundary))

    image = load_image(args.input)
    filtered = apply_filter(spec, image)
    fmt = output_format(args.output, args.format)
    save_image(filtered, args.output, fmt)
    logger.info(f"Applied {spec} to {args.input}; saved {args.output} as {fmt}")
    return EXIT_OK


def cmd_reverse(args, config):
    if args.spec:
        spec = apply_config_defaults(parse_filter_spec(args.spec), config)
    else:
        spec = filter_spec(
            'external',
            cmd=args.external_cmd,
            format=args.external_format or config.get('external.format', 'pfm'),
            timeout=args.external_timeout or config.get('external.timeout_seconds', DEFAULT_TIMEOUT),
        )

    j_star = load_image(args.filtered)
    ground_truth = load_image(args.gt) if args.gt else None
    initial = load_image(args.init) if args.init else None
    best_by = args.best_by or ('gt' if ground_truth is not None else 'dt')

    reverse_config = ReverseConfig(
        max_iters=args.iters or config.get('reverse.iterations', 10),
        track_ground_truth=ground_truth,
        stop_policy=StopPolicy.EARLY_STOP_ON_DT_RISE if args.early_stop else StopPolicy.FIXED_COUNT,
        patience=args.patience or config.get('reverse.patience', 5),
        keep_best_by=BestCriterion(best_by),
        initial=initial,
    )
    logger.info(f"Reversing {spec} on {args.filtered} for {reverse_config.max_iters} iterations")

    try:
        result = reverse_filter(spec, j_star, reverse_config)
    except DivergenceError as e:
        _print_divergence(e, args.trace_csv)
        raise

    _save_outputs(args, result, spec.to_string())
    _print_summary(result.trace)
    return EXIT_OK


def _format_constant(value):
    return "none (Omega is empty)" if value is None else f"{value:.6g}"


def _format_bound(report):
    bound = report.effective_constant
    if bound is None:
        return f"none, {report.reversibility.value} (max gain {report.max_gain:.6g})"
    return f"{bound:.6g}"



def cmd_analyze(args, config):
    image = load_image(args.image) if args.image else None
    if args.grid:
        grid = parse_grid(args.grid)
    elif image is not None:
        grid = (image.height, image.width)
    else:
        grid = None
    marginal_tol = args.marginal_tol if args.marginal_tol is not None else \
        config.get('analysis.marginal_tolerance', 1e-6)
    max_dimension = config.get('analysis.max_dense_dimension', 4096)

    if args.matrix:
        report = analyze_linear_operator(load_matrix(args.matrix), marginal_tol, max_dimension,
                                         label=os.path.basename(args.matrix))
    else:
        if grid is None:
            raise ParamError("analyze --kernel needs --grid or --image")
        spec = apply_config_defaults(parse_filter_spec(args.kernel), config)
        if not spec.is_linear and spec.kind != 'tikhonov':
            raise ParamError(f"Filter kind '{spec.kind}' is not linear; use the empirical contraction test instead")
        if args.svd:
            kernel = kernel_from_spec(spec, grid)
            matrix = matrix_from_conv(kernel, grid, spec.params.get('boundary', 'periodic'), max_dimension)
            report = analyze_linear_operator(matrix, marginal_tol, max_dimension, label=spec.to_string())
        else:
            report = analyze_filter_spec(spec, grid, image, marginal_tol)

    print(f"Filter: {report.label}")
    print(f"Class: {report.reversibility.value}")
    print(f"Contraction constant c: {_format_constant(report.contraction_constant)} ({report.scale} scale)")
    print(f"Omega fraction: {report.omega_fraction:.4f}")
    print(f"Max gain: {report.max_gain:.6g}")
    print(f"Whole-image bound: {_format_bound(report)}")
    for warning in report.warnings:
        print(f"Warning: {warning}")

    if args.report_json:
        save_analysis_report(report, args.report_json, include_spectrum=args.dump_spectrum)
    return EXIT_OK


def _trace_filename(label, image_path):
    safe = re.sub(r'[^A-Za-z0-9._=-]+', '_', label).strip('_') or 'filter'
    return f"{safe}__{os.path.splitext(os.path.basename(image_path))[0]}.csv"


def cmd_bench(args, config):
    if not os.path.isdir(args.images):
        raise ParamError(f"Directory not found: {args.images}")
    entries = [
        dataclasses.replace(entry,
                            spec=apply_config_defaults(entry.spec, config),
                            reverse_spec=(apply_config_defaults(entry.reverse_spec, config)
                                          if entry.reverse_spec is not None else None))
        for entry in load_bench_file(args.filters)
    ]
    image_paths = find_images_in_directory(args.images, recursive=args.recursive)
    if not image_paths:
        raise ParamError(f"No valid images found in {args.images}")

    cache_settings = config.get_cache_settings()
    cache_manager = None
    if cache_settings['enabled'] and not args.no_cache:
        cache_manager = CacheManager(cache_settings['cache_dir'], cache_settings['max_age_days'])

    bench = run_bench(
        image_paths,
        entries,
        iterations=args.iters or config.get('bench.iterations', 50),
        max_workers=args.jobs or config.get('bench.parallel_jobs'),
        cache_manager=cache_manager,
        progress=not args.no_progress,
    )

    print(format_bench_table(bench.rows))
    if args.out_csv:
        write_bench_csv(bench.rows, args.out_csv)
    if args.curves_csv:
        write_curves_csv(bench.curves, args.curves_csv)
    if args.json:
        save_bench_report(bench, args.json)
    if args.pdf:
        save_bench_to_pdf(bench, args.pdf)
    traces_dir = args.traces_dir
    if traces_dir is None and config.get('bench.dump_traces', False):
        traces_dir = 'traces'
    if traces_dir:
        for result in bench.results:
            if result['records']:
                write_trace_csv(result['records'],
                                os.path.join(traces_dir, _trace_filename(result['label'], result['image_path'])))
    return EXIT_OK


def cmd_sr(args, config):
    sr_config = SrConfig(
        scale=args.scale or config.get('sr.scale', 2),
        iterations=args.iters or config.get('sr.iterations', 10),
        init='provided' if args.init_image else args.init,
        init_image=load_image(args.init_image) if args.init_image else None,
        down_method=args.down,
        up_method=args.up or config.get('sr.up_method', 'bicubic'),
    )
    ground_truth = load_image(args.gt) if args.gt else None

    try:
        if args.low_res:
            result = sr_from_low_res(load_image(args.low_res), sr_config, ground_truth)
        else:
            result = super_resolve(load_image(args.upsampled), sr_config, ground_truth)
    except DivergenceError as e:
        _print_divergence(e, args.trace_csv)
        raise

    _save_outputs(args, result, sr_config.down_up_spec().to_string())
    _print_summary(result.trace)
    return EXIT_OK


def cmd_deconv(args, config):
    spec = apply_config_defaults(parse_filter_spec(args.kernel), config)
    if not spec.is_linear:
        raise ParamError(f"deconv needs a convolution kernel spec, got '{spec.kind}'")
    blurred = load_image(args.blurred)
    ground_truth = load_image(args.gt) if args.gt else None
    kernel = kernel_from_spec(spec, (blurred.height, blurred.width))
    deconv_config = DeconvConfig(
        kernel=kernel,
        iterations=args.iters or config.get('deconv.iterations', 30),
        boundary=spec.params.get('boundary', 'periodic'),
    )

    try:
        result = deconvolve(blurred, deconv_config, ground_truth)
    except DivergenceError as e:
        _print_divergence(e, args.trace_csv)
        raise

    report = result.spectral_report
    print(f"Kernel class: {report.reversibility.value} (c={_format_constant(report.contraction_constant)}, "
          f"expanding fraction {report.expanding_fraction:.4f})")
    print(f"Whole-image bound: {_format_bound(report)}")
    _save_outputs(args, result, spec.to_string())
    _print_summary(result.trace)
    return EXIT_OK


COMMANDS = {
    'filter': cmd_filter,
    'reverse': cmd_reverse,
    'analyze': cmd_analyze,
    'bench': cmd_bench,
    'sr': cmd_sr,
    'deconv': cmd_deconv,
}


def main(argv=None):
    """Main entry point for the command line interface."""
    args = parse_arguments(argv)
    configure_logging(args.log_level, args.log_file)

    logger.debug(f"defilter v{__version__}: {args.command}")
    start_time = time.time()

    try:
        config = ConfigManager(args.config)
        code = COMMANDS[args.command](args, config)
        logger.debug(f"Total execution time: {time.time() - start_time:.2f} seconds")
        return code

    except KeyboardInterrupt:
        logger.info("Process interrupted by user")
        return EXIT_INTERRUPTED

    except SpecParseError as e:
        logger.error(f"Invalid filter spec: {e}")
        print(e.diagnostic(), file=sys.stderr)
        return EXIT_USAGE

    except DefilterError as e:
        logger.error(str(e))
        logger.debug("Exception details:", exc_info=True)
        return exit_code_for(e)

    except Exception as e:
        logger.error(f"Unhandled error: {str(e)}")
        logger.debug("Exception details:", exc_info=True)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
