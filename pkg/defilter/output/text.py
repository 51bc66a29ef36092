#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
CSV and plain-text output: reverse traces, bench tables and convergence curves.
"""

import os
import csv
import logging

logger = logging.getLogger(__name__)

TRACE_HEADER = ('iter', 'dt_psnr', 'dt_distance', 'gt_psnr', 'residual_norm')
BENCH_HEADER = ('filter', 'init_gt', 'final_gt', 'best_gt', 'init_dt', 'final_dt', 'best_dt',
                'gt_at_best_dt', 'n_images', 'error')
CURVES_HEADER = ('filter', 'iter', 'mean_psnr_gt', 'sd_mse')


def format_number(value):
    """Six significant digits; empty for None; strings pass through."""
    if value is None:
        return ''
    if isinstance(value, str):
        return value
    return f"{value:.6g}"


def _open_csv(filename):
    # Create directory if it doesn't exist
    os.makedirs(os.path.dirname(os.path.abspath(filename)), exist_ok=True)
    return open(filename, 'w', encoding='utf-8', newline='')


def write_trace_csv(trace, filename):
    """Save a ReverseTrace (or a list of record tuples) as CSV.

    Args:
        trace (ReverseTrace | list): Trace, or tuples
            (iter, dt_psnr, dt_distance, gt_psnr, residual_norm, ...)
        filename (str): Output path

    Returns:
        str: Path to the created file
    """
    if hasattr(trace, 'records'):
        rows = [(r.iter_index, r.dt_psnr, r.dt_distance, r.gt_psnr, r.residual_norm) for r in trace.records]
    else:
        rows = [tuple(r[:5]) for r in trace]

    try:
        with _open_csv(filename) as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(TRACE_HEADER)
            for t, dt_psnr, dt_distance, gt_psnr, residual in rows:
                writer.writerow([t, format_number(dt_psnr), format_number(dt_distance),
                                 format_number(gt_psnr), format_number(residual)])
        logger.info(f"Saved trace to {filename}")
        return filename
    except OSError as e:
        logger.error(f"Error saving trace to {filename}: {str(e)}")
        raise


def write_bench_csv(rows, filename):
    """Save BenchRows as CSV; PSNR columns are joint-channel PSNR in dB."""
    try:
        with _open_csv(filename) as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(BENCH_HEADER)
            for row in rows:
                writer.writerow([row.filter_name] + [format_number(v) for v in row.columns()]
                                + [format_number(row.gt_at_best_dt), row.n_images, row.error or ''])
        logger.info(f"Saved bench table to {filename}")
        return filename
    except OSError as e:
        logger.error(f"Error saving bench table to {filename}: {str(e)}")
        raise


def write_curves_csv(curves, filename):
    """Save convergence curves as tidy CSV.

    Args:
        curves (dict): label -> list of (iter, mean_psnr_gt, sd_mse)
        filename (str): Output path
    """
    try:
        with _open_csv(filename) as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(CURVES_HEADER)
            for label, curve in curves.items():
                for t, mean_psnr, sd_mse in curve:
                    writer.writerow([label, t, format_number(mean_psnr), format_number(sd_mse)])
        logger.info(f"Saved convergence curves to {filename}")
        return filename
    except OSError as e:
        logger.error(f"Error saving curves to {filename}: {str(e)}")
        raise


def format_bench_table(rows):
    """Fixed-width text table of the six PSNR columns."""
    headers = ('Filter', 'Init GT', 'Final GT', 'Best GT', 'Init DT', 'Final DT', 'Best DT')
    body = []
    for row in rows:
        cells = [row.filter_name]
        for value in row.columns():
            if value is None:
                cells.append('failed')
            elif isinstance(value, str):
                cells.append(value)
            else:
                cells.append(f"{value:.2f}")
        body.append(cells)
    widths = [max(len(str(line[i])) for line in [headers] + body) for i in range(len(headers))]
    lines = ["  ".join(str(cell).ljust(width) for cell, width in zip(line, widths)).rstrip()
             for line in [headers] + body]
    lines.insert(1, "  ".join('-' * width for width in widths))
    return "\n".join(lines)


def format_summary(summary):
    """Init/Final/Best lines for a single reverse run."""
    lines = []
    for prefix, name in (('gt', 'GT'), ('dt', 'DT')):
        if f'init_{prefix}' not in summary:
            continue
        lines.append(f"{name} PSNR  init {summary[f'init_{prefix}']:.2f} dB  "
                     f"final {summary[f'final_{prefix}']:.2f} dB  "
                     f"best {summary[f'best_{prefix}']:.2f} dB (iter {summary[f'best_index_{prefix}']})")
    return "\n".join(lines)
