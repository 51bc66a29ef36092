#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
JSON reports.
"""

import os
import json
import logging

logger = logging.getLogger(__name__)


def save_json(data, filename):
    """Write a JSON document (UTF-8, indented, stable key order)."""
    try:
        os.makedirs(os.path.dirname(os.path.abspath(filename)), exist_ok=True)
        with open(filename, 'w', encoding='utf-8') as f:
            json.dump(data, f, indent=2, ensure_ascii=False)
            f.write("\n")
        logger.info(f"Saved report to {filename}")
        return filename
    except (OSError, TypeError, ValueError) as e:
        logger.error(f"Error saving report to {filename}: {str(e)}")
        raise


def save_analysis_report(report, filename, include_spectrum=False):
    """Save a SpectralReport or LinearOperatorReport."""
    return save_json(report.to_dict(include_spectrum=include_spectrum), filename)


def reverse_result_to_dict(result, spec_text=None):
    trace = result.trace
    out = {
        'filter': spec_text,
        'iterations': len(trace) - 1,
        'best_by': trace.best_by.value,
        'best_index': trace.best_index,
        'converged': trace.converged,
        'stopped_early': trace.stopped_early,
        'summary': trace.summary(),
    }
    if result.spectral_report is not None:
        out['spectral_report'] = result.spectral_report.to_dict()
    return out


def save_reverse_report(result, filename, spec_text=None):
    """Save the summary of a ReverseResult."""
    return save_json(reverse_result_to_dict(result, spec_text), filename)


def save_bench_report(bench, filename):
    """Save a BenchReport: rows, curves and the run protocol."""
    data = {
        'protocol': {
            'iterations': bench.iterations,
            'images': [os.path.basename(path) for path in bench.images],
            'metric': 'joint-channel PSNR, peak 1.0, capped at 99 dB',
            'averaging': 'arithmetic mean of per-image PSNR',
        },
        'rows': [row.to_dict() for row in bench.rows],
        'curves': {
            label: [{'iter': t, 'mean_psnr_gt': mean_psnr, 'sd_mse': sd_mse}
                    for t, mean_psnr, sd_mse in curve]
            for label, curve in bench.curves.items()
        },
    }
    return save_json(data, filename)
