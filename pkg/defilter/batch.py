#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Benchmark harness: filter every image, reverse it, and tabulate
Init/Final/Best PSNRs against ground truth (GT) and the filtered input (DT).
"""

import os
import re
import time
import logging
import traceback
from dataclasses import dataclass, field
from typing import List, Optional
from concurrent.futures import ProcessPoolExecutor, as_completed

import numpy as np
from tqdm import tqdm

from defilter.core import BestCriterion, ReverseConfig, reverse_filter
from defilter.exceptions import DefilterError, DivergenceError, ParamError, SpecParseError
from defilter.filters import apply_filter, parse_filter_spec
from defilter.utils.image import find_images_in_directory, load_image

logger = logging.getLogger(__name__)

COLUMNS = ('init_gt', 'final_gt', 'best_gt', 'init_dt', 'final_dt', 'best_dt')

_LABEL = re.compile(r'^\[([^\]]+)\]\s*(.*)$')


@dataclass(frozen=True)
class BenchEntry:
    """One line of a bench file.

    Args:
        label (str): Display name of the row
        spec (FilterSpec): Filter that produces J* from the ground truth
        reverse_spec (FilterSpec, optional): Filter iterated during reversal;
            defaults to spec
    """

    label: str
    spec: object
    reverse_spec: object = None

    @property
    def iterated_spec(self):
        return self.reverse_spec if self.reverse_spec is not None else self.spec

    def cache_params(self):
        return (self.spec.to_string(), self.iterated_spec.to_string())


@dataclass
class BenchRow:
    """Averaged PSNRs of one filter over all bench images.

    Each column holds a mean in dB, the string "diverged(iter=k)" when a
    run blew up before its final iterate, or None when every image failed.
    """

    filter_name: str
    init_gt: object = None
    final_gt: object = None
    best_gt: object = None
    init_dt: object = None
    final_dt: object = None
    best_dt: object = None
    gt_at_best_dt: object = None
    n_images: int = 0
    failed_images: int = 0
    error: Optional[str] = None

    def columns(self):
        return [getattr(self, name) for name in COLUMNS]

    def to_dict(self):
        out = {'filter': self.filter_name}
        for name in COLUMNS + ('gt_at_best_dt',):
            out[name] = getattr(self, name)
        out.update({'n_images': self.n_images, 'failed_images': self.failed_images, 'error': self.error})
        return out


@dataclass
class BenchReport:
    """Everything a bench run produces."""

    rows: List[BenchRow]
    curves: dict
    results: list
    iterations: int
    images: List[str] = field(default_factory=list)


def parse_bench_line(line, lineno=0):
    """Parse '[NAME] spec => reverse_spec'; returns None for blanks and comments."""
    text = line.strip()
    if not text or text.startswith('#'):
        return None

    label = None
    match = _LABEL.match(text)
    if match:
        label, text = match.group(1).strip(), match.group(2).strip()

    forward_text, arrow, reverse_text = text.partition('=>')
    try:
        spec = parse_filter_spec(forward_text)
        reverse_spec = parse_filter_spec(reverse_text) if arrow else None
    except SpecParseError as e:
        raise SpecParseError(f"Bench line {lineno}: {e}", e.text, e.position) from e

    if label is None:
        label = spec.to_string() if reverse_spec is None else f"{spec.to_string()} => {reverse_spec.to_string()}"
    return BenchEntry(label=label, spec=spec, reverse_spec=reverse_spec)


def load_bench_file(path):
    """Read a bench file: one filter spec per line, '#' comments.

    Returns:
        list: BenchEntry objects in file order
    """
    if not os.path.isfile(path):
        raise ParamError(f"Bench file not found: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        lines = f.readlines()

    entries = []
    for lineno, line in enumerate(lines, start=1):
        entry = parse_bench_line(line, lineno)
        if entry is not None:
            entries.append(entry)
    if not entries:
        raise ParamError(f"Bench file {path} lists no filters")

    labels = [e.label for e in entries]
    duplicates = sorted({label for label in labels if labels.count(label) > 1})
    if duplicates:
        raise ParamError(f"Duplicate bench labels: {', '.join(duplicates)}")
    logger.info(f"Loaded {len(entries)} bench filters from {path}")
    return entries


def run_bench_job(image_path, entry, iterations):
    """Filter one image, reverse it and summarize the trace.

    Never raises for filter or numerical failures: they are returned in the
    result so the rest of the bench keeps running.

    Returns:
        dict: Job result with keys image_path, label, success, error,
            diverged_at, summary and records
    """
    start_time = time.time()
    result = {
        'image_path': image_path,
        'label': entry.label,
        'success': False,
        'error': None,
        'diverged_at': None,
        'summary': {},
        'records': [],
    }
    try:
        ground_truth = load_image(image_path)
        j_star = apply_filter(entry.spec, ground_truth)
        config = ReverseConfig(max_iters=iterations, track_ground_truth=ground_truth,
                               keep_best_by=BestCriterion.GT)
        try:
            trace = reverse_filter(entry.iterated_spec, j_star, config).trace
        except DivergenceError as e:
            trace = e.trace
            result['diverged_at'] = e.iteration
            logger.warning(f"{entry.label} diverged on {image_path} at iteration {e.iteration}")

        result['summary'] = trace.summary() if trace is not None and len(trace) else {}
        result['records'] = [
            (r.iter_index, r.dt_psnr, r.dt_distance, r.gt_psnr, r.residual_norm, r.gt_mse)
            for r in (trace.records if trace is not None else [])
        ]
        result['success'] = bool(result['records'])
        if not result['success']:
            result['error'] = "no iterate recorded"

    except DefilterError as e:
        logger.error(f"Error benchmarking {entry.label} on {image_path}: {str(e)}")
        result['error'] = str(e)
    except Exception as e:
        logger.error(f"Unexpected error benchmarking {entry.label} on {image_path}: {str(e)}")
        logger.debug(traceback.format_exc())
        result['error'] = str(e)

    logger.debug(f"Benchmarked {entry.label} on {image_path} in {time.time() - start_time:.2f} seconds")
    return result


def _diverged_label(results):
    iterations = [r['diverged_at'] for r in results if r['diverged_at'] is not None]
    return f"diverged(iter={min(iterations)})" if iterations else None


def aggregate_row(label, results):
    """Average per-image summaries into one BenchRow (arithmetic mean of dB)."""
    usable = [r for r in results if r['success']]
    row = BenchRow(filter_name=label, n_images=len(usable), failed_images=len(results) - len(usable))
    errors = sorted({r['error'] for r in results if r['error']})
    if errors:
        row.error = "; ".join(errors)
    if not usable:
        return row

    def mean(key, subset):
        values = [r['summary'][key] for r in subset if key in r['summary']]
        return float(np.mean(values)) if values else None

    diverged = _diverged_label(usable)
    for name in COLUMNS + ('gt_at_best_dt',):
        if name.startswith('final') and diverged is not None:
            setattr(row, name, diverged)
        else:
            setattr(row, name, mean(name, usable))
    return row


def convergence_curves(results):
    """Per-iteration mean GT PSNR and standard deviation of GT MSE.

    Returns:
        list: (iter, mean_psnr_gt, sd_mse) tuples; iterations reached by no
            image are omitted
    """
    by_iter = {}
    for result in results:
        if not result['success']:
            continue
        for record in result['records']:
            t, gt_psnr, gt_mse = record[0], record[3], record[5]
            if gt_psnr is None:
                continue
            by_iter.setdefault(t, []).append((gt_psnr, gt_mse))
    curve = []
    for t in sorted(by_iter):
        values = np.array(by_iter[t])
        curve.append((t, float(values[:, 0].mean()), float(values[:, 1].std())))
    return curve


def run_bench(image_paths, entries, iterations=50, max_workers=None, cache_manager=None, progress=True):
    """Run every bench filter on every image.

    Args:
        image_paths (list): Ground-truth image files
        entries (list): BenchEntry objects
        iterations (int): Reverse iterations per run
        max_workers (int, optional): Worker processes; 1 runs in-process
        cache_manager (CacheManager, optional): Cache of per-image results
        progress (bool): Show a progress bar

    Returns:
        BenchReport: Rows in bench-file order, curves and per-job results
    """
    start_time = time.time()
    image_paths = sorted(image_paths)
    if not image_paths:
        raise ParamError("No images to benchmark")

    jobs = [(e_index, i_index) for e_index in range(len(entries)) for i_index in range(len(image_paths))]
    results = {}
    pending = []
    for key in jobs:
        entry, path = entries[key[0]], image_paths[key[1]]
        cached = None
        if cache_manager is not None:
            cached = cache_manager.get_cached_result(path, *entry.cache_params(), iterations)
        if cached is not None:
            results[key] = cached
        else:
            pending.append(key)

    logger.info(f"Benchmarking {len(entries)} filters on {len(image_paths)} images "
                f"({len(pending)} jobs to run, {len(jobs) - len(pending)} cached) "
                f"with {max_workers or 'auto'} workers")

    def finish(key, result):
        results[key] = result
        if cache_manager is not None and result['success']:
            entry = entries[key[0]]
            cache_manager.store_result(image_paths[key[1]], result, *entry.cache_params(), iterations)

    if max_workers == 1 or len(pending) <= 1:
        for key in tqdm(pending, desc="Benchmarking", disable=not progress):
            finish(key, run_bench_job(image_paths[key[1]], entries[key[0]], iterations))
    elif pending:
        with ProcessPoolExecutor(max_workers=max_workers) as executor:
            future_to_key = {
                executor.submit(run_bench_job, image_paths[key[1]], entries[key[0]], iterations): key
                for key in pending
            }
            for future in tqdm(as_completed(future_to_key), total=len(pending),
                               desc="Benchmarking", disable=not progress):
                key = future_to_key[future]
                try:
                    finish(key, future.result())
                except Exception as e:
                    logger.error(f"Unhandled exception benchmarking {entries[key[0]].label} "
                                 f"on {image_paths[key[1]]}: {str(e)}")
                    logger.debug(traceback.format_exc())
                    results[key] = {
                        'image_path': image_paths[key[1]], 'label': entries[key[0]].label,
                        'success': False, 'error': str(e), 'diverged_at': None,
                        'summary': {}, 'records': [],
                    }

    # Assembly is serialized and ordered, independent of completion order
    ordered = [results[key] for key in jobs]
    rows, curves = [], {}
    for e_index, entry in enumerate(entries):
        entry_results = [results[(e_index, i_index)] for i_index in range(len(image_paths))]
        rows.append(aggregate_row(entry.label, entry_results))
        curves[entry.label] = convergence_curves(entry_results)

    failed = sum(1 for r in ordered if not r['success'])
    logger.info(f"Bench finished in {time.time() - start_time:.2f} seconds; {failed} failed job(s)")
    if failed:
        logger.warning("Failed jobs:")
        for result in ordered:
            if not result['success']:
                logger.warning(f"  {result['label']} on {result['image_path']}: {result.get('error', 'Unknown error')}")

    return BenchReport(rows=rows, curves=curves, results=ordered, iterations=iterations, images=image_paths)


def run_bench_folder(folder_path, bench_file, recursive=False, **kwargs):
    """Run a bench file over all images in a folder.

    Args:
        folder_path (str): Directory of ground-truth images
        bench_file (str): Bench file path
        recursive (bool): Whether to search for images recursively
        **kwargs: Passed to run_bench

    Returns:
        BenchReport: The bench results
    """
    if not os.path.isdir(folder_path):
        raise ParamError(f"Directory not found: {folder_path}")
    entries = load_bench_file(bench_file)
    image_paths = find_images_in_directory(folder_path, recursive=recursive)
    if not image_paths:
        raise ParamError(f"No valid images found in {folder_path}")
    return run_bench(image_paths, entries, **kwargs)
