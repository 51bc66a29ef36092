#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Zero-order reverse filtering.

Given a filtered image J* and the ability to evaluate the filter f, the
engine iterates

    X^0 = J*,    X^{t+1} = X^t + (J* - f(X^t))

and records, for every iterate, how close f(X^t) is to J* (DT error) and,
when the unfiltered image is known, how close X^t is to it (GT error).
Only filter evaluations are used; no derivative of f is ever needed.
"""

import logging
from enum import Enum
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from defilter.exceptions import (
    DimensionError, DivergenceError, FilterError, NumericsError, ParamError
)
from defilter.filters import apply_filter
from defilter.utils.image import Image, as_image, distance, mse, psnr_from_mse

logger = logging.getLogger(__name__)


class StopPolicy(Enum):
    """When to end the iteration before max_iters."""

    FIXED_COUNT = "fixed"
    EARLY_STOP_ON_DT_RISE = "early-stop"


class BestCriterion(Enum):
    """Which error selects the best iterate."""

    DT = "dt"
    GT = "gt"


@dataclass
class ReverseConfig:
    """Settings of one reverse filtering run.

    Args:
        max_iters (int): Number of update steps N (records 0..N)
        track_ground_truth (Image, optional): Unfiltered image for GT metrics;
            never used by the update itself
        stop_policy (StopPolicy): Fixed count, or stop after `patience`
            consecutive DT error rises
        patience (int): Consecutive rises tolerated by early stopping
        keep_best_by (BestCriterion): Criterion for best_image; GT falls back
            to DT when no ground truth is tracked
        initial (Image, optional): Starting iterate; defaults to J*
        tolerance (float): Residual norm at or below which the run counts as
            converged
    """

    max_iters: int = 50
    track_ground_truth: Optional[Image] = None
    stop_policy: StopPolicy = StopPolicy.FIXED_COUNT
    patience: int = 5
    keep_best_by: BestCriterion = BestCriterion.DT
    initial: Optional[Image] = None
    tolerance: float = 1e-9

    def __post_init__(self):
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ParamError(f"max_iters must be an integer >= 1, got {self.max_iters}")
        if int(self.patience) != self.patience or self.patience < 1:
            raise ParamError(f"patience must be an integer >= 1, got {self.patience}")
        if self.tolerance < 0:
            raise ParamError(f"tolerance must be >= 0, got {self.tolerance}")
        self.max_iters = int(self.max_iters)
        self.patience = int(self.patience)
        self.stop_policy = StopPolicy(self.stop_policy)
        self.keep_best_by = BestCriterion(self.keep_best_by)
        if self.track_ground_truth is not None:
            self.track_ground_truth = as_image(self.track_ground_truth)
        if self.initial is not None:
            self.initial = as_image(self.initial)


@dataclass(frozen=True)
class IterationRecord:
    """Metrics of one iterate X^t."""

    iter_index: int
    dt_psnr: float
    dt_distance: float
    residual_norm: float
    gt_psnr: Optional[float] = None
    gt_mse: Optional[float] = None


@dataclass
class ReverseTrace:
    """Per-iteration record of a reverse run, iteration 0 included."""

    records: List[IterationRecord] = field(default_factory=list)
    best_by: BestCriterion = BestCriterion.DT
    converged: bool = False
    stopped_early: bool = False
    diverged_at: Optional[int] = None

    def __len__(self):
        return len(self.records)

    @property
    def has_ground_truth(self):
        return bool(self.records) and self.records[0].gt_psnr is not None

    @property
    def best_index_dt(self):
        """Index of the smallest DT residual (first one on ties)."""
        if not self.records:
            return None
        return int(np.argmin([r.dt_distance for r in self.records]))

    @property
    def best_index_gt(self):
        """Index of the smallest GT error, or None without ground truth."""
        if not self.has_ground_truth:
            return None
        return int(np.argmin([r.gt_mse for r in self.records]))

    @property
    def best_index(self):
        if self.best_by == BestCriterion.GT and self.has_ground_truth:
            return self.best_index_gt
        return self.best_index_dt

    @property
    def initial(self):
        return self.records[0]

    @property
    def final(self):
        return self.records[-1]

    def column(self, name):
        """Values of one record field across iterations."""
        return [getattr(r, name) for r in self.records]

    def summary(self):
        """Init/Final/Best PSNRs for both criteria.

        Returns:
            dict: keys init_dt, final_dt, best_dt and, with ground truth,
            init_gt, final_gt, best_gt and gt_at_best_dt
        """
        if not self.records:
            return {}
        dt = self.column('dt_psnr')
        out = {
            'iterations': len(self.records) - 1,
            'init_dt': dt[0],
            'final_dt': dt[-1],
            'best_dt': dt[self.best_index_dt],
            'best_index_dt': self.best_index_dt,
        }
        if self.has_ground_truth:
            gt = self.column('gt_psnr')
            out.update({
                'init_gt': gt[0],
                'final_gt': gt[-1],
                'best_gt': gt[self.best_index_gt],
                'best_index_gt': self.best_index_gt,
                'gt_at_best_dt': gt[self.best_index_dt],
            })
        return out


@dataclass
class ReverseResult:
    """Output of reverse_filter.

    Args:
        final_image (Image): X^N, the last iterate
        best_image (Image): Iterate selected by the configured criterion
        trace (ReverseTrace): Full iteration record
        spectral_report (SpectralReport, optional): Attached by presets that
            analyse the filter before reversing it
    """

    final_image: Image
    best_image: Image
    trace: ReverseTrace
    spectral_report: object = None


def _evaluate(f, image, iteration):
    try:
        return apply_filter(f, image)
    except FilterError as e:
        e.iteration = iteration
        logger.error(f"Filter failed at iteration {iteration}: {e}")
        raise


def _record(t, j_star, fx, x, ground_truth):
    dt_distance = distance(j_star, fx)
    dt_psnr = psnr_from_mse(mse(j_star, fx))
    gt_psnr = gt_mse = None
    if ground_truth is not None:
        gt_mse = mse(ground_truth, x)
        gt_psnr = psnr_from_mse(gt_mse)
    return IterationRecord(t, dt_psnr, dt_distance, dt_distance, gt_psnr, gt_mse)


def reverse_filter(f, j_star, config=None, on_iterate: Callable = None):
    """Recover the pre-filter image from J* by fixed-point iteration.

    Args:
        f (FilterSpec | str | callable): The filter, evaluated as a black box
        j_star (Image): Filtered image
        config (ReverseConfig, optional): Run settings
        on_iterate (callable, optional): Called as on_iterate(t, X^t) for every
            recorded iterate

    Returns:
        ReverseResult: Final and best iterates with the full trace

    Raises:
        FilterError: The filter failed; `iteration` names the failing step
        DivergenceError: An iterate became non-finite; carries the partial trace
    """
    config = config or ReverseConfig()
    j_star = as_image(j_star)
    ground_truth = config.track_ground_truth
    if ground_truth is not None and not ground_truth.is_compatible(j_star):
        raise DimensionError(f"Ground truth {ground_truth.shape} does not match J* {j_star.shape}")

    best_by = config.keep_best_by
    if best_by == BestCriterion.GT and ground_truth is None:
        logger.warning("Best-by-GT requested without ground truth; selecting by DT error")
        best_by = BestCriterion.DT

    if config.initial is not None and not config.initial.is_compatible(j_star):
        raise DimensionError(f"Initial image {config.initial.shape} does not match J* {j_star.shape}")

    trace = ReverseTrace(best_by=best_by)
    j = j_star.data
    x_image = j_star if config.initial is None else config.initial
    fx = _evaluate(f, x_image, 0)
    trace.records.append(_record(0, j_star, fx, x_image, ground_truth))
    best_image = x_image
    best_score = _score(trace.records[0], best_by)
    if on_iterate is not None:
        on_iterate(0, x_image)

    rises = 0
    for t in range(1, config.max_iters + 1):
        x = x_image.data + (j - fx.data)
        if not np.all(np.isfinite(x)):
            trace.diverged_at = t
            logger.error(f"Iterate {t} is not finite; reverse filtering diverged")
            raise DivergenceError(f"Iterate {t} contains NaN or Inf", trace=trace, iteration=t)
        x_image = Image(x)

        try:
            fx = _evaluate(f, x_image, t)
        except NumericsError as e:
            trace.diverged_at = t
            logger.error(f"Filter output at iteration {t} is not finite")
            raise DivergenceError(f"Filter output at iteration {t} is not finite: {e}",
                                  trace=trace, iteration=t) from e

        record = _record(t, j_star, fx, x_image, ground_truth)
        previous = trace.records[-1]
        trace.records.append(record)
        if on_iterate is not None:
            on_iterate(t, x_image)

        score = _score(record, best_by)
        if score < best_score:
            best_score = score
            best_image = x_image

        logger.debug(f"Iteration {t}: DT {record.dt_psnr:.4f} dB, residual {record.residual_norm:.6g}"
                     + (f", GT {record.gt_psnr:.4f} dB" if record.gt_psnr is not None else ""))

        if config.stop_policy == StopPolicy.EARLY_STOP_ON_DT_RISE:
            rises = rises + 1 if record.residual_norm > previous.residual_norm else 0
            if rises >= config.patience:
                trace.stopped_early = True
                logger.info(f"DT error rose {rises} times in a row; stopping at iteration {t}")
                break

    trace.converged = trace.final.residual_norm <= config.tolerance
    logger.info(f"Reverse filtering finished after {len(trace) - 1} iterations: "
                f"final DT {trace.final.dt_psnr:.2f} dB, best index {trace.best_index}")
    return ReverseResult(final_image=x_image, best_image=best_image, trace=trace)


def _score(record, best_by):
    # lower is better; ties keep the earliest iterate
    if best_by == BestCriterion.GT:
        return record.gt_mse
    return record.dt_distance


def fixed_point_residual(f, x, j_star):
    """Distance between x and g(x) = x + (J* - f(x)), i.e. |J* - f(x)|.

    Args:
        f (FilterSpec | str | callable): The filter
        x (Image): Candidate image
        j_star (Image): Filtered image

    Returns:
        float: Zero iff f(x) == J*
    """
    x, j_star = as_image(x), as_image(j_star)
    if not x.is_compatible(j_star):
        raise DimensionError(f"Images are not metric-compatible: {x.shape} vs {j_star.shape}")
    return distance(j_star, apply_filter(f, x))
