#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Presets that wire the reverse engine to concrete restoration tasks:
super-resolution through a down-up filter, nonblind deconvolution and
reversal of pointwise/sharpening operators.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from defilter.analysis.spectral import Reversibility, analyze_filter_spec, kernel_spectrum
from defilter.core import ReverseConfig, reverse_filter
from defilter.exceptions import ParamError
from defilter.filters import (
    BOUNDARIES, KernelFilter, as_filter_spec, filter_spec, upsample
)
from defilter.filters.resample import DOWN_METHODS, UP_METHODS
from defilter.utils.image import Image, as_image

logger = logging.getLogger(__name__)

SR_INITS = ('bicubic', 'lanczos3', 'provided')


@dataclass
class SrConfig:
    """Super-resolution settings.

    Args:
        scale (int): Integer magnification (>= 2)
        iterations (int): Reverse iterations
        init (str): 'bicubic' (start from J*), 'lanczos3' (Lanczos upsampling
            of the low-resolution image) or 'provided'
        init_image (Image, optional): Starting image when init == 'provided',
            e.g. the output of another super-resolution method
        down_method (str): Downsampling inside the down-up filter
        up_method (str): Upsampling inside the down-up filter
    """

    scale: int = 2
    iterations: int = 10
    init: str = 'bicubic'
    init_image: Optional[Image] = None
    down_method: str = 'box'
    up_method: str = 'bicubic'

    def __post_init__(self):
        if int(self.scale) != self.scale or self.scale < 2:
            raise ParamError(f"SR scale must be an integer >= 2, got {self.scale}")
        self.scale = int(self.scale)
        if self.init not in SR_INITS:
            raise ParamError(f"Unknown SR init '{self.init}', expected one of {SR_INITS}")
        if self.init == 'provided' and self.init_image is None:
            raise ParamError("SR init 'provided' needs init_image")
        if self.down_method not in DOWN_METHODS:
            raise ParamError(f"Unknown down method '{self.down_method}'")
        if self.up_method not in UP_METHODS:
            raise ParamError(f"Unknown up method '{self.up_method}'")
        if self.init_image is not None:
            self.init_image = as_image(self.init_image)

    def down_up_spec(self):
        return filter_spec('downup', scale=self.scale, down=self.down_method, up=self.up_method)


@dataclass
class DeconvConfig:
    """Nonblind deconvolution settings.

    Args:
        kernel (Kernel): Known blur kernel
        iterations (int): Reverse iterations
        boundary (str): Boundary rule of the blur
    """

    kernel: object
    iterations: int = 30
    boundary: str = 'periodic'

    def __post_init__(self):
        if self.boundary not in BOUNDARIES:
            raise ParamError(f"Unknown boundary '{self.boundary}', expected one of {BOUNDARIES}")


def _check_divisible(image, scale):
    if image.height % scale or image.width % scale:
        raise ParamError(f"Image {image.height}x{image.width} is not divisible by scale {scale}; "
                         f"crop it to a multiple of {scale} first")


def prepare_sr_input(low_res, config):
    """Build J* (and the Lanczos init if requested) from a low-resolution image.

    Returns:
        tuple: (j_star, initial) where initial is None for bicubic init
    """
    low_res = as_image(low_res)
    j_star = upsample(low_res, config.scale, config.up_method)
    initial = None
    if config.init == 'lanczos3':
        initial = upsample(low_res, config.scale, 'lanczos3')
    elif config.init == 'provided':
        initial = config.init_image
    return j_star, initial


def super_resolve(low_res_upsampled, config=None, ground_truth=None, initial=None):
    """Zero-order super-resolution.

    The down-up filter f(I) = up(down(I)) maps a high-resolution image to the
    upsampled version of its low-resolution copy, so reversing it from
    J* = up(low_res) sharpens toward a plausible high-resolution image.

    Args:
        low_res_upsampled (Image): Low-resolution image upsampled to target size (J*)
        config (SrConfig, optional): Settings
        ground_truth (Image, optional): High-resolution original for GT metrics
        initial (Image, optional): Starting image overriding config.init

    Returns:
        ReverseResult: Trace and final/best high-resolution estimates
    """
    config = config or SrConfig()
    j_star = as_image(low_res_upsampled)
    _check_divisible(j_star, config.scale)

    if initial is None:
        if config.init == 'provided':
            initial = config.init_image
        elif config.init == 'lanczos3':
            raise ParamError("SR init 'lanczos3' needs the low-resolution image; use sr_from_low_res")

    spec = config.down_up_spec()
    result = reverse_filter(spec, j_star, ReverseConfig(
        max_iters=config.iterations,
        track_ground_truth=ground_truth,
        initial=initial,
    ))

    summary = result.trace.summary()
    if 'init_gt' in summary:
        logger.info(f"Super-resolution x{config.scale}: GT {summary['init_gt']:.2f} dB -> "
                    f"{summary['final_gt']:.2f} dB after {summary['iterations']} iterations")
    return result


def sr_from_low_res(low_res, config=None, ground_truth=None):
    """Super-resolve a genuine low-resolution image."""
    config = config or SrConfig()
    j_star, initial = prepare_sr_input(low_res, config)
    return super_resolve(j_star, config, ground_truth, initial)


def deconvolve(blurred, config, ground_truth=None):
    """Zero-order nonblind deconvolution.

    The kernel's spectral report is computed first and attached to the
    result. Nothing is regularized: if the report predicts a partially
    reversible or non-contractive kernel the run proceeds anyway.

    Args:
        blurred (Image): Observed blurred image (J*)
        config (DeconvConfig): Kernel, iteration count and boundary
        ground_truth (Image, optional): Sharp original for GT metrics

    Returns:
        ReverseResult: Result with spectral_report set
    """
    blurred = as_image(blurred)
    kernel = config.kernel
    if not kernel.is_normalized(1e-12):
        logger.warning(f"Deconvolution kernel sums to {kernel.total:.6g}, not 1; "
                       f"the recovered image will be rescaled accordingly")

    report = kernel_spectrum(kernel, (blurred.height, blurred.width), image=blurred)
    if report.reversibility == Reversibility.NON_CONTRACTIVE:
        logger.warning(f"Kernel {kernel.name} is predicted non-contractive; the iteration will not converge")
    elif report.reversibility == Reversibility.PARTIALLY_REVERSIBLE:
        logger.warning(f"Kernel {kernel.name} is partially reversible "
                       f"({report.expanding_fraction:.1%} of frequencies expand); prefer the best iterate")
    if config.boundary != 'periodic':
        report.warnings = report.warnings + (
            f"Blur uses {config.boundary} boundary; the spectral prediction assumes periodic",)

    result = reverse_filter(KernelFilter(kernel, config.boundary), blurred, ReverseConfig(
        max_iters=config.iterations,
        track_ground_truth=ground_truth,
    ))
    result.spectral_report = report
    return result


def reverse_pointwise(filtered, spec, iterations=50, ground_truth=None):
    """Reverse gamma correction or unsharp masking.

    Args:
        filtered (Image): Output of the operator (J*)
        spec (FilterSpec | str): A 'gamma' or 'unsharp' spec
        iterations (int): Reverse iterations
        ground_truth (Image, optional): Original for GT metrics

    Returns:
        ReverseResult: Result; for unsharp masking the spectral report of
        its linear form is attached
    """
    filtered = as_image(filtered)
    spec = as_filter_spec(spec)
    report = None

    if spec.kind == 'gamma':
        if np.any(filtered.data < 0):
            raise ParamError("Gamma reversal needs non-negative input intensities")
    elif spec.kind == 'unsharp':
        if spec['lambda'] >= 1:
            logger.warning(f"Unsharp amount lambda={spec['lambda']:g} >= 1; contraction is not guaranteed")
        report = analyze_filter_spec(spec, (filtered.height, filtered.width))
    else:
        raise ParamError(f"reverse_pointwise handles 'gamma' and 'unsharp' specs, got '{spec.kind}'")

    result = reverse_filter(spec, filtered, ReverseConfig(
        max_iters=iterations,
        track_ground_truth=ground_truth,
    ))
    result.spectral_report = report
    return result
