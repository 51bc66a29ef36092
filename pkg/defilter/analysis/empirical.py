#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Empirical contraction testing for arbitrary filters.

For a pair of images (a, b) the contraction ratio of g(X) = X - f(X) is

    |(a - f(a)) - (b - f(b))| / |a - b|

A filter whose ratios stay below 1 behaves like a contraction on the
sampled region, which is what makes the reverse iteration converge.
Works for nonlinear and black-box filters alike.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from sklearn.feature_extraction.image import extract_patches_2d
from sklearn.utils import check_random_state

from defilter.exceptions import DimensionError, ParamError
from defilter.filters import apply_filter
from defilter.utils.image import Image, as_image

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ContractionStats:
    """Distribution of contraction ratios over the usable pairs."""

    ratios: Tuple[float, ...]
    max: float
    mean: float
    fraction_below_1: float
    skipped: int = 0

    @property
    def samples(self):
        return len(self.ratios)

    def to_dict(self):
        return {
            'samples': self.samples,
            'skipped': self.skipped,
            'max': self.max,
            'mean': self.mean,
            'fraction_below_1': self.fraction_below_1,
            'ratios': list(self.ratios),
        }


def contraction_ratio(f, a, b):
    """Contraction ratio of g(X) = X - f(X) on one pair; None for identical images."""
    a, b = as_image(a), as_image(b)
    if not a.is_compatible(b):
        raise DimensionError(f"Pair images are not metric-compatible: {a.shape} vs {b.shape}")
    diff = a.data - b.data
    denominator = float(np.sqrt(np.sum(diff * diff)))
    if denominator == 0.0:
        return None
    ga = a.data - apply_filter(f, a).data
    gb = b.data - apply_filter(f, b).data
    delta = ga - gb
    return float(np.sqrt(np.sum(delta * delta))) / denominator


def empirical_contraction(f, pairs):
    """Measure contraction ratios of a filter on image pairs.

    Args:
        f (FilterSpec | str | callable): Filter under test
        pairs (iterable): (Image, Image) tuples, metric-compatible per pair

    Returns:
        ContractionStats: max, mean and fraction below 1 of the ratios

    Raises:
        DimensionError: A pair has mismatched dimensions
        ParamError: No pair with distinct images was given
    """
    ratios = []
    skipped = 0
    for index, (a, b) in enumerate(pairs):
        ratio = contraction_ratio(f, a, b)
        if ratio is None:
            skipped += 1
            continue
        logger.debug(f"Pair {index}: ratio {ratio:.6g}")
        ratios.append(ratio)

    if skipped:
        logger.warning(f"Skipped {skipped} identical pair(s) with zero distance")
    if not ratios:
        raise ParamError("No distinct image pairs to measure")

    values = np.array(ratios)
    stats = ContractionStats(
        ratios=tuple(ratios),
        max=float(values.max()),
        mean=float(values.mean()),
        fraction_below_1=float(np.mean(values < 1.0)),
        skipped=skipped,
    )
    logger.info(f"Empirical contraction over {stats.samples} pairs: max {stats.max:.4f}, "
                f"mean {stats.mean:.4f}, below 1: {stats.fraction_below_1:.2%}")
    return stats


def sample_patch_pairs(images, patch_size=32, n_pairs=20, random_state=None):
    """Draw pairs of random patches from natural images.

    Args:
        images (list): Images to sample from (all with the same channel count)
        patch_size (int): Side of the square patches
        n_pairs (int): Number of pairs to return
        random_state (int | RandomState, optional): Seed for reproducible draws

    Returns:
        list: n_pairs tuples (Image, Image) of distinct patches
    """
    if n_pairs < 1:
        raise ParamError(f"n_pairs must be >= 1, got {n_pairs}")
    images = [as_image(image) for image in images]
    if not images:
        raise ParamError("No images to sample patches from")
    for image in images:
        if image.height < patch_size or image.width < patch_size:
            raise ParamError(f"Patch size {patch_size} exceeds image {image.height}x{image.width}")

    rng = check_random_state(random_state)
    pairs = []
    attempts = 0
    while len(pairs) < n_pairs:
        attempts += 1
        if attempts > 10 * n_pairs:
            raise ParamError(f"Could not draw {n_pairs} distinct patch pairs")
        first = images[rng.randint(len(images))]
        second = images[rng.randint(len(images))]
        if first.channels != second.channels:
            raise DimensionError("Images to sample pairs from differ in channel count")
        a = extract_patches_2d(first.data, (patch_size, patch_size), max_patches=1, random_state=rng)[0]
        b = extract_patches_2d(second.data, (patch_size, patch_size), max_patches=1, random_state=rng)[0]
        if np.array_equal(a, b):
            continue
        pairs.append((Image(a), Image(b)))
    return pairs
