#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Convolution kernels: construction, circular placement and direct convolution.
"""

import math
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from defilter.exceptions import ParamError
from defilter.utils.image import Image, as_image

logger = logging.getLogger(__name__)

BOUNDARIES = ('periodic', 'symmetric')

# scipy.ndimage names for the supported boundary rules
_NDIMAGE_MODES = {
    'periodic': 'wrap',
    'symmetric': 'reflect',
}


@dataclass(frozen=True)
class Kernel:
    """2D convolution kernel.

    Args:
        weights (ndarray): 2D array of taps
        anchor (tuple, optional): (row, col) of the origin tap; defaults to the
            center tap
        name (str): Short label used in reports
        notes (tuple): Warnings attached at construction time (e.g. truncation)
    """

    weights: np.ndarray
    anchor: tuple = None
    name: str = "generic"
    notes: tuple = field(default=())

    def __post_init__(self):
        weights = np.array(self.weights, dtype=np.float64)
        if weights.ndim == 1:
            weights = weights[np.newaxis, :]
        if weights.ndim != 2 or weights.size == 0:
            raise ParamError(f"Kernel weights must be a non-empty 2D array, got shape {weights.shape}")
        if not np.all(np.isfinite(weights)):
            raise ParamError("Kernel weights must be finite")
        weights.setflags(write=False)
        object.__setattr__(self, 'weights', weights)

        anchor = self.anchor
        if anchor is None:
            anchor = (weights.shape[0] // 2, weights.shape[1] // 2)
        anchor = (int(anchor[0]), int(anchor[1]))
        if not (0 <= anchor[0] < weights.shape[0] and 0 <= anchor[1] < weights.shape[1]):
            raise ParamError(f"Kernel anchor {anchor} outside {weights.shape}")
        object.__setattr__(self, 'anchor', anchor)
        object.__setattr__(self, 'notes', tuple(self.notes))

    @property
    def height(self):
        return self.weights.shape[0]

    @property
    def width(self):
        return self.weights.shape[1]

    @property
    def total(self):
        return float(np.sum(self.weights))

    def is_normalized(self, tol=1e-12):
        """True when the weights sum to 1 within tol."""
        return abs(self.total - 1.0) <= tol

    def offsets(self):
        """Return (dy, dx, weight) arrays of every tap relative to the anchor."""
        rows, cols = np.indices(self.weights.shape)
        return (rows.ravel() - self.anchor[0],
                cols.ravel() - self.anchor[1],
                self.weights.ravel())

    def centered(self):
        """Zero-pad to an odd-sized array whose center tap is the anchor."""
        ay, ax = self.anchor
        ry = max(ay, self.height - 1 - ay)
        rx = max(ax, self.width - 1 - ax)
        out = np.zeros((2 * ry + 1, 2 * rx + 1))
        out[ry - ay:ry - ay + self.height, rx - ax:rx - ax + self.width] = self.weights
        return out

    def circular(self, grid):
        """Place the kernel on an H x W grid with the anchor at the origin.

        Taps wrap around the grid, so the DFT of the result is the transfer
        function of periodic convolution on that grid.
        """
        height, width = grid
        dy, dx, w = self.offsets()
        placed = np.zeros((height, width))
        np.add.at(placed, (dy % height, dx % width), w)
        return placed


def odd_support(sigma):
    """Default Gaussian support: odd(6 sigma + 1)."""
    support = int(math.ceil(6.0 * sigma + 1.0))
    return support if support % 2 == 1 else support + 1


def default_gaussian_support(sigma, shape=None):
    """odd(6 sigma + 1), capped at the largest odd size fitting the image."""
    support = odd_support(sigma)
    if shape is not None:
        limit = min(shape[0], shape[1])
        if limit % 2 == 0:
            limit -= 1
        support = max(1, min(support, limit))
    return support


def _check_support(support):
    if int(support) != support or support < 3 or support % 2 == 0:
        raise ParamError(f"Kernel support must be an odd integer >= 3, got {support}")
    return int(support)


def delta_kernel():
    """The 1x1 identity kernel."""
    return Kernel(np.ones((1, 1)), name="delta")


def gaussian_kernel(sigma, support):
    """Sampled, normalized 2D Gaussian.

    Args:
        sigma (float): Standard deviation in pixels (> 0)
        support (int): Odd side length of the square support (>= 3)

    Returns:
        Kernel: exp(-(x^2 + y^2) / (2 sigma^2)) on the support grid, sum 1
    """
    if sigma <= 0:
        raise ParamError(f"Gaussian sigma must be > 0, got {sigma}")
    support = _check_support(support)
    radius = support // 2
    coords = np.arange(-radius, radius + 1, dtype=np.float64)
    yy, xx = np.meshgrid(coords, coords, indexing='ij')
    weights = np.exp(-(xx ** 2 + yy ** 2) / (2.0 * sigma ** 2))
    weights /= np.sum(weights)

    notes = ()
    if support < odd_support(sigma):
        message = (f"Truncated Gaussian: support {support} < {odd_support(sigma)} for sigma={sigma}; "
                   f"the implemented filter deviates from the ideal Gaussian")
        logger.warning(message)
        notes = (message,)
    return Kernel(weights, name=f"gaussian(sigma={sigma:g},support={support})", notes=notes)


def disk_kernel(r, support):
    """Hard-indicator disk of radius r, normalized to sum 1.

    Edge taps are either fully in (x^2 + y^2 <= r^2) or out; no anti-aliasing.
    """
    if r <= 0:
        raise ParamError(f"Disk radius must be > 0, got {r}")
    support = _check_support(support)
    radius = support // 2
    if r > radius:
        raise ParamError(f"Disk radius {r} does not fit support {support}")
    coords = np.arange(-radius, radius + 1, dtype=np.float64)
    yy, xx = np.meshgrid(coords, coords, indexing='ij')
    weights = (xx ** 2 + yy ** 2 <= r * r).astype(np.float64)
    weights /= np.sum(weights)
    return Kernel(weights, name=f"disk(r={r:g},support={support})")


def box_kernel(radius):
    """Uniform (2 radius + 1)^2 box."""
    if int(radius) != radius or radius < 1:
        raise ParamError(f"Box radius must be a positive integer, got {radius}")
    size = 2 * int(radius) + 1
    return Kernel(np.full((size, size), 1.0 / (size * size)), name=f"box(radius={radius})")


def unsharp_kernel(lam, sigma, support):
    """Linear form of unsharp masking: (1 + lam) delta - lam G_sigma."""
    if lam < 0:
        raise ParamError(f"Unsharp amount must be >= 0, got {lam}")
    gauss = gaussian_kernel(sigma, support)
    weights = -lam * gauss.weights
    weights[gauss.anchor] += 1.0 + lam
    return Kernel(weights, name=f"unsharp(lambda={lam:g},sigma={sigma:g})", notes=gauss.notes)


def convolve(image, kernel, boundary='periodic'):
    """Per-channel 2D convolution.

    Args:
        image (Image): Input image
        kernel (Kernel): Convolution kernel
        boundary (str): 'periodic' (exact circular convolution) or 'symmetric'

    Returns:
        Image: Convolved image, same dimensions as the input
    """
    image = as_image(image)
    if boundary not in BOUNDARIES:
        raise ParamError(f"Unknown boundary '{boundary}', expected one of {BOUNDARIES}")
    weights = kernel.centered()
    if weights.shape[0] > image.height or weights.shape[1] > image.width:
        raise ParamError(f"Kernel {weights.shape} larger than image {image.shape[:2]}")
    out = ndimage.convolve(image.data, weights[:, :, np.newaxis], mode=_NDIMAGE_MODES[boundary])
    return Image(out)


class KernelFilter:
    """Picklable convolution filter bound to one kernel and boundary rule."""

    def __init__(self, kernel, boundary='periodic'):
        if boundary not in BOUNDARIES:
            raise ParamError(f"Unknown boundary '{boundary}', expected one of {BOUNDARIES}")
        self.kernel = kernel
        self.boundary = boundary

    def __call__(self, image):
        return convolve(image, self.kernel, self.boundary)

    def __repr__(self):
        return f"KernelFilter({self.kernel.name}, boundary={self.boundary!r})"
