#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Built-in parametric filters.

Every function here is a pure Image -> Image map that preserves the input
dimensions. Nonlinear filters use symmetric padding at the borders; the
convolution-based ones take an explicit boundary argument.
"""

import math
import logging

import numpy as np
from scipy import fft as sp_fft
from scipy import ndimage

from defilter.exceptions import ParamError
from defilter.filters.kernels import (
    convolve, gaussian_kernel, default_gaussian_support
)
from defilter.utils.image import Image, as_image

logger = logging.getLogger(__name__)

# Lower clamp applied before the power law in gamma()
GAMMA_FLOOR = 1e-4


def identity(image):
    """Return an exact copy of the input."""
    image = as_image(image)
    return Image(image.data)


def _check_radius(radius, name="radius"):
    if int(radius) != radius or radius < 1:
        raise ParamError(f"{name} must be a positive integer, got {radius}")
    return int(radius)


def _check_positive(value, name):
    if not value > 0 or not math.isfinite(value):
        raise ParamError(f"{name} must be a finite value > 0, got {value}")
    return float(value)


def bilateral(image, sigma_s, sigma_r, radius=None):
    """Self-guided bilateral filter.

    Range weights use the Euclidean distance between color vectors, so all
    channels share one weight per neighbor.

    Args:
        image (Image): Input image
        sigma_s (float): Spatial standard deviation in pixels
        sigma_r (float): Range standard deviation in intensity units
        radius (int, optional): Window half-size; defaults to ceil(2 sigma_s)

    Returns:
        Image: Filtered image
    """
    image = as_image(image)
    sigma_s = _check_positive(sigma_s, "sigma_s")
    sigma_r = _check_positive(sigma_r, "sigma_r")
    if radius is None:
        radius = max(1, int(math.ceil(2.0 * sigma_s)))
    radius = _check_radius(radius)

    data = image.data
    height, width = image.height, image.width
    padded = np.pad(data, ((radius, radius), (radius, radius), (0, 0)), mode='symmetric')

    numerator = np.zeros_like(data)
    denominator = np.zeros((height, width, 1))
    inv_s = 1.0 / (2.0 * sigma_s ** 2)
    inv_r = 1.0 / (2.0 * sigma_r ** 2)

    # Accumulate in a fixed raster order over window offsets
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            shifted = padded[radius + dy:radius + dy + height, radius + dx:radius + dx + width]
            spatial = math.exp(-(dy * dy + dx * dx) * inv_s)
            diff2 = np.sum(np.square(shifted - data), axis=2, keepdims=True)
            weight = spatial * np.exp(-diff2 * inv_r)
            numerator += weight * shifted
            denominator += weight

    return Image(numerator / denominator)


def _box_mean(values, radius):
    size = 2 * radius + 1
    return ndimage.uniform_filter(values, size=(size, size, 1), mode='reflect')


def guided(image, radius, eps):
    """Self-guided filter, box-mean formulation.

    a = var / (var + eps), b = mean - a * mean, output = mean(a) * I + mean(b),
    with all means over (2 radius + 1)^2 windows and symmetric boundary.
    """
    image = as_image(image)
    radius = _check_radius(radius)
    eps = _check_positive(eps, "eps")

    data = image.data
    mean = _box_mean(data, radius)
    mean_sq = _box_mean(data * data, radius)
    var = np.maximum(mean_sq - mean * mean, 0.0)

    a = var / (var + eps)
    b = mean - a * mean
    return Image(_box_mean(a, radius) * data + _box_mean(b, radius))


def median(image, radius):
    """Per-channel window median with symmetric boundary."""
    image = as_image(image)
    radius = _check_radius(radius)
    size = 2 * radius + 1
    return Image(ndimage.median_filter(image.data, size=(size, size, 1), mode='reflect'))


def gamma(image, gamma_value):
    """Elementwise power law v^gamma, with v clamped below at GAMMA_FLOOR."""
    image = as_image(image)
    gamma_value = _check_positive(gamma_value, "gamma")
    return Image(np.power(np.maximum(image.data, GAMMA_FLOOR), gamma_value))


def unsharp(image, lam, sigma, support=None, boundary='periodic'):
    """Unsharp masking: I + lam * (I - G_sigma * I).

    Args:
        image (Image): Input image
        lam (float): Sharpening amount (>= 0)
        sigma (float): Gaussian standard deviation
        support (int, optional): Gaussian support; defaults to odd(6 sigma + 1)
            capped at the image size
        boundary (str): Boundary rule for the Gaussian blur

    Returns:
        Image: Sharpened image
    """
    image = as_image(image)
    if not lam >= 0:
        raise ParamError(f"Unsharp amount lambda must be >= 0, got {lam}")
    if support is None:
        support = default_gaussian_support(sigma, image.shape)
    blurred = convolve(image, gaussian_kernel(sigma, support), boundary)
    data = image.data
    return Image(data + lam * (data - blurred.data))


def tikhonov_kernel_spectrum(lam, grid):
    """Exact transfer function 1 / (1 + lam * L) of global L2 smoothing.

    L is the symbol of the periodic 5-point Laplacian on the grid.

    Args:
        lam (float): Smoothness weight (> 0)
        grid (tuple): (H, W)

    Returns:
        ndarray: Real H x W array with values in (0, 1]
    """
    lam = _check_positive(lam, "lambda")
    height, width = grid
    wy = 2.0 - 2.0 * np.cos(2.0 * np.pi * np.arange(height) / height)
    wx = 2.0 - 2.0 * np.cos(2.0 * np.pi * np.arange(width) / width)
    laplacian = wy[:, np.newaxis] + wx[np.newaxis, :]
    return 1.0 / (1.0 + lam * laplacian)


def tikhonov(image, lam):
    """Global Tikhonov smoothing argmin_X |X - I|^2 + lam |grad X|^2 (periodic)."""
    image = as_image(image)
    response = tikhonov_kernel_spectrum(lam, (image.height, image.width))
    spectrum = sp_fft.fft2(image.data, axes=(0, 1))
    out = sp_fft.ifft2(spectrum * response[:, :, np.newaxis], axes=(0, 1))
    return Image(np.real(out))
