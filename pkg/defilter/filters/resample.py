#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Integer-factor resampling used by the down-up (super-resolution) filter.

Upsampling is separable: one interpolation matrix per axis, with output
pixel centers mapped to input coordinates as (i + 0.5) / scale - 0.5 and
symmetric extension at the borders. Every row of the matrix sums to 1, so
constant images survive resizing.
"""

import logging
from functools import lru_cache

import numpy as np

from defilter.exceptions import ParamError
from defilter.utils.image import Image, as_image

logger = logging.getLogger(__name__)

DOWN_METHODS = ('box', 'decimate')
UP_METHODS = ('bicubic', 'bilinear', 'nearest', 'lanczos3')


def _cubic(x):
    # Keys cubic convolution, a = -0.5
    ax = np.abs(x)
    ax2, ax3 = ax ** 2, ax ** 3
    return np.where(ax <= 1.0, 1.5 * ax3 - 2.5 * ax2 + 1.0,
                    np.where(ax < 2.0, -0.5 * ax3 + 2.5 * ax2 - 4.0 * ax + 2.0, 0.0))


def _linear(x):
    return np.maximum(0.0, 1.0 - np.abs(x))


def _nearest(x):
    return ((x >= -0.5) & (x < 0.5)).astype(np.float64)


def _lanczos3(x):
    return np.where(np.abs(x) < 3.0, np.sinc(x) * np.sinc(x / 3.0), 0.0)


_KERNELS = {
    'bicubic': (_cubic, 2),
    'bilinear': (_linear, 1),
    'nearest': (_nearest, 1),
    'lanczos3': (_lanczos3, 3),
}


def _reflect(index, size):
    # symmetric extension: -1 -> 0, size -> size - 1
    period = 2 * size
    index = np.mod(index, period)
    return np.where(index < size, index, period - 1 - index)


@lru_cache(maxsize=32)
def interpolation_matrix(in_size, scale, method):
    """Dense (in_size * scale) x in_size upsampling matrix for one axis.

    Args:
        in_size (int): Number of input samples
        scale (int): Integer upsampling factor
        method (str): One of UP_METHODS

    Returns:
        ndarray: Row-stochastic interpolation weights (read-only)
    """
    if method not in _KERNELS:
        raise ParamError(f"Unknown upsampling method '{method}', expected one of {UP_METHODS}")
    kernel, radius = _KERNELS[method]
    out_size = in_size * scale
    matrix = np.zeros((out_size, in_size))
    centers = (np.arange(out_size) + 0.5) / scale - 0.5
    for i, u in enumerate(centers):
        first = int(np.floor(u)) - radius + 1
        taps = np.arange(first, first + 2 * radius)
        weights = kernel(u - taps)
        np.add.at(matrix[i], _reflect(taps, in_size), weights)
    matrix /= matrix.sum(axis=1, keepdims=True)
    matrix.setflags(write=False)
    return matrix


def _check_scale(scale):
    if int(scale) != scale or scale < 2:
        raise ParamError(f"Scale factor must be an integer >= 2, got {scale}")
    return int(scale)


def downsample(image, scale, method='box'):
    """Reduce an image by an integer factor.

    Args:
        image (Image): Input image whose sides are divisible by scale
        scale (int): Integer factor >= 2
        method (str): 'box' (block average) or 'decimate' (keep every scale-th sample)

    Returns:
        Image: Image of size (H / scale, W / scale)
    """
    image = as_image(image)
    scale = _check_scale(scale)
    if image.height % scale or image.width % scale:
        raise ParamError(f"Image {image.height}x{image.width} is not divisible by scale {scale}; crop it first")
    data = image.data
    if method == 'box':
        blocks = data.reshape(image.height // scale, scale, image.width // scale, scale, image.channels)
        return Image(blocks.mean(axis=(1, 3)))
    if method == 'decimate':
        return Image(data[::scale, ::scale])
    raise ParamError(f"Unknown downsampling method '{method}', expected one of {DOWN_METHODS}")


def upsample(image, scale, method='bicubic'):
    """Enlarge an image by an integer factor with separable interpolation."""
    image = as_image(image)
    scale = _check_scale(scale)
    rows = interpolation_matrix(image.height, scale, method)
    cols = interpolation_matrix(image.width, scale, method)
    out = np.einsum('ij,jkc->ikc', rows, image.data)
    out = np.einsum('lk,ikc->ilc', cols, out)
    return Image(out)


def down_up(image, scale, down_method='box', up_method='bicubic'):
    """f_SR(I) = resize(resize(I, 1/scale), scale)."""
    return upsample(downsample(image, scale, down_method), scale, up_method)
