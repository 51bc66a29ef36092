#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
SVD analysis of general linear filters.

A linear filter on vectorized images is a square matrix A. With the SVD
I - A = U S V*, the reverse iteration contracts the error along right
singular directions with s_p^2 < 1 (the Omega set) at rate
c = max over Omega of s_p^2.

Images are vectorized column-major: pixel (y, x) maps to index y + x * H.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from defilter.analysis.spectral import (
    DEFAULT_MARGINAL_TOLERANCE, OMEGA_BOUNDARY_BAND, ProjectionSide, Reversibility, classify
)
from defilter.exceptions import DimensionError, NumericsError, ParamError
from defilter.filters.kernels import BOUNDARIES
from defilter.utils.image import Image, as_image

logger = logging.getLogger(__name__)

MAX_DENSE_DIMENSION = 4096


def _check_dimension(n, max_dimension):
    if n > max_dimension:
        raise ParamError(f"Dense analysis limited to n <= {max_dimension}, got n = {n}")


def _wrap(index, size, boundary):
    if boundary == 'periodic':
        return np.mod(index, size)
    # symmetric: -1 -> 0, size -> size - 1
    period = 2 * size
    index = np.mod(index, period)
    return np.where(index < size, index, period - 1 - index)


def matrix_from_conv(kernel, grid, boundary='periodic', max_dimension=MAX_DENSE_DIMENSION):
    """Dense matrix of convolve(., kernel, boundary) on an H x W grid.

    Args:
        kernel (Kernel): Convolution kernel, no larger than the grid
        grid (tuple): (H, W)
        boundary (str): 'periodic' or 'symmetric'
        max_dimension (int): Upper bound on n = H * W

    Returns:
        ndarray: n x n matrix acting on column-major vectorized images
    """
    height, width = int(grid[0]), int(grid[1])
    n = height * width
    _check_dimension(n, max_dimension)
    if boundary not in BOUNDARIES:
        raise ParamError(f"Unknown boundary '{boundary}', expected one of {BOUNDARIES}")
    if kernel.height > height or kernel.width > width:
        raise ParamError(f"Kernel {kernel.height}x{kernel.width} larger than grid {height}x{width}")

    rows_y, rows_x = np.meshgrid(np.arange(height), np.arange(width), indexing='ij')
    out_index = (rows_y + rows_x * height).ravel()

    matrix = np.zeros((n, n))
    for dy, dx, weight in zip(*kernel.offsets()):
        src_y = _wrap(rows_y - dy, height, boundary)
        src_x = _wrap(rows_x - dx, width, boundary)
        in_index = (src_y + src_x * height).ravel()
        np.add.at(matrix, (out_index, in_index), weight)
    return matrix


@dataclass
class LinearOperatorReport:
    """SVD analysis of I - A.

    contraction_constant is on the squared-singular-value scale;
    contraction_constant_modulus is the same bound on the modulus scale.
    """

    dimension: int
    singular_values: np.ndarray
    omega_mask: np.ndarray
    contraction_constant: Optional[float]
    contraction_constant_modulus: Optional[float]
    reversibility: Reversibility
    omega_fraction: float
    max_gain: float
    marginal_fraction: float
    expanding_fraction: float
    right_singular_vectors: np.ndarray = field(repr=False)
    scale: str = "squared"
    label: str = ""
    warnings: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def omega_index_set(self):
        """Indices p (into the descending singular values) with s_p^2 < 1."""
        return np.flatnonzero(self.omega_mask)

    @property
    def effective_constant(self):
        """Squared-scale bound for the whole image, or None unless StrictContraction."""
        if self.reversibility != Reversibility.STRICT_CONTRACTION:
            return None
        if self.omega_fraction == 1.0:
            return self.contraction_constant
        return self.max_gain

    def to_dict(self, include_spectrum=False):
        out = {
            'kind': 'linear',
            'label': self.label,
            'dimension': self.dimension,
            'scale': self.scale,
            'class': self.reversibility.value,
            'contraction_constant': self.contraction_constant,
            'contraction_constant_modulus': self.contraction_constant_modulus,
            'effective_constant': self.effective_constant,
            'omega_fraction': self.omega_fraction,
            'omega_size': int(self.omega_mask.sum()),
            'max_gain': self.max_gain,
            'marginal_fraction': self.marginal_fraction,
            'expanding_fraction': self.expanding_fraction,
            # D_Omega is diagonal in the right singular basis
            'projector': 'V diag(omega_mask) V^T',
            'warnings': list(self.warnings),
        }
        if include_spectrum:
            out['singular_values'] = self.singular_values.tolist()
            out['omega_index_set'] = self.omega_index_set.tolist()
        return out


def analyze_linear_operator(matrix, marginal_tol=DEFAULT_MARGINAL_TOLERANCE,
                            max_dimension=MAX_DENSE_DIMENSION, label=""):
    """SVD-based contraction analysis of a dense linear filter.

    Args:
        matrix (array-like): Square n x n filter matrix A
        marginal_tol (float): Tolerance for marginal directions
        max_dimension (int): Upper bound on n
        label (str): Name carried into the report

    Returns:
        LinearOperatorReport: The analysis

    Raises:
        ParamError: Matrix not square, not finite or too large
        NumericsError: The SVD did not converge
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ParamError(f"Linear filter matrix must be square, got shape {matrix.shape}")
    n = matrix.shape[0]
    _check_dimension(n, max_dimension)
    if not np.all(np.isfinite(matrix)):
        raise ParamError("Linear filter matrix must be finite")

    try:
        _, s, vh = scipy.linalg.svd(np.eye(n) - matrix)
    except (np.linalg.LinAlgError, ValueError) as e:
        logger.error(f"SVD of I - A failed: {e}")
        raise NumericsError(f"SVD of I - A failed: {e}") from e

    squared = s ** 2
    omega = squared < 1.0 - OMEGA_BOUNDARY_BAND
    # No frequency neighbourhood here: only a slight overshoot above 1 is tolerated
    cls, marginal_fraction, expanding_fraction = classify(squared, omega, marginal_tol, squared > 1.0)
    report = LinearOperatorReport(
        dimension=n,
        singular_values=s,
        omega_mask=omega,
        contraction_constant=float(squared[omega].max()) if omega.any() else None,
        contraction_constant_modulus=float(s[omega].max()) if omega.any() else None,
        reversibility=cls,
        omega_fraction=float(omega.mean()),
        max_gain=float(s.max()),
        marginal_fraction=marginal_fraction,
        expanding_fraction=expanding_fraction,
        right_singular_vectors=vh.T,
        label=label,
    )
    logger.info(f"Linear analysis n={n}: {cls.value}, c={report.contraction_constant} (squared scale)")
    return report


def _to_vectors(value, dimension):
    if isinstance(value, Image):
        if value.height * value.width != dimension:
            raise DimensionError(f"Image {value.height}x{value.width} does not match operator dimension {dimension}")
        return np.stack([value.data[:, :, c].ravel(order='F') for c in range(value.channels)], axis=1)
    vector = np.asarray(value, dtype=np.float64)
    if vector.shape[0] != dimension:
        raise DimensionError(f"Vector length {vector.shape[0]} does not match operator dimension {dimension}")
    return vector


def project_subspace(vector, report, side=ProjectionSide.OMEGA):
    """Project onto the Omega right singular directions or their complement.

    Args:
        vector (Image | ndarray): Image with H * W == n, or a length-n vector
        report (LinearOperatorReport): Analysis providing V and Omega
        side (ProjectionSide | str): 'omega' or 'complement'

    Returns:
        Image | ndarray: Projection, same type and shape as the input
    """
    side = ProjectionSide(side)
    mask = report.omega_mask if side == ProjectionSide.OMEGA else ~report.omega_mask
    basis = report.right_singular_vectors[:, mask]
    values = _to_vectors(vector, report.dimension)
    projected = basis @ (basis.T @ values)
    if isinstance(vector, Image):
        height, width = vector.height, vector.width
        return Image(np.stack([projected[:, c].reshape((height, width), order='F')
                               for c in range(vector.channels)], axis=2))
    return projected


class DenseLinearFilter:
    """Apply an explicit n x n matrix to every channel of an H x W image.

    Args:
        matrix (array-like): Filter matrix acting on column-major vectors
        name (str): Label used in logs
    """

    def __init__(self, matrix, name="dense"):
        matrix = np.array(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ParamError(f"Linear filter matrix must be square, got shape {matrix.shape}")
        matrix.setflags(write=False)
        self.matrix = matrix
        self.name = name

    def __call__(self, image):
        image = as_image(image)
        values = _to_vectors(image, self.matrix.shape[0])
        out = self.matrix @ values
        return Image(np.stack([out[:, c].reshape((image.height, image.width), order='F')
                               for c in range(image.channels)], axis=2))

    def __repr__(self):
        return f"DenseLinearFilter(n={self.matrix.shape[0]}, name={self.name!r})"


def load_matrix(path):
    """Read a dense matrix from .npy or whitespace-separated text."""
    try:
        if str(path).endswith('.npy'):
            return np.load(path, allow_pickle=False)
        return np.loadtxt(path, dtype=np.float64, ndmin=2)
    except (OSError, ValueError) as e:
        raise ParamError(f"Cannot read matrix file {path}: {e}") from e
