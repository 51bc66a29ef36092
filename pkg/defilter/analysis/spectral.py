#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DFT analysis of convolution filters.

Periodic convolution with kernel K is diagonal in the DFT basis, so the
reverse iteration acts on each frequency p independently: the error is
multiplied by (1 - K_p) at every step. Frequencies with |1 - K_p| < 1 form
the set Omega, where the iteration converges geometrically; elsewhere it
stalls or amplifies.

DFT convention: unnormalized forward transform, 1/(HW) inverse
(scipy.fft defaults).
"""

import logging
from enum import Enum
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy import fft as sp_fft

from defilter.exceptions import DimensionError, ParamError
from defilter.filters import as_filter_spec, kernel_from_spec, tikhonov_kernel_spectrum
from defilter.utils.image import Image, as_image

logger = logging.getLogger(__name__)

# Bins with |1 - K_p| within this band of 1 are assigned to the complement
OMEGA_BOUNDARY_BAND = 1e-12
DEFAULT_MARGINAL_TOLERANCE = 1e-6
# Relative response below which a frequency is treated as removed by the filter
STOPBAND_LEVEL = 1e-3


class Reversibility(Enum):
    """Predicted behaviour of the reverse iteration."""

    STRICT_CONTRACTION = "StrictContraction"
    PARTIALLY_REVERSIBLE = "PartiallyReversible"
    NON_CONTRACTIVE = "NonContractive"


class ProjectionSide(Enum):
    OMEGA = "omega"
    COMPLEMENT = "complement"


def classify(gains, omega, marginal_tol, tolerated=None):
    """Reversibility class and bin fractions for a set of per-mode gains.

    A mode outside Omega is marginal when its gain is within marginal_tol of
    1. The class is StrictContraction only if every mode outside Omega is
    marginal and flagged in tolerated; an unflagged mode at unit gain (an
    exact null of the filter) makes the filter PartiallyReversible.

    Args:
        gains (ndarray): Per-mode contraction factors on the scale being classified
        omega (ndarray): Boolean mask of contracting modes
        marginal_tol (float): Half-width of the band around 1 treated as marginal
        tolerated (ndarray, optional): Modes whose marginal gain may be ignored

    Returns:
        tuple: (Reversibility, marginal_fraction, expanding_fraction)
    """
    expanding = gains > 1.0 + marginal_tol
    marginal = ~omega & ~expanding
    if tolerated is None:
        tolerated = np.zeros_like(omega)
    total = gains.size
    if not omega.any():
        cls = Reversibility.NON_CONTRACTIVE
    elif (~omega & ~(marginal & tolerated)).any():
        cls = Reversibility.PARTIALLY_REVERSIBLE
    else:
        cls = Reversibility.STRICT_CONTRACTION
    return cls, float(marginal.sum()) / total, float(expanding.sum()) / total


def stopband_mask(spectrum, level=STOPBAND_LEVEL):
    """Bins where the response and its four circular neighbours are negligible.

    A bin counts as negligible when |K_p| <= level * max |K|. Truncated
    Gaussians have a whole region of such bins, some of them slightly
    negative; an isolated zero of an otherwise passing kernel is not part of
    a stopband.
    """
    magnitude = np.abs(spectrum)
    small = magnitude <= level * magnitude.max()
    mask = small.copy()
    for axis in (0, 1):
        for shift in (1, -1):
            mask &= np.roll(small, shift, axis=axis)
    return mask


@dataclass
class SpectralReport:
    """Contraction analysis of a periodic convolution on an H x W grid.

    contraction_constant is max |1 - K_p| over Omega (modulus scale), or None
    when Omega is empty. max_gain is the same maximum over every bin. A report
    is StrictContraction only when every bin outside Omega lies in the
    stopband at unit gain, in which case effective_constant is the bound for
    the whole image; exact nulls next to passed frequencies leave the filter
    PartiallyReversible.
    """

    grid: Tuple[int, int]
    spectrum: np.ndarray
    omega_mask: np.ndarray
    contraction_constant: Optional[float]
    omega_fraction: float
    reversibility: Reversibility
    max_gain: float
    marginal_fraction: float
    expanding_fraction: float
    omega_energy_fraction: Optional[float] = None
    scale: str = "modulus"
    label: str = ""
    warnings: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def gain(self):
        """|1 - K_p| per frequency."""
        return np.abs(1.0 - self.spectrum)

    @property
    def effective_constant(self):
        """Contraction bound for the whole image, or None if some bin expands."""
        if self.reversibility != Reversibility.STRICT_CONTRACTION:
            return None
        if self.omega_fraction == 1.0:
            return self.contraction_constant
        return self.max_gain

    def to_dict(self, include_spectrum=False):
        """JSON-ready summary; the per-frequency dump is opt-in."""
        out = {
            'kind': 'spectral',
            'label': self.label,
            'grid': list(self.grid),
            'scale': self.scale,
            'class': self.reversibility.value,
            'contraction_constant': self.contraction_constant,
            'effective_constant': self.effective_constant,
            'omega_fraction': self.omega_fraction,
            'omega_energy_fraction': self.omega_energy_fraction,
            'max_gain': self.max_gain,
            'marginal_fraction': self.marginal_fraction,
            'expanding_fraction': self.expanding_fraction,
            'warnings': list(self.warnings),
        }
        if include_spectrum:
            out['spectrum'] = {
                'real': self.spectrum.real.tolist(),
                'imag': self.spectrum.imag.tolist(),
                'omega_mask': self.omega_mask.astype(int).tolist(),
            }
        return out


def report_from_spectrum(spectrum, image=None, marginal_tol=DEFAULT_MARGINAL_TOLERANCE, label="", warnings=()):
    """Build a SpectralReport from a transfer function sampled on the DFT grid.

    Args:
        spectrum (ndarray): Complex H x W values K_p
        image (Image, optional): Image whose spectral energy inside Omega is reported
        marginal_tol (float): Tolerance for marginal bins
        label (str): Name of the analysed filter
        warnings (tuple): Messages carried into the report

    Returns:
        SpectralReport: The analysis
    """
    spectrum = np.asarray(spectrum, dtype=np.complex128)
    if spectrum.ndim != 2:
        raise ParamError(f"Spectrum must be 2D, got shape {spectrum.shape}")
    gains = np.abs(1.0 - spectrum)
    omega = gains < 1.0 - OMEGA_BOUNDARY_BAND
    cls, marginal_fraction, expanding_fraction = classify(gains, omega, marginal_tol, stopband_mask(spectrum))
    constant = float(gains[omega].max()) if omega.any() else None

    energy_fraction = None
    if image is not None:
        energy_fraction = _energy_fraction(as_image(image), omega)

    report = SpectralReport(
        grid=(int(spectrum.shape[0]), int(spectrum.shape[1])),
        spectrum=spectrum,
        omega_mask=omega,
        contraction_constant=constant,
        omega_fraction=float(omega.mean()),
        reversibility=cls,
        max_gain=float(gains.max()),
        marginal_fraction=marginal_fraction,
        expanding_fraction=expanding_fraction,
        omega_energy_fraction=energy_fraction,
        label=label,
        warnings=tuple(warnings),
    )
    logger.info(f"Spectral analysis {label or ''} on {report.grid[0]}x{report.grid[1]}: "
                f"{cls.value}, c={constant}, omega={report.omega_fraction:.4f}")
    return report


def _energy_fraction(image, omega):
    if image.shape[:2] != omega.shape:
        raise DimensionError(f"Image {image.shape[:2]} does not match grid {omega.shape}")
    energy = np.sum(np.abs(sp_fft.fft2(image.data, axes=(0, 1))) ** 2, axis=2)
    total = float(energy.sum())
    if total == 0.0:
        return 1.0
    return float(energy[omega].sum()) / total


def kernel_spectrum(kernel, grid, image=None, marginal_tol=DEFAULT_MARGINAL_TOLERANCE):
    """Analyse periodic convolution with a kernel.

    The kernel is placed circularly with its anchor at the origin, so the
    DFT of the placed array is exactly the transfer function of
    convolve(., kernel, 'periodic') on this grid.

    Args:
        kernel (Kernel): Convolution kernel
        grid (tuple): (H, W)
        image (Image, optional): Image for omega_energy_fraction
        marginal_tol (float): Tolerance for marginal bins

    Returns:
        SpectralReport: The analysis
    """
    height, width = int(grid[0]), int(grid[1])
    if height < 1 or width < 1:
        raise ParamError(f"Grid must be at least 1x1, got {grid}")
    if kernel.height > height or kernel.width > width:
        raise ParamError(f"Kernel {kernel.height}x{kernel.width} larger than grid {height}x{width}")
    spectrum = sp_fft.fft2(kernel.circular((height, width)))
    return report_from_spectrum(spectrum, image, marginal_tol, label=kernel.name, warnings=kernel.notes)


def analyze_filter_spec(spec, grid, image=None, marginal_tol=DEFAULT_MARGINAL_TOLERANCE):
    """SpectralReport of a linear filter spec (convolution kinds or tikhonov)."""
    spec = as_filter_spec(spec)
    if spec.kind == 'tikhonov':
        response = tikhonov_kernel_spectrum(spec['lambda'], grid)
        return report_from_spectrum(response, image, marginal_tol, label=spec.to_string())

    kernel = kernel_from_spec(spec, grid)
    report = kernel_spectrum(kernel, grid, image, marginal_tol)
    report.label = spec.to_string()
    if spec.params.get('boundary', 'periodic') != 'periodic':
        message = (f"{spec.to_string()} uses {spec['boundary']} boundary; "
                   f"the DFT analysis is exact only for periodic convolution")
        logger.warning(message)
        report.warnings = report.warnings + (message,)
    return report


def project_omega(image, report, side=ProjectionSide.OMEGA):
    """Project an image onto the Omega frequencies or their complement.

    Args:
        image (Image): Image with the report's grid dimensions
        report (SpectralReport): Analysis providing the Omega mask
        side (ProjectionSide | str): 'omega' or 'complement'

    Returns:
        Image: Real part of the inverse DFT of the masked spectrum
    """
    image = as_image(image)
    side = ProjectionSide(side)
    if (image.height, image.width) != tuple(report.grid):
        raise DimensionError(f"Image {image.height}x{image.width} does not match grid {report.grid}")
    mask = report.omega_mask if side == ProjectionSide.OMEGA else ~report.omega_mask
    spectrum = sp_fft.fft2(image.data, axes=(0, 1))
    projected = sp_fft.ifft2(spectrum * mask[:, :, np.newaxis], axes=(0, 1))
    return Image(np.real(projected))
