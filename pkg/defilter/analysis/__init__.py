"""
Reversibility analysis: DFT spectra of convolutions, SVD of dense linear
filters and empirical contraction ratios.
"""

from .spectral import (
    ProjectionSide, Reversibility, SpectralReport, analyze_filter_spec,
    kernel_spectrum, project_omega, report_from_spectrum
)
from .linear import (
    DenseLinearFilter, LinearOperatorReport, analyze_linear_operator,
    load_matrix, matrix_from_conv, project_subspace
)
from .empirical import (
    ContractionStats, contraction_ratio, empirical_contraction, sample_patch_pairs
)
