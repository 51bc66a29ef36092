"""
defilter

Zero-order reverse filtering: recover the input of an image filter from its
output by re-applying the filter, plus tools that predict when this works.
"""

__version__ = "0.3.0"

# Make key functions available at package level
from .core import (
    BestCriterion, ReverseConfig, ReverseResult, ReverseTrace, StopPolicy,
    fixed_point_residual, reverse_filter
)
from .filters import FilterSpec, apply_filter, filter_spec, parse_filter_spec
from .analysis import analyze_filter_spec, analyze_linear_operator, empirical_contraction, kernel_spectrum
from .applications import deconvolve, reverse_pointwise, super_resolve
from .utils.image import Image, load_image, save_image, psnr
from .batch import run_bench, run_bench_folder
