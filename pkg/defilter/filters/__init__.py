"""
Filter zoo: built-in parametric filters, resamplers, the external command
adapter and the filter-spec grammar.
"""

from defilter.filters.kernels import (
    BOUNDARIES, Kernel, KernelFilter, box_kernel, convolve, delta_kernel, disk_kernel,
    gaussian_kernel, odd_support, default_gaussian_support, unsharp_kernel
)
from defilter.filters.builtin import (
    bilateral, gamma, guided, identity, median, tikhonov,
    tikhonov_kernel_spectrum, unsharp
)
from defilter.filters.resample import down_up, downsample, upsample
from defilter.filters.external import external_filter
from defilter.filters.spec import (
    FilterSpec, KINDS, LINEAR_KINDS, SpecFilter, apply_filter, as_filter_spec,
    filter_spec, kernel_from_spec, parse_filter_spec
)
