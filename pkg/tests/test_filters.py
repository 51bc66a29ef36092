import logging
import sys

import numpy as np
import pytest
from scipy import fft as sp_fft
from scipy import ndimage

from defilter.exceptions import FilterError, ParamError, SpecParseError
from defilter.filters import (
    Kernel, KernelFilter, SpecFilter, apply_filter, bilateral, box_kernel, convolve,
    default_gaussian_support, delta_kernel, disk_kernel, down_up, downsample, external_filter,
    filter_spec, gamma, gaussian_kernel, guided, identity, kernel_from_spec, median,
    odd_support, parse_filter_spec, tikhonov, tikhonov_kernel_spectrum, unsharp,
    unsharp_kernel, upsample
)
from defilter.filters.resample import interpolation_matrix
from defilter.utils.image import Image


# Kernels and convolution

def test_gaussian_kernel_is_normalized_and_symmetric():
    kernel = gaussian_kernel(2.0, 21)
    assert kernel.weights.shape == (21, 21)
    assert kernel.is_normalized()
    assert np.allclose(kernel.weights, kernel.weights.T)
    assert np.allclose(kernel.weights, kernel.weights[::-1, ::-1])
    assert kernel.anchor == (10, 10)


def test_gaussian_default_support():
    assert odd_support(2.0) == 13
    assert odd_support(1.5) == 11
    assert default_gaussian_support(4.0, (16, 16)) == 15


def test_truncated_gaussian_warns(caplog):
    with caplog.at_level(logging.WARNING):
        kernel = gaussian_kernel(3.0, 5)
    assert kernel.notes
    assert "Truncated Gaussian" in caplog.text


def test_disk_kernel_is_hard_indicator():
    kernel = disk_kernel(1.0, 3)
    expected = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]]) / 5.0
    assert np.allclose(kernel.weights, expected)
    with pytest.raises(ParamError):
        disk_kernel(3.0, 5)


def test_kernel_rejects_bad_input():
    with pytest.raises(ParamError):
        Kernel(np.array([[np.inf]]))
    with pytest.raises(ParamError):
        Kernel(np.ones((3, 3)), anchor=(3, 0))
    with pytest.raises(ParamError):
        gaussian_kernel(2.0, 4)


def test_delta_convolution_is_identity(color_image):
    for boundary in ('periodic', 'symmetric'):
        assert np.array_equal(convolve(color_image, delta_kernel(), boundary).data, color_image.data)


def test_offset_kernel_shifts_periodically():
    data = np.arange(16, dtype=np.float64).reshape(4, 4)
    # single tap at offset (0, +1): output[y, x] = input[y, x - 1]
    kernel = Kernel(np.array([[0.0, 0.0, 1.0]]), anchor=(0, 1))
    out = convolve(Image(data), kernel, 'periodic').data[:, :, 0]
    assert np.array_equal(out, np.roll(data, 1, axis=1))


def test_periodic_convolution_matches_dft_product(small_image):
    rng = np.random.RandomState(0)
    kernel = Kernel(rng.rand(3, 5), anchor=(1, 1))
    direct = convolve(small_image, kernel, 'periodic').data[:, :, 0]
    response = sp_fft.fft2(kernel.circular((16, 16)))
    via_dft = np.real(sp_fft.ifft2(sp_fft.fft2(small_image.data[:, :, 0]) * response))
    assert np.max(np.abs(direct - via_dft)) < 1e-12


def test_periodic_convolution_commutes_with_circular_shift():
    rng = np.random.RandomState(3)
    data = rng.rand(12, 10, 2)
    kernel = Kernel(rng.randn(3, 5), anchor=(0, 3))
    shifted = np.roll(data, (3, -2), axis=(0, 1))
    lhs = convolve(Image(shifted), kernel, 'periodic').data
    rhs = np.roll(convolve(Image(data), kernel, 'periodic').data, (3, -2), axis=(0, 1))
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_normalized_kernels_preserve_constants():
    image = Image.constant(12, 12, channels=3, value=0.3)
    for kernel in (box_kernel(2), gaussian_kernel(1.0, 7), disk_kernel(2.0, 5)):
        for boundary in ('periodic', 'symmetric'):
            assert np.allclose(convolve(image, kernel, boundary).data, 0.3)


def test_convolve_rejects_kernel_larger_than_image():
    with pytest.raises(ParamError):
        convolve(Image.constant(4, 4), box_kernel(3))
    with pytest.raises(ParamError):
        convolve(Image.constant(8, 8), box_kernel(1), 'zero')


def test_kernel_filter_wraps_convolve(small_image):
    kernel = gaussian_kernel(1.0, 7)
    assert np.array_equal(KernelFilter(kernel)(small_image).data, convolve(small_image, kernel).data)


# Built-in filters

def test_identity_returns_equal_copy(color_image):
    out = identity(color_image)
    assert np.array_equal(out.data, color_image.data)


def test_bilateral_keeps_constants_and_shape(color_image):
    constant = Image.constant(10, 10, channels=3, value=0.4)
    assert np.allclose(bilateral(constant, 2.0, 0.1).data, 0.4)
    assert bilateral(color_image, 1.5, 0.2).shape == color_image.shape


def test_bilateral_preserves_step_edge():
    data = np.zeros((16, 16))
    data[:, 8:] = 1.0
    out = bilateral(Image(data), 2.0, 0.05).data[:, :, 0]
    assert np.max(np.abs(out - data)) < 1e-6


def test_guided_filter_keeps_constants():
    constant = Image.constant(10, 10, value=0.6)
    assert np.allclose(guided(constant, 2, 0.01).data, 0.6)


def _mirror(index, size):
    # half-sample symmetric extension: -1 -> 0, size -> size - 1
    if index < 0:
        return -index - 1
    if index >= size:
        return 2 * size - index - 1
    return index


def _naive_bilateral(data, sigma_s, sigma_r, radius):
    height, width, _ = data.shape
    out = np.zeros_like(data)
    for y in range(height):
        for x in range(width):
            total, norm = np.zeros(data.shape[2]), 0.0
            for dy in range(-radius, radius + 1):
                for dx in range(-radius, radius + 1):
                    q = data[_mirror(y + dy, height), _mirror(x + dx, width)]
                    weight = (np.exp(-(dy * dy + dx * dx) / (2 * sigma_s ** 2))
                              * np.exp(-np.sum((q - data[y, x]) ** 2) / (2 * sigma_r ** 2)))
                    total += weight * q
                    norm += weight
            out[y, x] = total / norm
    return out


def _naive_window_mean(values, radius):
    height, width = values.shape
    out = np.zeros_like(values)
    for y in range(height):
        for x in range(width):
            out[y, x] = np.mean([values[_mirror(y + dy, height), _mirror(x + dx, width)]
                                 for dy in range(-radius, radius + 1)
                                 for dx in range(-radius, radius + 1)])
    return out


def _naive_guided(channel, radius, eps):
    mean = _naive_window_mean(channel, radius)
    var = _naive_window_mean(channel * channel, radius) - mean * mean
    a = var / (var + eps)
    b = mean - a * mean
    return _naive_window_mean(a, radius) * channel + _naive_window_mean(b, radius)


def test_bilateral_matches_direct_sum():
    data = np.random.RandomState(5).rand(6, 7, 3)
    out = bilateral(Image(data), 1.2, 0.3, radius=2).data
    assert np.max(np.abs(out - _naive_bilateral(data, 1.2, 0.3, 2))) < 1e-12


def test_bilateral_wide_range_is_spatial_gaussian():
    data = np.random.RandomState(6).rand(9, 8, 1)
    out = bilateral(Image(data), 1.0, 1e6, radius=2).data
    offsets = np.arange(-2, 3)
    spatial = np.exp(-(offsets[:, None] ** 2 + offsets[None, :] ** 2) / 2.0)
    expected = ndimage.correlate(data[:, :, 0], spatial / spatial.sum(), mode='reflect')
    assert np.max(np.abs(out[:, :, 0] - expected)) < 1e-9


def test_guided_matches_direct_window_means():
    data = np.random.RandomState(7).rand(7, 6, 2)
    out = guided(Image(data), 1, 0.02).data
    for c in range(2):
        assert np.max(np.abs(out[:, :, c] - _naive_guided(data[:, :, c], 1, 0.02))) < 1e-12


def test_guided_large_eps_is_double_box_mean():
    data = np.random.RandomState(8).rand(10, 9, 1)
    out = guided(Image(data), 2, 1e8).data[:, :, 0]
    once = ndimage.uniform_filter(data[:, :, 0], size=5, mode='reflect')
    twice = ndimage.uniform_filter(once, size=5, mode='reflect')
    assert np.max(np.abs(out - twice)) < 1e-8


def test_median_removes_impulse():
    data = np.zeros((7, 7))
    data[3, 3] = 1.0
    assert np.array_equal(median(Image(data), 1).data, np.zeros((7, 7, 1)))


def test_gamma_power_law_and_floor():
    image = Image(np.array([[0.0, 0.5, 1.0]]))
    out = gamma(image, 2.0).data.ravel()
    assert out[0] == pytest.approx(1e-8)
    assert out[1] == pytest.approx(0.25)
    assert out[2] == 1.0


def test_unsharp_matches_its_kernel(small_image):
    via_blur = unsharp(small_image, 0.7, 1.0, support=7)
    via_kernel = convolve(small_image, unsharp_kernel(0.7, 1.0, 7))
    assert np.max(np.abs(via_blur.data - via_kernel.data)) < 1e-12
    assert np.array_equal(unsharp(small_image, 0.0, 1.0, support=7).data, small_image.data)


def test_tikhonov_spectrum_and_constants():
    response = tikhonov_kernel_spectrum(2.0, (8, 6))
    assert response[0, 0] == 1.0
    assert np.all(response > 0) and np.all(response <= 1.0)
    constant = Image.constant(8, 6, value=0.25)
    assert np.allclose(tikhonov(constant, 2.0).data, 0.25)


# Resampling

@pytest.mark.parametrize("method", ['bicubic', 'bilinear', 'nearest', 'lanczos3'])
def test_interpolation_rows_sum_to_one(method):
    matrix = interpolation_matrix(7, 3, method)
    assert matrix.shape == (21, 7)
    assert np.allclose(matrix.sum(axis=1), 1.0)


def test_downsample_box_and_decimate():
    data = np.arange(16, dtype=np.float64).reshape(4, 4)
    assert downsample(Image(data), 2, 'box').data[:, :, 0].tolist() == [[2.5, 4.5], [10.5, 12.5]]
    assert downsample(Image(data), 2, 'decimate').data[:, :, 0].tolist() == [[0.0, 2.0], [8.0, 10.0]]
    with pytest.raises(ParamError):
        downsample(Image(np.zeros((5, 4))), 2)


def test_upsample_nearest_replicates_pixels():
    data = np.array([[0.0, 1.0], [2.0, 3.0]])
    out = upsample(Image(data), 2, 'nearest').data[:, :, 0]
    assert np.array_equal(out, np.kron(data, np.ones((2, 2))))


def test_down_up_keeps_shape_and_constants(color_image):
    assert down_up(color_image, 2).shape == color_image.shape
    constant = Image.constant(8, 8, value=0.7)
    assert np.allclose(down_up(constant, 2, 'box', 'lanczos3').data, 0.7)


# Filter specs

def test_parse_gaussian_spec_fills_defaults():
    spec = parse_filter_spec("gaussian:sigma=2,support=21")
    assert spec.kind == 'gaussian'
    assert spec['sigma'] == 2.0 and isinstance(spec['sigma'], float)
    assert spec['support'] == 21 and isinstance(spec['support'], int)
    assert spec['boundary'] == 'periodic'
    assert spec.is_linear


def test_spec_string_round_trip():
    for text in ("gaussian:sigma=2,support=21", "bilateral:sigma_s=3,sigma_r=0.1",
                 "downup:scale=2,up=lanczos3", "conv:weights=0 1 0/1 4 1/0 1 0,boundary=symmetric",
                 "identity", "external:format=pfm64,cmd=tool --x 1,2 {IN} {OUT}"):
        spec = parse_filter_spec(text)
        assert parse_filter_spec(spec.to_string()) == spec


def test_external_cmd_runs_to_end_of_spec():
    spec = parse_filter_spec("external:timeout=5,cmd=tool -a 1,2 {IN} {OUT}")
    assert spec['cmd'] == "tool -a 1,2 {IN} {OUT}"
    assert spec['timeout'] == 5.0
    assert spec['format'] == 'pfm'


def test_filter_spec_shorthand_accepts_lam():
    spec = filter_spec('unsharp', lam=0.5, sigma=1.0)
    assert spec['lambda'] == 0.5


@pytest.mark.parametrize("text, position", [
    ("gaussian:sigma=", 15),
    ("blur:sigma=2", 0),
    ("gaussian:sigma=2,", 16),
    ("gaussian:sigma=2,sigma=3", 17),
    ("gaussian:sigma=abc", 15),
    ("gaussian:size=3", 9),
])
def test_malformed_specs_report_position(text, position):
    with pytest.raises(SpecParseError) as info:
        parse_filter_spec(text)
    assert info.value.position == position
    assert info.value.diagnostic().endswith(" " * position + "^")


@pytest.mark.parametrize("text", [
    "gaussian:support=21",
    "gaussian:sigma=-1",
    "disk:r=2,support=4",
    "downup:scale=1",
    "conv:boundary=periodic",
    "external:cmd=tool {IN}",
    "gaussian:sigma=1,boundary=zero",
])
def test_invalid_parameters_are_parse_errors(text):
    with pytest.raises(SpecParseError):
        parse_filter_spec(text)


def test_kernel_from_spec_defaults():
    assert kernel_from_spec("disk:r=3").weights.shape == (7, 7)
    assert kernel_from_spec("disk:r=0.5").weights.shape == (3, 3)
    assert kernel_from_spec("gaussian:sigma=2", (9, 9)).weights.shape == (9, 9)
    conv = kernel_from_spec("conv:weights=1 2 1,anchor=0x1")
    assert conv.anchor == (0, 1)
    with pytest.raises(ParamError):
        kernel_from_spec("median:radius=1")


def test_apply_filter_dispatch(color_image):
    spec = parse_filter_spec("gaussian:sigma=1,support=7")
    expected = convolve(color_image, gaussian_kernel(1.0, 7))
    assert np.array_equal(apply_filter(spec, color_image).data, expected.data)
    assert np.array_equal(apply_filter("gaussian:sigma=1,support=7", color_image).data, expected.data)
    assert np.array_equal(SpecFilter(spec)(color_image).data, expected.data)
    for text in ("bilateral:sigma_s=1,sigma_r=0.1", "guided:radius=2,eps=0.01", "median:radius=1",
                 "gamma:gamma=2", "unsharp:lambda=0.5,sigma=1", "downup:scale=2", "tikhonov:lambda=1",
                 "box:radius=1", "disk:r=2"):
        assert apply_filter(text, color_image).shape == color_image.shape


def test_apply_filter_checks_callable_output(small_image):
    with pytest.raises(FilterError):
        apply_filter(lambda image: Image(np.zeros((2, 2))), small_image)
    halved = apply_filter(lambda image: Image(0.5 * image.data), small_image)
    assert np.allclose(halved.data, 0.5 * small_image.data)


# External filters

def test_external_copy_is_exact_with_pfm64(small_image):
    out = external_filter("cp {IN} {OUT}", small_image, format='pfm64')
    assert np.array_equal(out.data, small_image.data)


def test_external_default_exchange_is_exact(small_image):
    out = external_filter("cp {IN} {OUT}", small_image)
    assert np.array_equal(out.data, small_image.data)


def test_external_pfm32_is_single_precision(small_image):
    out = external_filter("cp {IN} {OUT}", small_image, format='pfm32')
    assert np.array_equal(out.data, small_image.data.astype(np.float32).astype(np.float64))


def test_external_png_is_quantized(small_image):
    out = external_filter("cp {IN} {OUT}", small_image, format='png')
    assert np.max(np.abs(out.data - small_image.data)) <= 0.5 / 255 + 1e-12


def test_external_failure_carries_stderr(small_image):
    with pytest.raises(FilterError) as info:
        external_filter("sh -c 'echo boom >&2; exit 1' {IN} {OUT}", small_image)
    assert "boom" in info.value.stderr


def test_external_undecodable_stderr(small_image):
    with pytest.raises(FilterError) as info:
        external_filter("printf '\\377\\376' >&2; exit 1; true {IN} {OUT}", small_image)
    assert "�" in info.value.stderr
    out = external_filter("printf '\\377\\376' >&2; cp {IN} {OUT}", small_image)
    assert np.array_equal(out.data, small_image.data)


def test_external_missing_output(small_image):
    with pytest.raises(FilterError):
        external_filter("true {IN} {OUT}", small_image)


def test_external_timeout(small_image):
    with pytest.raises(FilterError) as info:
        external_filter("sleep 5; true {IN} {OUT}", small_image, timeout=0.5)
    assert "timed out" in str(info.value)


def test_external_template_needs_placeholders(small_image):
    with pytest.raises(ParamError):
        external_filter("cp {IN} out.pfm", small_image)


def test_external_child_sees_exchange_format(small_image, tmp_path):
    marker = tmp_path / "format.txt"
    command = f"echo $DEFILTER_FORMAT > {marker}; cp {{IN}} {{OUT}}"
    external_filter(command, small_image, format='pfm64')
    assert marker.read_text().strip() == 'pfm64'


def test_external_python_filter(small_image, cli_env):
    script = ("import sys; from defilter.utils.image import load_image, save_image, Image; "
              "x = load_image(sys.argv[1]); save_image(Image(1 - x.data), sys.argv[2], 'pfm64')")
    command = f"{sys.executable} -c \"{script}\" {{IN}} {{OUT}}"
    out = external_filter(command, small_image, format='pfm64')
    assert np.allclose(out.data, 1 - small_image.data)
