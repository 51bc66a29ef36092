import numpy as np
import pytest

from defilter.analysis import (
    DenseLinearFilter, ProjectionSide, Reversibility, analyze_linear_operator,
    load_matrix, matrix_from_conv, project_subspace
)
from defilter.exceptions import DimensionError, ParamError
from defilter.filters import Kernel, box_kernel, convolve

from conftest import make_noise_image


def test_diagonal_operator_uses_squared_scale():
    # I - A = diag(0.5, 0.9, 1.0, 1.2)
    a = np.diag([0.5, 0.1, 0.0, -0.2])
    report = analyze_linear_operator(a)
    assert report.singular_values.tolist() == pytest.approx([1.2, 1.0, 0.9, 0.5])
    assert report.omega_index_set.tolist() == [2, 3]
    assert report.contraction_constant == pytest.approx(0.81)
    assert report.contraction_constant_modulus == pytest.approx(0.9)
    assert report.reversibility == Reversibility.PARTIALLY_REVERSIBLE
    assert report.marginal_fraction == 0.25
    assert report.expanding_fraction == 0.25


def test_contractive_operator_is_strict():
    rng = np.random.RandomState(2)
    b = rng.randn(16, 16)
    b *= 0.5 / np.linalg.norm(b, 2)
    report = analyze_linear_operator(np.eye(16) - b)
    assert report.reversibility == Reversibility.STRICT_CONTRACTION
    assert report.omega_fraction == 1.0
    assert report.contraction_constant == pytest.approx(0.25)


def test_operator_validation():
    with pytest.raises(ParamError):
        analyze_linear_operator(np.ones((2, 3)))
    with pytest.raises(ParamError):
        analyze_linear_operator(np.array([[np.inf]]))
    with pytest.raises(ParamError):
        analyze_linear_operator(np.eye(10), max_dimension=8)
    with pytest.raises(ParamError):
        matrix_from_conv(box_kernel(1), (65, 64))


def test_project_subspace_on_vectors_and_images():
    report = analyze_linear_operator(np.diag([0.5, 0.1, 0.0, -0.2]))
    vector = np.array([1.0, 2.0, 3.0, 4.0])
    inside = project_subspace(vector, report)
    outside = project_subspace(vector, report, ProjectionSide.COMPLEMENT)
    assert np.allclose(inside, [1.0, 2.0, 0.0, 0.0])
    assert np.allclose(inside + outside, vector)

    image = make_noise_image(1, size=2)
    projected = project_subspace(image, report)
    assert projected.shape == image.shape
    # column-major: pixel (0, 0) -> 0, (1, 0) -> 1
    assert projected.data[0, 0, 0] == pytest.approx(image.data[0, 0, 0])
    assert projected.data[0, 1, 0] == pytest.approx(0.0)

    with pytest.raises(DimensionError):
        project_subspace(np.ones(3), report)


@pytest.mark.parametrize("boundary", ["periodic", "symmetric"])
def test_conv_matrix_matches_convolution(boundary):
    kernel = Kernel(np.random.RandomState(5).rand(3, 3), anchor=(1, 0))
    image = make_noise_image(8, size=6)
    matrix = matrix_from_conv(kernel, (6, 6), boundary)
    via_matrix = DenseLinearFilter(matrix)(image)
    direct = convolve(image, kernel, boundary)
    assert np.allclose(via_matrix.data, direct.data, atol=1e-12)


def test_dense_filter_checks_dimensions():
    f = DenseLinearFilter(np.eye(4))
    with pytest.raises(DimensionError):
        f(make_noise_image(1, size=3))
    with pytest.raises(ParamError):
        DenseLinearFilter(np.ones((2, 3)))


def test_load_matrix(tmp_path):
    text = tmp_path / "a.txt"
    text.write_text("1 0\n0 1\n")
    assert load_matrix(str(text)).tolist() == [[1.0, 0.0], [0.0, 1.0]]

    binary = tmp_path / "a.npy"
    np.save(str(binary), np.eye(3))
    assert np.array_equal(load_matrix(str(binary)), np.eye(3))

    with pytest.raises(ParamError):
        load_matrix(str(tmp_path / "missing.txt"))


def test_report_dict_includes_spectrum_on_request():
    report = analyze_linear_operator(np.diag([0.5, 0.1]), label="diag")
    summary = report.to_dict()
    assert summary['kind'] == 'linear'
    assert summary['scale'] == 'squared'
    assert 'singular_values' not in summary
    full = report.to_dict(include_spectrum=True)
    assert full['omega_index_set'] == [0, 1]
