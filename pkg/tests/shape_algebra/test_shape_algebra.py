import numpy
import pytest
from beartype.roar import BeartypeCallHintParamViolation
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from rank2shape.errors import ShapeDomainError, UsageError
from rank2shape.shape_algebra import (
    is_positive_definite,
    normalize_shape,
    spd_eigh,
    spd_inv_sqrt,
    spd_sqrt,
    unvech,
    validate_shape_matrix,
    vech,
    vech_dimension,
)


@pytest.fixture
def spd():
    return numpy.array([[4.0, 1.0, 0.5], [1.0, 3.0, -0.2], [0.5, -0.2, 2.0]])


def test_vech_stacks_upper_triangle_by_column():
    A = numpy.array([[1.0, 2.0, 4.0], [2.0, 3.0, 5.0], [4.0, 5.0, 6.0]])
    numpy.testing.assert_array_equal(vech(A), [1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
    numpy.testing.assert_array_equal(unvech(vech(A)), A)
    assert vech_dimension(3) == 6


def test_unvech_rejects_non_triangular_length():
    with pytest.raises(UsageError):
        unvech(numpy.arange(4.0))


def test_vech_type_checked():
    with pytest.raises(BeartypeCallHintParamViolation):
        vech("not a matrix")


def test_square_roots(spd):
    root = spd_sqrt(spd)
    numpy.testing.assert_allclose(root @ root, spd, rtol=0, atol=1e-12)
    numpy.testing.assert_allclose(root, root.T, rtol=0, atol=0)
    inverse_root = spd_inv_sqrt(spd)
    numpy.testing.assert_allclose(inverse_root @ spd @ inverse_root, numpy.eye(3), atol=1e-12)


def test_spd_eigh_rejects_indefinite_and_asymmetric():
    with pytest.raises(ShapeDomainError):
        spd_eigh(numpy.diag([1.0, -1.0]))
    with pytest.raises(ShapeDomainError):
        spd_eigh(numpy.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(ShapeDomainError):
        spd_eigh(numpy.diag([1.0, 1e-14]))
    assert not is_positive_definite(numpy.diag([1.0, 0.0]))
    assert is_positive_definite(numpy.eye(2))


def test_normalize_shape(spd):
    V = normalize_shape(2.5 * spd)
    assert V[0, 0] == 1.0
    numpy.testing.assert_allclose(V, spd / 4.0, rtol=1e-15)
    with pytest.raises(ShapeDomainError):
        normalize_shape(numpy.diag([0.0, 1.0]))


def test_validate_shape_matrix(spd):
    validate_shape_matrix(normalize_shape(spd))
    with pytest.raises(ShapeDomainError):
        validate_shape_matrix(spd)
    with pytest.raises(UsageError):
        validate_shape_matrix(numpy.ones((2, 3)))


@settings(max_examples=50, deadline=None)
@given(arrays(numpy.float64, (3, 3), elements=st.floats(-2.0, 2.0)))
def test_square_root_property(M):
    A = M @ M.T + numpy.eye(3)
    root = spd_sqrt(A)
    numpy.testing.assert_allclose(root @ root, A, rtol=1e-10, atol=1e-10)
    assert is_positive_definite(root)


@settings(max_examples=50, deadline=None)
@given(
    arrays(numpy.float64, (3, 3), elements=st.floats(-2.0, 2.0)),
    arrays(numpy.float64, (3, 3), elements=st.floats(-2.0, 2.0)),
)
def test_square_roots_commute_with_rotations(M, G):
    A = M @ M.T + numpy.eye(3)
    O, _ = numpy.linalg.qr(G + 5.0 * numpy.eye(3))
    rotated = O @ A @ O.T
    rotated = (rotated + rotated.T) / 2.0
    numpy.testing.assert_allclose(spd_sqrt(rotated), O @ spd_sqrt(A) @ O.T, rtol=0, atol=1e-9)
    numpy.testing.assert_allclose(spd_inv_sqrt(rotated), O @ spd_inv_sqrt(A) @ O.T, rtol=0, atol=1e-9)
