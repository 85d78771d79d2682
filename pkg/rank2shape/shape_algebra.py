"""Dense symmetric-matrix helpers shared by every estimator.

Shape matrices are plain ``numpy.ndarray`` objects of size k x k that are symmetric, positive definite and
have their (1, 1) entry equal to one; :func:`validate_shape_matrix` checks those three properties.
"""

import beartype
import numpy
from beartype.typing import Tuple

from .errors import ShapeDomainError, UsageError
from .logging import getLogger

logger = getLogger(__name__)

# eigenvalues below this fraction of the largest one are treated as zero
PD_RELATIVE_TOLERANCE = 1e-12
SYMMETRY_TOLERANCE = 1e-10


def _check_square(A: numpy.ndarray, name: str = "A"):
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        logger.error(f"{name} must be a square matrix, got shape {A.shape}")
        raise UsageError(f"{name} must be a square matrix, got shape {A.shape}")


def _check_symmetric(A: numpy.ndarray, name: str = "A"):
    scale = max(1.0, float(numpy.max(numpy.abs(A))))
    asymmetry = float(numpy.max(numpy.abs(A - A.T)))
    if asymmetry > SYMMETRY_TOLERANCE * scale:
        logger.error(f"{name} is not symmetric (max |A - A'| = {asymmetry:.3e})")
        raise ShapeDomainError(f"{name} is not symmetric (max |A - A'| = {asymmetry:.3e})")


@beartype.beartype
def spd_eigh(A: numpy.ndarray) -> Tuple[numpy.ndarray, numpy.ndarray]:
    """
    Spectral decomposition of a symmetric positive definite matrix

    Args:
        A (numpy.ndarray): symmetric positive definite k x k matrix

    Raises:
        ShapeDomainError: if A is not symmetric or has an eigenvalue below 1e-12 times its largest one

    Returns:
        (numpy.ndarray, numpy.ndarray): eigenvalues (ascending) and orthonormal eigenvectors (columns)
    """
    A = numpy.asarray(A, dtype=float)
    _check_square(A)
    _check_symmetric(A)
    eigenvalues, eigenvectors = numpy.linalg.eigh((A + A.T) / 2.0)
    largest = eigenvalues[-1]
    if not numpy.all(numpy.isfinite(eigenvalues)) or largest <= 0.0:
        logger.error(f"Matrix is not positive definite: largest eigenvalue {largest:.3e}")
        raise ShapeDomainError(f"Matrix is not positive definite: largest eigenvalue {largest:.3e}")
    if eigenvalues[0] <= PD_RELATIVE_TOLERANCE * largest:
        logger.error(
            f"Matrix is not positive definite: eigenvalue {eigenvalues[0]:.3e} "
            f"(largest eigenvalue {largest:.3e})"
        )
        raise ShapeDomainError(
            f"Matrix is not positive definite: eigenvalue {eigenvalues[0]:.3e} "
            f"(largest eigenvalue {largest:.3e})"
        )
    return eigenvalues, eigenvectors


@beartype.beartype
def is_positive_definite(A: numpy.ndarray) -> bool:
    """
    Check whether a symmetric matrix is positive definite (same tolerance as spd_eigh)

    Args:
        A (numpy.ndarray): symmetric k x k matrix

    Returns:
        bool: True if all eigenvalues exceed 1e-12 times the largest eigenvalue
    """
    try:
        spd_eigh(A)
    except ShapeDomainError:
        return False
    return True


@beartype.beartype
def spd_sqrt(A: numpy.ndarray) -> numpy.ndarray:
    """
    The unique symmetric positive definite square root S of A, so that S @ S = A

    Args:
        A (numpy.ndarray): symmetric positive definite k x k matrix

    Returns:
        numpy.ndarray: the symmetric square root of A
    """
    eigenvalues, eigenvectors = spd_eigh(A)
    root = (eigenvectors * numpy.sqrt(eigenvalues)) @ eigenvectors.T
    return (root + root.T) / 2.0


@beartype.beartype
def spd_inv_sqrt(A: numpy.ndarray) -> numpy.ndarray:
    """
    The inverse of the symmetric square root of A, so that T @ A @ T = I

    Args:
        A (numpy.ndarray): symmetric positive definite k x k matrix

    Returns:
        numpy.ndarray: the symmetric inverse square root of A
    """
    eigenvalues, eigenvectors = spd_eigh(A)
    root = (eigenvectors / numpy.sqrt(eigenvalues)) @ eigenvectors.T
    return (root + root.T) / 2.0


@beartype.beartype
def normalize_shape(A: numpy.ndarray) -> numpy.ndarray:
    """
    Scale a symmetric positive definite matrix so that its (1, 1) entry is exactly one

    Args:
        A (numpy.ndarray): symmetric positive definite k x k matrix (a scatter matrix)

    Raises:
        ShapeDomainError: if A[0, 0] <= 0

    Returns:
        numpy.ndarray: the shape matrix A / A[0, 0]
    """
    A = numpy.asarray(A, dtype=float)
    _check_square(A)
    _check_symmetric(A)
    a11 = float(A[0, 0])
    if not a11 > 0.0:
        logger.error(f"Cannot normalize a matrix with (1,1) entry {a11}")
        raise ShapeDomainError(f"Cannot normalize a matrix with (1,1) entry {a11}")
    V = (A + A.T) / (2.0 * a11)
    V[0, 0] = 1.0
    return V


@beartype.beartype
def validate_shape_matrix(V: numpy.ndarray, name: str = "V") -> numpy.ndarray:
    """
    Check that V is a shape matrix: symmetric, positive definite, V[0, 0] == 1

    Args:
        V (numpy.ndarray): candidate shape matrix
        name (str, optional): name used in error messages. Defaults to "V".

    Raises:
        ShapeDomainError: if any of the three properties fails

    Returns:
        numpy.ndarray: V as a float array
    """
    V = numpy.asarray(V, dtype=float)
    _check_square(V, name)
    if V.shape[0] < 2:
        logger.error(f"{name} must be at least 2 x 2, got {V.shape}")
        raise UsageError(f"{name} must be at least 2 x 2, got {V.shape}")
    if V[0, 0] != 1.0:
        logger.error(f"{name}[0, 0] must equal 1, got {V[0, 0]!r}")
        raise ShapeDomainError(f"{name}[0, 0] must equal 1, got {V[0, 0]!r}")
    spd_eigh(V)
    return V


@beartype.beartype
def vech(A: numpy.ndarray) -> numpy.ndarray:
    """
    Stack the upper triangle (diagonal included) of a symmetric matrix column by column

    The (1, 1) entry comes first, then (1, 2), (2, 2), (1, 3), (2, 3), (3, 3), ...

    Args:
        A (numpy.ndarray): symmetric k x k matrix

    Returns:
        numpy.ndarray: vector of length k(k+1)/2
    """
    A = numpy.asarray(A, dtype=float)
    _check_square(A)
    cols, rows = numpy.tril_indices(A.shape[0])
    return A[rows, cols].copy()


@beartype.beartype
def unvech(v: numpy.ndarray) -> numpy.ndarray:
    """
    Inverse of vech: rebuild the symmetric matrix from its stacked upper triangle

    Args:
        v (numpy.ndarray): vector of length k(k+1)/2

    Raises:
        UsageError: if the length of v is not a triangular number

    Returns:
        numpy.ndarray: symmetric k x k matrix
    """
    v = numpy.asarray(v, dtype=float)
    if v.ndim != 1:
        logger.error(f"vech vector must be one dimensional, got shape {v.shape}")
        raise UsageError(f"vech vector must be one dimensional, got shape {v.shape}")
    k = int(round((numpy.sqrt(8 * len(v) + 1) - 1) / 2))
    if k < 1 or k * (k + 1) // 2 != len(v):
        logger.error(f"Length {len(v)} is not of the form k(k+1)/2")
        raise UsageError(f"Length {len(v)} is not of the form k(k+1)/2")
    cols, rows = numpy.tril_indices(k)
    A = numpy.zeros((k, k))
    A[rows, cols] = v
    A[cols, rows] = v
    return A


@beartype.beartype
def vech_dimension(k: int) -> int:
    """
    Length of vech for a k x k matrix

    Args:
        k (int): dimension

    Returns:
        int: k(k+1)/2
    """
    return k * (k + 1) // 2
