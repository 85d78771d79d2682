"""Preliminary and reference shape estimators, multivariate ranks and signs, and the rank-based statistics.

Observations are the rows of an n x k array. For a location theta and a scatter V the standardised
observations are Z_i = V^{-1/2} (X_i - theta); d_i = ||Z_i|| are the distances, U_i = Z_i / d_i the
multivariate signs and R_i the rank of d_i among d_1, ..., d_n.
"""

# internal imports
from .errors import ConvergenceError, DegenerateDataError, ShapeDomainError, UsageError
from .r2s_enums import EstimatorMethod
from .radial_scores import DEFAULT_QUADRATURE, QuadratureSpec, ScoreFamily, score_information
from .shape_algebra import normalize_shape, spd_eigh, spd_inv_sqrt, spd_sqrt

from .logging import getLogger

logger = getLogger(__name__)

# external imports
from dataclasses import dataclass, field
from beartype.typing import Any, Dict, NamedTuple, Optional
import beartype
import functools
import numpy
import scipy.stats


@dataclass(frozen=True)
class TylerSettings:
    """
    Stopping rule of the fixed point iterations

    Attributes:
        tol (float): largest accepted residual. Defaults to 1e-9.
        max_iter (int): iteration limit. Defaults to 500.
    """

    tol: float = 1e-9
    max_iter: int = 500

    def __post_init__(self):
        if not self.tol > 0:
            raise UsageError(f"Tolerance must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise UsageError(f"max_iter must be at least 1, got {self.max_iter}")


class RanksSigns(NamedTuple):
    d: numpy.ndarray
    R: numpy.ndarray
    U: numpy.ndarray


@dataclass
class EstimatorReport:
    """
    Result of a shape estimator

    Attributes:
        V (numpy.ndarray): the estimated shape matrix
        iterations (int): number of fixed point iterations (0 for closed forms)
        residual (float): final residual of the defining equation
        meta (dict): method tag and tuning used
        theta (numpy.ndarray, optional): estimated location, for estimators that provide one
    """

    V: numpy.ndarray
    iterations: int = 0
    residual: float = 0.0
    meta: Dict[str, Any] = field(default_factory=dict)
    theta: Optional[numpy.ndarray] = None


def _check_data(data: numpy.ndarray, minimum_rows: int) -> numpy.ndarray:
    data = numpy.asarray(data, dtype=float)
    if data.ndim != 2:
        logger.error(f"Data must be an n x k array, got shape {data.shape}")
        raise UsageError(f"Data must be an n x k array, got shape {data.shape}")
    if data.shape[0] < minimum_rows:
        logger.error(f"Need at least {minimum_rows} observations, got {data.shape[0]}")
        raise DegenerateDataError(f"Need at least {minimum_rows} observations, got {data.shape[0]}")
    if not numpy.all(numpy.isfinite(data)):
        logger.error("Data contain non finite values")
        raise UsageError("Data contain non finite values")
    return data


def _check_location(theta: numpy.ndarray, k: int) -> numpy.ndarray:
    theta = numpy.asarray(theta, dtype=float)
    if theta.shape != (k,):
        logger.error(f"Location must have {k} entries, got shape {theta.shape}")
        raise UsageError(f"Location must have {k} entries, got shape {theta.shape}")
    return theta


def _check_scatter(V: numpy.ndarray, k: int, name: str) -> numpy.ndarray:
    V = numpy.asarray(V, dtype=float)
    if V.shape != (k, k):
        logger.error(f"{name} must be {k} x {k}, got shape {V.shape}")
        raise UsageError(f"{name} must be {k} x {k}, got shape {V.shape}")
    try:
        spd_eigh(V)
    except ShapeDomainError as e:
        logger.error(f"{name} is not symmetric positive definite: {e}")
        raise ShapeDomainError(f"{name} is not symmetric positive definite: {e}") from e
    return V


def _standardize(centred: numpy.ndarray, scatter: numpy.ndarray):
    # distances and signs of centred rows under scatter; singular scatter means degenerate data
    try:
        T = spd_inv_sqrt(scatter)
    except ShapeDomainError as e:
        logger.error(f"Singular scatter iterate: {e}")
        raise DegenerateDataError(f"Singular scatter iterate: {e}") from e
    Z = centred @ T
    d = numpy.sqrt(numpy.einsum("ij,ij->i", Z, Z))
    zero = numpy.flatnonzero(d == 0.0)
    if len(zero):
        logger.error(f"Observation {int(zero[0])} coincides with the location")
        raise DegenerateDataError(
            f"Observation {int(zero[0])} coincides with the location", index=int(zero[0])
        )
    return d, Z / d[:, numpy.newaxis]


def _sign_residual(U: numpy.ndarray) -> float:
    n, k = U.shape
    return float(numpy.linalg.norm((k / n) * (U.T @ U) - numpy.eye(k)))


@beartype.beartype
def ranks_signs(data: numpy.ndarray, theta: numpy.ndarray, V: numpy.ndarray) -> RanksSigns:
    """
    Distances, ranks and multivariate signs of the observations

    Ties in the distances are broken by observation index, so R is always a permutation of 1..n.

    Args:
        data (numpy.ndarray): n x k observations
        theta (numpy.ndarray): location
        V (numpy.ndarray): symmetric positive definite scatter (any normalisation)

    Raises:
        ShapeDomainError: if V is not symmetric positive definite
        DegenerateDataError: if an observation equals theta (index attribute set)

    Returns:
        RanksSigns: d, R (integers 1..n) and U (n x k unit rows)
    """
    data = _check_data(data, 1)
    theta = _check_location(theta, data.shape[1])
    V = _check_scatter(V, data.shape[1], "V")
    d, U = _standardize(data - theta, V)
    R = scipy.stats.rankdata(d, method="ordinal").astype(int)
    return RanksSigns(d, R, U)


@functools.lru_cache(maxsize=64)
def _rank_scores(f1: ScoreFamily, n: int, k: int) -> numpy.ndarray:
    scores = numpy.asarray(f1.score(numpy.arange(1, n + 1) / (n + 1.0), k), dtype=float)
    scores.setflags(write=False)
    return scores


@beartype.beartype
def rank_scores(f1: ScoreFamily, n: int, k: int) -> numpy.ndarray:
    """
    The scores K_{f1}(i / (n + 1)) for i = 1..n (cached, read only)

    Args:
        f1 (ScoreFamily): score family
        n (int): sample size
        k (int): dimension

    Returns:
        numpy.ndarray: the n scores
    """
    return _rank_scores(f1, n, k)


@beartype.beartype
def tyler_shape(
    data: numpy.ndarray, theta: numpy.ndarray, tol: float = 1e-9, max_iter: int = 500
) -> EstimatorReport:
    """
    Tyler's shape estimator, the shape matrix V with (k/n) sum_i U_i(theta, V) U_i(theta, V)' = I

    Iterates Sigma <- normalize((k/n) sum_i x_i x_i' / (x_i' Sigma^{-1} x_i)) with x_i = X_i - theta,
    starting from the identity.

    Args:
        data (numpy.ndarray): n x k observations, n > k
        theta (numpy.ndarray): location
        tol (float, optional): residual ||(k/n) sum U_i U_i' - I||_F accepted. Defaults to 1e-9.
        max_iter (int, optional): iteration limit. Defaults to 500.

    Raises:
        ConvergenceError: if the residual is above tol after max_iter iterations
        DegenerateDataError: on a singular iterate or an observation equal to theta

    Returns:
        EstimatorReport: the estimate with its iteration count and residual
    """
    settings = TylerSettings(tol, max_iter)
    data = _check_data(data, 2)
    n, k = data.shape
    if n <= k:
        logger.error(f"Tyler's estimator needs n > k, got n={n}, k={k}")
        raise DegenerateDataError(f"Tyler's estimator needs n > k, got n={n}, k={k}")
    centred = data - _check_location(theta, k)
    sigma = numpy.eye(k)
    for iteration in range(settings.max_iter + 1):
        d, U = _standardize(centred, sigma)
        residual = _sign_residual(U)
        if residual <= settings.tol:
            logger.debug(f"Tyler converged after {iteration} iterations, residual {residual:.3e}")
            return EstimatorReport(
                normalize_shape(sigma),
                iteration,
                residual,
                {"method": EstimatorMethod.TYLER, "tol": settings.tol, "max_iter": settings.max_iter},
            )
        if iteration == settings.max_iter:
            break
        weighted = centred / (d**2)[:, numpy.newaxis]
        scatter = (k / n) * (centred.T @ weighted)
        if not scatter[0, 0] > 0:
            logger.error("Singular scatter iterate: zero first coordinate")
            raise DegenerateDataError("Singular scatter iterate: zero first coordinate")
        sigma = normalize_shape((scatter + scatter.T) / 2.0)
    logger.error(f"Tyler iteration stopped after {settings.max_iter} iterations, residual {residual:.3e}")
    raise ConvergenceError(
        f"Tyler iteration stopped after {settings.max_iter} iterations, residual {residual:.3e}",
        residual,
        settings.max_iter,
    )


@beartype.beartype
def gaussian_shape(data: numpy.ndarray) -> EstimatorReport:
    """
    Gaussian maximum likelihood shape, the sample covariance (divisor n - 1) scaled to a unit (1, 1) entry

    Args:
        data (numpy.ndarray): n x k observations, n >= 2

    Raises:
        DegenerateDataError: if the first coordinate has zero variance or the covariance is singular

    Returns:
        EstimatorReport: the estimate (iterations and residual are zero)
    """
    data = _check_data(data, 2)
    covariance = numpy.atleast_2d(numpy.cov(data, rowvar=False, ddof=1))
    if not covariance[0, 0] > 0:
        logger.error("First coordinate has zero variance")
        raise DegenerateDataError("First coordinate has zero variance")
    V = normalize_shape(covariance)
    try:
        spd_inv_sqrt(V)
    except ShapeDomainError as e:
        logger.error(f"Sample covariance is singular: {e}")
        raise DegenerateDataError(f"Sample covariance is singular: {e}") from e
    return EstimatorReport(V, 0, 0.0, {"method": EstimatorMethod.GAUSSIAN})


@beartype.beartype
def hr_median(data: numpy.ndarray, tol: float = 1e-9, max_iter: int = 2000) -> EstimatorReport:
    """
    Hettmansperger-Randles affine equivariant median with its companion Tyler shape

    Alternates one Tyler sweep at fixed location with a Weiszfeld step
    theta <- theta + V^{1/2} mean(U) / mean(1 / d), halving the step while it increases the norm of the
    sign mean. Starts from the coordinatewise median and the identity.

    Args:
        data (numpy.ndarray): n x k observations, n > k
        tol (float, optional): bound on both ||mean(U)|| and the Tyler residual. Defaults to 1e-9.
        max_iter (int, optional): iteration limit. Defaults to 2000.

    Raises:
        ConvergenceError: if the joint fixed point is not reached after max_iter iterations
        DegenerateDataError: on a singular iterate or an iterate equal to an observation

    Returns:
        EstimatorReport: V is the shape, theta the location, residual the larger of the two residuals
    """
    settings = TylerSettings(tol, max_iter)
    data = _check_data(data, 2)
    n, k = data.shape
    if n <= k:
        logger.error(f"The HR median needs n > k, got n={n}, k={k}")
        raise DegenerateDataError(f"The HR median needs n > k, got n={n}, k={k}")
    theta = numpy.median(data, axis=0)
    sigma = numpy.eye(k)
    for iteration in range(settings.max_iter + 1):
        centred = data - theta
        d, U = _standardize(centred, sigma)
        sign_mean = U.mean(axis=0)
        residual = max(float(numpy.linalg.norm(sign_mean)), _sign_residual(U))
        if residual <= settings.tol:
            logger.debug(f"HR median converged after {iteration} iterations, residual {residual:.3e}")
            return EstimatorReport(
                normalize_shape(sigma),
                iteration,
                residual,
                {"method": EstimatorMethod.HR, "tol": settings.tol, "max_iter": settings.max_iter},
                theta,
            )
        if iteration == settings.max_iter:
            break

        scatter = (k / n) * (centred.T @ (centred / (d**2)[:, numpy.newaxis]))
        sigma = normalize_shape((scatter + scatter.T) / 2.0)

        d, U = _standardize(centred, sigma)
        sign_mean = U.mean(axis=0)
        step = spd_sqrt(sigma) @ sign_mean / numpy.mean(1.0 / d)
        current = float(numpy.linalg.norm(sign_mean))
        for _ in range(50):
            try:
                _, candidate_U = _standardize(data - (theta + step), sigma)
            except DegenerateDataError:
                step = step / 2.0
                continue
            if float(numpy.linalg.norm(candidate_U.mean(axis=0))) <= current:
                break
            step = step / 2.0
        theta = theta + step
    logger.error(f"HR median stopped after {settings.max_iter} iterations, residual {residual:.3e}")
    raise ConvergenceError(
        f"HR median stopped after {settings.max_iter} iterations, residual {residual:.3e}",
        residual,
        settings.max_iter,
    )


def _rank_weighted_signs(data, theta, V, f1):
    # (1/n) sum K(R_i / (n + 1)) U_i U_i' in standardised coordinates
    rs = ranks_signs(data, theta, V)
    n, k = rs.U.shape
    weights = rank_scores(f1, n, k)[rs.R - 1]
    S = (rs.U * weights[:, numpy.newaxis]).T @ rs.U / n
    return (S + S.T) / 2.0


@beartype.beartype
def rank_weighted_scatter(
    data: numpy.ndarray, theta: numpy.ndarray, V: numpy.ndarray, f1: ScoreFamily
) -> numpy.ndarray:
    """
    W_{f1}(V) = V^{1/2} [(1/n) sum_i K_{f1}(R_i / (n + 1)) U_i U_i'] V^{1/2}

    Args:
        data (numpy.ndarray): n x k observations
        theta (numpy.ndarray): location
        V (numpy.ndarray): shape matrix at which ranks and signs are computed
        f1 (ScoreFamily): score family

    Returns:
        numpy.ndarray: symmetric positive semi-definite k x k matrix
    """
    S = _rank_weighted_signs(data, theta, V, f1)
    root = spd_sqrt(numpy.asarray(V, dtype=float))
    W = root @ S @ root
    return (W + W.T) / 2.0


@beartype.beartype
def shape_score(
    data: numpy.ndarray, theta: numpy.ndarray, V: numpy.ndarray, f1: ScoreFamily
) -> numpy.ndarray:
    """
    The one-step direction D_{f1}(V) = W_{f1}(V) - W_{f1}(V)_{11} V, with D_{11} = 0

    Args:
        data (numpy.ndarray): n x k observations
        theta (numpy.ndarray): location
        V (numpy.ndarray): shape matrix
        f1 (ScoreFamily): score family

    Returns:
        numpy.ndarray: symmetric k x k matrix with a zero (1, 1) entry
    """
    V = numpy.asarray(V, dtype=float)
    W = rank_weighted_scatter(data, theta, V, f1)
    D = W - W[0, 0] * V
    D = (D + D.T) / 2.0
    D[0, 0] = 0.0
    return D


class SphericityResult(NamedTuple):
    Q: float
    df: int
    p: float


@beartype.beartype
def sphericity_stat(
    data: numpy.ndarray,
    theta: numpy.ndarray,
    V0: numpy.ndarray,
    f1: ScoreFamily,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> SphericityResult:
    """
    Rank-based test of the null hypothesis V = V0

    Q = n k (k + 2) / (2 J_k(f1)) * (tr S^2 - (tr S)^2 / k) where S = S_{f1}(V0) is the rank weighted
    sign scatter in V0-standardised coordinates. Q is asymptotically chi-square with k(k+1)/2 - 1 degrees
    of freedom under the null.

    Args:
        data (numpy.ndarray): n x k observations
        theta (numpy.ndarray): location (known or estimated)
        V0 (numpy.ndarray): hypothesised shape
        f1 (ScoreFamily): score family
        quad (QuadratureSpec, optional): quadrature rule for J_k(f1). Defaults to DEFAULT_QUADRATURE.

    Raises:
        ShapeDomainError: if V0 is not symmetric positive definite

    Returns:
        SphericityResult: Q, df and the upper tail p-value
    """
    data = _check_data(data, 1)
    n, k = data.shape
    V0 = _check_scatter(V0, k, "V0")
    S = _rank_weighted_signs(data, theta, V0, f1)
    information = score_information(f1, k, quad)
    trace = float(numpy.trace(S))
    deviation = max(float(numpy.sum(S * S)) - trace**2 / k, 0.0)
    Q = n * k * (k + 2) / (2.0 * information) * deviation
    df = k * (k + 1) // 2 - 1
    return SphericityResult(Q, df, float(scipy.stats.chi2.sf(Q, df)))
