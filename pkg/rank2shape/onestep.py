"""One-step R-estimation of shape.

Starting from a root-n consistent preliminary shape V_pre, the estimator moves along the path
V(beta) = V_pre + beta k(k+2) D_{f1}(V_pre) and stops at beta*, the first beta where the rank based score
at V(beta) stops pointing in the same direction as the score at V_pre. 1/beta* estimates the
cross-information J_k(f1, g1).
"""

# internal imports
from .base_estimators import (
    TylerSettings,
    gaussian_shape,
    hr_median,
    rank_weighted_scatter,
    shape_score,
    tyler_shape,
)
from .errors import NoCrossingError, PathExitError, ShapeDomainError, UsageError
from .r2s_enums import LocationMode, Preliminary
from .radial_scores import INFINITE, ScoreFamily, VanDerWaerdenScore
from .shape_algebra import is_positive_definite, normalize_shape, validate_shape_matrix, vech
from .utils import Real

from .logging import getLogger

logger = getLogger(__name__)

# external imports
from dataclasses import dataclass, field
from beartype.typing import Callable, Optional, Tuple
import beartype
import math
import numpy


@dataclass(frozen=True)
class OneStepConfig:
    """
    Settings of the one-step R-estimator

    Attributes:
        f1 (ScoreFamily): score family. Defaults to van der Waerden scores.
        preliminary (Preliminary): preliminary estimator. Defaults to Tyler.
        location (LocationMode): known location or HR median plug-in. Defaults to known.
        theta (numpy.ndarray, optional): the known location, the origin when None
        beta_max (float, optional): initial end of the coarse grid, 1/k when None
        growth (float): factor applied to the grid end and step when the grid is exhausted
        coarse_step (float, optional): coarse grid step, 0.05/(k(k+2)) when None
        hard_cap (float, optional): largest beta searched, 1e4/(k(k+2)) when None
        bisection_tol (float): width of the final bracket
        stationary_tol (float): ||D(V_pre)||_F <= stationary_tol ||V_pre||_2 counts as a zero score
        tyler (TylerSettings): stopping rule of Tyler's iteration
        hr (TylerSettings): stopping rule of the HR median
    """

    f1: ScoreFamily = field(default_factory=VanDerWaerdenScore)
    preliminary: Preliminary = Preliminary.TYLER
    location: LocationMode = LocationMode.KNOWN
    theta: Optional[numpy.ndarray] = field(default=None, compare=False)
    beta_max: Optional[float] = None
    growth: float = 2.0
    coarse_step: Optional[float] = None
    hard_cap: Optional[float] = None
    bisection_tol: float = 1e-8
    stationary_tol: float = 1e-8
    tyler: TylerSettings = field(default_factory=TylerSettings)
    hr: TylerSettings = field(default_factory=lambda: TylerSettings(1e-9, 2000))

    def __post_init__(self):
        for name in ("beta_max", "coarse_step", "hard_cap"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise UsageError(f"OneStepConfig.{name} must be positive, got {value}")
        if not self.growth > 1:
            raise UsageError(f"OneStepConfig.growth must exceed 1, got {self.growth}")
        if not self.bisection_tol > 0:
            raise UsageError(f"OneStepConfig.bisection_tol must be positive, got {self.bisection_tol}")

    def step_for(self, k: int) -> float:
        return self.coarse_step if self.coarse_step is not None else 0.05 / (k * (k + 2))

    def beta_max_for(self, k: int) -> float:
        return self.beta_max if self.beta_max is not None else 1.0 / k

    def cap_for(self, k: int) -> float:
        return self.hard_cap if self.hard_cap is not None else 1e4 / (k * (k + 2))


@dataclass
class OneStepResult:
    """
    Output of r_estimate

    Attributes:
        V (numpy.ndarray): the one-step R-estimate V(beta*)
        beta_star (float): located crossing (0 when the preliminary score vanishes or on fallback)
        alpha_star (float): 1/beta*, INFINITE when beta* = 0
        V_pre (numpy.ndarray): the preliminary shape
        theta (numpy.ndarray): the location used
        evaluations (int): number of h_tilde evaluations
        score_norm (float): ||vech D_{f1}(V_pre)||
        fallback (bool): True when no crossing was found and V is V_pre
        combination (numpy.ndarray, optional): equivariant_combination at alpha*, when alpha* is finite
    """

    V: numpy.ndarray
    beta_star: float
    alpha_star: float
    V_pre: numpy.ndarray
    theta: numpy.ndarray
    evaluations: int = 0
    score_norm: float = 0.0
    fallback: bool = False
    combination: Optional[numpy.ndarray] = None


def _step_along(V_pre: numpy.ndarray, D: numpy.ndarray, beta: float) -> numpy.ndarray:
    k = V_pre.shape[0]
    if beta == 0.0:
        return V_pre.copy()
    V = V_pre + beta * k * (k + 2) * D
    V = (V + V.T) / 2.0
    V[0, 0] = 1.0
    if not is_positive_definite(V):
        logger.debug(f"Path left the positive definite cone at beta={beta!r}")
        raise PathExitError(f"Path left the positive definite cone at beta={beta!r}", beta)
    return V


@beartype.beartype
def path_point(
    data: numpy.ndarray, theta: numpy.ndarray, V_pre: numpy.ndarray, f1: ScoreFamily, beta: Real
) -> numpy.ndarray:
    """
    The point V(beta) = V_pre + beta k(k+2) D_{f1}(V_pre) of the one-step path

    Args:
        data (numpy.ndarray): n x k observations
        theta (numpy.ndarray): location
        V_pre (numpy.ndarray): preliminary shape matrix
        f1 (ScoreFamily): score family
        beta (float): position on the path (>= 0)

    Raises:
        PathExitError: if V(beta) is not positive definite

    Returns:
        numpy.ndarray: shape matrix V(beta), with V(0) = V_pre
    """
    if beta < 0:
        logger.error(f"beta must be non negative, got {beta}")
        raise UsageError(f"beta must be non negative, got {beta}")
    V_pre = validate_shape_matrix(V_pre, "V_pre")
    return _step_along(V_pre, shape_score(data, theta, V_pre, f1), float(beta))


class _ScoreAlignment:
    # h_tilde along one path, with the score at V_pre computed once
    def __init__(self, data, theta, V_pre, f1):
        self.data = data
        self.theta = theta
        self.V_pre = V_pre
        self.f1 = f1
        self.D0 = shape_score(data, theta, V_pre, f1)
        self.score0 = vech(self.D0)
        self.evaluations = 0

    def stationary(self, tolerance: float) -> bool:
        return numpy.linalg.norm(self.D0) <= tolerance * numpy.linalg.norm(self.V_pre, 2)

    def __call__(self, beta: float) -> float:
        self.evaluations += 1
        try:
            V = _step_along(self.V_pre, self.D0, beta)
        except PathExitError:
            return -math.inf
        return float(numpy.dot(self.score0, vech(shape_score(self.data, self.theta, V, self.f1))))


@beartype.beartype
def h_tilde(
    data: numpy.ndarray, theta: numpy.ndarray, V_pre: numpy.ndarray, f1: ScoreFamily, beta: Real
) -> float:
    """
    Alignment of the rank based scores at V_pre and V(beta)

    h_tilde(beta) = <vech D_{f1}(V_pre), vech D_{f1}(V(beta))>; h_tilde(0) = ||vech D_{f1}(V_pre)||^2.

    Args:
        data (numpy.ndarray): n x k observations
        theta (numpy.ndarray): location
        V_pre (numpy.ndarray): preliminary shape matrix
        f1 (ScoreFamily): score family
        beta (float): position on the path (>= 0)

    Returns:
        float: h_tilde(beta), -inf when V(beta) is not positive definite
    """
    if beta < 0:
        logger.error(f"beta must be non negative, got {beta}")
        raise UsageError(f"beta must be non negative, got {beta}")
    V_pre = validate_shape_matrix(V_pre, "V_pre")
    return _ScoreAlignment(data, theta, V_pre, f1)(float(beta))


@beartype.beartype
def locate_crossing(h: Callable[[float], float], k: int, cfg: OneStepConfig) -> float:
    """
    inf{beta > 0 : h(beta) <= 0} by a coarse forward scan and bisection

    The scan starts at 0 with step cfg.step_for(k); once it passes the current grid end (initially
    cfg.beta_max_for(k)) the grid end and the step are multiplied by cfg.growth. The bracket
    h(left) > 0 >= h(right) is then bisected to cfg.bisection_tol.

    Args:
        h (Callable): function of beta, h(0) >= 0
        k (int): dimension, sets the default grid
        cfg (OneStepConfig): grid and tolerance settings

    Raises:
        NoCrossingError: if h stays positive up to cfg.cap_for(k)

    Returns:
        float: the located crossing, 0 if h(0) <= 0
    """
    if h(0.0) <= 0.0:
        return 0.0
    step = cfg.step_for(k)
    grid_end = cfg.beta_max_for(k)
    cap = cfg.cap_for(k)
    left = 0.0
    while True:
        right = min(left + step, cap)
        h_right = h(right)
        if h_right <= 0.0:
            break
        if right >= cap:
            logger.error(f"No crossing of h up to beta={cap!r}")
            raise NoCrossingError(f"No crossing of h up to beta={cap!r}", cap)
        left = right
        if left >= grid_end:
            grid_end *= cfg.growth
            step *= cfg.growth
    logger.debug(f"Crossing bracketed in [{left!r}, {right!r}]")
    while right - left > cfg.bisection_tol:
        middle = (left + right) / 2.0
        h_middle = h(middle)
        if h_middle > 0.0:
            left = middle
        else:
            right, h_right = middle, h_middle
    # a bracket closed by a path exit keeps the last admissible point
    return right if math.isfinite(h_right) else left


def _search(alignment: _ScoreAlignment, k: int, cfg: OneStepConfig) -> float:
    if alignment.stationary(cfg.stationary_tol):
        return 0.0
    return locate_crossing(alignment, k, cfg)


@beartype.beartype
def beta_star(
    data: numpy.ndarray,
    theta: numpy.ndarray,
    V_pre: numpy.ndarray,
    f1: ScoreFamily,
    cfg: Optional[OneStepConfig] = None,
) -> float:
    """
    The first crossing beta* of h_tilde along the one-step path

    Args:
        data (numpy.ndarray): n x k observations
        theta (numpy.ndarray): location
        V_pre (numpy.ndarray): preliminary shape matrix
        f1 (ScoreFamily): score family
        cfg (OneStepConfig, optional): search settings. Defaults to OneStepConfig().

    Raises:
        NoCrossingError: if h_tilde stays positive up to the hard cap

    Returns:
        float: beta* >= 0, exactly 0 when the score at V_pre vanishes
    """
    cfg = cfg or OneStepConfig()
    V_pre = validate_shape_matrix(V_pre, "V_pre")
    return _search(_ScoreAlignment(data, theta, V_pre, f1), V_pre.shape[0], cfg)


def _resolve_location(data: numpy.ndarray, cfg: OneStepConfig) -> numpy.ndarray:
    k = data.shape[1]
    if cfg.location == LocationMode.HR:
        return hr_median(data, cfg.hr.tol, cfg.hr.max_iter).theta
    if cfg.theta is None:
        return numpy.zeros(k)
    theta = numpy.asarray(cfg.theta, dtype=float)
    if theta.shape != (k,):
        logger.error(f"Location must have {k} entries, got shape {theta.shape}")
        raise UsageError(f"Location must have {k} entries, got shape {theta.shape}")
    return theta


@beartype.beartype
def preliminary_shape(data: numpy.ndarray, theta: numpy.ndarray, cfg: OneStepConfig) -> numpy.ndarray:
    """
    The preliminary shape estimate selected by cfg.preliminary

    Args:
        data (numpy.ndarray): n x k observations
        theta (numpy.ndarray): location (used by Tyler's estimator)
        cfg (OneStepConfig): settings

    Returns:
        numpy.ndarray: the preliminary shape matrix
    """
    if cfg.preliminary == Preliminary.GAUSSIAN:
        return gaussian_shape(data).V
    return tyler_shape(data, theta, cfg.tyler.tol, cfg.tyler.max_iter).V


@beartype.beartype
def r_estimate(data: numpy.ndarray, cfg: Optional[OneStepConfig] = None) -> OneStepResult:
    """
    One-step R-estimate of shape V(beta*) = V_pre + beta* k(k+2) D_{f1}(V_pre)

    When the beta* search finds no crossing up to the hard cap, the preliminary estimate is returned with
    the fallback flag set.

    Args:
        data (numpy.ndarray): n x k observations
        cfg (OneStepConfig, optional): settings. Defaults to OneStepConfig().

    Returns:
        OneStepResult: the estimate with beta*, alpha* and diagnostics
    """
    cfg = cfg or OneStepConfig()
    data = numpy.asarray(data, dtype=float)
    if data.ndim != 2:
        logger.error(f"Data must be an n x k array, got shape {data.shape}")
        raise UsageError(f"Data must be an n x k array, got shape {data.shape}")
    k = data.shape[1]
    theta = _resolve_location(data, cfg)
    V_pre = preliminary_shape(data, theta, cfg)
    alignment = _ScoreAlignment(data, theta, V_pre, cfg.f1)
    fallback = False
    try:
        beta = _search(alignment, k, cfg)
    except NoCrossingError as e:
        logger.warning(f"{e}; falling back to the preliminary estimate")
        beta = 0.0
        fallback = True
    V = _step_along(V_pre, alignment.D0, beta)
    alpha = 1.0 / beta if beta > 0 else INFINITE
    combination = None
    if math.isfinite(alpha):
        W = rank_weighted_scatter(data, theta, V_pre, cfg.f1)
        try:
            combination = equivariant_combination(V_pre, W, alpha)
        except ShapeDomainError:
            logger.info("Combination form is not positive definite at alpha*")
    logger.debug(
        f"One-step {cfg.f1!r}: beta*={beta!r} after {alignment.evaluations} evaluations, fallback={fallback}"
    )
    return OneStepResult(
        V,
        beta,
        alpha,
        V_pre,
        theta,
        alignment.evaluations,
        float(numpy.linalg.norm(alignment.score0)),
        fallback,
        combination,
    )


@beartype.beartype
def naive_cross_info(
    data: numpy.ndarray,
    theta: numpy.ndarray,
    V_pre: numpy.ndarray,
    f1: ScoreFamily,
    v: numpy.ndarray,
) -> float:
    """
    Perturbation estimate of J_k(f1, g1) from the change of the score under V_pre -> V_pre + v / sqrt(n)

    alpha(v) = sqrt(n) k(k+2) ||vech D(V_pre + v / sqrt(n)) - vech D(V_pre)|| / ||vech v||. The value depends
    on the arbitrary direction and size of v; it is a diagnostic.

    Args:
        data (numpy.ndarray): n x k observations
        theta (numpy.ndarray): location
        V_pre (numpy.ndarray): preliminary shape matrix
        f1 (ScoreFamily): score family
        v (numpy.ndarray): symmetric k x k perturbation with v_11 = 0

    Raises:
        UsageError: if v is zero, not symmetric or has a non zero (1, 1) entry
        ShapeDomainError: if the perturbed matrix is not positive definite

    Returns:
        float: the estimate
    """
    V_pre = validate_shape_matrix(V_pre, "V_pre")
    v = numpy.asarray(v, dtype=float)
    if v.shape != V_pre.shape or not numpy.allclose(v, v.T, rtol=0.0, atol=1e-12) or v[0, 0] != 0.0:
        logger.error("Perturbation must be symmetric with a zero (1,1) entry and the shape of V_pre")
        raise UsageError("Perturbation must be symmetric with a zero (1,1) entry and the shape of V_pre")
    direction = numpy.linalg.norm(vech(v))
    if direction == 0.0:
        logger.error("Perturbation direction is zero")
        raise UsageError("Perturbation direction is zero")
    n, k = numpy.asarray(data).shape
    perturbed = V_pre + v / math.sqrt(n)
    if not is_positive_definite(perturbed):
        logger.error("Perturbed shape matrix is not positive definite")
        raise ShapeDomainError("Perturbed shape matrix is not positive definite")
    change = vech(shape_score(data, theta, perturbed, f1)) - vech(shape_score(data, theta, V_pre, f1))
    return math.sqrt(n) * k * (k + 2) * float(numpy.linalg.norm(change)) / float(direction)


@beartype.beartype
def equivariant_combination(V_pre: numpy.ndarray, W: numpy.ndarray, alpha: Real) -> numpy.ndarray:
    """
    The normalised combination B / B_11 with B = (1 - k(k+2)/alpha) V_pre + (k(k+2)/alpha) W

    Args:
        V_pre (numpy.ndarray): preliminary shape matrix
        W (numpy.ndarray): rank weighted scatter at V_pre
        alpha (float): cross-information estimate (> 0)

    Raises:
        ShapeDomainError: if B is not positive definite

    Returns:
        numpy.ndarray: shape matrix
    """
    if not alpha > 0:
        logger.error(f"alpha must be positive, got {alpha}")
        raise UsageError(f"alpha must be positive, got {alpha}")
    k = V_pre.shape[0]
    weight = k * (k + 2) / float(alpha)
    B = (1.0 - weight) * V_pre + weight * W
    V = normalize_shape((B + B.T) / 2.0)
    if not is_positive_definite(V):
        logger.error("Combination is not positive definite")
        raise ShapeDomainError("Combination is not positive definite")
    return V


@beartype.beartype
def convex_combination_form(V_pre: numpy.ndarray, W: numpy.ndarray, alpha: Real) -> numpy.ndarray:
    """
    (1 - (k(k+2)/alpha) W_11) V_pre + (k(k+2)/alpha) W_11 (W / W_11), the one-step update written as a
    weighted average of the preliminary shape and the normalised rank weighted scatter

    Args:
        V_pre (numpy.ndarray): preliminary shape matrix
        W (numpy.ndarray): rank weighted scatter at V_pre
        alpha (float): cross-information estimate (> 0)

    Returns:
        numpy.ndarray: the updated matrix (not renormalised)
    """
    k = V_pre.shape[0]
    weight = k * (k + 2) / float(alpha) * W[0, 0]
    return (1.0 - weight) * V_pre + weight * (W / W[0, 0])


def search_diagnostics(result: OneStepResult) -> Tuple[Tuple[str, float], ...]:
    """
    Key/value pairs printed by the command line interface for a one-step result
    """
    return (
        ("beta_star", result.beta_star),
        ("alpha_star", result.alpha_star),
        ("evaluations", result.evaluations),
        ("score_norm", result.score_norm),
        ("fallback", int(result.fallback)),
    )
