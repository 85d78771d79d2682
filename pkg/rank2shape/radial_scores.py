"""Score functions, radial quantiles and the scalar integrals of the rank-based shape theory.

A score family f1 defines the score function K_{f1} : (0, 1) -> [0, oo) applied to ranks R_i / (n + 1).
The matching radial law g1 (the distance of a standardized observation from the centre) is used by the
kurtosis and efficiency computations. All integrals over (0, 1) are done by composite Gauss-Legendre
quadrature on panels that are refined geometrically towards both endpoints, where the scores may be
unbounded.
"""

# internal imports
from .errors import QuadratureError, ShapeDomainError, UsageError
from .r2s_enums import RadialFamily, ScoreKind
from .utils import Real, format_parameter, parse_spec_string

from .logging import getLogger

logger = getLogger(__name__)

# external imports
from abc import ABC, abstractmethod
from dataclasses import dataclass
from beartype.typing import Callable, NamedTuple, Optional, Tuple, Union
import beartype
import functools
import math
import numpy
import scipy.special
import scipy.stats

# explicit marker for an infinite kurtosis / efficiency (rendered "inf" in CSV)
INFINITE = math.inf

ArrayLike = Union[Real, numpy.ndarray]


def _dyadic_levels(edge_clip: float) -> int:
    # panels [2^-(j+1), 2^-j], j = 1..levels, reach down to edge_clip
    return int(math.ceil(math.log2(1.0 / edge_clip))) - 1


@dataclass(frozen=True)
class QuadratureSpec:
    """
    Gauss-Legendre rule on (0, 1)

    Attributes:
        nodes (int): node budget; split over 2(L+1) panels where L is set by edge_clip, at least 8 per panel.
            The convergence check doubles the nodes of every panel.
        edge_clip (float): smallest distance of a node from 0 or 1
        tolerance (float): largest change allowed when the node budget is doubled (relative to max(1, |I|))
    """

    nodes: int = 512
    edge_clip: float = 1e-12
    tolerance: float = 1e-8

    def __post_init__(self):
        if self.nodes < 64:
            raise UsageError(f"QuadratureSpec.nodes must be at least 64, got {self.nodes}")
        if not 0.0 < self.edge_clip <= 1e-10:
            raise UsageError(f"QuadratureSpec.edge_clip must lie in (0, 1e-10], got {self.edge_clip}")

    def panel_nodes(self) -> int:
        """
        Gauss-Legendre nodes per dyadic panel
        """
        return max(8, self.nodes // (2 * (_dyadic_levels(self.edge_clip) + 1)))


DEFAULT_QUADRATURE = QuadratureSpec()


########################################################################################################
# quantile functions
########################################################################################################


def _check_probability(u: ArrayLike) -> numpy.ndarray:
    u = numpy.asarray(u, dtype=float)
    if not numpy.all((u > 0.0) & (u < 1.0)):
        logger.error("Probabilities must lie strictly inside (0, 1)")
        raise ShapeDomainError("Probabilities must lie strictly inside (0, 1)")
    return u


def _check_positive(name: str, value: Real):
    if not (numpy.isfinite(value) and value > 0):
        logger.error(f"{name} must be positive and finite, got {value}")
        raise ShapeDomainError(f"{name} must be positive and finite, got {value}")


def _newton_polish(
    x: numpy.ndarray,
    u: numpy.ndarray,
    cdf: Callable[[numpy.ndarray], numpy.ndarray],
    pdf: Callable[[numpy.ndarray], numpy.ndarray],
    lower: float = 0.0,
    upper: float = math.inf,
) -> numpy.ndarray:
    # one Newton step on cdf(x) = u, kept only where it stays in range and reduces the error
    with numpy.errstate(all="ignore"):
        error = cdf(x) - u
        density = pdf(x)
        candidate = x - error / density
        usable = (
            numpy.isfinite(candidate) & (density > 0) & (candidate > lower) & (candidate < upper)
        )
        candidate = numpy.where(usable, candidate, x)
        improved = numpy.abs(cdf(candidate) - u) < numpy.abs(error)
    return numpy.where(improved, candidate, x)


@beartype.beartype
def gamma_quantile(shape: Real, u: ArrayLike) -> Union[float, numpy.ndarray]:
    """
    Quantile of the Gamma(shape, 1) distribution

    Args:
        shape (float): shape parameter (> 0)
        u (float or numpy.ndarray): probabilities in (0, 1)

    Returns:
        float or numpy.ndarray: quantiles, same shape as u
    """
    _check_positive("shape", shape)
    u = _check_probability(u)
    x = scipy.special.gammaincinv(shape, u)
    x = _newton_polish(
        x, u, lambda t: scipy.special.gammainc(shape, t), lambda t: scipy.stats.gamma.pdf(t, shape)
    )
    return x if x.ndim else float(x)


@beartype.beartype
def chi2_quantile(k: Real, u: ArrayLike) -> Union[float, numpy.ndarray]:
    """
    Quantile of the chi-square distribution with k degrees of freedom

    Args:
        k (float): degrees of freedom (> 0)
        u (float or numpy.ndarray): probabilities in (0, 1)

    Returns:
        float or numpy.ndarray: quantiles, same shape as u
    """
    _check_positive("k", k)
    q = 2.0 * numpy.asarray(gamma_quantile(k / 2.0, u), dtype=float)
    return q if q.ndim else float(q)


def _beta_quantile_pair(a: float, b: float, u: numpy.ndarray) -> Tuple[numpy.ndarray, numpy.ndarray]:
    # x = I^{-1}_{a,b}(u) and 1 - x, the complement computed from the mirrored law to keep its digits
    x = scipy.special.betaincinv(a, b, u)
    x = _newton_polish(
        x, u, lambda t: scipy.special.betainc(a, b, t), lambda t: scipy.stats.beta.pdf(t, a, b), 0.0, 1.0
    )
    complement = scipy.special.betaincinv(b, a, 1.0 - u)
    return x, complement


@beartype.beartype
def f_quantile(k: Real, nu: Real, u: ArrayLike) -> Union[float, numpy.ndarray]:
    """
    Quantile of the Fisher-Snedecor distribution with k and nu degrees of freedom

    Args:
        k (float): numerator degrees of freedom (> 0)
        nu (float): denominator degrees of freedom (> 0)
        u (float or numpy.ndarray): probabilities in (0, 1)

    Returns:
        float or numpy.ndarray: quantiles, same shape as u
    """
    _check_positive("k", k)
    _check_positive("nu", nu)
    u = _check_probability(u)
    x, complement = _beta_quantile_pair(k / 2.0, nu / 2.0, u)
    with numpy.errstate(divide="ignore"):
        q = (nu / k) * x / complement
    return q if q.ndim else float(q)


########################################################################################################
# score families
########################################################################################################


class ScoreFamily(ABC):
    """
    Base Class of the radial score families used to force structure of ScoreFamily

    Args:
        ABC (ABC): Derived from Abstract Base Class
    """

    kind: ScoreKind = None

    def __init__(self, parameter: Optional[float] = None):
        """
        Initialiser of for ScoreFamily

        Args:
            parameter (float, optional): the family parameter (nu or eta). Defaults to None.
        """
        self.score_label = "ScoreFamilyBaseClass"
        self.parameter = parameter

    def type(self):
        """
        Getter for subclass type label

        Returns:
            str: Name of subclass
        """
        return self.score_label

    @abstractmethod
    def score(self, u: ArrayLike, k: int) -> numpy.ndarray:
        """
        Evaluate the score function K_{f1}(u) for dimension k (abstract method)

        Args:
            u (float or numpy.ndarray): probabilities in (0, 1)
            k (int): dimension of the observations

        Returns:
            numpy.ndarray: the scores
        """
        pass

    def radial_quantile(self, u: ArrayLike, k: int) -> numpy.ndarray:
        """
        Quantile function of the distance ||Z|| under the matching elliptical law

        Args:
            u (float or numpy.ndarray): probabilities in (0, 1)
            k (int): dimension of the observations

        Raises:
            UsageError: for families without a radial law

        Returns:
            numpy.ndarray: radial quantiles
        """
        logger.error(f"{self.type()} has no radial distribution")
        raise UsageError(f"{self.type()} has no radial distribution")

    def radial_power_moment(self, order: int, k: int) -> Optional[float]:
        """
        Closed form of E[d^(2 order)] for the radial law, None when it has to be integrated numerically

        Args:
            order (int): 1 for the second moment D_k, 2 for the fourth moment E_k
            k (int): dimension

        Returns:
            float or None: the moment (INFINITE if it does not exist)
        """
        return None

    def to_string(self) -> str:
        """
        The CLI representation of the family ("vdw", "t:3", "e:5", "const")
        """
        return self.short_name + (f":{format_parameter(self.parameter)}" if self.parameter else "")

    def __repr__(self):
        return f"{self.__class__.__name__}({'' if self.parameter is None else self.parameter})"

    def __eq__(self, other):
        return isinstance(other, ScoreFamily) and (self.kind, self.parameter) == (
            other.kind,
            other.parameter,
        )

    def __hash__(self):
        return hash((self.kind, self.parameter))

    @staticmethod
    @beartype.beartype
    def parse(text: str) -> "ScoreFamily":
        """
        Build a score family from its CLI representation

        Args:
            text (str): one of "vdw", "t:NU", "e:ETA", "const"

        Raises:
            UsageError: for unknown names or a missing parameter

        Returns:
            ScoreFamily: the score family
        """
        name, parameter = parse_spec_string(text)
        if name in ("vdw", "normal", "gaussian") and parameter is None:
            return VanDerWaerdenScore()
        if name in ("const", "constant", "tyler") and parameter is None:
            return ConstantScore()
        if name in ("t", "student") and parameter is not None:
            return StudentScore(parameter)
        if name in ("e", "pe", "powerexp") and parameter is not None:
            return PowerExponentialScore(parameter)
        logger.error(f"Unknown score specification '{text}' (expected vdw, t:NU, e:ETA or const)")
        raise UsageError(f"Unknown score specification '{text}' (expected vdw, t:NU, e:ETA or const)")


class VanDerWaerdenScore(ScoreFamily):
    """
    Gaussian (van der Waerden) scores: K(u) is the chi-square(k) quantile of u
    """

    kind = ScoreKind.VAN_DER_WAERDEN
    short_name = "vdw"

    def __init__(self):
        super().__init__(None)
        self.score_label = "VanDerWaerdenScore"

    def score(self, u: ArrayLike, k: int) -> numpy.ndarray:
        return numpy.asarray(chi2_quantile(k, u), dtype=float)

    def radial_quantile(self, u: ArrayLike, k: int) -> numpy.ndarray:
        return numpy.sqrt(numpy.asarray(chi2_quantile(k, u), dtype=float))


class StudentScore(ScoreFamily):
    """
    Scores of the k-variate Student law with nu degrees of freedom

    K(u) = k (k + nu) G^{-1}(u) / (nu + k G^{-1}(u)) with G the F(k, nu) distribution function. Writing
    k G^{-1}(u) = nu b / (1 - b) with b the Beta(k/2, nu/2) quantile of u, this is exactly (k + nu) b,
    which is the form evaluated here.
    """

    kind = ScoreKind.STUDENT
    short_name = "t"

    @beartype.beartype
    def __init__(self, nu: Real):
        _check_positive("nu", nu)
        super().__init__(float(nu))
        self.score_label = "StudentScore"

    @property
    def nu(self) -> float:
        return self.parameter

    def score(self, u: ArrayLike, k: int) -> numpy.ndarray:
        u = _check_probability(u)
        b, _ = _beta_quantile_pair(k / 2.0, self.nu / 2.0, u)
        return (k + self.nu) * b

    def radial_quantile(self, u: ArrayLike, k: int) -> numpy.ndarray:
        return numpy.sqrt(k * numpy.asarray(f_quantile(k, self.nu, u), dtype=float))

    def radial_power_moment(self, order: int, k: int) -> Optional[float]:
        # d^2 = k F(k, nu), whose moment of order m exists only for nu > 2m
        if self.nu <= 2 * order:
            return INFINITE
        moment = 1.0
        for j in range(order):
            moment *= (k + 2 * j) * self.nu / (self.nu - 2 * (j + 1))
        return moment


class PowerExponentialScore(ScoreFamily):
    """
    Scores of the power-exponential law with radial density proportional to exp(-r^(2 eta))

    The distance d satisfies d^(2 eta) ~ Gamma(k / (2 eta), 1) and phi(d) d = 2 eta d^(2 eta), so
    K(u) = 2 eta times the Gamma(k / (2 eta)) quantile of u.
    """

    kind = ScoreKind.POWER_EXPONENTIAL
    short_name = "e"

    @beartype.beartype
    def __init__(self, eta: Real):
        _check_positive("eta", eta)
        super().__init__(float(eta))
        self.score_label = "PowerExponentialScore"

    @property
    def eta(self) -> float:
        return self.parameter

    def score(self, u: ArrayLike, k: int) -> numpy.ndarray:
        return 2.0 * self.eta * numpy.asarray(gamma_quantile(k / (2.0 * self.eta), u), dtype=float)

    def radial_quantile(self, u: ArrayLike, k: int) -> numpy.ndarray:
        g = numpy.asarray(gamma_quantile(k / (2.0 * self.eta), u), dtype=float)
        return g ** (1.0 / (2.0 * self.eta))


class ConstantScore(ScoreFamily):
    """
    Constant scores K = k, the limit of Student scores as nu -> 0 (Tyler's estimator)
    """

    kind = ScoreKind.CONSTANT
    short_name = "const"

    def __init__(self):
        super().__init__(None)
        self.score_label = "ConstantScore"

    def score(self, u: ArrayLike, k: int) -> numpy.ndarray:
        u = _check_probability(u)
        return numpy.full(u.shape, float(k))


@beartype.beartype
def score_K(family: ScoreFamily, k: int, u: ArrayLike) -> Union[float, numpy.ndarray]:
    """
    Evaluate the score function of a family

    Args:
        family (ScoreFamily): the score family f1
        k (int): dimension
        u (float or numpy.ndarray): probabilities in (0, 1)

    Returns:
        float or numpy.ndarray: K_{f1}(u)
    """
    values = family.score(u, k)
    return values if numpy.ndim(values) else float(values)


@beartype.beartype
def score_for_family(family: RadialFamily, parameter: Optional[Real] = None) -> ScoreFamily:
    """
    The score family that is efficient under a given radial family

    Args:
        family (RadialFamily): radial family of the data generating law
        parameter (float, optional): nu for Student, eta for power-exponential

    Returns:
        ScoreFamily: the matching score family
    """
    if family == RadialFamily.GAUSSIAN:
        return VanDerWaerdenScore()
    if parameter is None:
        logger.error(f"{family.name} requires a parameter")
        raise UsageError(f"{family.name} requires a parameter")
    if family == RadialFamily.STUDENT:
        return StudentScore(parameter)
    return PowerExponentialScore(parameter)


########################################################################################################
# quadrature on (0, 1)
########################################################################################################


@functools.lru_cache(maxsize=32)
def _unit_interval_rule(per_panel: int, edge_clip: float) -> Tuple[numpy.ndarray, numpy.ndarray]:
    levels = _dyadic_levels(edge_clip)
    x, w = scipy.special.roots_legendre(per_panel)
    x = (x + 1.0) / 2.0
    w = w / 2.0

    # panels [2^-(j+1), 2^-j] for j = 1..levels plus the end panel [0, 2^-(levels+1)]
    edges = [(2.0 ** -(j + 1), 2.0**-j) for j in range(1, levels + 1)]
    edges.append((0.0, 2.0 ** -(levels + 1)))
    lower_nodes = numpy.concatenate([a + (b - a) * x for a, b in edges])
    lower_weights = numpy.concatenate([(b - a) * w for a, b in edges])

    u = numpy.concatenate([lower_nodes, 1.0 - lower_nodes])
    weights = numpy.concatenate([lower_weights, lower_weights])
    u = numpy.clip(u, edge_clip, 1.0 - edge_clip)
    order = numpy.argsort(u, kind="stable")
    return u[order], weights[order]


@beartype.beartype
def integrate_unit(
    integrand: Callable[[numpy.ndarray], numpy.ndarray], quad: QuadratureSpec = DEFAULT_QUADRATURE
) -> float:
    """
    Integrate a function over (0, 1), checking that doubling the node budget leaves the value unchanged

    Args:
        integrand (Callable): vectorised function of u
        quad (QuadratureSpec, optional): the rule to use. Defaults to 512 nodes, edge clip 1e-12.

    Raises:
        QuadratureError: if the doubled rule differs by more than quad.tolerance * max(1, |value|)

    Returns:
        float: the integral (value of the rule with twice the nodes per panel)
    """
    per_panel = quad.panel_nodes()
    u, w = _unit_interval_rule(per_panel, quad.edge_clip)
    coarse = float(numpy.dot(w, integrand(u)))
    u, w = _unit_interval_rule(2 * per_panel, quad.edge_clip)
    fine = float(numpy.dot(w, integrand(u)))
    if not numpy.isfinite(fine) or abs(fine - coarse) > quad.tolerance * max(1.0, abs(fine)):
        message = f"Quadrature did not converge: {coarse!r} with {per_panel} nodes per panel, {fine!r} doubled"
        logger.error(message)
        raise QuadratureError(message)
    return fine


########################################################################################################
# integrals of the theory
########################################################################################################


@beartype.beartype
def cross_info(
    f1: ScoreFamily, g1: ScoreFamily, k: int, quad: QuadratureSpec = DEFAULT_QUADRATURE
) -> float:
    """
    Cross-information J_k(f1, g1), the integral over (0, 1) of K_{f1}(u) K_{g1}(u)

    Args:
        f1 (ScoreFamily): scores used by the estimator
        g1 (ScoreFamily): scores of the actual radial law (see score_for_family)
        k (int): dimension
        quad (QuadratureSpec, optional): quadrature rule. Defaults to DEFAULT_QUADRATURE.

    Returns:
        float: J_k(f1, g1)
    """
    return integrate_unit(lambda u: f1.score(u, k) * g1.score(u, k), quad)


@beartype.beartype
def score_information(f1: ScoreFamily, k: int, quad: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """
    J_k(f1) := J_k(f1, f1), the squared norm of the score function

    Args:
        f1 (ScoreFamily): score family
        k (int): dimension
        quad (QuadratureSpec, optional): quadrature rule. Defaults to DEFAULT_QUADRATURE.

    Returns:
        float: J_k(f1)
    """
    return integrate_unit(lambda u: f1.score(u, k) ** 2, quad)


@beartype.beartype
def score_centering_identity_check(
    family: ScoreFamily, k: int, quad: QuadratureSpec = DEFAULT_QUADRATURE
) -> float:
    """
    The integral of K_{f1} over (0, 1); equals k for every admissible family

    Args:
        family (ScoreFamily): score family
        k (int): dimension
        quad (QuadratureSpec, optional): quadrature rule. Defaults to DEFAULT_QUADRATURE.

    Returns:
        float: the integral of the score function
    """
    return integrate_unit(lambda u: family.score(u, k), quad)


class RadialMoments(NamedTuple):
    D: float
    E: float
    kappa: float


@beartype.beartype
def radial_moments(
    g1: ScoreFamily, k: int, quad: QuadratureSpec = DEFAULT_QUADRATURE
) -> RadialMoments:
    """
    Second and fourth radial moments D_k, E_k and the kurtosis coefficient
    kappa_k = k E_k / ((k + 2) D_k^2) - 1 of a radial law

    Student laws with nu <= 4 have no finite fourth moment; their kurtosis is returned as INFINITE
    (not an error). Student moments are evaluated in closed form.

    Args:
        g1 (ScoreFamily): the radial law, identified by its score family
        k (int): dimension
        quad (QuadratureSpec, optional): quadrature rule. Defaults to DEFAULT_QUADRATURE.

    Returns:
        RadialMoments: (D, E, kappa)
    """

    def moment(order):
        closed = g1.radial_power_moment(order, k)
        if closed is not None:
            return closed
        return integrate_unit(lambda u: g1.radial_quantile(u, k) ** (2 * order), quad)

    D = moment(1)
    E = INFINITE if math.isinf(D) else moment(2)
    if math.isinf(E):
        return RadialMoments(D, INFINITE, INFINITE)
    kappa = k * E / ((k + 2) * D**2) - 1.0
    logger.debug(f"Radial moments of {g1!r} in dimension {k}: D={D}, E={E}, kappa={kappa}")
    return RadialMoments(D, E, kappa)
