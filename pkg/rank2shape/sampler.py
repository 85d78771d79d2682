# internal imports
from .errors import ShapeDomainError, UsageError
from .r2s_enums import RadialFamily
from .radial_scores import ScoreFamily, score_for_family
from .shape_algebra import spd_sqrt, validate_shape_matrix
from .utils import Real, format_parameter, parse_spec_string

from .logging import getLogger

logger = getLogger(__name__)

# external imports
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from beartype.typing import Optional, Union
import beartype
import numpy

Seed = Union[int, numpy.integer, numpy.random.SeedSequence]


@dataclass(frozen=True, eq=False)
class RadialModel:
    """
    An elliptical law theta + sigma * r * V^{1/2} * S

    Attributes:
        family (RadialFamily): law of the radial part
        parameter (float, optional): nu (Student) or eta (power-exponential); None for the gaussian
        k (int): dimension
        theta (numpy.ndarray, optional): location, defaults to the origin
        sigma (float): scale, defaults to 1
        V (numpy.ndarray, optional): shape matrix, defaults to the identity
    """

    family: RadialFamily
    parameter: Optional[float] = None
    k: int = 2
    theta: Optional[numpy.ndarray] = field(default=None, repr=False)
    sigma: float = 1.0
    V: Optional[numpy.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.k < 1:
            raise UsageError(f"Dimension must be positive, got {self.k}")
        if self.family == RadialFamily.GAUSSIAN:
            if self.parameter is not None:
                raise UsageError("The gaussian family takes no parameter")
        elif self.parameter is None or not numpy.isfinite(self.parameter) or self.parameter <= 0:
            raise ShapeDomainError(f"{self.family.name} needs a positive parameter, got {self.parameter}")
        if not (numpy.isfinite(self.sigma) and self.sigma > 0):
            raise ShapeDomainError(f"Scale must be positive, got {self.sigma}")
        theta = numpy.zeros(self.k) if self.theta is None else numpy.asarray(self.theta, dtype=float)
        if theta.shape != (self.k,):
            raise UsageError(f"Location must have {self.k} entries, got shape {theta.shape}")
        V = numpy.eye(self.k) if self.V is None else validate_shape_matrix(self.V)
        if V.shape != (self.k, self.k):
            raise UsageError(f"Shape matrix must be {self.k} x {self.k}, got {V.shape}")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "V", V)

    @property
    def label(self) -> str:
        """
        Short label used in reports ("normal", "t3", "e5")
        """
        if self.family == RadialFamily.GAUSSIAN:
            return "normal"
        prefix = "t" if self.family == RadialFamily.STUDENT else "e"
        return prefix + format_parameter(self.parameter)

    def to_string(self) -> str:
        """
        The family as accepted by parse_family ("normal", "t:3", "e:5")
        """
        if self.family == RadialFamily.GAUSSIAN:
            return "normal"
        prefix = "t" if self.family == RadialFamily.STUDENT else "e"
        return f"{prefix}:{format_parameter(self.parameter)}"

    def scores(self) -> ScoreFamily:
        """
        The score family that is efficient under this law
        """
        return score_for_family(self.family, self.parameter)


@beartype.beartype
def parse_family(text: str, k: int = 2, **kwargs) -> RadialModel:
    """
    Build a RadialModel from a family string

    Args:
        text (str): "normal" (or "gaussian"), "t:NU" or "e:ETA"
        k (int, optional): dimension. Defaults to 2.
        **kwargs: theta, sigma and V passed to RadialModel

    Raises:
        UsageError: unknown family or missing parameter

    Returns:
        RadialModel: the model
    """
    name, parameter = parse_spec_string(text)
    if name in ("normal", "gaussian", "n") and parameter is None:
        return RadialModel(RadialFamily.GAUSSIAN, None, k, **kwargs)
    if name in ("t", "student") and parameter is not None:
        return RadialModel(RadialFamily.STUDENT, parameter, k, **kwargs)
    if name in ("e", "pe", "powerexp") and parameter is not None:
        return RadialModel(RadialFamily.POWER_EXPONENTIAL, parameter, k, **kwargs)
    logger.error(f"Unknown family '{text}' (expected normal, t:NU or e:ETA)")
    raise UsageError(f"Unknown family '{text}' (expected normal, t:NU or e:ETA)")


@beartype.beartype
def make_generator(seed: Seed) -> numpy.random.Generator:
    """
    A counter based Philox generator for a seed or a spawned SeedSequence

    Args:
        seed (int or numpy.random.SeedSequence): 64-bit seed or seed sequence

    Returns:
        numpy.random.Generator: the generator
    """
    if not isinstance(seed, numpy.random.SeedSequence):
        seed = numpy.random.SeedSequence(int(seed))
    return numpy.random.Generator(numpy.random.Philox(seed))


@beartype.beartype
def sphere_uniform(k: int, rng: numpy.random.Generator, size: Optional[int] = None) -> numpy.ndarray:
    """
    Uniform draws on the unit sphere of R^k (normalised gaussian vectors)

    Args:
        k (int): dimension
        rng (numpy.random.Generator): the stream to draw from
        size (int, optional): number of draws. Defaults to None (a single vector).

    Returns:
        numpy.ndarray: a unit k-vector, or a size x k array of unit vectors
    """
    z = rng.standard_normal(k if size is None else (size, k))
    norms = numpy.linalg.norm(z, axis=-1, keepdims=True)
    # a zero gaussian vector has probability zero; redraw if it ever happens
    while numpy.any(norms == 0):
        z = rng.standard_normal(z.shape)
        norms = numpy.linalg.norm(z, axis=-1, keepdims=True)
    return z / norms


class RadialSampler(ABC):
    """
    Base Class of the spherical samplers used to force structure of RadialSampler

    Args:
        ABC (ABC): Derived from Abstract Base Class
    """

    def __init__(self):
        """
        Initialiser of for RadialSampler
        """
        self.sampler_label = "RadialSamplerBaseClass"

    def type(self):
        """
        Getter for subclass type label

        Returns:
            str: Name of subclass
        """
        return self.sampler_label

    @abstractmethod
    def spherical(self, rng: numpy.random.Generator, n: int, k: int) -> numpy.ndarray:
        """
        Draw n spherically symmetric k-vectors r_i * S_i (abstract method)

        Args:
            rng (numpy.random.Generator): the stream to draw from
            n (int): number of draws
            k (int): dimension

        Returns:
            numpy.ndarray: n x k array
        """
        pass


class GaussianSampler(RadialSampler):
    """
    Standard normal vectors, r^2 ~ chi-square(k)
    """

    def __init__(self):
        self.sampler_label = "GaussianSampler"

    def spherical(self, rng: numpy.random.Generator, n: int, k: int) -> numpy.ndarray:
        return rng.standard_normal((n, k))


class StudentSampler(RadialSampler):
    """
    Multivariate t vectors Z / sqrt(W / nu) with W ~ chi-square(nu)
    """

    @beartype.beartype
    def __init__(self, nu: Real):
        self.sampler_label = "StudentSampler"
        self.nu = float(nu)

    def spherical(self, rng: numpy.random.Generator, n: int, k: int) -> numpy.ndarray:
        z = rng.standard_normal((n, k))
        w = rng.chisquare(self.nu, n)
        return z / numpy.sqrt(w / self.nu)[:, numpy.newaxis]


class PowerExponentialSampler(RadialSampler):
    """
    Power-exponential vectors r * S with r^(2 eta) ~ Gamma(k / (2 eta), 1)
    """

    @beartype.beartype
    def __init__(self, eta: Real):
        self.sampler_label = "PowerExponentialSampler"
        self.eta = float(eta)

    def spherical(self, rng: numpy.random.Generator, n: int, k: int) -> numpy.ndarray:
        g = rng.gamma(k / (2.0 * self.eta), 1.0, n)
        r = g ** (1.0 / (2.0 * self.eta))
        return r[:, numpy.newaxis] * sphere_uniform(k, rng, n)


def sampler_for(model: RadialModel) -> RadialSampler:
    if model.family == RadialFamily.GAUSSIAN:
        return GaussianSampler()
    if model.family == RadialFamily.STUDENT:
        return StudentSampler(model.parameter)
    return PowerExponentialSampler(model.parameter)


@beartype.beartype
def sample(model: RadialModel, n: int, seed: Seed) -> numpy.ndarray:
    """
    Draw n i.i.d. observations of an elliptical law

    The shape enters only through V^{1/2}: for a fixed seed, the spherical draws are identical for every V,
    theta and sigma.

    Args:
        model (RadialModel): the law to sample from
        n (int): number of observations (>= 1)
        seed (int or numpy.random.SeedSequence): seed of the Philox stream

    Raises:
        UsageError: if n < 1

    Returns:
        numpy.ndarray: n x k sample matrix
    """
    if n < 1:
        logger.error(f"Sample size must be at least 1, got {n}")
        raise UsageError(f"Sample size must be at least 1, got {n}")
    rng = make_generator(seed)
    base = sampler_for(model).spherical(rng, n, model.k)
    if numpy.array_equal(model.V, numpy.eye(model.k)):
        scaled = base
    else:
        scaled = base @ spd_sqrt(model.V)
    return model.theta + model.sigma * scaled
