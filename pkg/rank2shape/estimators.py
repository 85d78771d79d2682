# internal imports
from .base_estimators import TylerSettings, gaussian_shape, hr_median, tyler_shape
from .errors import UsageError
from .onestep import OneStepConfig, r_estimate
from .r2s_enums import EstimatorMethod, LocationMode, Preliminary
from .radial_scores import ScoreFamily

from .logging import getLogger

logger = getLogger(__name__)

# external imports
from abc import ABC, abstractmethod
from dataclasses import replace
from beartype.typing import Optional
import beartype
import numpy


class ShapeEstimator(ABC):
    """
    Base Class of the shape estimators compared by the simulation harness

    Args:
        ABC (ABC): Derived from Abstract Base Class
    """

    method: EstimatorMethod = None

    def __init__(self, location: LocationMode = LocationMode.KNOWN):
        """
        Initialiser of for ShapeEstimator

        Args:
            location (LocationMode, optional): known location or HR median plug-in. Defaults to known.
        """
        self.estimator_label = "ShapeEstimatorBaseClass"
        self.location = location

    def type(self):
        """
        Getter for subclass type label

        Returns:
            str: Name of subclass
        """
        return self.estimator_label

    @property
    def name(self) -> str:
        return self.method.name.lower()

    @property
    def scores(self) -> str:
        return ""

    @property
    def preliminary(self) -> str:
        return ""

    def resolve_location(self, data: numpy.ndarray, theta: Optional[numpy.ndarray]) -> numpy.ndarray:
        if self.location == LocationMode.HR:
            return hr_median(data).theta
        return numpy.zeros(data.shape[1]) if theta is None else theta

    @abstractmethod
    def estimate(self, data: numpy.ndarray, theta: Optional[numpy.ndarray] = None) -> numpy.ndarray:
        """
        Execute the estimator (abstract method)

        Args:
            data (numpy.ndarray): n x k observations
            theta (numpy.ndarray, optional): known location, the origin when None

        Returns:
            numpy.ndarray: the estimated shape matrix
        """
        pass


class TylerEstimator(ShapeEstimator):
    """
    Tyler's shape estimator
    """

    method = EstimatorMethod.TYLER

    def __init__(self, location: LocationMode = LocationMode.KNOWN, settings: TylerSettings = TylerSettings()):
        super().__init__(location)
        self.estimator_label = "TylerEstimator"
        self.settings = settings

    def estimate(self, data: numpy.ndarray, theta: Optional[numpy.ndarray] = None) -> numpy.ndarray:
        theta = self.resolve_location(data, theta)
        return tyler_shape(data, theta, self.settings.tol, self.settings.max_iter).V


class GaussianEstimator(ShapeEstimator):
    """
    Normalised sample covariance; the location is always the sample mean
    """

    method = EstimatorMethod.GAUSSIAN

    def __init__(self, location: LocationMode = LocationMode.KNOWN):
        super().__init__(location)
        self.estimator_label = "GaussianEstimator"

    def estimate(self, data: numpy.ndarray, theta: Optional[numpy.ndarray] = None) -> numpy.ndarray:
        return gaussian_shape(data).V


class HREstimator(ShapeEstimator):
    """
    Shape companion of the Hettmansperger-Randles median
    """

    method = EstimatorMethod.HR

    def __init__(self):
        super().__init__(LocationMode.HR)
        self.estimator_label = "HREstimator"

    def estimate(self, data: numpy.ndarray, theta: Optional[numpy.ndarray] = None) -> numpy.ndarray:
        return hr_median(data).V


class OneStepREstimator(ShapeEstimator):
    """
    One-step R-estimator for a score family and a preliminary estimator
    """

    method = EstimatorMethod.RONESTEP

    @beartype.beartype
    def __init__(
        self,
        f1: ScoreFamily,
        preliminary: Preliminary = Preliminary.TYLER,
        location: LocationMode = LocationMode.KNOWN,
        config: Optional[OneStepConfig] = None,
    ):
        super().__init__(location)
        self.estimator_label = "OneStepREstimator"
        self.config = replace(config or OneStepConfig(), f1=f1, preliminary=preliminary, location=location)

    @property
    def scores(self) -> str:
        return self.config.f1.to_string()

    @property
    def preliminary(self) -> str:
        return self.config.preliminary.name.lower()

    def estimate(self, data: numpy.ndarray, theta: Optional[numpy.ndarray] = None) -> numpy.ndarray:
        config = self.config if theta is None else replace(self.config, theta=theta)
        return r_estimate(data, config).V


@beartype.beartype
def build_estimator(specification: dict) -> ShapeEstimator:
    """
    Build an estimator from a configuration entry

    Args:
        specification (dict): keys "method" (tyler, gaussian, hr, ronestep) and, for ronestep,
            "scores", "preliminary" (tyler, gaussian); optional "location" (known, hr)

    Raises:
        UsageError: for unknown methods or options

    Returns:
        ShapeEstimator: the estimator
    """
    try:
        method = EstimatorMethod[str(specification.get("method", "")).upper()]
        location = LocationMode[str(specification.get("location", "known")).upper()]
        preliminary = Preliminary[str(specification.get("preliminary", "tyler")).upper()]
    except KeyError as e:
        logger.error(f"Unknown option {e} in estimator specification {specification}")
        raise UsageError(f"Unknown option {e} in estimator specification {specification}") from e
    if method == EstimatorMethod.TYLER:
        return TylerEstimator(location)
    if method == EstimatorMethod.GAUSSIAN:
        return GaussianEstimator(location)
    if method == EstimatorMethod.HR:
        return HREstimator()
    if "scores" not in specification:
        logger.error(f"A ronestep estimator needs scores: {specification}")
        raise UsageError(f"A ronestep estimator needs scores: {specification}")
    return OneStepREstimator(ScoreFamily.parse(specification["scores"]), preliminary, location)
