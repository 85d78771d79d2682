import beartype
import copy
import json
import pathlib
from beartype.typing import List, Optional, Union

from .errors import ConfigError, Rank2ShapeError
from .estimators import ShapeEstimator, build_estimator
from .r2s_enums import LocationMode
from .sampler import RadialModel, parse_family
from .logging import getLogger

logger = getLogger(__name__)


class SimConfig:
    """
    A data structure describing a Monte Carlo experiment

    Attributes
    ----------
    simulation_config: dict
        dimension, sample sizes, replications, seed, location handling, output path and threads
    models: list
        radial families of the data generating laws ("normal", "t:NU", "e:ETA"), all with V = I_k
    estimators: list
        estimator specifications, dicts with "method" and, for one-step estimators, "scores" and
        "preliminary"
    """

    def __init__(self):
        self.simulation_config = {
            "k": 2,
            "n": [50, 250],
            "M": 1000,
            "seed": 12345,
            "location": "known",
            "output": None,
            "threads": 1,
        }
        self.models = ["t:0.5", "t:3", "t:10", "normal", "e:3", "e:5"]
        self.estimators = [{"method": "tyler"}, {"method": "gaussian"}]

    def __eq__(self, other):
        return isinstance(other, SimConfig) and self.to_dict() == other.to_dict()

    @property
    def k(self) -> int:
        return self.simulation_config["k"]

    @property
    def ns(self) -> List[int]:
        return list(self.simulation_config["n"])

    @property
    def M(self) -> int:
        return self.simulation_config["M"]

    @property
    def seed(self) -> int:
        return self.simulation_config["seed"]

    @property
    def location(self) -> LocationMode:
        return LocationMode[self.simulation_config["location"].upper()]

    @property
    def output(self) -> Optional[str]:
        return self.simulation_config["output"]

    @property
    def threads(self) -> int:
        return self.simulation_config["threads"]

    def to_dict(self):
        """
        Convert the config to a dictionary

        Returns:
            dict: The dictionary representation of the config
        """
        return {
            "simulation": copy.deepcopy(self.simulation_config),
            "models": list(self.models),
            "estimators": copy.deepcopy(self.estimators),
        }

    def radial_models(self) -> List[RadialModel]:
        """
        The data generating laws, spherical (V = I_k) and centred at the origin
        """
        return [parse_family(text, self.k) for text in self.models]

    def shape_estimators(self) -> List[ShapeEstimator]:
        """
        The estimators, with the configured location handling unless an entry overrides it
        """
        estimators = []
        for specification in self.estimators:
            specification = dict(specification)
            specification.setdefault("location", self.simulation_config["location"])
            estimators.append(build_estimator(specification))
        return estimators

    @beartype.beartype
    def update_from_dictionary(self, dictionary: dict):
        """
        Update the config from a provided dict

        Args:
            dictionary (dict): The dictionary to update from
        """
        dictionary = dict(dictionary)
        if "simulation" in dictionary:
            for key in dictionary["simulation"].keys():
                if key not in self.simulation_config:
                    logger.warning(f"Config dictionary simulation segment contained {key} which is not used")
            self.simulation_config.update(
                {
                    key: value
                    for key, value in dictionary["simulation"].items()
                    if key in self.simulation_config
                }
            )
            dictionary.pop("simulation")
        if "models" in dictionary:
            self.models = list(dictionary.pop("models"))
        if "estimators" in dictionary:
            self.estimators = [dict(entry) for entry in dictionary.pop("estimators")]
        if len(dictionary):
            logger.warning(f"Unused keys from config format {list(dictionary.keys())}")
        self.validate()

    @beartype.beartype
    def update_from_file(self, filename: Union[pathlib.Path, str]):
        """
        Update the config from a JSON file

        Args:
            filename (Union[pathlib.Path, str]): Filename of the JSON config file

        Raises:
            FileNotFoundError: if the file does not exist
            ConfigError: if the file is not valid JSON (message carries line and column) or fails validation
        """
        try:
            with open(filename) as file_data:
                data = json.load(file_data)
        except FileNotFoundError as e:
            err_string = f"The specified config file does not exist ({filename}).\n"
            err_string += "Please check the file exists and is accessible, then try again.\n"
            raise FileNotFoundError(err_string) from e
        except json.JSONDecodeError as e:
            logger.error(f"Error decoding JSON in {filename} at line {e.lineno}, column {e.colno}: {e.msg}")
            raise ConfigError(
                f"Error decoding JSON in {filename} at line {e.lineno}, column {e.colno}: {e.msg}"
            ) from e
        if not isinstance(data, dict):
            logger.error(f"Config file {filename} must contain a JSON object")
            raise ConfigError(f"Config file {filename} must contain a JSON object")
        self.update_from_dictionary(data)

    @beartype.beartype
    def write(self, filename: Union[pathlib.Path, str]):
        """
        Write the config as JSON

        Args:
            filename (Union[pathlib.Path, str]): destination file
        """
        with open(filename, "w") as file_data:
            json.dump(self.to_dict(), file_data, indent=4)
            file_data.write("\n")

    def validate(self) -> None:
        """
        Validate the values of the configuration

        Raises:
            ConfigError: If a value is out of range or a model or estimator cannot be built
        """
        simulation = self.simulation_config

        def require(condition, message):
            if not condition:
                logger.error(message)
                raise ConfigError(message)

        def is_int(value):
            return isinstance(value, int) and not isinstance(value, bool)

        require(is_int(simulation["k"]) and simulation["k"] >= 2, f"k must be an integer >= 2, got {simulation['k']!r}")
        require(
            isinstance(simulation["n"], list)
            and len(simulation["n"]) > 0
            and all(is_int(n) and n > simulation["k"] for n in simulation["n"]),
            f"n must be a non empty list of integers > k, got {simulation['n']!r}",
        )
        require(is_int(simulation["M"]) and simulation["M"] >= 1, f"M must be an integer >= 1, got {simulation['M']!r}")
        require(
            is_int(simulation["seed"]) and 0 <= simulation["seed"] < 2**64,
            f"seed must be a 64-bit non negative integer, got {simulation['seed']!r}",
        )
        require(
            is_int(simulation["threads"]) and (simulation["threads"] >= 1 or simulation["threads"] == -1),
            f"threads must be a positive integer or -1, got {simulation['threads']!r}",
        )
        require(
            str(simulation["location"]).upper() in LocationMode.__members__,
            f"location must be 'known' or 'hr', got {simulation['location']!r}",
        )
        require(len(self.models) > 0, "At least one model is required")
        require(len(self.estimators) > 0, "At least one estimator is required")
        try:
            self.radial_models()
            self.shape_estimators()
        except Rank2ShapeError as e:
            raise ConfigError(f"Invalid model or estimator in config: {e}") from e
