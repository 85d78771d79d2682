import beartype
import numpy
import pandas
import pathlib
import re
import sys
from beartype.typing import Optional, Tuple, Union

from .errors import UsageError
from .logging import getLogger

logger = getLogger(__name__)

# numpy.float64 subclasses float but numpy integer types do not subclass int
Real = Union[int, float, numpy.integer, numpy.floating]


@beartype.beartype
def parse_spec_string(text: str) -> Tuple[str, Optional[float]]:
    """
    Split a score/family specification such as "t:3", "e:5", "vdw" or "normal" into its name and parameter

    Args:
        text (str): the family or score string

    Raises:
        UsageError: if the parameter is present but not a positive number

    Returns:
        (str, float or None): lower-case name and parameter (None when absent)
    """
    match = re.fullmatch(r"\s*([A-Za-z_]+)\s*(?::\s*([^\s]+))?\s*", text)
    if match is None:
        logger.error(f"Cannot parse specification '{text}'")
        raise UsageError(f"Cannot parse specification '{text}'")
    name = match.group(1).lower()
    if match.group(2) is None:
        return name, None
    try:
        value = float(match.group(2))
    except ValueError as e:
        logger.error(f"Parameter of '{text}' is not a number")
        raise UsageError(f"Parameter of '{text}' is not a number") from e
    if not numpy.isfinite(value) or value <= 0:
        logger.error(f"Parameter of '{text}' must be a positive number")
        raise UsageError(f"Parameter of '{text}' must be a positive number")
    return name, value


@beartype.beartype
def format_parameter(value: Optional[float]) -> str:
    """
    Render a family/score parameter the way the CLI accepts it (3.0 -> "3", 0.5 -> "0.5")

    Args:
        value (float or None): the parameter

    Returns:
        str: empty string for None, otherwise the shortest representation
    """
    if value is None:
        return ""
    return f"{value:g}"


@beartype.beartype
def parse_vector(text: str, k: Optional[int] = None) -> numpy.ndarray:
    """
    Parse a comma separated list of numbers such as "0,0.5,-1"

    Args:
        text (str): the comma separated values
        k (int, optional): expected length. Defaults to None (any length).

    Raises:
        UsageError: if a value is not a number or the length is wrong

    Returns:
        numpy.ndarray: the parsed vector
    """
    try:
        values = numpy.array([float(v) for v in text.split(",") if v.strip() != ""])
    except ValueError as e:
        logger.error(f"Cannot parse vector '{text}'")
        raise UsageError(f"Cannot parse vector '{text}'") from e
    if k is not None and len(values) != k:
        logger.error(f"Vector '{text}' has {len(values)} entries, expected {k}")
        raise UsageError(f"Vector '{text}' has {len(values)} entries, expected {k}")
    return values


@beartype.beartype
def read_matrix_csv(filename: Union[pathlib.Path, str]) -> numpy.ndarray:
    """
    Read a headerless CSV file of floats (one observation or matrix row per line)

    Args:
        filename (Union[pathlib.Path, str]): file to read, "-" for stdin

    Raises:
        UsageError: if the file contains non numeric or non finite values

    Returns:
        numpy.ndarray: two dimensional float array
    """
    source = sys.stdin if str(filename) == "-" else filename
    frame = pandas.read_csv(source, header=None)
    try:
        data = frame.to_numpy(dtype=float)
    except ValueError as e:
        logger.error(f"{filename} contains non numeric values")
        raise UsageError(f"{filename} contains non numeric values") from e
    if not numpy.all(numpy.isfinite(data)):
        logger.error(f"{filename} contains missing or non finite values")
        raise UsageError(f"{filename} contains missing or non finite values")
    return data


@beartype.beartype
def write_matrix_csv(
    matrix: numpy.ndarray, filename: Optional[Union[pathlib.Path, str]] = None
) -> Optional[str]:
    """
    Write a two dimensional array as headerless CSV ('.' decimal, '\\n' rows)

    Args:
        matrix (numpy.ndarray): the array to write
        filename (Union[pathlib.Path, str], optional): output file. Defaults to None (return the text).

    Returns:
        str or None: the CSV text when no filename is given
    """
    frame = pandas.DataFrame(numpy.atleast_2d(matrix))
    return frame.to_csv(filename, header=False, index=False, lineterminator="\n", float_format="%.17g")
