"""Asymptotic relative efficiencies of the one-step R-estimators with respect to Tyler's and the Gaussian
shape estimators, and the efficiency table built from them.
"""

# internal imports
from .datasets import read_reference
from .errors import UsageError
from .r2s_enums import ScoreKind
from .radial_scores import (
    DEFAULT_QUADRATURE,
    INFINITE,
    QuadratureSpec,
    ScoreFamily,
    VanDerWaerdenScore,
    cross_info,
    radial_moments,
    score_information,
)

from .logging import getLogger

logger = getLogger(__name__)

# external imports
from dataclasses import dataclass
from beartype.typing import Iterable, Optional
import beartype
import math
import pandas

# entries of the printed table may differ from the recomputed value by this much
PRINTED_TOLERANCE = 0.002

LIMIT_LABEL = "t:0"

TABLE_COLUMNS = [
    "scores",
    "k",
    "under",
    "are_vs_tyler",
    "are_vs_gaussian",
    "printed_vs_tyler",
    "printed_vs_gaussian",
    "flag",
]


@dataclass(frozen=True)
class AreCell:
    """
    One entry of the efficiency table

    Attributes:
        f1 (ScoreFamily): scores of the R-estimator
        under (str): label of the radial law ("normal", "t:3", ... or "t:0" for the limit)
        k (int): dimension
        are_vs_tyler (float): efficiency relative to Tyler's estimator
        are_vs_gaussian (float): efficiency relative to the Gaussian estimator, INFINITE when the
            radial law has no finite fourth moment
    """

    f1: ScoreFamily
    under: str
    k: int
    are_vs_tyler: float
    are_vs_gaussian: float


def under_label(g1: ScoreFamily) -> str:
    """
    The label of a radial law in the efficiency table ("normal" for the gaussian law)
    """
    if isinstance(g1, VanDerWaerdenScore):
        return "normal"
    return g1.to_string()


def _check_radial(g1: ScoreFamily):
    if g1.kind == ScoreKind.CONSTANT:
        logger.error("Constant scores do not define a radial law")
        raise UsageError("Constant scores do not define a radial law")


@beartype.beartype
def are_vs_tyler(
    f1: ScoreFamily, g1: ScoreFamily, k: int, quad: QuadratureSpec = DEFAULT_QUADRATURE
) -> float:
    """
    ARE of the f1-score R-estimator with respect to Tyler's estimator under radial law g1,
    J_k(f1, g1)^2 / (k^2 J_k(f1))

    Args:
        f1 (ScoreFamily): scores of the R-estimator
        g1 (ScoreFamily): the radial law, identified by its efficient scores
        k (int): dimension
        quad (QuadratureSpec, optional): quadrature rule. Defaults to DEFAULT_QUADRATURE.

    Returns:
        float: the efficiency (> 0)
    """
    _check_radial(g1)
    J = cross_info(f1, g1, k, quad)
    return J**2 / (k**2 * score_information(f1, k, quad))


@beartype.beartype
def are_vs_gaussian(
    f1: ScoreFamily, g1: ScoreFamily, k: int, quad: QuadratureSpec = DEFAULT_QUADRATURE
) -> float:
    """
    ARE of the f1-score R-estimator with respect to the Gaussian estimator under radial law g1,
    (1 + kappa_k(g1)) / (k(k+2)) J_k(f1, g1)^2 / J_k(f1)

    Args:
        f1 (ScoreFamily): scores of the R-estimator
        g1 (ScoreFamily): the radial law, identified by its efficient scores
        k (int): dimension
        quad (QuadratureSpec, optional): quadrature rule. Defaults to DEFAULT_QUADRATURE.

    Returns:
        float: the efficiency, INFINITE when kappa_k(g1) is infinite
    """
    _check_radial(g1)
    kappa = radial_moments(g1, k, quad).kappa
    if math.isinf(kappa):
        return INFINITE
    J = cross_info(f1, g1, k, quad)
    return (1.0 + kappa) / (k * (k + 2)) * J**2 / score_information(f1, k, quad)


@beartype.beartype
def are_limit_nu0(f1: ScoreFamily, k: int) -> float:
    """
    Limit of the ARE with respect to Tyler's estimator under t_nu as nu -> 0

    k (k + nu0 + 2) / ((k + 2)(k + nu0)) for Student nu0 scores, k / (k + 2) for van der Waerden scores.

    Args:
        f1 (ScoreFamily): Student or van der Waerden scores
        k (int): dimension

    Raises:
        UsageError: for any other score family

    Returns:
        float: the limit (< 1)
    """
    if f1.kind == ScoreKind.STUDENT:
        nu0 = f1.parameter
        return k * (k + nu0 + 2) / ((k + 2) * (k + nu0))
    if f1.kind == ScoreKind.VAN_DER_WAERDEN:
        return k / (k + 2)
    logger.error(f"No closed form limit for {f1!r}")
    raise UsageError(f"No closed form limit for {f1!r}")


def _printed_lookup():
    table = read_reference("table1")
    return {
        (row.scores, int(row.k), row.under): (float(row.are_vs_tyler), float(row.are_vs_gaussian))
        for row in table.itertuples(index=False)
    }


def _flag(computed: float, printed: Optional[float]) -> bool:
    if printed is None:
        return False
    if math.isinf(computed) or math.isinf(printed):
        return math.isinf(computed) != math.isinf(printed)
    return abs(computed - printed) > PRINTED_TOLERANCE


@beartype.beartype
def are_table(
    ks: Iterable[int],
    scores: Iterable[ScoreFamily],
    unders: Iterable[ScoreFamily],
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
    limits: bool = True,
) -> pandas.DataFrame:
    """
    Efficiency table over dimensions, score families and radial laws

    Each row carries the recomputed efficiencies next to the printed reference value when one exists;
    "suspected_typo" in the flag column marks a printed value differing by more than PRINTED_TOLERANCE.

    Args:
        ks (Iterable[int]): dimensions
        scores (Iterable[ScoreFamily]): score families of the R-estimators
        unders (Iterable[ScoreFamily]): radial laws
        quad (QuadratureSpec, optional): quadrature rule. Defaults to DEFAULT_QUADRATURE.
        limits (bool, optional): include the nu -> 0 limit column. Defaults to True.

    Returns:
        pandas.DataFrame: one row per (scores, k, under), columns TABLE_COLUMNS
    """
    ks = list(ks)
    unders = list(unders)
    printed = _printed_lookup()
    rows = []
    for f1 in scores:
        for k in ks:
            cells = []
            if limits:
                cells.append(AreCell(f1, LIMIT_LABEL, k, are_limit_nu0(f1, k), INFINITE))
            for g1 in unders:
                cells.append(
                    AreCell(
                        f1,
                        under_label(g1),
                        k,
                        are_vs_tyler(f1, g1, k, quad),
                        are_vs_gaussian(f1, g1, k, quad),
                    )
                )
            for cell in cells:
                reference = printed.get((f1.to_string(), k, cell.under))
                printed_tyler, printed_gaussian = reference if reference else (None, None)
                typo = _flag(cell.are_vs_tyler, printed_tyler) or _flag(
                    cell.are_vs_gaussian, printed_gaussian
                )
                if typo:
                    logger.info(
                        f"Printed efficiency {printed_tyler} ({printed_gaussian}) for {f1.to_string()} "
                        f"under {cell.under}, k={k} differs from {cell.are_vs_tyler:.3f}"
                    )
                rows.append(
                    [
                        f1.to_string(),
                        k,
                        cell.under,
                        cell.are_vs_tyler,
                        cell.are_vs_gaussian,
                        printed_tyler,
                        printed_gaussian,
                        "suspected_typo" if typo else "",
                    ]
                )
    return pandas.DataFrame(rows, columns=TABLE_COLUMNS)
