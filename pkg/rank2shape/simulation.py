"""Replicated Monte Carlo experiments: empirical bias and mean square error of shape estimators.

Every replication draws its dataset from its own Philox stream keyed by (seed, model index, n, replication),
so every estimator sees the same datasets and results do not depend on the number of worker processes.
"""

# internal imports
from .config import SimConfig
from .datasets import load_config, read_reference
from .errors import Rank2ShapeError, UsageError
from .sampler import RadialModel, sample
from .shape_algebra import vech
from .utils import format_parameter

from .logging import getLogger

logger = getLogger(__name__)

# external imports
from dataclasses import dataclass
from beartype.typing import List, Optional, Union
import beartype
import joblib
import numpy
import pandas
import pathlib

LONG_COLUMNS = [
    "estimator",
    "scores",
    "preliminary",
    "family",
    "param",
    "k",
    "n",
    "M",
    "failures",
    "component",
    "bias",
    "mse",
]
BIVARIATE_COLUMNS = [
    "estimator",
    "scores",
    "preliminary",
    "family",
    "param",
    "k",
    "n",
    "M",
    "failures",
    "bias_offdiag",
    "bias_diag",
    "mse_offdiag",
    "mse_diag",
]

PRESETS = ("table2",)


@dataclass
class SimReport:
    """
    Aggregated results of run_sim

    Attributes:
        k (int): dimension
        table (pandas.DataFrame): one row per (estimator, model, n, free shape component), LONG_COLUMNS
    """

    k: int
    table: pandas.DataFrame

    def to_frame(self) -> pandas.DataFrame:
        """
        The report as written to CSV: BIVARIATE_COLUMNS for k = 2, LONG_COLUMNS otherwise
        """
        if self.k != 2:
            return self.table[LONG_COLUMNS].reset_index(drop=True)
        keys = ["estimator", "scores", "preliminary", "family", "param", "k", "n", "M", "failures"]
        offdiag = self.table[self.table["component"] == component_names(2)[0]].reset_index(drop=True)
        diag = self.table[self.table["component"] == component_names(2)[1]].reset_index(drop=True)
        frame = offdiag[keys].copy()
        frame["bias_offdiag"] = offdiag["bias"]
        frame["bias_diag"] = diag["bias"]
        frame["mse_offdiag"] = offdiag["mse"]
        frame["mse_diag"] = diag["mse"]
        return frame[BIVARIATE_COLUMNS]


def component_names(k: int) -> List[str]:
    """
    Names of the free components of a k x k shape matrix, in vech order without the (1, 1) entry
    """
    cols, rows = numpy.tril_indices(k)
    return [f"V{i + 1}_{j + 1}" for i, j in zip(rows, cols)][1:]


def _family_columns(model: RadialModel):
    family = model.to_string().split(":")[0]
    return family, format_parameter(model.parameter)


def _replicate_batch(model, model_index, n, reps, seed, estimators):
    # squared-error inputs for a block of replications: (len(reps), estimators, components), nan on failure
    k = model.k
    truth = vech(numpy.eye(k))[1:]
    errors = numpy.full((len(reps), len(estimators), k * (k + 1) // 2 - 1), numpy.nan)
    for row, rep in enumerate(reps):
        stream = numpy.random.SeedSequence(entropy=seed, spawn_key=(model_index, n, rep))
        data = sample(model, n, stream)
        for column, estimator in enumerate(estimators):
            try:
                V = estimator.estimate(data, model.theta)
            except (Rank2ShapeError, numpy.linalg.LinAlgError) as e:
                logger.info(f"{estimator.type()} failed on {model.label}, n={n}, replication {rep}")
                logger.debug(f"{type(e).__name__}: {e}")
                continue
            errors[row, column] = vech(V)[1:] - truth
    return errors


def _chunks(M: int, count: int) -> List[List[int]]:
    return [list(chunk) for chunk in numpy.array_split(numpy.arange(M), count) if len(chunk)]


@beartype.beartype
def run_sim(cfg: SimConfig, threads: Optional[int] = None) -> SimReport:
    """
    Run every estimator on cfg.M datasets for each model and sample size

    Estimator failures (non convergence, degenerate data, ...) are counted and the replication is left out
    of that estimator's averages.

    Args:
        cfg (SimConfig): the experiment
        threads (int, optional): worker processes, overrides cfg.threads. -1 uses every core.

    Returns:
        SimReport: bias and mean square error per estimator, model, sample size and component
    """
    cfg.validate()
    threads = cfg.threads if threads is None else threads
    models = cfg.radial_models()
    estimators = cfg.shape_estimators()
    k = cfg.k
    names = component_names(k)
    chunk_count = max(1, min(cfg.M, 4 * (joblib.cpu_count() if threads == -1 else threads)))
    tasks = [
        (model_index, n, reps)
        for model_index in range(len(models))
        for n in cfg.ns
        for reps in _chunks(cfg.M, chunk_count)
    ]
    logger.info(
        f"Running {len(models)} models x {len(cfg.ns)} sample sizes x {cfg.M} replications "
        f"with {len(estimators)} estimators on {threads} worker(s)"
    )
    blocks = joblib.Parallel(n_jobs=threads)(
        joblib.delayed(_replicate_batch)(models[model_index], model_index, n, reps, cfg.seed, estimators)
        for model_index, n, reps in tasks
    )

    rows = []
    for model_index, model in enumerate(models):
        family, parameter = _family_columns(model)
        for n in cfg.ns:
            errors = numpy.concatenate(
                [block for (index, size, _), block in zip(tasks, blocks) if index == model_index and size == n]
            )
            for column, estimator in enumerate(estimators):
                values = errors[:, column, :]
                succeeded = ~numpy.isnan(values[:, 0])
                count = int(succeeded.sum())
                bias = values[succeeded].sum(axis=0) / count if count else numpy.full(len(names), numpy.nan)
                mse = (values[succeeded] ** 2).sum(axis=0) / count if count else numpy.full(len(names), numpy.nan)
                for position, name in enumerate(names):
                    rows.append(
                        [
                            estimator.name,
                            estimator.scores,
                            estimator.preliminary,
                            family,
                            parameter,
                            k,
                            n,
                            cfg.M,
                            cfg.M - count,
                            name,
                            float(bias[position]),
                            float(mse[position]),
                        ]
                    )
    return SimReport(k, pandas.DataFrame(rows, columns=LONG_COLUMNS))


@beartype.beartype
def write_report(report: SimReport, path: Optional[Union[pathlib.Path, str]] = None) -> Optional[str]:
    """
    Write a simulation report as CSV

    Args:
        report (SimReport): the report
        path (Union[pathlib.Path, str], optional): output file. Defaults to None (return the CSV text).

    Returns:
        str or None: the CSV text when no path is given
    """
    return report.to_frame().to_csv(path, index=False, lineterminator="\n", na_rep="nan")


@beartype.beartype
def read_config(path: Union[pathlib.Path, str]) -> SimConfig:
    """
    Read a JSON simulation configuration

    Args:
        path (Union[pathlib.Path, str]): the config file

    Raises:
        ConfigError: on malformed JSON (with line and column) or invalid values

    Returns:
        SimConfig: the configuration
    """
    cfg = SimConfig()
    cfg.update_from_file(path)
    return cfg


@beartype.beartype
def preset(name: str) -> SimConfig:
    """
    A shipped configuration ("table2": six bivariate models, n = 50 and 250, M = 1000, ten estimators)

    Args:
        name (str): preset name

    Raises:
        UsageError: for an unknown preset

    Returns:
        SimConfig: the configuration
    """
    if name not in PRESETS:
        logger.error(f"Unknown preset '{name}', available: {', '.join(PRESETS)}")
        raise UsageError(f"Unknown preset '{name}', available: {', '.join(PRESETS)}")
    return read_config(load_config(name))


@beartype.beartype
def compare_to_reference(report: SimReport, clean_only: bool = True) -> pandas.DataFrame:
    """
    Put simulated bias and MSE next to the published bivariate reference cells

    Args:
        report (SimReport): a k = 2 report
        clean_only (bool, optional): drop reference cells known to be misprinted. Defaults to True.

    Raises:
        UsageError: if the report is not bivariate

    Returns:
        pandas.DataFrame: reference rows that have a simulated counterpart, with a "simulated" column
    """
    if report.k != 2:
        logger.error("Reference values exist only for k = 2")
        raise UsageError("Reference values exist only for k = 2")
    reference = read_reference("table2")
    if clean_only:
        reference = reference[reference["clean"] == 1]
    names = dict(zip(component_names(2), ("offdiag", "diag")))
    simulated = report.table.copy()
    simulated["component"] = simulated["component"].map(names)
    simulated = simulated.melt(
        id_vars=["estimator", "scores", "preliminary", "family", "param", "n", "component"],
        value_vars=["bias", "mse"],
        var_name="statistic",
        value_name="simulated",
    )
    keys = ["estimator", "scores", "preliminary", "family", "param", "n", "statistic", "component"]
    return reference.merge(simulated, on=keys, how="inner").reset_index(drop=True)
