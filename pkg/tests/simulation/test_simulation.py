import numpy
import pandas
import pytest

from rank2shape.config import SimConfig
from rank2shape.errors import ConfigError, ConvergenceError, UsageError
from rank2shape.estimators import ShapeEstimator, TylerEstimator
from rank2shape.r2s_enums import EstimatorMethod
from rank2shape.simulation import (
    BIVARIATE_COLUMNS,
    LONG_COLUMNS,
    compare_to_reference,
    component_names,
    preset,
    read_config,
    run_sim,
    write_report,
)


def small_config(**simulation):
    cfg = SimConfig()
    settings = {"k": 2, "n": [20], "M": 3, "seed": 11}
    settings.update(simulation)
    cfg.update_from_dictionary(
        {
            "simulation": settings,
            "models": ["normal", "t:3"],
            "estimators": [
                {"method": "tyler"},
                {"method": "gaussian"},
                {"method": "ronestep", "scores": "vdw", "preliminary": "tyler"},
            ],
        }
    )
    return cfg


class FailingEstimator(ShapeEstimator):
    method = EstimatorMethod.TYLER

    def __init__(self):
        super().__init__()
        self.estimator_label = "FailingEstimator"

    def estimate(self, data, theta=None):
        raise ConvergenceError("never converges", 1.0, 1)


def test_component_names():
    assert component_names(2) == ["V1_2", "V2_2"]
    assert component_names(3) == ["V1_2", "V2_2", "V1_3", "V2_3", "V3_3"]


def test_report_layout():
    report = run_sim(small_config())
    assert list(report.table.columns) == LONG_COLUMNS
    assert len(report.table) == 2 * 1 * 3 * 2
    assert (report.table["failures"] == 0).all()
    frame = report.to_frame()
    assert list(frame.columns) == BIVARIATE_COLUMNS
    assert len(frame) == 6
    assert list(frame["estimator"][:3]) == ["tyler", "gaussian", "ronestep"]
    assert list(frame["family"]) == ["normal"] * 3 + ["t"] * 3
    assert list(frame["param"]) == [""] * 3 + ["3"] * 3

    text = write_report(report)
    assert text.splitlines()[0] == ",".join(BIVARIATE_COLUMNS)
    assert len(text.splitlines()) == 7


def test_single_replication_mse_is_squared_bias():
    table = run_sim(small_config(M=1)).table
    numpy.testing.assert_allclose(table["mse"], table["bias"] ** 2, rtol=1e-12, atol=0)


def test_results_do_not_depend_on_worker_count():
    cfg = small_config(M=5)
    serial = run_sim(cfg, threads=1).to_frame()
    parallel = run_sim(cfg, threads=2).to_frame()
    pandas.testing.assert_frame_equal(serial, parallel)
    reseeded = run_sim(small_config(M=5, seed=12)).to_frame()
    assert not numpy.array_equal(serial["mse_diag"], reseeded["mse_diag"])


def test_higher_dimension_uses_long_format(tmp_path):
    cfg = small_config(k=3)
    report = run_sim(cfg)
    assert len(report.table) == 2 * 3 * 5
    path = tmp_path / "k3.csv"
    assert write_report(report, path) is None
    written = pandas.read_csv(path, keep_default_na=False)
    assert list(written.columns) == LONG_COLUMNS
    with pytest.raises(UsageError):
        compare_to_reference(report)


def test_failures_are_counted(monkeypatch):
    monkeypatch.setattr(SimConfig, "shape_estimators", lambda self: [TylerEstimator(), FailingEstimator()])
    table = run_sim(small_config()).table
    failing = table[table["failures"] > 0]
    assert len(failing) == 2 * 2
    assert (failing["failures"] == 3).all()
    assert failing["bias"].isna().all()
    assert table[table["failures"] == 0]["mse"].notna().all()


def test_compare_to_reference():
    report = run_sim(small_config(n=[50], M=2))
    comparison = compare_to_reference(report)
    assert len(comparison) == 2 * 3 * 2 * 2
    assert {"value", "simulated", "clean"} <= set(comparison.columns)
    assert (comparison["clean"] == 1).all()
    assert comparison["simulated"].notna().all()


def test_read_config(tmp_path):
    path = tmp_path / "sim.json"
    small_config(M=4).write(path)
    cfg = read_config(path)
    assert cfg.to_dict() == small_config(M=4).to_dict()
    assert cfg.M == 4
    path.write_text('{"simulation": {"M": 0}}')
    with pytest.raises(ConfigError):
        read_config(path)


def test_presets():
    cfg = preset("table2")
    assert cfg.ns == [50, 250]
    assert len(cfg.estimators) == 10
    with pytest.raises(UsageError):
        preset("table3")


@pytest.mark.slow
def test_reference_mean_square_errors():
    cfg = preset("table2")
    cfg.update_from_dictionary(
        {
            "simulation": {"n": [250], "threads": -1},
            "models": ["normal", "t:3", "e:5"],
            "estimators": [
                {"method": "tyler"},
                {"method": "gaussian"},
                {"method": "ronestep", "scores": "vdw", "preliminary": "tyler"},
                {"method": "ronestep", "scores": "t:3", "preliminary": "tyler"},
            ],
        }
    )
    report = run_sim(cfg)
    comparison = compare_to_reference(report)
    mse = comparison[comparison["statistic"] == "mse"]
    cells = [
        ("tyler", "", "normal", ""),
        ("gaussian", "", "normal", ""),
        ("ronestep", "vdw", "normal", ""),
        ("ronestep", "vdw", "e", "5"),
    ]
    for estimator, scores, family, param in cells:
        cell = mse[
            (mse["estimator"] == estimator)
            & (mse["scores"] == scores)
            & (mse["family"] == family)
            & (mse["param"] == param)
        ]
        assert len(cell) == 2
        relative = (cell["simulated"] - cell["value"]).abs() / cell["value"]
        assert (relative < 0.15).all(), cell

    frame = report.to_frame().set_index(["estimator", "scores", "family", "param"])
    for column in ["mse_offdiag", "mse_diag"]:
        mse = frame[column]
        assert mse["ronestep", "vdw", "normal", ""] < mse["tyler", "", "normal", ""]
        assert mse["ronestep", "t:3", "t", "3"] < mse["gaussian", "", "t", "3"]
        assert mse["ronestep", "vdw", "e", "5"] < mse["gaussian", "", "e", "5"]
