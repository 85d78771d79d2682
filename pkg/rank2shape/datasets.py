import os
import pathlib
import pandas

module_path = os.path.dirname(__file__)


def load_config(name):
    stream = (
        pathlib.Path(module_path)
        / pathlib.Path('_datasets')
        / pathlib.Path('config_files')
        / pathlib.Path(f'{name}.json')
    )
    return stream


def load_reference(name):
    stream = (
        pathlib.Path(module_path)
        / pathlib.Path('_datasets')
        / pathlib.Path('reference_tables')
        / pathlib.Path(f'{name}.csv')
    )
    return stream


def read_reference(name):
    """
    Read a shipped reference table; empty cells stay empty strings, "inf" becomes numpy.inf

    Args:
        name (str): "table1" (asymptotic efficiencies) or "table2" (simulated bias and MSE)

    Returns:
        pandas.DataFrame: the table
    """
    frame = pandas.read_csv(load_reference(name), keep_default_na=False, dtype={"param": str})
    return frame
