import numpy as np
import pandas as pd
import pytest

from marlab.mar import ErrorDist, MarModel


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def noncausal_t2():
    return MarModel(phi=[], psi=[0.8], dist=ErrorDist.student_t(2.0))


@pytest.fixture
def causal_t2():
    return MarModel(phi=[0.6], psi=[], dist=ErrorDist.student_t(2.0))


@pytest.fixture
def mixed_t2():
    return MarModel(phi=[0.6], psi=[0.8], dist=ErrorDist.student_t(2.0))


@pytest.fixture
def cauchy_noncausal():
    return MarModel(phi=[], psi=[0.8], dist=ErrorDist.cauchy())


def write_series_csv(path, values, dates=None, value_column="value",
                     date_column="date"):
    cols = {}
    if dates is not None:
        cols[date_column] = dates
    cols[value_column] = values
    pd.DataFrame(cols).to_csv(path, index=False)
    return path
