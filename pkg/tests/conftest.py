import numpy as np
import pytest

from qherm import (
    BasisSpec,
    MetricCase,
    SwansonSpec,
    swanson_metric,
    swanson_observables,
)


@pytest.fixture(scope="session")
def basis64():
    return BasisSpec(dim=64, margin=8)


@pytest.fixture(scope="session")
def basis32():
    return BasisSpec(dim=32, margin=4)


@pytest.fixture(scope="session")
def basis16():
    return BasisSpec(dim=16, margin=2)


@pytest.fixture(scope="session")
def swanson_i():
    return SwansonSpec(m1=1.0, epsilon=0.4, omega=1.0, metric_case=MetricCase.CASE_I_QX)


@pytest.fixture(scope="session")
def swanson_ii():
    return SwansonSpec(m1=1.0, epsilon=0.4, omega=1.0, metric_case=MetricCase.CASE_II_QP)


@pytest.fixture(scope="session")
def metric_i(swanson_i, basis64):
    return swanson_metric(swanson_i, basis64)


@pytest.fixture(scope="session")
def metric_ii(swanson_ii, basis64):
    return swanson_metric(swanson_ii, basis64)


@pytest.fixture(scope="session")
def pair_i(swanson_i, basis64):
    return swanson_observables(swanson_i, basis64)


@pytest.fixture(scope="session")
def pair_ii(swanson_ii, basis64):
    return swanson_observables(swanson_ii, basis64)


@pytest.fixture(scope="session")
def cubic_gs():
    return [0.04, 0.02, 0.01]


def fit_loglog(gs, residuals):
    return float(np.polyfit(np.log(gs), np.log(residuals), 1)[0])


@pytest.fixture(scope="session")
def loglog_fit():
    return fit_loglog
