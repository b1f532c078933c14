import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from renewal_ldp.marginals import Exponential, Gamma  # noqa: E402
from renewal_ldp.models import (  # noqa: E402
    GaussSign,
    IndependentProduct,
    PoissonEpoch,
    PoissonEpochUnit,
    Threshold,
    default_instances,
)


@pytest.fixture
def unit():
    return PoissonEpochUnit()


@pytest.fixture
def threshold():
    return Threshold(1.0)


@pytest.fixture
def gauss():
    return GaussSign(1.0)


@pytest.fixture
def indep():
    return IndependentProduct(Exponential(1.0), Exponential(1.0))


@pytest.fixture
def pe_general():
    return PoissonEpoch([(0.0, [0.5, 0.5]), (2.0, [1.5])])


@pytest.fixture
def gamma2():
    return Gamma(2.0, 1.0)


def builtin_ids():
    return [law.kind for law in default_instances()]


@pytest.fixture(params=default_instances(), ids=builtin_ids())
def any_law(request):
    return request.param


# an interior tilt for each built-in (inside every admissible range)
INTERIOR_T = {
    "poisson-epoch": 0.3,
    "poisson-epoch-unit": 0.5,
    "threshold": 1.0,
    "gauss-sign": 0.5,
    "independent-product": 0.3,
}


def z_score(value, reference, stderr):
    return (value - reference) / stderr if stderr > 0 else (0.0 if value == reference else math.inf)


def mean_and_stderr(values):
    values = np.asarray(values, dtype=float)
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))
