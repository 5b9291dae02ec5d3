import math

import numpy as np
import pytest

from rgbethe.models import model_dicke, model_pip, model_xxz
from rgbethe.solver import enumerate_states

SQ2 = math.sqrt(2.0)


@pytest.fixture(scope="session")
def dicke_m1():
    return model_dicke(0.0, [2.0], 1.0)


@pytest.fixture(scope="session")
def pip_m1():
    return model_pip(1.0, 0.0, [2.0])


@pytest.fixture(scope="session")
def dicke_fig1():
    return model_dicke(1.0, np.arange(2.0, 13.0), -0.1)


@pytest.fixture(scope="session")
def dicke_m4():
    return model_dicke(1.0, [2.0, 3.0, 4.0, 5.0], -0.1)


@pytest.fixture(scope="session")
def pip_m4():
    return model_pip(2.5, 1.0, [1.0, 2.0, 3.0, 4.0])


@pytest.fixture(scope="session")
def pip_m4_states(pip_m4):
    return {n: enumerate_states(pip_m4, n) for n in (0, 1, 2)}


@pytest.fixture(scope="session")
def trig_m3():
    return model_xxz("trig", [0.5, 1.2, 2.0], 0.7)
