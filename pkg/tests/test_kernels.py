import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rgbethe.errors import CoincidentArguments, DuplicateParameter, NonpositiveParameter
from rgbethe.kernels import (Realization, kernel_build, kernel_check, kernel_X, kernel_Z, weight,
                             x_matrix, z_matrix)


def test_build_gamma():
    assert kernel_build("trig", [2, 1]).gamma == 1
    assert kernel_build(Realization.HYPERBOLIC, [4, 1]).gamma == -1


def test_build_rejects_duplicates():
    with pytest.raises(DuplicateParameter):
        kernel_build("hyp", [1, 1])


def test_hyperbolic_needs_positive():
    with pytest.raises(NonpositiveParameter):
        kernel_build("hyp", [-1.0, 2.0])


def test_frozen_values():
    t, h = kernel_build("trig", [2, 1]), kernel_build("hyp", [4, 1])
    assert kernel_X(t, 2, 1) == pytest.approx(math.sqrt(10), rel=1e-15)
    assert kernel_X(h, 4, 1) == pytest.approx(4 / 3, rel=1e-15)
    assert kernel_Z(t, 2, 1) == pytest.approx(3, rel=1e-15)
    assert kernel_Z(h, 4, 1) == pytest.approx(5 / 3, rel=1e-15)
    assert abs(kernel_X(t, 2, 1) ** 2 - kernel_Z(t, 2, 1) ** 2 - 1) < 1e-14


def test_coincident_arguments():
    t = kernel_build("trig", [2, 1])
    with pytest.raises(CoincidentArguments):
        kernel_X(t, 1.5, 1.5)


def test_matrices_match_scalars():
    t = kernel_build("trig", [1, 2, 3])
    us, vs = [0.3, 1.7], [2.5, -0.4, 0.9]
    X, Z = x_matrix(t, us, vs), z_matrix(t, us, vs)
    for i, u in enumerate(us):
        for j, v in enumerate(vs):
            assert X[i, j] == pytest.approx(kernel_X(t, u, v), rel=1e-14)
            assert Z[i, j] == pytest.approx(kernel_Z(t, u, v), rel=1e-14)


def test_hyperbolic_negative_argument_branch():
    # rapidities may be complex or negative; sqrt follows the principal branch
    assert weight("hyp", -2.0) == pytest.approx(2j, rel=1e-15)


@pytest.mark.parametrize("real,triple", [("trig", (3, 2, 1)), ("hyp", (4, 2, 1))])
def test_check_single_triples(real, triple):
    rep = kernel_check(kernel_build(real, [1.0]), [triple])
    assert rep["constraint"] <= 1e-12 and rep["gamma"] <= 1e-12


def test_check_random_trig():
    rng = np.random.default_rng(11)
    rep = kernel_check(kernel_build("trig", [1.0]), rng.uniform(0, 10, (100, 3)))
    assert rep["constraint"] <= 1e-10
    assert rep["constraint_rel64"] <= 1e-13


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["trig", "hyp"]), st.floats(0.1, 100), st.floats(0.1, 100))
def test_antisymmetry(real, u, v):
    if abs(u - v) < 1e-6:
        return
    k = kernel_build(real, [1.0])
    assert abs(kernel_X(k, u, v) + kernel_X(k, v, u)) <= 1e-12 * abs(kernel_X(k, u, v))
    assert abs(kernel_Z(k, u, v) + kernel_Z(k, v, u)) <= 1e-12 * abs(kernel_Z(k, u, v))
