import math

import numpy as np
import pytest

from rgbethe.errors import DimensionMismatch, NoMatch, UnknownOperator
from rgbethe.models import BasisState, model_dicke
from rgbethe.oracle import (build_operator, build_sector_basis, compare_solution, diagonalize,
                            matrix_element, sector_leakage)
from rgbethe.solver import BetheSolution, enumerate_states
from rgbethe.models import charge_eigenvalues

SQ2 = math.sqrt(2.0)


def test_basis_counts(dicke_m4, pip_m1):
    assert build_sector_basis(dicke_m4, 3).dim == 15
    assert build_sector_basis(dicke_m4, 0).states == [BasisState(0, (0, 0, 0, 0))]
    from rgbethe.models import model_pip
    b = build_sector_basis(model_pip(1.0, 0.0, [1.0, 2.0]), 2)
    assert set(b.states) == {BasisState(2, (0, 0)), BasisState(1, (1, 0)), BasisState(1, (0, 1)),
                             BasisState(0, (1, 1))}


def test_dicke_m1_charge_matrix(dicke_m1):
    b = build_sector_basis(dicke_m1, 1)
    R = build_operator(b, "R:0")
    order = [b.index[BasisState(1, (0,))], b.index[BasisState(0, (1,))]]
    assert np.allclose(R[np.ix_(order, order)], [[1, -1], [-1, -1]], atol=1e-15)
    assert sorted(diagonalize(b).charges[:, 0]) == pytest.approx([-SQ2, SQ2], abs=1e-12)


def test_charges_commute(dicke_m4):
    b = build_sector_basis(model_dicke(0.5, [1.0, 2.2, 3.1], 0.4), 2)
    Rs = [build_operator(b, f"R:{i}") for i in range(3)]
    for i in range(3):
        for j in range(i):
            assert np.abs(Rs[i] @ Rs[j] - Rs[j] @ Rs[i]).max() <= 1e-12


def test_number_operator_on_vacuum(pip_m4):
    b = build_sector_basis(pip_m4, 0)
    assert np.all(build_operator(b, "nb") == 0)


def test_no_leakage(pip_m4):
    b = build_sector_basis(pip_m4, 2)
    assert sector_leakage(b, "H") == 0
    assert all(sector_leakage(b, f"R:{i}") == 0 for i in range(4))


def test_eigenvectors_orthonormal(pip_m4):
    ep = diagonalize(build_sector_basis(pip_m4, 2))
    assert np.abs(ep.vectors.T @ ep.vectors - np.eye(11)).max() <= 1e-12
    assert ep.offdiag <= 1e-10
    H = build_operator(ep.basis, "H")
    assert np.sum(ep.energies) == pytest.approx(np.trace(H), abs=1e-10)


def test_compare_solution(dicke_m1, dicke_m4):
    ep = diagonalize(build_sector_basis(dicke_m1, 1))
    sol = BetheSolution(dicke_m1, 1, None, np.array([-1 - SQ2]), charges=charge_eigenvalues(dicke_m1, [-1 - SQ2], 1))
    rep = compare_solution(ep, sol, threshold=1e-10)
    assert ep.charges[rep.index, 0] == pytest.approx(-SQ2, abs=1e-10)
    s = enumerate_states(dicke_m4, 3)[5]
    bad = s.lambdas + 1e-2
    with pytest.raises(NoMatch):
        compare_solution(build_sector_basis(dicke_m4, 3), charge_eigenvalues(dicke_m4, bad, 3))


def test_matrix_element_and_sum_rule(pip_m4):
    b = build_sector_basis(pip_m4, 2)
    ep = diagonalize(b)
    v = ep.vectors[:, 3]
    assert matrix_element(v, build_operator(b, "I"), v) == pytest.approx(1.0, abs=1e-14)
    tot = matrix_element(v, build_operator(b, "nb"), v) + sum(
        matrix_element(v, build_operator(b, f"S0:{i}"), v) for i in range(4))
    assert tot == pytest.approx(2 - 2.0, abs=1e-12)
    with pytest.raises(DimensionMismatch):
        matrix_element(v, np.eye(3), v)


def test_unknown_operator(pip_m4):
    b = build_sector_basis(pip_m4, 1)
    for bad in ("Q", "S+:9", "R:x"):
        with pytest.raises(UnknownOperator):
            build_operator(b, bad)
