import json
import math

import numpy as np
import pytest

from rgbethe.errors import DuplicateLevel, InputError, NonpositiveEta0, NonpositiveLevel, ZeroCoupling
from rgbethe.models import (BasisState, charge_eigenvalues, load_model, model_dicke, model_from_dict,
                            model_pip, model_to_dict, model_xxz, occupation_patterns, pip_lambda0,
                            sector_dimension, xxz_charge_eigenvalues, xxz_charge_eigenvalues_hole, level_z)
from rgbethe.oracle import build_sector_basis, diagonalize
from rgbethe.solver import dual_lambdas

SQ2 = math.sqrt(2.0)


def test_constructors(dicke_fig1):
    assert dicke_fig1.m == 11
    assert model_dicke(0, [2], 1).m == 1
    assert model_pip(2.5, 1.0, [1, 2, 3, 4]).kappa == 1.0
    with pytest.raises(DuplicateLevel):
        model_dicke(1, [1, 2], 0.5)
    with pytest.raises(NonpositiveLevel):
        model_pip(1, 0, [-1, 2])
    with pytest.raises(NonpositiveEta0):
        model_pip(0, 0, [1, 2])
    with pytest.raises(ZeroCoupling):
        model_xxz("trig", [1, 2], 0.0)


@pytest.mark.parametrize("m,N,dim", [(4, 3, 15), (5, 3, 26), (4, 0, 1)])
def test_sector_dimension_dicke(m, N, dim):
    assert sector_dimension(model_dicke(1.0, np.arange(2.0, 2.0 + m), -0.1), N) == dim


def test_sector_dimension_spin_model():
    mod = model_xxz("hyp", [1, 2, 3, 4], 0.3)
    assert [sector_dimension(mod, n) for n in range(6)] == [1, 4, 6, 4, 1, 0]
    assert len(list(occupation_patterns(mod, 2))) == 6


def test_basis_state_properties():
    b = BasisState(2, (1, 0, 1))
    assert b.excitations == 4 and b.occupied == (0, 2)


def test_charge_closed_forms(dicke_m1, pip_m1):
    assert charge_eigenvalues(dicke_m1, [-1 - SQ2], 1)[0] == pytest.approx(-SQ2, abs=1e-12)
    assert charge_eigenvalues(pip_m1, [1 + SQ2], 1)[0] == pytest.approx(-0.25 - 1 / SQ2, abs=1e-12)
    assert pip_lambda0(pip_m1, [1 + SQ2], 1) == pytest.approx((1 + SQ2) / 2, abs=1e-12)


@pytest.mark.parametrize("fixture", ["dicke_m4", "pip_m4", "trig_m3"])
def test_vacuum_charges_match_ed(fixture, request):
    mod = request.getfixturevalue(fixture)
    ed = diagonalize(build_sector_basis(mod, 0)).charges[0]
    assert np.allclose(charge_eigenvalues(mod, np.zeros(mod.m), 0), ed, atol=1e-12)


def test_xxz_vacuum_formula(trig_m3):
    g = trig_m3.coupling
    expect = -0.5 * (1 - 0.5 * g * level_z(trig_m3).sum(axis=1))
    assert np.allclose(xxz_charge_eigenvalues(trig_m3, np.zeros(3)), expect, atol=1e-14)


def test_xxz_particle_hole_charges(trig_m3):
    lam = np.array([0.3, -1.2, 2.0])
    g = trig_m3.coupling
    assert np.allclose(xxz_charge_eigenvalues(trig_m3, lam),
                       xxz_charge_eigenvalues_hole(trig_m3, dual_lambdas(lam, g)), atol=1e-12)


def test_json_roundtrip(tmp_path, pip_m4):
    d = model_to_dict(pip_m4, 2)
    path = tmp_path / "m.json"
    path.write_text(json.dumps(d))
    mod, N = load_model(path)
    assert mod == pip_m4 and N == 2


@pytest.mark.parametrize("bad", [
    {"model": "dicke", "levels": [1], "coupling": 1, "eps0": 0, "extra": 1},
    {"model": "boson", "levels": [1]},
    {"model": "dicke", "levels": [], "coupling": 1, "eps0": 0},
    {"model": "dicke", "levels": [1], "coupling": "x", "eps0": 0},
    {"model": "xxz", "levels": [1, 2], "coupling": 1, "realization": "elliptic"},
    {"model": "pip", "levels": [1], "eta0_sq": 1, "kappa": 0, "N": -1},
    {"model": "pip", "levels": [1], "eta0_sq": 1, "kappa": 0, "eps0": 1},
    [1, 2],
])
def test_schema_rejections(bad):
    with pytest.raises(InputError):
        model_from_dict(bad)


def test_malformed_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"model": ')
    with pytest.raises(InputError):
        load_model(p)
