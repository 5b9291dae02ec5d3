import math
from dataclasses import replace

import numpy as np
import pytest

from rgbethe.errors import BadPartition, NoConvergence, WrongVariant, InputError
from rgbethe.models import model_dicke, model_pip, model_xxz, sector_dimension
from rgbethe.oracle import build_sector_basis, compare_solution, diagonalize
from rgbethe.solver import (BetheSolution, SolveConfig, contraction_seed, continuation_xi, dual_lambdas,
                            enumerate_states, lambda_kappa_derivative, lambda_residual,
                            lambdas_from_rapidities, pip_lambda0_from_rapidities, residuals,
                            secular_roots, solve_from_partition, solve_lambdas, solve_pattern,
                            solve_rapidities, with_rapidities, xi_endpoint_xxz, xi_rg_residual,
                            xxz_hole_residual)

SQ2 = math.sqrt(2.0)


def test_rapidity_closed_forms(dicke_m1, pip_m1):
    s = solve_rapidities(dicke_m1, 1, [2.3])
    assert s.rapidities[0] == pytest.approx(1 + SQ2, abs=1e-12)
    assert s.lambdas[0] == pytest.approx(-1 - SQ2, abs=1e-12)
    # the pole at x = eps_1 separates 0.9 from 1 + sqrt 2
    assert solve_rapidities(dicke_m1, 1, [0.9]).rapidities[0] == pytest.approx(1 - SQ2, abs=1e-12)
    p = solve_rapidities(pip_m1, 1, [0.8])
    assert p.rapidities[0] == pytest.approx(-2 + 2 * SQ2, abs=1e-12)
    assert p.lambdas[0] == pytest.approx(1 + SQ2, abs=1e-12)
    assert p.lambda0 == pytest.approx((1 + SQ2) / 2, abs=1e-12)


def test_lambdas_from_rapidities(dicke_m1, pip_m1):
    assert lambdas_from_rapidities(dicke_m1, [1 + SQ2])[0] == pytest.approx(-1 - SQ2, abs=1e-12)
    x = -2 + 2 * SQ2
    assert lambdas_from_rapidities(pip_m1, [x])[0] == pytest.approx(1 + SQ2, abs=1e-12)
    assert pip_lambda0_from_rapidities(pip_m1, [x]) == pytest.approx((1 + SQ2) / 2, abs=1e-12)
    assert np.all(lambdas_from_rapidities(dicke_m1, []) == 0)


def test_rapidity_at_infinity():
    hyp = model_xxz("hyp", [1.0, 2.0], 0.5)
    trig = model_xxz("trig", [1.0, 2.0], 0.5)
    big = 1e12
    for mod in (hyp, trig, model_pip(1.0, 0.0, [1.0, 2.0]), model_dicke(0.0, [1.0, 2.0], 1.0)):
        a = lambdas_from_rapidities(mod, [0.3, np.inf])
        b = lambdas_from_rapidities(mod, [0.3, big])
        assert np.allclose(a, b, rtol=1e-9, atol=1e-9)


@pytest.mark.parametrize("fixture", ["dicke_m1", "pip_m1", "trig_m3"])
def test_vacuum(fixture, request):
    mod = request.getfixturevalue(fixture)
    s = solve_rapidities(mod, 0, [])
    assert s.rapidities.size == 0 and np.all(s.lambdas == 0)
    r = residuals(mod, s)
    assert r["residual_rapidity"] == 0 and r["residual_lambda"] == 0
    assert len(enumerate_states(mod, 0)) == 1


def test_solve_lambdas_closed_forms(dicke_m1, pip_m1):
    roots = sorted(solve_lambdas(dicke_m1, 1, [s]).lambdas[0] for s in (-3.0, 1.0))
    assert roots == pytest.approx([-1 - SQ2, -1 + SQ2], abs=1e-12)
    for seed, expect in ((3.0, 1 + SQ2), (-1.0, 1 - SQ2)):
        s = solve_lambdas(pip_m1, 1, [seed])
        assert s.lambdas[0] == pytest.approx(expect, abs=1e-12)
        assert s.lambda0 == pytest.approx(expect / 2, abs=1e-12)


def test_enumerate_m1(dicke_m1):
    lam = sorted(s.lambdas[0] for s in enumerate_states(dicke_m1, 1))
    assert lam == pytest.approx([-1 - SQ2, -1 + SQ2], abs=1e-12)


def test_enumerate_dicke_m4_bijective(dicke_m4):
    sols = enumerate_states(dicke_m4, 3)
    assert len(sols) == 15
    pairs = diagonalize(build_sector_basis(dicke_m4, 3))
    idx = {compare_solution(pairs, s, threshold=1e-8).index for s in sols}
    assert len(idx) == 15


def test_enumerate_thread_pool_same_result(pip_m4):
    a = enumerate_states(pip_m4, 2, SolveConfig(workers=1))
    b = enumerate_states(pip_m4, 2, SolveConfig(workers=3))
    assert all(np.array_equal(x.lambdas, y.lambdas) for x, y in zip(a, b))


@pytest.mark.parametrize("real", ["trig", "hyp"])
def test_enumerate_xxz(real):
    mod = model_xxz(real, [0.4, 1.1, 2.3, 3.0], -0.6)
    pairs = diagonalize(build_sector_basis(mod, 2))
    sols = enumerate_states(mod, 2)
    assert len({compare_solution(pairs, s, threshold=1e-8).index for s in sols}) == 6


@pytest.mark.parametrize("N", [1, 2])
def test_with_rapidities_reconstruction(pip_m4_states, pip_m4, N):
    for s in pip_m4_states[N]:
        r = with_rapidities(s)
        assert r.residual_rapidity < 1e-9
        assert np.allclose(lambdas_from_rapidities(pip_m4, r.rapidities), s.lambdas, rtol=1e-9, atol=1e-9)


@pytest.mark.parametrize("family", ["pip", "dicke"])
def test_rapidities_more_excitations_than_levels(family):
    lev = [2.489672175894278, 2.6884521664413334]
    model = model_pip(0.5109584281154271, -0.8341312357568289, lev) if family == "pip" \
        else model_dicke(0.3, lev, 0.7)
    states = enumerate_states(model, 4)
    assert states
    for st in states:
        x = with_rapidities(st).rapidities
        assert x.size == 4
        assert np.allclose(lambdas_from_rapidities(model, x), st.lambdas, atol=1e-8, rtol=1e-8)


def test_residual_sensitivity(dicke_m4):
    s = enumerate_states(dicke_m4, 2)[3]
    assert residuals(dicke_m4, s)["residual_lambda"] <= 1e-12
    bad = replace(s, lambdas=s.lambdas + np.array([1e-3, 0, 0, 0]))
    assert residuals(dicke_m4, bad)["residual_lambda"] > 1e-4


def test_dual_lambdas():
    assert dual_lambdas([1.0], 0.5) == pytest.approx([5.0])
    with pytest.raises(WrongVariant):
        dual_lambdas([1.0], 0.5, model_dicke(0, [2], 1))


def test_dual_hole_residual(trig_m3):
    for N in range(4):
        for s in enumerate_states(trig_m3, N):
            assert xxz_hole_residual(trig_m3, N, dual_lambdas(s.lambdas, trig_m3.coupling)) <= 1e-9


def test_kappa_derivative_finite_difference(pip_m4, pip_m4_states):
    for s in pip_m4_states[2]:
        d = lambda_kappa_derivative(pip_m4, 2, s.lambdas)
        hi = solve_lambdas(replace(pip_m4, kappa=1 + 1e-5), 2, s.lambdas).lambdas
        lo = solve_lambdas(replace(pip_m4, kappa=1 - 1e-5), 2, s.lambdas).lambdas
        assert np.allclose((hi - lo) / 2e-5, d, rtol=1e-5, atol=0)


def test_solve_pattern(pip_m4, pip_m4_states):
    s = solve_pattern(pip_m4, 2, [0, 1])
    assert any(np.allclose(s.lambdas, t.lambdas, atol=1e-9) for t in pip_m4_states[2])
    with pytest.raises(BadPartition):
        solve_pattern(pip_m4, 2, [0])


def test_secular_roots_and_seed(dicke_m1):
    assert sorted(secular_roots(dicke_m1)) == pytest.approx([1 - SQ2, 1 + SQ2], abs=1e-12)
    assert contraction_seed(dicke_m1, 1, [0, 1])[0] == pytest.approx(1 + SQ2, abs=1e-12)


def test_seed_splitting(dicke_m4):
    cfg = SolveConfig()
    roots = secular_roots(dicke_m4)
    seed = contraction_seed(dicke_m4, 2, [2, 0, 0, 0, 0], cfg)
    assert seed == pytest.approx([roots[0] + 2 * cfg.seed_radius, roots[0] - 2 * cfg.seed_radius], abs=1e-14)
    exact = contraction_seed(dicke_m4, 2, [0, 1, 0, 1, 0], cfg)
    assert exact == pytest.approx([roots[1], roots[3]], abs=0)
    with pytest.raises(BadPartition):
        contraction_seed(dicke_m4, 2, [1, 0, 0])
    with pytest.raises(BadPartition):
        contraction_seed(dicke_m4, 2, [0, 2, 0, 0, 0])


def test_config_validation():
    with pytest.raises(InputError):
        SolveConfig(newton_tol=-1)
    with pytest.raises(InputError):
        SolveConfig(shrink=2.0)


def test_continuation_ground_state(dicke_fig1):
    s = solve_from_partition(dicke_fig1, 6, [6] + [0] * 11)
    path = continuation_xi(dicke_fig1, 6, s)
    assert xi_rg_residual(dicke_fig1, path.rapidity_snapshots[0], 0.0) <= 1e-8
    assert xi_rg_residual(dicke_fig1, path.rapidity_snapshots[-1], 1.0) <= 1e-8
    assert xi_endpoint_xxz(dicke_fig1, path.rapidity_snapshots[-1])[2] <= 1e-8
    assert path.xi_samples[-1] == 1.0


def test_continuation_reversible(dicke_fig1):
    s = solve_from_partition(dicke_fig1, 6, [1] * 6 + [0] * 6)
    fwd = continuation_xi(dicke_fig1, 6, s)
    end = BetheSolution(dicke_fig1, 6, fwd.rapidity_snapshots[-1], s.lambdas)
    back = continuation_xi(dicke_fig1, 6, end, xi_start=1.0, xi_end=0.0)
    a = np.sort_complex(back.rapidity_snapshots[-1])
    assert np.abs(a - np.sort_complex(s.rapidities)).max() <= 1e-7


def test_continuation_vacuum(dicke_fig1):
    s = solve_from_partition(dicke_fig1, 0, [0] * 12)
    path = continuation_xi(dicke_fig1, 0, s)
    assert len(path.xi_samples) == 2 and path.flagged_fraction == 0


def test_continuation_wrong_variant(pip_m1):
    s = solve_rapidities(pip_m1, 1, [0.8])
    with pytest.raises(WrongVariant):
        continuation_xi(pip_m1, 1, s)
