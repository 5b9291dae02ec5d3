"""Property-based checks on small random instances."""
import numpy as np
from hypothesis import HealthCheck, assume, given, settings, strategies as st

from rgbethe.detforms import norm, overlap_vector
from rgbethe.errors import InputError
from rgbethe.models import model_dicke, model_pip, model_xxz, sector_dimension
from rgbethe.oracle import build_sector_basis, diagonalize
from rgbethe.solver import enumerate_states

levels = st.lists(st.floats(0.3, 5.0), min_size=2, max_size=3, unique=True).map(sorted)
slow = settings(max_examples=15, deadline=None, suppress_health_check=[HealthCheck.too_slow])


def _separated(lev, gap=0.1):
    return np.min(np.diff(lev)) >= gap


@slow
@given(levels, st.floats(0.2, 2.0), st.floats(-1.0, 1.0), st.integers(1, 3))
def test_dicke_spectrum_complete(lev, G, eps0, N):
    assume(_separated(lev) and min(abs(e - eps0) for e in lev) > 0.1)
    mod = model_dicke(eps0, lev, G)
    sols = enumerate_states(mod, N)
    assert len(sols) == sector_dimension(mod, N)
    ed = diagonalize(build_sector_basis(mod, N)).charges
    for s in sols:
        assert np.abs(ed - s.charges).max(axis=1).min() <= 1e-8


@slow
@given(levels, st.floats(0.5, 3.0), st.floats(-2.0, 2.0), st.integers(1, 2))
def test_pip_norm_is_parseval(lev, eta0_sq, kappa, N):
    assume(_separated(lev))
    mod = model_pip(eta0_sq, kappa, lev)
    basis = build_sector_basis(mod, N)
    for s in enumerate_states(mod, N):
        v = overlap_vector(mod, s, basis.states)
        assert abs(norm(mod, s) - np.vdot(v, v).real) <= 1e-8 * np.vdot(v, v).real


@slow
@given(levels, st.floats(0.2, 1.5), st.booleans(), st.sampled_from(["trig", "hyp"]))
def test_xxz_charge_sum(lev, g, flip, real):
    # the charges of the trig/hyp models sum to the total S^0 plus a constant
    assume(_separated(lev))
    mod = model_xxz(real, lev, -g if flip else g)
    for N in range(len(lev) + 1):
        for s in enumerate_states(mod, N):
            assert abs(np.sum(s.charges) - (N - len(lev) / 2)) <= 1e-9


@settings(max_examples=40, deadline=None)
@given(st.floats(-10, 10), st.lists(st.floats(-5, 5), min_size=1, max_size=4))
def test_constructor_validation_never_crashes(eps0, lev):
    try:
        model_dicke(eps0, lev, 0.3)
    except InputError:
        pass
