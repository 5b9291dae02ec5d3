"""Acceptance battery: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` (lines are printed even under
output capture) or directly with ``python3 tests/test_acceptance.py``.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from rgbethe.detforms import (default_gauge, ff_boson_pip, ff_number_pip, ff_raise_pip, norm, overlap,
                              overlap_vector, overlap_xxz_spin, permanent_expansion)
from rgbethe.kernels import kernel_build, kernel_check
from rgbethe.models import (charge_eigenvalues, model_dicke, model_pip, model_xxz, pip_lambda0,
                            xxz_charge_eigenvalues, xxz_charge_eigenvalues_hole)
from rgbethe.oracle import build_operator, build_sector_basis, compare_solution, diagonalize
from rgbethe.solver import (continuation_xi, dual_lambdas, enumerate_states, lambda_kappa_derivative,
                            solve_from_partition, solve_lambdas, with_rapidities, xi_endpoint_xxz,
                            xi_rg_residual, xxz_hole_residual)

SQ2 = math.sqrt(2.0)
FAMILIES = ("dicke", "pip", "trig", "hyp")


def report(capsys, k: int, ok: bool, detail: str):
    line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}"
    if capsys is None:
        print(line)
    else:
        with capsys.disabled():
            print("\n" + line)
    assert ok, line


# --------------------------------------------------------------------------- shared instances

def dicke_c3():
    return model_dicke(1.0, [2.0, 3.0, 4.0, 5.0, 6.0], -0.1), 3


def pip_c3():
    return model_pip(2.5, 1.0, [1.0, 2.0, 3.0, 4.0]), 2


def random_instances(family: str, count: int = 20, seed: int = 2026):
    """Random models with m <= 5 levels and N <= 4 excitations."""
    rng = np.random.default_rng([seed, FAMILIES.index(family)])
    out = []
    while len(out) < count:
        m = int(rng.integers(2, 6))
        lev = np.sort(rng.uniform(0.3, 5.0, m))
        if family == "dicke":
            eps0 = float(rng.uniform(-1.0, 1.0))
            if np.min(np.abs(lev - eps0)) < 1e-3:
                continue
            mod = model_dicke(eps0, lev, float(rng.uniform(0.1, 3.0)) * float(rng.choice([-1, 1])))
            N = int(rng.integers(1, 5))
        elif family == "pip":
            mod = model_pip(float(rng.uniform(0.5, 3.0)), float(rng.uniform(-2.0, 2.0)), lev)
            N = int(rng.integers(1, 5))
        else:
            mod = model_xxz(family, lev, float(rng.choice([-1, 1]) * rng.uniform(0.2, 1.5)))
            N = int(rng.integers(1, m + 1))
        out.append((mod, min(N, 4)))
    return out


def relative_deviation(d: complex, p: complex, scale: float) -> float:
    """``|d - p| / |p|``; entries below ``1e-12 * scale`` are numerically zero
    and are measured against that floor instead."""
    return abs(d - p) / max(abs(p), 1e-12 * scale)


def aligned_states(model, N):
    """Bethe states with overlap vectors, ED vectors (sign fixed) and charge deviations."""
    basis = build_sector_basis(model, N)
    pairs = diagonalize(basis)
    out = []
    for s in enumerate_states(model, N):
        v = np.real(overlap_vector(model, s, basis.states))
        rep = compare_solution(pairs, s, threshold=1e-8, overlaps=v)
        u = pairs.vectors[:, rep.index]
        out.append((s, v, u * np.sign(u @ v), rep))
    return basis, pairs, out


# --------------------------------------------------------------------------- criteria

def test_criterion_1_gaudin_identities(capsys):
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst_c = worst_g = 0.0
    for real in ("trig", "hyp"):
        rep = kernel_check(kernel_build(real, [1.0]), rng.uniform(0.1, 100.0, (1000, 3)))
        worst_c, worst_g = max(worst_c, rep["constraint"]), max(worst_g, rep["gamma"])
    dt = time.perf_counter() - t0
    ok = worst_c <= 1e-10 and worst_g <= 1e-12 and dt < 1.0
    report(capsys, 1, ok, f"constraint {worst_c:.1e} (<=1e-10), X^2-Z^2-G {worst_g:.1e} (<=1e-12), {dt:.2f} s (<1 s)")


def test_criterion_2_closed_forms(capsys):
    dev = 0.0
    dk = model_dicke(0.0, [2.0], 1.0)
    sols = sorted(enumerate_states(dk, 1), key=lambda s: s.lambdas[0])
    ed = diagonalize(build_sector_basis(dk, 1)).charges[:, 0]
    for s, lam, r in zip(sols, (-1 - SQ2, -1 + SQ2), (-SQ2, SQ2)):
        dev = max(dev, abs(s.lambdas[0] - lam), abs(s.charges[0] - r), np.min(np.abs(ed - s.charges[0])))
    pp = model_pip(1.0, 0.0, [2.0])
    sols = sorted(enumerate_states(pp, 1), key=lambda s: s.lambdas[0])
    ed = diagonalize(build_sector_basis(pp, 1)).charges[:, 0]
    for s, lam in zip(sols, (1 - SQ2, 1 + SQ2)):
        dev = max(dev, abs(s.lambdas[0] - lam), abs(s.lambda0 - lam / 2),
                  abs(pip_lambda0(pp, s.lambdas, 1) - lam / 2),
                  abs(s.charges[0] - (0.25 - lam / 2)),
                  np.min(np.abs(ed - s.charges[0])))
    report(capsys, 2, dev <= 1e-12, f"max deviation {dev:.1e} (<=1e-12)")


@pytest.mark.parametrize("which,count", [("dicke", 26), ("pip", 11)])
def test_criterion_3_completeness(which, count, capsys):
    model, N = dicke_c3() if which == "dicke" else pip_c3()
    t0 = time.perf_counter()
    sols = enumerate_states(model, N)
    pairs = diagonalize(build_sector_basis(model, N))
    idx, dev = set(), 0.0
    for s in sols:
        d = np.abs(pairs.charges - s.charges[None, :]).max(axis=1)
        idx.add(int(np.argmin(d)))
        dev = max(dev, float(d.min()))
    dt = time.perf_counter() - t0
    ok = len(sols) == count and len(idx) == count and dev <= 1e-8 and dt < 30
    report(capsys, 3, ok, f"{which}: {len(sols)}/{count} states, bijective={len(idx) == count}, "
                          f"max charge deviation {dev:.1e} (<=1e-8), {dt:.1f} s (<30 s)")


@pytest.mark.parametrize("family", FAMILIES)
def test_criterion_4_determinant_permanent(family, capsys):
    worst, count = 0.0, 0
    for model, N in random_instances(family):
        basis = build_sector_basis(model, N)
        for s in enumerate_states(model, N):
            x = with_rapidities(s).rapidities
            d = [complex(overlap(model, s, st)) for st in basis.states]
            p = [complex(permanent_expansion(model, x, st)) for st in basis.states]
            scale = max(abs(v) for v in p)
            worst = max([worst] + [relative_deviation(a, b, scale) for a, b in zip(d, p)])
            count += len(p)
    report(capsys, 4, worst <= 1e-10, f"{family}: {count} overlaps, max relative deviation {worst:.1e} (<=1e-10)")


def test_criterion_5_norms(capsys):
    dev = 0.0
    for model, N in (dicke_c3(), pip_c3()):
        _, _, states = aligned_states(model, N)
        for s, v, u, _ in states:
            n = float(np.real(norm(model, s)))
            dev = max(dev, abs(n - v @ v) / (v @ v), abs(n - (u @ v) ** 2) / n)
    dk = model_dicke(0.0, [2.0], 1.0)
    ground = min(enumerate_states(dk, 1), key=lambda s: s.lambdas[0])
    closed = abs(norm(dk, ground) - (4 + 2 * SQ2)) / (4 + 2 * SQ2)
    ok = dev <= 1e-8 and closed <= 4 * np.finfo(float).eps
    report(capsys, 5, ok, f"Parseval/ED relative deviation {dev:.1e} (<=1e-8), m=1 closed form {closed:.1e}")


def test_criterion_6_form_factors(capsys):
    model, N = pip_c3()
    b2, _, up = aligned_states(model, N)
    b1, _, down = aligned_states(model, N - 1)
    norms_up = [float(np.real(norm(model, s))) for s, *_ in up]
    norms_dn = [float(np.real(norm(model, s))) for s, *_ in down]
    Sp = [build_operator(b1, f"S+:{k}", b2) for k in range(model.m)]
    bp = build_operator(b1, "b+", b2)
    S0 = [build_operator(b2, f"S0:{i}") for i in range(model.m)]
    nb = build_operator(b2, "nb")
    dev = sum_rule = 0.0
    for (a, _, ua, _), na in zip(up, norms_up):
        for (u, _, uu, _), nu in zip(down, norms_dn):
            sc = math.sqrt(na * nu)
            dev = max(dev, abs(float(np.real(ff_boson_pip(model, a, u))) / sc - ua @ bp @ uu))
            for k in range(model.m):
                dev = max(dev, abs(float(np.real(ff_raise_pip(model, a, u, k))) / sc - ua @ Sp[k] @ uu))
        for (b, _, ub, _), nbn in zip(up, norms_up):
            r = ff_number_pip(model, a, b)
            sc = 1.0 if r["normalized"] else math.sqrt(na * nbn)
            ref = np.array([ua @ S @ ub for S in S0])
            dev = max(dev, float(np.abs(np.asarray(r["S0"]) / sc - ref).max()), abs(r["nb"] / sc - ua @ nb @ ub))
            if a is b:
                sum_rule = max(sum_rule, abs(float(np.sum(r["S0"])) + r["nb"] - (N - float(model.s.sum()))))
    ok = dev <= 1e-7 and sum_rule <= 1e-8
    report(capsys, 6, ok, f"max |determinant - ED| {dev:.1e} (<=1e-7), sum rule {sum_rule:.1e} (<=1e-8)")


def test_criterion_7_hellmann_feynman(capsys):
    model, N = pip_c3()
    worst = 0.0
    for s in enumerate_states(model, N):
        d = lambda_kappa_derivative(model, N, s.lambdas)
        hi = solve_lambdas(replace(model, kappa=model.kappa + 1e-5), N, s.lambdas).lambdas
        lo = solve_lambdas(replace(model, kappa=model.kappa - 1e-5), N, s.lambdas).lambdas
        worst = max(worst, float(np.max(np.abs((hi - lo) / 2e-5 - d) / np.abs(d))))
    report(capsys, 7, worst <= 1e-5, f"max relative deviation {worst:.1e} (<=1e-5)")


FIG1_PARTITIONS = ([6] + [0] * 11, [1] * 6 + [0] * 6, [3, 1, 1, 1] + [0] * 8, [0] + [1] * 6 + [0] * 5)


def test_criterion_8_figure1(capsys):
    model = model_dicke(1.0, np.arange(2.0, 13.0), -0.1)
    t0 = time.perf_counter()
    res0 = res1 = flagged = 0.0
    paths, complex_pair = 0, False
    for part in FIG1_PARTITIONS:
        start = solve_from_partition(model, 6, part)
        path = continuation_xi(model, 6, start)
        x0, x1 = path.rapidity_snapshots[0], path.rapidity_snapshots[-1]
        res0 = max(res0, xi_rg_residual(model, x0, 0.0))
        res1 = max(res1, xi_rg_residual(model, x1, 1.0), xi_endpoint_xxz(model, x1)[2])
        flagged = max(flagged, path.flagged_fraction)
        complex_pair |= bool(np.any(np.abs(x1.imag) > 1e-6))
        paths += 1
    dt = time.perf_counter() - t0
    ok = paths >= 3 and res0 <= 1e-8 and res1 <= 1e-8 and flagged <= 0.05 and complex_pair and dt < 300
    report(capsys, 8, ok, f"{paths} paths, endpoint residuals {res0:.1e}/{res1:.1e} (<=1e-8), "
                          f"flagged {100 * flagged:.1f}% (<=5%), complex pair at xi=1: {complex_pair}, {dt:.1f} s")


def test_criterion_9_dual(capsys):
    rng = np.random.default_rng(9)
    worst_r = worst_c = 0.0
    models = 0
    while models < 20:
        m = int(rng.integers(2, 6))
        lev = np.sort(rng.uniform(0.3, 5.0, m))
        if m > 1 and np.min(np.diff(lev)) < 0.1:
            continue  # see the decisions ledger: binary64 floor for near-degenerate levels
        g = float(rng.choice([-1, 1]) * rng.uniform(0.2, 1.5))
        model = model_xxz("trig", lev, g)
        for N in range(m + 1):
            for s in enumerate_states(model, N):
                lh = dual_lambdas(s.lambdas, g, model)
                worst_r = max(worst_r, xxz_hole_residual(model, N, lh))
                worst_c = max(worst_c, float(np.abs(xxz_charge_eigenvalues_hole(model, lh)
                                                    - xxz_charge_eigenvalues(model, s.lambdas)).max()))
        models += 1
    ok = worst_r <= 1e-9 and worst_c <= 1e-10
    report(capsys, 9, ok, f"hole-form residual {worst_r:.1e} (<=1e-9), charge mismatch {worst_c:.1e} (<=1e-10)")


def test_criterion_10_gauge(capsys):
    worst = 0.0
    for family in ("trig", "hyp"):
        for model, N in random_instances(family):
            for s in enumerate_states(model, N):
                s = with_rapidities(s)
                r1 = default_gauge(model, s.rapidities)
                r2 = r1 + 3.7
                vals = [(complex(overlap_xxz_spin(model, s, occ, gauge_eps_r=r1)),
                         complex(overlap_xxz_spin(model, s, occ, gauge_eps_r=r2)))
                        for occ in itertools.combinations(range(model.m), N)]
                scale = max(abs(b) for _, b in vals)
                worst = max([worst] + [relative_deviation(a, b, scale) for a, b in vals])
    report(capsys, 10, worst <= 1e-9, f"max relative gauge dependence {worst:.1e} (<=1e-9)")


if __name__ == "__main__":
    runs = [(test_criterion_1_gaudin_identities, ()), (test_criterion_2_closed_forms, ()),
            (test_criterion_3_completeness, ("dicke", 26)), (test_criterion_3_completeness, ("pip", 11))]
    runs += [(test_criterion_4_determinant_permanent, (f,)) for f in FAMILIES]
    runs += [(fn, ()) for fn in (test_criterion_5_norms, test_criterion_6_form_factors,
                                 test_criterion_7_hellmann_feynman, test_criterion_8_figure1,
                                 test_criterion_9_dual, test_criterion_10_gauge)]
    for fn, args in runs:
        try:
            fn(*args, capsys=None)
        except AssertionError:
            pass
