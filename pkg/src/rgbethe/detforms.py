"""Determinant expressions for overlaps, norms and (p+ip) form factors.

Everything acts on unnormalized Bethe states:

* XXZ:    ``prod_a sum_i X(eps_i, x_a) S_i^+ |down>``
* Dicke:  ``prod_a (b^+ - G sum_i S_i^+ / (eps_i - x_a)) |0>``
* (p+ip): ``prod_a (b^+ - sum_i sqrt(eps_i) x_a / ((eps_i - x_a) eta0) S_i^+) |0>``

Overlaps are taken with orthonormal product states, so
``sum_basis |overlap|^2`` is the norm.  Matrices are built from Lambda
variables; rapidities enter only the XXZ gauge prefactor and the permanent
oracle.  A rapidity equal to ``inf`` stands for the limiting column with the
diverging per-column factor removed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import mpmath
import numpy as np

from . import _backend
from .errors import (GaugeCollision, SectorMismatch, SingularDual, SpinNotHalf, TooLarge,
                     WrongVariant)
from .kernels import COINCIDENCE_TOL, Realization, weights, x_matrix, z_matrix
from .models import BasisState, ModelSpec, Variant, level_z
from .solver import BetheSolution, lambda_kappa_derivative, precise_lambdas, rapidities_from_lambdas

PERMANENT_MAX_N = 12
SINGULAR_REL = 1e-13
PRECISE_COND = 1e4
PRECISE_DPS = 40


class FormulaId(str, Enum):
    OVERLAP_XXZ = "overlap_xxz"
    OVERLAP_DICKE = "overlap_dicke"
    OVERLAP_PIP = "overlap_pip"
    PERMANENT = "permanent"
    NORM_DICKE = "norm_dicke"
    NORM_PIP = "norm_pip"
    FF_RAISE_PIP = "ff_raise_pip"
    FF_BOSON_PIP = "ff_boson_pip"
    FF_NUMBER_PIP = "ff_number_pip"


@dataclass(frozen=True)
class DeterminantReport:
    value: complex
    matrix_dims: tuple
    conditioning: float
    formula_id: FormulaId


# --------------------------------------------------------------------------- helpers

class _Arith:
    """Array arithmetic in binary64 or in mpmath at the working precision."""

    def __init__(self, precise: bool):
        self.precise = precise

    def vec(self, a):
        a = np.asarray(a, dtype=float)
        if not self.precise:
            return a
        return np.array([mpmath.mpf(float(v)) for v in a.ravel()], dtype=object).reshape(a.shape)

    def num(self, v):
        return mpmath.mpf(float(v)) if self.precise else float(v)

    def sqrt(self, a):
        if not self.precise:
            return np.sqrt(a)
        a = np.asarray(a, dtype=object)
        return np.array([mpmath.sqrt(v) for v in a.ravel()], dtype=object).reshape(a.shape)

    def lambdas(self, model: ModelSpec, N: int, lam):
        if not self.precise:
            return np.asarray(lam, dtype=float)
        return precise_lambdas(model, N, lam)

    def z(self, model: ModelSpec):
        return level_z(model, precise=self.precise)

    def zero(self, n):
        return np.full((n, n), self.num(0.0), dtype=object if self.precise else float)


_F64 = _Arith(False)
_MP = _Arith(True)


def _offdiag(ctx: _Arith, num, e):
    """``num_ab / (e_a - e_b)`` with a zero diagonal."""
    d = e[:, None] - e[None, :]
    np.fill_diagonal(d, ctx.num(1.0))
    M = num / d
    np.fill_diagonal(M, ctx.num(0.0))
    return M


def _with_diag(M, diag):
    M = M.copy()
    M[np.diag_indices(M.shape[0])] = diag
    return M


def _pip_half(ctx: _Arith, model: ModelSpec, diag, idx=None):
    """Matrix with ``diag/2`` on the diagonal and ``sqrt(e_a e_b)/(e_a - e_b)`` off it."""
    e = ctx.vec(model.eps if idx is None else model.eps[list(idx)])
    if e.size == 0:
        return ctx.zero(0)
    M = _offdiag(ctx, ctx.sqrt(e[:, None] * e[None, :]), e)
    return _with_diag(M, diag / 2)


def _pip_base(ctx: _Arith, model: ModelSpec):
    e = ctx.vec(model.eps)
    return -ctx.z(model).sum(axis=1) - 2 * ctx.num(model.eta0_sq) / e + 2 * ctx.num(model.kappa)


def _cond(M) -> float:
    if M.size == 0:
        return 1.0
    with np.errstate(all="ignore"):
        c = float(np.linalg.cond(np.asarray(M, dtype=float)))
    return c if np.isfinite(c) else float("inf")


def _hadamard(M) -> float:
    """Hadamard bound on |det M|; the natural scale for singularity tests."""
    if M.size == 0:
        return 1.0
    return float(np.prod(np.maximum(np.linalg.norm(np.asarray(M, float), axis=1), 1e-300)))


def _dets(build):
    """Determinants of the matrices returned by ``build(ctx)``.

    Built and factorized in binary64 first; if any matrix is worse
    conditioned than ``PRECISE_COND`` the whole set is rebuilt from the same
    double inputs in ``PRECISE_DPS``-digit arithmetic, so that cancellations
    on the diagonal do not cost more digits than the inputs carry.
    Returns ``(dets, worst_condition, hadamard_bounds)``.
    """
    mats = build(_F64)
    conds = [_cond(M) for M in mats]
    worst = max(conds, default=1.0)
    bounds = [_hadamard(M) for M in mats]
    if worst <= PRECISE_COND:
        return [float(np.linalg.det(M)) if M.size else 1.0 for M in mats], worst, bounds
    with mpmath.workdps(PRECISE_DPS):
        out = []
        for M in build(_MP):
            out.append(float(mpmath.det(mpmath.matrix(M.tolist()))) if M.size else 1.0)
    return out, worst, bounds


def _check_dual(det, bound, fid):
    if abs(det) <= SINGULAR_REL * bound:
        raise SingularDual(f"{fid.value}: denominator determinant is numerically zero")


def _finish(rep: DeterminantReport, report: bool):
    if report:
        return rep
    v = complex(rep.value)
    return v.real if v.imag == 0 else v


def _need_half(model: ModelSpec):
    if not model.all_half:
        raise SpinNotHalf("determinant formulas are derived for spin-1/2 levels")


def _check_basis(model: ModelSpec, N: int, basis: BasisState):
    if len(basis.occupations) != model.m:
        raise SectorMismatch(f"basis state has {len(basis.occupations)} levels, model has {model.m}")
    if basis.excitations != N:
        raise SectorMismatch(f"basis state has {basis.excitations} excitations, solution has {N}")
    if model.variant is Variant.XXZ and basis.boson_count:
        raise SectorMismatch("spin models have no boson")
    for n, s in zip(basis.occupations, model.spins):
        if n < 0 or n > round(2 * s):
            raise SectorMismatch("occupation exceeds 2s")


def _same_model(a: BetheSolution, b: BetheSolution):
    if a.model != b.model:
        raise SectorMismatch("solutions belong to different models")


def normalized(value, norm_bra: float, norm_ket: float):
    """Matrix element between unit-normalized states."""
    return value / math.sqrt(norm_bra * norm_ket)


# --------------------------------------------------------------------------- permanent oracle

def _columns(model: ModelSpec, x: np.ndarray) -> np.ndarray:
    """Single-excitation amplitudes: rows are levels (plus the boson last)."""
    eps = model.eps
    fin = np.isfinite(x)
    xf = np.where(fin, x, 0.0)
    if model.variant is Variant.XXZ:
        kern = model.kernel()
        rows = x_matrix(kern, eps, xf)
        rows[:, ~fin] = -weights(kern, eps)[:, None]
        return rows
    d = eps[:, None] - xf[None, :]
    if model.variant is Variant.DICKE:
        rows = -model.coupling / d
        rows[:, ~fin] = 0.0
    else:
        root = np.sqrt(eps)[:, None]
        rows = -root * xf[None, :] / (d * model.eta0)
        rows[:, ~fin] = np.broadcast_to(root / model.eta0, (eps.size, int((~fin).sum())))
    return np.vstack([rows, np.ones((1, x.size))])


def _columns_precise(model: ModelSpec, x: np.ndarray) -> list:
    """:func:`_columns` with the pole factors in extended precision.

    Square-root weights stay binary64 (branch choices must match the
    determinant prefactors exactly; they only scale whole rows or columns).
    """
    eps = model.eps
    fin = np.isfinite(x)
    xf = np.where(fin, x, 0.0)
    e = [mpmath.mpf(float(v)) for v in eps]
    X = [mpmath.mpc(complex(v)) for v in xf]
    if model.variant is Variant.XXZ:
        kern = model.kernel()
        we, wx = weights(kern, eps), weights(kern, xf)

        def entry(i, c):
            if not fin[c]:
                return -mpmath.mpc(complex(we[i]))
            return mpmath.mpc(complex(we[i])) * mpmath.mpc(complex(wx[c])) / (e[i] - X[c])
    elif model.variant is Variant.DICKE:
        G = mpmath.mpf(model.coupling)

        def entry(i, c):
            return mpmath.mpc(0) if not fin[c] else -G / (e[i] - X[c])
    else:
        eta = mpmath.sqrt(mpmath.mpf(model.eta0_sq))

        def entry(i, c):
            if not fin[c]:
                return mpmath.sqrt(e[i]) / eta
            return -mpmath.sqrt(e[i]) * X[c] / ((e[i] - X[c]) * eta)
    rows = [[entry(i, c) for c in range(x.size)] for i in range(model.m)]
    rows.append([mpmath.mpc(1)] * x.size)
    return rows


def _ryser_precise(M: list):
    """Ryser's formula with Gray-code updates, in mpmath arithmetic."""
    n = len(M)
    if n == 0:
        return mpmath.mpc(1)
    sums = [mpmath.mpc(0)] * n
    total = mpmath.mpc(0)
    in_set = [False] * n
    sign = 1
    for k in range(1, 2 ** n):
        # consecutive Gray codes differ in the lowest set bit of k; |S| changes by one
        j = (k & -k).bit_length() - 1
        step = -1 if in_set[j] else 1
        in_set[j] = not in_set[j]
        for i in range(n):
            sums[i] += step * M[i][j]
        sign = -sign
        total += sign * mpmath.fprod(sums)
    return -total if n % 2 else total


def permanent_expansion(model: ModelSpec, rapidities, basis: BasisState, report: bool = False,
                        precise: bool = True):
    """Coefficient of an orthonormal product state by brute-force expansion.

    ``precise=True`` (default) evaluates the matrix entries and Ryser's
    alternating sum in ``PRECISE_DPS``-digit arithmetic; the binary64 path
    uses the compiled kernel and loses digits to cancellation when the
    coefficient is small next to individual terms.
    """
    x = np.asarray(rapidities, dtype=complex).ravel()
    N = x.size
    if N > PERMANENT_MAX_N:
        raise TooLarge(f"permanent expansion limited to N <= {PERMANENT_MAX_N}")
    _check_basis(model, N, basis)
    rows, factor = [], 1.0
    for i, n in enumerate(basis.occupations):
        if n:
            two_s = int(round(2 * model.spins[i]))
            rows += [i] * n
            # (S^+)^n |-s> = sqrt(n! (2s)! / (2s-n)!) |-s+n>
            factor *= math.sqrt(math.factorial(two_s) / math.factorial(two_s - n)
                                / math.factorial(n))
    rows += [model.m] * basis.boson_count
    factor /= math.sqrt(math.factorial(basis.boson_count))
    if not N:
        val = factor
    elif precise:
        with mpmath.workdps(PRECISE_DPS):
            cols = _columns_precise(model, x)
            val = factor * complex(_ryser_precise([cols[r] for r in rows]))
    else:
        val = factor * _backend.permanent(_columns(model, x)[rows, :])
    return _finish(DeterminantReport(val, (N,), float("nan"), FormulaId.PERMANENT), report)


# --------------------------------------------------------------------------- overlaps

def default_gauge(model: ModelSpec, rapidities=()) -> float:
    """A gauge point clear of every level and rapidity."""
    pts = [abs(e) for e in model.levels] + [abs(z) for z in rapidities if np.isfinite(z)]
    return 1.0 + 1.5 * max(pts + [1.0])


def overlap_xxz_spin(model: ModelSpec, solution: BetheSolution, occupied_set: Sequence[int],
                     gauge_eps_r: Optional[float] = None, relative: bool = False, report: bool = False):
    """Overlap with the spin-up set ``occupied_set`` through an auxiliary gauge level.

    ``relative=True`` drops the state-wide factor ``prod_a X(eps_r, x_a)``,
    which is the only place rapidities enter.
    """
    if model.variant is not Variant.XXZ:
        raise WrongVariant("overlap_xxz_spin needs an XXZ model")
    _need_half(model)
    occ = sorted(int(i) for i in occupied_set)
    N = solution.N
    if len(occ) != N or len(set(occ)) != N or any(not 0 <= i < model.m for i in occ):
        raise SectorMismatch(f"occupied set {occ} incompatible with N = {N}")
    x = None
    if not relative:
        x = solution.rapidities
        if x is None:
            x = rapidities_from_lambdas(model, N, solution.lambdas)
        x = np.asarray(x, dtype=complex)
    r = default_gauge(model, () if x is None else x) if gauge_eps_r is None else float(gauge_eps_r)
    pts = list(model.levels) + ([] if x is None else [z for z in x if np.isfinite(z)])
    for p in pts:
        if abs(r - p) <= COINCIDENCE_TOL * max(1.0, abs(r), abs(p)):
            raise GaugeCollision(f"gauge {r} coincides with a level or rapidity")
    kern = model.kernel()
    trig = kern.realization is Realization.TRIGONOMETRIC
    def build(ctx):
        lam = ctx.lambdas(model, N, solution.lambdas)[occ]
        e = ctx.vec(model.eps[occ])
        rr = ctx.num(r)
        w = ctx.sqrt(1 + e * e) if trig else ctx.sqrt(2 * e)
        X = _offdiag(ctx, w[:, None] * w[None, :], e)
        Z = _offdiag(ctx, (1 + e[:, None] * e[None, :]) if trig else (e[:, None] + e[None, :]), e)
        zr = ((1 + rr * e) if trig else (rr + e)) / (rr - e)
        return [_with_diag(X, lam - Z.sum(axis=1) + zr)]

    (det,), cond, _ = _dets(build) if N else ([1.0], 1.0, [1.0])
    pref = 1.0 / np.prod(x_matrix(kern, [r], model.eps[occ])[0]) if N else 1.0
    if x is not None and N:
        fin = np.isfinite(x)
        xr = x_matrix(kern, [r], np.where(fin, x, 0.0))[0]
        xr[~fin] = -weights(kern, [r])[0]
        pref = pref * np.prod(xr)
    return _finish(DeterminantReport(pref * det, (N,), cond, FormulaId.OVERLAP_XXZ), report)


def overlap_dicke(model: ModelSpec, solution: BetheSolution, basis: BasisState, report: bool = False):
    if model.variant is not Variant.DICKE:
        raise WrongVariant("overlap_dicke needs a Dicke model")
    _need_half(model)
    _check_basis(model, solution.N, basis)
    occ = list(basis.occupied)
    k = len(occ)
    def build(ctx):
        lam = ctx.lambdas(model, solution.N, solution.lambdas)[occ]
        e = ctx.vec(model.eps[occ])
        J = _offdiag(ctx, np.full((k, k), ctx.num(1.0), dtype=e.dtype), e)
        return [_with_diag(J, lam - J.sum(axis=1))]

    (det,), cond, _ = _dets(build) if k else ([1.0], 1.0, [1.0])
    val = math.sqrt(math.factorial(basis.boson_count)) * (-model.coupling) ** k * det
    return _finish(DeterminantReport(val, (k,), cond, FormulaId.OVERLAP_DICKE), report)


def overlap_pip(model: ModelSpec, solution: BetheSolution, basis: BasisState, report: bool = False):
    if model.variant is not Variant.PIP:
        raise WrongVariant("overlap_pip needs a (p+ip) model")
    _need_half(model)
    _check_basis(model, solution.N, basis)
    occ = list(basis.occupied)
    k = len(occ)
    n0 = basis.boson_count
    def build(ctx):
        lam = ctx.lambdas(model, solution.N, solution.lambdas)[occ]
        zl = ctx.z(model)[np.ix_(occ, occ)]
        return [_pip_half(ctx, model, lam - zl.sum(axis=1) - (n0 + 1), occ)]

    (det,), cond, _ = _dets(build) if k else ([1.0], 1.0, [1.0])
    pref = math.sqrt(math.factorial(n0)) * math.sqrt(float(np.prod(model.eps[occ]))) / (-model.eta0) ** k
    return _finish(DeterminantReport(pref * det, (k,), cond, FormulaId.OVERLAP_PIP), report)


def overlap(model: ModelSpec, solution: BetheSolution, basis: BasisState, **kw):
    """Dispatch to the family's determinant overlap."""
    if model.variant is Variant.DICKE:
        return overlap_dicke(model, solution, basis, **kw)
    if model.variant is Variant.PIP:
        return overlap_pip(model, solution, basis, **kw)
    _check_basis(model, solution.N, basis)
    return overlap_xxz_spin(model, solution, basis.occupied, **kw)


def overlap_vector(model: ModelSpec, solution: BetheSolution, states: Sequence[BasisState]) -> np.ndarray:
    """Determinant overlaps for a list of basis states (e.g. an ED sector basis)."""
    return np.array([overlap(model, solution, st) for st in states])


# --------------------------------------------------------------------------- norms

def _ratio_report(build, fid, prefactor):
    (top, bot), cond, bounds = _dets(build)
    _check_dual(bot, bounds[1], fid)
    return DeterminantReport(prefactor * top / bot, None, cond, fid)


def norm_dicke(model: ModelSpec, solution: BetheSolution, report: bool = False):
    if model.variant is not Variant.DICKE:
        raise WrongVariant("norm_dicke needs a Dicke model")
    _need_half(model)
    lam = np.asarray(solution.lambdas, float)

    def build(ctx):
        zl = ctx.z(model)
        base = (ctx.vec(model.eps) - ctx.num(model.eps0)) / ctx.num(model.coupling) ** 2 - zl.sum(axis=1)
        L = ctx.lambdas(model, solution.N, lam)
        return [_with_diag(zl, 2 * L + base), _with_diag(zl, L + base)]

    rep = _ratio_report(build, FormulaId.NORM_DICKE, math.factorial(solution.N))
    return _finish(_dims(rep, model.m, model.m), report)


def norm_pip(model: ModelSpec, solution: BetheSolution, report: bool = False):
    if model.variant is not Variant.PIP:
        raise WrongVariant("norm_pip needs a (p+ip) model")
    _need_half(model)
    lam = np.asarray(solution.lambdas, float)
    N = solution.N

    def build(ctx):
        base = _pip_base(ctx, model)
        L = ctx.lambdas(model, N, lam)
        return [_pip_half(ctx, model, 2 * L + base - 1), _pip_half(ctx, model, L + base - 1 + N)]

    rep = _ratio_report(build, FormulaId.NORM_PIP, math.factorial(N))
    return _finish(_dims(rep, model.m, model.m), report)


def _dims(rep: DeterminantReport, *dims) -> DeterminantReport:
    return DeterminantReport(rep.value, tuple(dims), rep.conditioning, rep.formula_id)


def norm(model: ModelSpec, solution: BetheSolution, **kw):
    if model.variant is Variant.DICKE:
        return norm_dicke(model, solution, **kw)
    if model.variant is Variant.PIP:
        return norm_pip(model, solution, **kw)
    raise WrongVariant("no determinant norm is implemented for spin models")


# --------------------------------------------------------------------------- (p+ip) form factors

def _shift_pair(model, sol_N, sol_Nm1):
    if model.variant is not Variant.PIP:
        raise WrongVariant("form factors are implemented for the (p+ip) model")
    _need_half(model)
    _same_model(sol_N, sol_Nm1)
    if sol_N.model != model:
        raise SectorMismatch("solutions do not belong to this model")
    if sol_N.N != sol_Nm1.N + 1:
        raise SectorMismatch(f"need N and N-1 excitations, got {sol_N.N} and {sol_Nm1.N}")
    return np.asarray(sol_N.lambdas, float), np.asarray(sol_Nm1.lambdas, float)


def ff_raise_pip(model: ModelSpec, sol_N: BetheSolution, sol_Nm1: BetheSolution, level_k: int,
                 report: bool = False):
    """``<N| S_k^+ |N-1>`` between unnormalized Bethe states."""
    la, lu = _shift_pair(model, sol_N, sol_Nm1)
    k = int(level_k)
    if not 0 <= k < model.m:
        raise SectorMismatch(f"level {k} out of range")
    N = sol_N.N
    keep = [i for i in range(model.m) if i != k]

    def build(ctx):
        base = _pip_base(ctx, model)
        zk = ctx.z(model)[:, k]
        La, Lu = ctx.lambdas(model, N, la), ctx.lambdas(model, N - 1, lu)
        top = _pip_half(ctx, model, (La + Lu + base - 1 + zk)[keep], keep)
        return [top, _pip_half(ctx, model, La + base - 1 + N)]

    pref = -model.eta0 / math.sqrt(model.eps[k]) * math.factorial(N)
    rep = _ratio_report(build, FormulaId.FF_RAISE_PIP, pref)
    return _finish(_dims(rep, model.m - 1, model.m), report)


def ff_boson_pip(model: ModelSpec, sol_N: BetheSolution, sol_Nm1: BetheSolution, report: bool = False):
    """``<N| b^+ |N-1>`` between unnormalized Bethe states."""
    la, lu = _shift_pair(model, sol_N, sol_Nm1)
    N = sol_N.N

    def build(ctx):
        base = _pip_base(ctx, model)
        La, Lu = ctx.lambdas(model, N, la), ctx.lambdas(model, N - 1, lu)
        return [_pip_half(ctx, model, La + Lu + base), _pip_half(ctx, model, La + base - 1 + N)]

    rep = _ratio_report(build, FormulaId.FF_BOSON_PIP, math.factorial(N))
    return _finish(_dims(rep, model.m, model.m), report)


def ff_number_pip(model: ModelSpec, sol_a: BetheSolution, sol_b: BetheSolution) -> dict:
    """``S_i^0`` and ``b^+ b`` elements within one sector.

    Diagonal (same state): expectation values in the normalized state,
    from the kappa-derivative of Lambda.  Off-diagonal: elements
    ``<a| . |b>`` between unnormalized states.  ``nb`` follows from
    conservation of ``b^+ b + sum_i S_i^0``.
    """
    if model.variant is not Variant.PIP:
        raise WrongVariant("form factors are implemented for the (p+ip) model")
    _need_half(model)
    _same_model(sol_a, sol_b)
    if sol_a.N != sol_b.N:
        raise SectorMismatch("number-operator elements need both states in one sector")
    N = sol_a.N
    la = np.asarray(sol_a.lambdas, float)
    lb = np.asarray(sol_b.lambdas, float)
    da = lambda_kappa_derivative(model, N, la) if N else np.zeros(model.m)
    same = sol_a is sol_b or np.max(np.abs(la - lb), initial=0.0) <= 1e-10 * (1 + np.max(np.abs(la), initial=0.0))
    if same:
        s0 = 0.5 * (-1 - da)
        nb = N - float(model.s.sum()) - float(s0.sum())
        return {"S0": s0, "nb": nb, "diagonal": True, "normalized": True, "conditioning": 1.0}
    m = model.m

    def build(ctx):
        base = _pip_base(ctx, model)
        La, Lb = ctx.lambdas(model, N, la), ctx.lambdas(model, N, lb)
        T = _pip_half(ctx, model, La + Lb + base - 1)
        minors = [np.delete(np.delete(T, k, 0), k, 1) for k in range(m)]
        return [_pip_half(ctx, model, Lb + base - 1 + N)] + minors

    dets, cond, bounds = _dets(build)
    _check_dual(dets[0], bounds[0], FormulaId.FF_NUMBER_PIP)
    acc = sum(da[k] * 0.5 * dets[k + 1] for k in range(m))
    ovl = math.factorial(N) * acc / dets[0]
    s0 = -0.5 * (la - lb) * ovl
    return {"S0": s0, "nb": -float(s0.sum()), "diagonal": False, "normalized": False,
            "conditioning": cond}
