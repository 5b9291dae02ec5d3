"""Rapidity and Lambda-space solvers, enumeration and xi-continuation.

Two independent routes are provided:

* rapidity Newton on the Richardson-Gaudin equations (all three families, plus
  the xi-deformed Dicke equations), with continuation in coupling or xi;
* Newton on the closed quadratic systems in Lambda variables (spin 1/2), with
  a coupling ramp from weak-coupling seeds for complete enumeration.

All rapidity equations share one generic form handled by the compiled core,

``F_a = c0 + c1 x_a + c2/x_a + sum_i w_i W(eps_i, x_a) + sigma sum_{b != a} W(x_b, x_a)``,

``W(u, v) = (p + q u v + r (u + v)) / (u - v)``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import mpmath
import numpy as np

from . import _backend
from .errors import (BadPartition, DimensionMismatch, IncompleteEnumeration, InputError,
                     NoConvergence, NonrealLambda, PathStalled, PoleCollision, RootFindingFailure,
                     SeedDimensionMismatch, SpinNotHalf, WrongVariant, ZeroCoupling)
from .kernels import Realization, kernel_build, kernel_Z, z_matrix
from .models import (ModelSpec, Variant, charge_eigenvalues, level_z, model_xxz, occupation_patterns,
                     pip_lambda0, sector_dimension)


# --------------------------------------------------------------------------- config and results

@dataclass(frozen=True)
class SolveConfig:
    newton_tol: float = 1e-12
    max_iter: int = 200
    max_halvings: int = 30
    xi_step: float = 1e-3          # initial continuation step
    min_step: float = 1e-7
    max_step: float = 0.02
    shrink: float = 0.5
    grow: float = 1.5
    pole_guard: float = 1e-10
    seed_radius: float = 1e-3
    trust: float = 0.05            # allowed corrector displacement beyond the predictor motion
    cond_max: float = 1e12
    ramp_step: float = 0.05        # initial step of the coupling ramp in its [0, 1] parameter
    fd_jacobian: bool = False
    workers: Optional[int] = None  # None: RGBETHE_THREADS or 1

    def __post_init__(self):
        for name in ("newton_tol", "xi_step", "min_step", "max_step", "pole_guard", "seed_radius",
                     "trust", "cond_max", "ramp_step"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive")
        if not self.min_step < self.xi_step:
            raise InputError("min_step must be smaller than xi_step")
        if not (0 < self.shrink < 1 < self.grow):
            raise InputError("need 0 < shrink < 1 < grow")
        if self.max_iter < 1:
            raise InputError("max_iter must be positive")


@dataclass
class BetheSolution:
    model: ModelSpec
    N: int
    rapidities: Optional[np.ndarray]
    lambdas: np.ndarray
    lambda0: Optional[float] = None
    residual_rapidity: float = float("nan")
    residual_lambda: float = float("nan")
    charges: Optional[np.ndarray] = None
    converged: bool = True
    label: Optional[tuple] = None   # occupied levels of the weak-coupling seed, if any


@dataclass
class ContinuationPath:
    xi_samples: list = field(default_factory=list)
    rapidity_snapshots: list = field(default_factory=list)
    converged: list = field(default_factory=list)
    condition: list = field(default_factory=list)

    def append(self, xi, x, ok, cond):
        self.xi_samples.append(float(xi))
        self.rapidity_snapshots.append(np.array(x, dtype=complex))
        self.converged.append(bool(ok))
        self.condition.append(float(cond))

    @property
    def flagged_fraction(self) -> float:
        return 0.0 if not self.converged else 1.0 - sum(self.converged) / len(self.converged)


def _workers(config: SolveConfig) -> int:
    if config.workers is not None:
        return max(1, int(config.workers))
    try:
        return max(1, int(os.environ.get("RGBETHE_THREADS", "1")))
    except ValueError:
        return 1


# --------------------------------------------------------------------------- rapidity equations

def rg_args(model: ModelSpec, xi: Optional[float] = None, s0: float = 0.5) -> tuple:
    """Generic-form coefficients for the model's rapidity equations.

    ``xi`` selects the xi-deformed Dicke equations (boson replaced by a
    pseudo-deformed spin ``s0``); ``xi = 0`` is the plain Dicke system.
    """
    eps, s = model.eps, model.s
    if model.variant is Variant.DICKE:
        q = 0.0 if xi is None else float(xi) / s0
        return (eps, -s, model.eps0, -1.0, 0.0, 1.0, 2 * model.coupling ** 2, q, 0.0)
    if xi is not None:
        raise WrongVariant("xi-deformed equations are defined for the Dicke model")
    if model.variant is Variant.PIP:
        return (eps, s, model.kappa, 0.0, -model.eta0_sq, -1.0, 0.0, 0.0, 1.0)
    g = model.coupling
    if model.realization is Realization.TRIGONOMETRIC:
        return (eps, g * s, 1.0, 0.0, 0.0, -g, 1.0, 1.0, 0.0)
    return (eps, g * s, 1.0, 0.0, 0.0, -g, 0.0, 0.0, 1.0)


def _rg_scale(x, args) -> np.ndarray:
    """Per-equation sum of term magnitudes (for scale-aware convergence)."""
    lev, w, c0, c1, c2, sigma, p, q, r = args
    x = np.asarray(x, dtype=complex)
    sc = abs(c0) + np.abs(c1 * x) + (np.abs(c2 / x) if c2 else 0.0)
    sc = sc + np.abs(w[:, None] * (p + q * lev[:, None] * x[None, :] + r * (lev[:, None] + x[None, :]))
                     / (lev[:, None] - x[None, :])).sum(axis=0)
    if x.size > 1:
        d = x[:, None] - x[None, :]
        np.fill_diagonal(d, 1.0)
        t = np.abs(sigma * (p + q * x[:, None] * x[None, :] + r * (x[:, None] + x[None, :])) / d)
        np.fill_diagonal(t, 0.0)
        sc = sc + t.sum(axis=0)
    return np.maximum(sc, 1.0)


def _rg_fj(x, args, fd=False):
    F, J = _backend.rg_residual_jacobian(x, *args)
    if fd:
        h = 1e-7 * (1 + np.abs(x))
        J = np.empty_like(J)
        for k in range(x.size):
            e = np.zeros(x.size, complex)
            e[k] = h[k]
            J[:, k] = (_backend.rg_residual_jacobian(x + e, *args)[0] - F) / h[k]
    return F, J


def _pole_check(x, args, guard):
    lev, c2 = args[0], args[4]
    if x.size == 0:
        return
    d = np.abs(x[:, None] - lev[None, :]) if lev.size else np.full((x.size, 1), np.inf)
    if np.any(d < guard * np.maximum(1.0, np.abs(lev))[None, :]):
        raise PoleCollision("a rapidity entered the pole guard of a level")
    if c2 and np.any(np.abs(x) < guard):
        raise PoleCollision("a rapidity approached the x = 0 pole")
    if x.size > 1:
        dd = np.abs(x[:, None] - x[None, :])
        np.fill_diagonal(dd, np.inf)
        if np.any(dd < guard * np.maximum(1.0, np.abs(x))[:, None]):
            raise PoleCollision("two rapidities coincide")


def _rg_residual_precise(x, args) -> np.ndarray:
    """Generic rapidity residual in ``REFINE_DPS``-digit complex arithmetic."""
    lev, w, c0, c1, c2, sigma, p, q, r = args
    with mpmath.workdps(REFINE_DPS):
        X = [mpmath.mpc(complex(v)) for v in x]
        L = [mpmath.mpf(float(v)) for v in lev]
        W = [mpmath.mpf(float(v)) for v in w]
        c0, c1, c2, sigma, p, q, r = (mpmath.mpf(float(v)) for v in (c0, c1, c2, sigma, p, q, r))

        def kern(u, v):
            return (p + q * u * v + r * (u + v)) / (u - v)

        out = []
        for a, xa in enumerate(X):
            f = c0 + c1 * xa + (c2 / xa if c2 else 0)
            f += mpmath.fsum(wi * kern(li, xa) for li, wi in zip(L, W))
            f += sigma * mpmath.fsum(kern(xb, xa) for b, xb in enumerate(X) if b != a)
            out.append(complex(f))
    return np.array(out, dtype=complex)


def refine_rapidities(x, args, steps: int = 3) -> np.ndarray:
    """Iterative refinement of converged rapidities (extended-precision residual)."""
    x = np.array(x, dtype=complex)
    if x.size == 0:
        return x
    for _ in range(steps):
        F = _rg_residual_precise(x, args)
        _, J = _rg_fj(x, args)
        try:
            d = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(d)):
            break
        x = pair_conjugates(x + d)
        if float(np.max(np.abs(d) / (1 + np.abs(x)))) < 1e-17:
            break
    return x


def pair_conjugates(x, tol: float = 1e-6) -> np.ndarray:
    """Snap a nearly conjugate-symmetric rapidity set onto exact symmetry.

    Rapidities whose imaginary part is tiny are made real; every other one is
    matched with its nearest conjugate partner and the pair is averaged.
    Returns the input unchanged if no consistent pairing exists.
    """
    x = np.array(x, dtype=complex)
    n = x.size
    out = x.copy()
    used = np.zeros(n, bool)
    scale = np.maximum(1.0, np.abs(x))
    for a in range(n):
        if used[a]:
            continue
        if abs(x[a].imag) <= tol * scale[a]:
            out[a] = x[a].real
            used[a] = True
            continue
        cand = [b for b in range(n) if not used[b] and b != a]
        if not cand:
            return x
        b = min(cand, key=lambda b: abs(x[b] - np.conj(x[a])))
        if abs(x[b] - np.conj(x[a])) > tol * scale[a]:
            return x
        z = 0.5 * (x[a] + np.conj(x[b]))
        out[a], out[b] = z, np.conj(z)
        used[a] = used[b] = True
    return out


def _newton_rapidities(x0, args, config: SolveConfig, symmetrize=True):
    """Damped Newton. Returns (x, raw residual, converged, condition estimate)."""
    x = np.array(x0, dtype=complex)
    if x.size == 0:
        return x, 0.0, True, 1.0
    tol = config.newton_tol
    F, J = _rg_fj(x, args, config.fd_jacobian)
    nf = float(np.max(np.abs(F)))
    ok = False
    for _ in range(config.max_iter):
        if not np.isfinite(nf):
            break
        scaled = float(np.max(np.abs(F) / _rg_scale(x, args)))
        if nf <= tol or scaled <= tol:
            ok = True
            break
        try:
            dx = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            break
        rel = float(np.max(np.abs(dx) / (1 + np.abs(x))))
        if rel < 1e-14 and scaled < 1e-8:
            ok = True
            break
        lam = 1.0
        for _ in range(config.max_halvings):
            xn = x + lam * dx
            with np.errstate(all="ignore"):
                Fn, Jn = _rg_fj(xn, args, config.fd_jacobian)
            nn = float(np.max(np.abs(Fn)))
            if np.isfinite(nn) and nn < (1 - 1e-4 * lam) * nf:
                break
            lam *= 0.5
        else:
            ok = rel < 1e-10 and scaled < 1e-8
            break
        x, F, J, nf = xn, Fn, Jn, nn
    if ok and symmetrize:
        xs = pair_conjugates(x)
        if not np.array_equal(xs, x):
            Fs, Js = _rg_fj(xs, args)
            ns = float(np.max(np.abs(Fs)))
            if ns <= max(nf * 10, tol):
                x, F, J, nf = xs, Fs, Js, ns
    try:
        cond = float(np.linalg.cond(J)) if x.size else 1.0
    except np.linalg.LinAlgError:
        cond = float("inf")
    return x, nf, ok, cond


def lambdas_from_rapidities(model: ModelSpec, rapidities, check: bool = True) -> np.ndarray:
    """Lambda_i as symmetric sums over rapidities (real part, after a reality check)."""
    x = np.asarray(rapidities, dtype=complex).ravel()
    eps = model.eps
    if x.size == 0:
        return np.zeros(model.m)
    inf = ~np.isfinite(x)
    x = x[~inf]
    # limits of the kernel for a rapidity at infinity
    if model.variant is Variant.DICKE:
        lam = (1.0 / (eps[:, None] - x[None, :])).sum(axis=1) + 0j
    elif model.variant is Variant.PIP:
        lam = ((eps[:, None] + x[None, :]) / (eps[:, None] - x[None, :])).sum(axis=1) - inf.sum()
    else:
        lam = z_matrix(model.kernel(), eps, x).sum(axis=1) if x.size else np.zeros(model.m, complex)
        trig = model.realization is Realization.TRIGONOMETRIC
        lam = lam - inf.sum() * (eps if trig else 1.0)
    if check and np.any(np.abs(lam.imag) > 1e-9 * (1 + np.abs(lam.real))):
        raise NonrealLambda("rapidities are not conjugate-paired: Lambda has an imaginary part")
    return lam.real.copy()


def pip_lambda0_from_rapidities(model: ModelSpec, rapidities) -> float:
    x = np.asarray(rapidities, dtype=complex)
    val = complex(np.sum(model.eta0_sq / x)) if x.size else 0j
    if abs(val.imag) > 1e-9 * (1 + abs(val.real)):
        raise NonrealLambda("Lambda_0 has an imaginary part")
    return val.real


def _finish(model, N, x, lam, res_x, config, ok=True, label=None, lam0=None):
    if model.variant is Variant.PIP and lam0 is None:
        lam0 = pip_lambda0_from_rapidities(model, x) if x is not None else pip_lambda0(model, lam, N)
    sol = BetheSolution(model, N, x, np.asarray(lam, float), lam0, res_x, float("nan"),
                        charge_eigenvalues(model, lam, N), ok, label)
    if model.all_half:
        sol.residual_lambda = lambda_residual(model, N, lam)
    return sol


def solve_rapidities(model: ModelSpec, N: int, seed, config: SolveConfig = SolveConfig()) -> BetheSolution:
    """Newton solve of the rapidity equations from ``seed`` (N complex values)."""
    seed = np.asarray(seed, dtype=complex).ravel()
    if seed.size != N:
        raise SeedDimensionMismatch(f"seed has {seed.size} entries, N = {N}")
    if N == 0:
        return _finish(model, 0, seed, np.zeros(model.m), 0.0, config)
    args = rg_args(model)
    _pole_check(seed, args, config.pole_guard)
    x, res, ok, _ = _newton_rapidities(seed, args, config)
    _pole_check(x, args, config.pole_guard)
    if not ok:
        raise NoConvergence(f"rapidity Newton did not converge (residual {res:.3e})")
    lam = lambdas_from_rapidities(model, x)
    return _finish(model, N, x, lam, res, config)


def _poly_rows(pts, vals, n):
    rows = [[k * t ** (k - 1) - L * t ** k if k else -L for k in range(n)] for t, L in zip(pts, vals)]
    rhs = [-(n * t ** (n - 1) - L * t ** n) for t, L in zip(pts, vals)]
    return rows, rhs


def _heine_stieltjes(args, n, d_lev, d0):
    """Monic polynomial of ``n`` finite rapidities from its log-derivative data.

    The rapidity equations say ``A P'' + B P' = C P`` with known ``A, B`` and a
    polynomial ``C`` pinned by ``P'/P`` at the levels (``d_lev``), at zero
    (``d0``, only needed when ``c2 != 0``) and by its leading coefficient.
    Unlike the level rows this stays determined when ``n`` exceeds ``m``.
    Returns ``(roots, relative residual)``.
    """
    P = np.polynomial.polynomial
    lev, w, c0, c1, c2, sigma, p, q, r = args
    xf = np.array([0.0, 1.0]) if c2 else np.array([1.0])
    Q = P.polyfromroots(lev)
    h = np.array([p, 2 * r, q], dtype=float)
    K = float(np.sum(w)) + sigma * (n - 1)
    sw = np.zeros(1)
    for e, wi in zip(lev, w):
        sw = P.polyadd(sw, wi * P.polydiv(Q, [-e, 1.0])[0])
    Amat = P.polymul(-sigma * h, P.polymul(Q, xf))
    lin = np.array([c0 + r * K, c1 + q * K])
    Bmat = 2 * P.polysub(P.polyadd(P.polymul(P.polymul(xf, lin), Q), c2 * Q),
                         P.polymul(xf, P.polymul(h, sw)))
    nodes = np.concatenate([lev, [0.0]]) if c2 else np.asarray(lev, dtype=float)
    vals = P.polyval(nodes, Bmat) * np.concatenate([d_lev, [d0]] if c2 else [d_lev])
    V = np.vander(nodes, increasing=True)
    C = P.polyadd(np.linalg.solve(V, vals), (2 * n * c1 + sigma * q * n * (n - 1)) * P.polyfromroots(nodes))
    cols = []
    for k in range(n + 1):
        mono = np.zeros(k + 1)
        mono[k] = 1.0
        e = P.polyadd(P.polymul(Amat, P.polyder(mono, 2)), P.polymul(Bmat, P.polyder(mono)))
        cols.append(P.polysub(e, P.polymul(C, mono)))
    size = max(c.size for c in cols)
    M = np.array([np.pad(c, (0, size - c.size)) for c in cols]).T
    coef, *_ = np.linalg.lstsq(M[:, :n], -M[:, n], rcond=None)
    res = np.max(np.abs(M[:, :n] @ coef + M[:, n])) / (1.0 + np.max(np.abs(M)))
    return P.polyroots(np.concatenate([coef, [1.0]])), float(res)


def rapidities_from_lambdas(model: ModelSpec, N: int, lambdas, lambda0: Optional[float] = None,
                            config: SolveConfig = SolveConfig()) -> np.ndarray:
    """Recover the rapidities of a Lambda solution.

    Every family has ``Lambda_i = N z_i + b_i P'(eps_i)/P(eps_i)``, with ``z_i``
    the value of ``Z(eps_i, x)`` at ``x = inf`` and ``P`` the monic polynomial
    of the finite rapidities.  This is linear in the coefficients of ``P``;
    extra rows come from the Dicke sum rule or from (p+ip) ``Lambda_0``.  When
    the full-degree system is inconsistent, lower degrees are tried and the
    missing rapidities are returned as ``inf``.  Finite roots are polished by
    rapidity Newton.
    """
    lam = np.asarray(lambdas, dtype=float)
    if N == 0:
        return np.zeros(0, dtype=complex)
    eps = model.eps
    if model.variant is Variant.DICKE:
        z, b = np.zeros(model.m), np.ones(model.m)
    elif model.variant is Variant.PIP or model.realization is Realization.HYPERBOLIC:
        z, b = -np.ones(model.m), 2 * eps
    else:
        z, b = -eps, 1 + eps ** 2
    c = float(eps.mean())
    d = max(float(np.ptp(eps)), 1.0)
    pts = list((eps - c) / d)
    vals = list(d * (lam - N * z) / b)
    tol = 1e-8 * (1 + float(np.max(np.abs(lam))))
    best = None
    for n in range(N, -1, -1):
        if n == 0:
            if np.max(np.abs(np.array(vals))) <= tol:
                best = np.zeros(0, dtype=complex)
            break
        rows, rhs = _poly_rows(pts, vals, n)
        if model.variant is Variant.DICKE and n == N:
            tot = N * model.eps0 - 2 * model.coupling ** 2 * float(model.s @ lam)
            rows.append([0.0] * (n - 1) + [1.0])
            rhs.append(-(tot - N * c) / d)
        if model.variant is Variant.PIP:
            l0 = pip_lambda0(model, lam, N) if lambda0 is None else lambda0
            r0, y0 = _poly_rows([-c / d], [-d * l0 / model.eta0_sq], n)
            rows += r0
            rhs += y0
        A, y = np.array(rows), np.array(rhs)
        if A.shape[0] < n:
            lev, w, c0, c1, c2, sigma, p, q, r = rg_args(model)
            args = (lev, w, c0 + sigma * (N - n) * r, c1 + sigma * (N - n) * q, c2, sigma, p, q, r)
            d0 = -(pip_lambda0(model, lam, N) if lambda0 is None else lambda0) / model.eta0_sq if c2 else 0.0
            roots, res = _heine_stieltjes(args, n, (lam - N * z) / b, d0)
            if res <= 1e-9:
                best = roots
                break
            continue
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        if np.max(np.abs(A @ coef - y)) <= tol * (1 + np.max(np.abs(A))):
            best = c + d * np.roots(np.concatenate([[1.0], coef[::-1]]))
            break
    if best is None:
        raise RootFindingFailure("no polynomial of degree <= N reproduces Lambda")
    n_inf = N - best.size
    x = best
    if best.size:
        lev, w, c0, c1, c2, sigma, p, q, r = rg_args(model)
        args = (lev, w, c0 + sigma * n_inf * r, c1 + sigma * n_inf * q, c2, sigma, p, q, r)
        x, res, ok, _ = _newton_rapidities(pair_conjugates(best), args, config)
        if not ok:
            raise NoConvergence(f"rapidity polish from Lambda failed (residual {res:.3e})")
        x = refine_rapidities(x, args)
    back = lambdas_from_rapidities(model, x, check=False) + n_inf * z
    if np.max(np.abs(back - lam)) > 1e-7 * (1 + np.max(np.abs(lam))):
        raise RootFindingFailure("recovered rapidities do not reproduce Lambda")
    return np.concatenate([x, np.full(n_inf, complex(np.inf, 0.0))])


def with_rapidities(solution: BetheSolution, config: SolveConfig = SolveConfig()) -> BetheSolution:
    """Copy of a Lambda-only solution with rapidities attached."""
    if solution.rapidities is not None:
        return solution
    x = rapidities_from_lambdas(solution.model, solution.N, solution.lambdas, solution.lambda0, config)
    fin = x[np.isfinite(x)]
    F, _ = _rg_fj(fin, rg_args(solution.model)) if fin.size == x.size and x.size else (np.zeros(0), None)
    return replace(solution, rapidities=x, residual_rapidity=float(np.max(np.abs(F), initial=0.0)))


# --------------------------------------------------------------------------- Lambda systems

def _require_half(model):
    if not model.all_half:
        raise SpinNotHalf("the closed Lambda system needs all spins equal to 1/2")


def _lambda_fj(model: ModelSpec, N: int, lam):
    """Residual, Jacobian and per-row term scale of the quadratic system."""
    lam = np.asarray(lam)
    lam = lam.astype(complex if np.iscomplexobj(lam) else float)
    m = model.m
    zl = level_z(model)
    diff = lam[:, None] - lam[None, :]
    pair = (zl * diff).sum(axis=1)
    pair_scale = np.abs(zl * diff).sum(axis=1)
    if model.variant is Variant.DICKE:
        G2 = model.coupling ** 2
        de = model.eps - model.eps0
        F = G2 * lam ** 2 - N + lam * de - G2 * pair
        J = (G2 * zl).astype(lam.dtype)
        J[np.diag_indices(m)] = 2 * G2 * lam + de - G2 * zl.sum(axis=1)
        scale = G2 * lam ** 2 + N + np.abs(lam * de) + G2 * pair_scale
    elif model.variant is Variant.PIP:
        k, e2, eps = model.kappa, model.eta0_sq, model.eps
        tot = lam.sum() + 2 * k * N
        F = lam ** 2 + N * (m - N) + 2 * k * lam - tot - 2 * e2 * (lam + N) / eps - pair
        J = (zl - 1.0).astype(lam.dtype)
        J[np.diag_indices(m)] = 2 * lam + 2 * k - 1 - 2 * e2 / eps - zl.sum(axis=1)
        scale = lam ** 2 + N * (m - N) + np.abs(2 * k * lam) + abs(lam).sum() + abs(2 * k * N) \
            + np.abs(2 * e2 * (lam + N) / eps) + pair_scale
    else:
        g = model.coupling
        gam = model.kernel().gamma
        F = lam ** 2 - gam * N * (m - N) + (2 / g) * lam - pair
        J = zl.astype(lam.dtype)
        J[np.diag_indices(m)] = 2 * lam + 2 / g - zl.sum(axis=1)
        scale = lam ** 2 + N * (m - N) + np.abs(2 * lam / g) + pair_scale
    return F, J, np.maximum(scale, 1.0)


REFINE_DPS = 40


def _lambda_residual_mp(model: ModelSpec, N: int, L) -> np.ndarray:
    mp = mpmath.mpf
    e = np.array([mp(v) for v in model.levels], dtype=object)
    zl = level_z(model, precise=True)
    m = model.m
    pair = (zl * (L[:, None] - L[None, :])).sum(axis=1)
    if model.variant is Variant.DICKE:
        G2 = mp(model.coupling) ** 2
        return G2 * L * L - N + L * (e - mp(model.eps0)) - G2 * pair
    if model.variant is Variant.PIP:
        k, e2 = mp(model.kappa), mp(model.eta0_sq)
        return L * L + N * (m - N) + 2 * k * L - (L.sum() + 2 * k * N) - 2 * e2 * (L + N) / e - pair
    g = mp(model.coupling)
    return L * L - int(model.kernel().gamma) * N * (m - N) + (2 / g) * L - pair


def _lambda_residual_precise(model: ModelSpec, N: int, lam) -> np.ndarray:
    """Residual of the quadratic system evaluated in extended precision.

    The rows cancel large terms against each other; in binary64 this caps the
    attainable accuracy of Lambda well above the rounding of Lambda itself.
    """
    with mpmath.workdps(REFINE_DPS):
        L = np.array([mpmath.mpf(float(v)) for v in lam], dtype=object)
        return np.array([float(v) for v in _lambda_residual_mp(model, N, L)])


def precise_lambdas(model: ModelSpec, N: int, lam, steps: int = 6):
    """Lambda as mpf values, polished past binary64 at the current mpmath precision.

    Used when a determinant is so ill conditioned that the rounding of
    Lambda to double would dominate its error.  Inputs that are not close
    to a root are returned unchanged.
    """
    lam = np.asarray(lam, dtype=float)
    L = np.array([mpmath.mpf(float(v)) for v in lam], dtype=object)
    if lam.size == 0 or not model.all_half:
        return L
    _, J, _ = _lambda_fj(model, N, lam)
    start = L.copy()
    for _ in range(steps):
        F = _lambda_residual_mp(model, N, L)
        try:
            d = np.linalg.solve(J, -np.array([float(v) for v in F]))
        except np.linalg.LinAlgError:
            return start
        if not np.all(np.isfinite(d)):
            return start
        L = L + np.array([mpmath.mpf(float(v)) for v in d], dtype=object)
        if float(np.max(np.abs(d) / (1 + np.abs(lam)))) < mpmath.mp.eps * 10:
            break
    moved = max(float(abs(a - b)) / (1 + abs(float(b))) for a, b in zip(L, start))
    return L if moved < 1e-10 else start


def refine_lambdas(model: ModelSpec, N: int, lam, steps: int = 3) -> np.ndarray:
    """Iterative refinement: extended-precision residual, binary64 correction."""
    lam = np.array(lam, dtype=float)
    if lam.size == 0:
        return lam
    for _ in range(steps):
        F = _lambda_residual_precise(model, N, lam)
        _, J, _ = _lambda_fj(model, N, lam)
        try:
            d = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(d)):
            break
        lam = lam + d
        if float(np.max(np.abs(d) / (1 + np.abs(lam)))) < 1e-17:
            break
    return lam


def lambda_residual(model: ModelSpec, N: int, lam) -> float:
    """Max-norm residual of the quadratic Lambda system."""
    if model.m == 0:
        return 0.0
    F, _, _ = _lambda_fj(model, N, lam)
    return float(np.max(np.abs(F)))


def xxz_hole_residual(model: ModelSpec, N: int, lam_hole) -> float:
    """Residual of the hole-form system (coupling -g, M - N excitations)."""
    if model.variant is not Variant.XXZ:
        raise WrongVariant("hole representation exists only for spin models")
    flipped = replace(model, coupling=-model.coupling)
    return lambda_residual(flipped, model.capacity - N, lam_hole)


def _newton_lambdas(model, N, lam0, config: SolveConfig, info=None):
    """Damped Newton on the quadratic system; ``info`` collects iteration stats.

    Residuals are measured row by row against the size of the terms in that
    row, so a row whose terms are huge cannot pin the line search at its
    roundoff floor while another row still has room to improve.  The returned
    residual is the plain max-norm.
    """
    lam = np.array(lam0, dtype=float)
    F, J, sc = _lambda_fj(model, N, lam)
    tol = config.newton_tol
    stats = {"iterations": 0, "damped": False}
    if info is not None:
        info.update(stats)
        stats = info

    def scaled(F, sc):
        return float(np.max(np.abs(F) / sc)) if F.size else 0.0

    def done(flag):
        return lam, (float(np.max(np.abs(F))) if F.size else 0.0), flag

    nf = scaled(F, sc)
    for it in range(config.max_iter):
        stats["iterations"] = it
        if not np.isfinite(nf):
            return done(False)
        # push to the roundoff floor; a stall only counts once below tol
        if nf <= 1e-3 * tol:
            return done(True)
        try:
            d = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return done(nf <= tol)
        if float(np.max(np.abs(d) / (1 + np.abs(lam)))) < 1e-16:
            return done(nf <= tol)
        step = 1.0
        for _ in range(config.max_halvings):
            ln = lam + step * d
            Fn, Jn, scn = _lambda_fj(model, N, ln)
            nn = scaled(Fn, scn)
            if np.isfinite(nn) and nn < (1 - 1e-4 * step) * nf:
                break
            step *= 0.5
        else:
            return done(nf <= tol)
        if step < 1.0:
            stats["damped"] = True
        lam, F, J, sc, nf = ln, Fn, Jn, scn, nn
    return done(nf <= tol)


def solve_lambdas(model: ModelSpec, N: int, seed, config: SolveConfig = SolveConfig()) -> BetheSolution:
    """Newton solve of the quadratic Lambda system from a real seed."""
    _require_half(model)
    seed = np.asarray(seed, dtype=float).ravel()
    if seed.size != model.m:
        raise SeedDimensionMismatch(f"seed has {seed.size} entries for {model.m} levels")
    if N == 0:
        return _finish(model, 0, None, np.zeros(model.m), float("nan"), config)
    lam, res, ok = _newton_lambdas(model, N, seed, config)
    if not ok:
        raise NoConvergence(f"Lambda Newton did not converge (residual {res:.3e})")
    return _finish(model, N, None, refine_lambdas(model, N, lam), float("nan"), config)


# --------------------------------------------------------------------------- weak-coupling ramp

def _scaled_system(model: ModelSpec, N: int):
    """Weak-coupling-regular form of the quadratic system.

    Returns ``(fj, to_lambda, seed)``.  ``fj(t, y)`` gives residual and
    Jacobian for ``t`` in [0, 1]; at ``t = 0`` every occupation pattern ``S``
    is an exact, nondegenerate root ``seed(S)``; at ``t = 1`` the model is
    reached (or, for (p+ip), a large kappa from which a second stage starts).

    * Dicke: ``y = G^2 Lambda`` along ``G^2 -> t G^2``.
    * XXZ:   ``y = g Lambda`` along ``g -> t g``.
    * (p+ip): ``y = Lambda / kappa`` along ``1/kappa -> t / kappa_1``.
    """
    m = model.m
    zl = level_z(model)
    zsum = zl.sum(axis=1)
    if model.variant is Variant.DICKE:
        G2 = model.coupling ** 2
        de = model.eps - model.eps0

        def fj(t, y):
            c = t * G2
            F = y * y + y * de - c * N - c * (zl * (y[:, None] - y[None, :])).sum(axis=1)
            J = c * zl
            J[np.diag_indices(m)] = 2 * y + de - c * zsum
            return F, J
        return fj, (lambda y: y / G2), (lambda S: np.array([-de[i] if i in S else 0.0 for i in range(m)])), None
    if model.variant is Variant.XXZ:
        g = model.coupling
        gam = model.kernel().gamma

        def fj(t, y):
            c = t * g
            F = y * y - c * c * gam * N * (m - N) + 2 * y - c * (zl * (y[:, None] - y[None, :])).sum(axis=1)
            J = c * zl
            J[np.diag_indices(m)] = 2 * y + 2 - c * zsum
            return F, J
        return fj, (lambda y: y / g), (lambda S: np.array([-2.0 if i in S else 0.0 for i in range(m)])), None
    e2, eps = model.eta0_sq, model.eps
    scale = 1 + float(np.abs(zl).sum(axis=1).max()) + e2 / float(eps.min()) + N + m
    kappa1 = max(model.kappa, 4.0 * scale)

    def fj(t, y):
        tau = t / kappa1
        F = (y * y + tau * tau * N * (m - N) + 2 * y - tau * y.sum() - 2 * tau * N
             - 2 * e2 * tau * (y + tau * N) / eps - tau * (zl * (y[:, None] - y[None, :])).sum(axis=1))
        J = tau * (zl - 1.0)
        J[np.diag_indices(m)] = 2 * y + 2 - tau - 2 * e2 * tau / eps - tau * zsum
        return F, J
    return fj, (lambda y: y * kappa1), (lambda S: np.array([-2.0 if i in S else 0.0 for i in range(m)])), kappa1


def _newton_fj(fj, t, y, config: SolveConfig, info=None):
    """Damped Newton for ``fj(t, .)``; converged on residual or on a negligible step."""
    y = np.array(y, dtype=complex if np.iscomplexobj(y) else float)
    F, J = fj(t, y)
    nf = float(np.max(np.abs(F)))
    stats = info if info is not None else {}
    stats.update(iterations=0, damped=False)
    for it in range(config.max_iter):
        stats["iterations"] = it
        if not np.isfinite(nf):
            return y, False
        # rows are quadratic in y, so roundoff grows like |y|^2
        tol = config.newton_tol * (1.0 + float(np.max(np.abs(y)))) ** 2
        if nf <= tol:
            return y, True
        try:
            d = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return y, False
        if float(np.max(np.abs(d) / (1 + np.abs(y)))) < 1e-15:
            return y, nf <= 1e3 * tol
        step = 1.0
        for _ in range(config.max_halvings):
            yn = y + step * d
            Fn, Jn = fj(t, yn)
            nn = float(np.max(np.abs(Fn)))
            if np.isfinite(nn) and nn < (1 - 1e-4 * step) * nf:
                break
            step *= 0.5
        else:
            return y, nf <= 1e3 * tol
        if step < 1.0:
            stats["damped"] = True
        y, F, J, nf = yn, Fn, Jn, nn
    return y, False


def _extrapolate(hist, s_new):
    """Lagrange extrapolation through the last (up to three) accepted points."""
    pts = hist[-3:]
    out = 0.0
    for i, (si, li) in enumerate(pts):
        c = 1.0
        for j, (sj, _) in enumerate(pts):
            if j != i:
                c *= (s_new - sj) / (si - sj)
        out = out + c * li
    return out


def _track(fj, y, config: SolveConfig, t0: float = 0.0, t1: float = 1.0):
    """Follow a root of ``fj(t, .)`` from ``t0`` to ``t1``; returns y or None.

    Predictor: implicit tangent on the first step, then extrapolation of
    accepted points.  A step is kept only if Newton converges undamped in a
    few iterations and each component's correction is small next to the
    predicted motion; near a crossing with another branch the wrong root sits a full slope
    difference away from the prediction and is rejected.
    """
    y, ok = _newton_fj(fj, t0, y, config)
    if not ok:
        return None
    span = t1 - t0
    s, h = 0.0, config.ramp_step
    hist = [(0.0, y)]
    F, J = fj(t0, y)
    dt = 1e-7 * span
    try:
        slope = np.linalg.solve(J, -(fj(t0 + dt, y)[0] - F) / dt) * span
    except np.linalg.LinAlgError:
        return None
    while s < 1.0:
        h = min(h, 1.0 - s)
        sn = s + h
        pred = _extrapolate(hist, sn) if len(hist) >= 2 else y + h * slope
        info = {}
        cand, good = _newton_fj(fj, t0 + sn * span, pred, config, info)
        # componentwise: a large move in one Lambda must not hide a jump in another
        motion = np.abs(pred - y)
        corr = np.abs(cand - pred) if good else np.inf
        local = 1 + np.minimum(np.abs(y), np.abs(pred))
        allowed = np.minimum(0.05 * motion + 0.01 * float(motion.max()), 0.02 * local)
        allowed = allowed + 1e-9 * (1 + np.abs(y))
        if good and not info["damped"] and info["iterations"] <= 4 and np.all(corr <= allowed):
            s, y = sn, cand
            hist.append((s, y))
            h *= config.grow
        else:
            h *= config.shrink
            if h < 1e-12:
                return None
    return y


def _track_detour(fj, y, config: SolveConfig):
    """:func:`_track` on the real path, then on complex arcs if that stalls.

    Spurious roots of the quadratic systems can cross a physical branch on
    the real parameter axis, where the tracker stalls.  Off the axis the
    branches stay apart, so the path is bent to ``t + i b t (1 - t)``
    (above, then below) and the real end point is kept.
    """
    for bend in (0.0, 0.25, -0.25):
        if bend:
            def g(t, v, bend=bend):
                return fj(t + 1j * bend * t * (1 - t), v)
            out = _track(g, np.asarray(y, dtype=complex), config)
        else:
            out = _track(fj, y, config)
        if out is None:
            continue
        out = np.asarray(out)
        if np.iscomplexobj(out):
            if float(np.max(np.abs(out.imag))) > 1e-6 * (1 + float(np.max(np.abs(out.real)))):
                continue
            out = out.real.copy()
        return out
    return None


def _follow_pattern(model: ModelSpec, N: int, S, config: SolveConfig):
    """Lambda solution connected to occupation pattern ``S`` at weak coupling."""
    fj, to_lambda, seed, kappa1 = _scaled_system(model, N)
    y = _track_detour(fj, seed(S), config)
    if y is None:
        return None
    lam = to_lambda(y)
    if kappa1 is not None and kappa1 != model.kappa:
        # second stage, linear in kappa from kappa1 to the target
        dk = model.kappa - kappa1

        def fk(t, l):
            k = kappa1 + t * dk
            F, J, _ = _lambda_fj(replace(model, kappa=float(np.real(k))), N, l)
            if np.iscomplexobj(k) and k.imag:
                # kappa enters as 2 kappa (Lambda - N) and 2 kappa on the diagonal
                F = F + 2j * k.imag * (l - N)
                J = J + 2j * k.imag * np.eye(l.size)
            return F, J
        lam = _track_detour(fk, lam, config)
        if lam is None:
            return None
    lam, _, ok = _newton_lambdas(model, N, lam, config)
    return refine_lambdas(model, N, lam) if ok else None


def solve_pattern(model: ModelSpec, N: int, occupied, config: SolveConfig = SolveConfig()) -> BetheSolution:
    """The state whose weak-coupling limit excites the levels in ``occupied``."""
    _require_half(model)
    S = sorted({int(i) for i in occupied})
    if len(S) != N or any(not 0 <= i < model.m for i in S):
        raise BadPartition(f"need {N} distinct levels in [0, {model.m})")
    if N == 0:
        return _finish(model, 0, None, np.zeros(model.m), 0.0, config, label=())
    with np.errstate(all="ignore"):
        lam = _follow_pattern(model, N, set(S), config)
    if lam is None:
        raise NoConvergence(f"coupling ramp from pattern {S} failed")
    return _finish(model, N, None, lam, float("nan"), config, label=tuple(S))


def _distinct(lam, others, tol=1e-6):
    return all(np.max(np.abs(lam - o) / (1 + np.abs(o))) > tol for o in others)


def enumerate_states(model: ModelSpec, N: int, config: SolveConfig = SolveConfig()) -> List[BetheSolution]:
    """All eigenstates of the ``N`` sector via ramped Lambda-space Newton."""
    _require_half(model)
    dim = sector_dimension(model, N)
    if N == 0:
        return [_finish(model, 0, None, np.zeros(model.m), 0.0, config, label=())]
    if dim == 0:
        return []
    patterns = occupation_patterns(model, N)

    def run(S):
        try:
            with np.errstate(all="ignore"):
                return S, _follow_pattern(model, N, set(S), config)
        except (np.linalg.LinAlgError, FloatingPointError, ValueError):
            return S, None

    nw = _workers(config)
    if nw > 1:
        with ThreadPoolExecutor(max_workers=nw) as pool:
            results = list(pool.map(run, patterns))
    else:
        results = [run(S) for S in patterns]

    found, failures = [], []
    for S, lam in results:
        if lam is None:
            failures.append({"pattern": sorted(S), "reason": "ramp failed"})
            continue
        if not _distinct(lam, [f.lambdas for f in found]):
            failures.append({"pattern": sorted(S), "reason": "duplicate of another state"})
            continue
        sol = _finish(model, N, None, lam, float("nan"), config, label=tuple(sorted(S)))
        found.append(sol)
    if len(found) != dim:
        raise IncompleteEnumeration(f"found {len(found)} of {dim} states", found, failures)
    return found


# --------------------------------------------------------------------------- derivatives

def lambda_kappa_derivative(model: ModelSpec, N: int, lam) -> np.ndarray:
    """``d Lambda_i / d kappa`` for a (p+ip) solution, from the linearized system."""
    if model.variant is not Variant.PIP:
        raise WrongVariant("kappa derivative is defined for the (p+ip) model")
    _, J, _ = _lambda_fj(model, N, lam)
    rhs = -(2 * np.asarray(lam, float) - 2 * N)
    try:
        d = np.linalg.solve(J, rhs)
    except np.linalg.LinAlgError as exc:
        from .errors import LinearSystemSingular
        raise LinearSystemSingular(str(exc)) from None
    if np.linalg.cond(J) > 1e13:
        from .errors import LinearSystemSingular
        raise LinearSystemSingular("linearized Lambda system is numerically singular")
    return d


# --------------------------------------------------------------------------- dual

def dual_lambdas(lambdas, g: float, model: Optional[ModelSpec] = None) -> np.ndarray:
    """Hole-representation variables ``Lambda' = Lambda + 2/g``."""
    if model is not None and model.variant is not Variant.XXZ:
        raise WrongVariant("bosonic models have no hole vacuum")
    if g == 0:
        raise ZeroCoupling("g must be nonzero")
    return np.asarray(lambdas, dtype=float) + 2.0 / g


# --------------------------------------------------------------------------- residuals

def residuals(model: ModelSpec, solution: BetheSolution) -> dict:
    """Recompute both residuals from scratch."""
    out = {"residual_rapidity": float("nan"), "residual_lambda": float("nan")}
    if solution.rapidities is not None:
        x = np.asarray(solution.rapidities, dtype=complex)
        out["residual_rapidity"] = 0.0 if x.size == 0 else float(
            np.max(np.abs(_rg_fj(x, rg_args(model))[0])))
    if model.all_half:
        out["residual_lambda"] = lambda_residual(model, solution.N, solution.lambdas)
    return out


# --------------------------------------------------------------------------- contraction seeds

def secular_roots(model: ModelSpec, G: Optional[float] = None) -> np.ndarray:
    """Roots of ``(eps0 - x) - 2 G^2 sum_k s_k / (eps_k - x)``, sorted by real part."""
    if model.variant is not Variant.DICKE:
        raise WrongVariant("secular equation is defined for the Dicke model")
    G = model.coupling if G is None else G
    eps, s = model.eps, model.s
    full = np.poly1d([1.0])
    for e in eps:
        full = full * np.poly1d([-1.0, e])
    poly = np.poly1d([-1.0, model.eps0]) * full
    for k, e in enumerate(eps):
        others = np.poly1d([1.0])
        for j, e2 in enumerate(eps):
            if j != k:
                others = others * np.poly1d([-1.0, e2])
        poly = poly - 2 * G * G * s[k] * others
    try:
        roots = np.roots(poly.coeffs)
    except np.linalg.LinAlgError as exc:
        raise RootFindingFailure(str(exc)) from None
    if roots.size != model.m + 1 or not np.all(np.isfinite(roots)):
        raise RootFindingFailure("secular polynomial has the wrong number of roots")
    return roots[np.lexsort((roots.imag, roots.real))]


def _root_capacities(model: ModelSpec, roots) -> list:
    """Boson-like root (closest to eps0) is unbounded; the others hold 2 s_k."""
    poles = np.append(model.eps, model.eps0)
    order = np.argsort(poles)
    return [None if idx == model.m else int(round(2 * model.spins[idx])) for idx in order[:len(roots)]]


def parse_partition(spec) -> list:
    """Partition spec: list of ints or comma-separated string of multiplicities."""
    if isinstance(spec, str):
        try:
            return [int(t) for t in spec.replace(";", ",").split(",") if t.strip()]
        except ValueError:
            raise BadPartition(f"cannot parse partition {spec!r}") from None
    return [int(t) for t in spec]


def contraction_seed(model: ModelSpec, N: int, partition, config: SolveConfig = SolveConfig()) -> np.ndarray:
    """Seed rapidities from multiplicities on the secular roots (sorted ascending).

    A root carrying ``k > 1`` rapidities is split onto a circle of radius
    ``seed_radius * k`` at angles ``2 pi j / k``.
    """
    part = parse_partition(partition)
    roots = secular_roots(model)
    if len(part) != roots.size or any(k < 0 for k in part) or sum(part) != N:
        raise BadPartition(f"partition needs {roots.size} nonnegative entries summing to N = {N}")
    caps = _root_capacities(model, roots)
    for k, cap in zip(part, caps):
        if cap is not None and k > cap:
            raise BadPartition("partition exceeds the capacity of a level root")
    out = []
    for root, k in zip(roots, part):
        if k == 1:
            out.append(complex(root))
        elif k > 1:
            rad = config.seed_radius * k
            out.extend(root + rad * np.exp(2j * np.pi * j / k) for j in range(k))
    return np.array(out, dtype=complex)


def _hermite_seed(model, N, partition, G):
    """Cluster seeds on Hermite zeros, the small-coupling shape of a boson cluster."""
    roots = secular_roots(model, G)
    out = []
    for root, k in zip(roots, partition):
        if k == 1:
            out.append(complex(root))
        elif k > 1:
            h = np.polynomial.hermite.hermroots([0] * k + [1])
            out.extend(root + 1j * math.sqrt(2.0) * abs(G) * h)
    return np.array(out, dtype=complex)


def solve_from_partition(model: ModelSpec, N: int, partition, config: SolveConfig = SolveConfig()) -> BetheSolution:
    """Dicke solution reached from a secular-root partition.

    Newton is tried directly from :func:`contraction_seed`; if that fails the
    coupling is ramped up from a weak value with Hermite-shaped cluster seeds.
    """
    part = parse_partition(partition)
    seed = contraction_seed(model, N, part, config)
    if N == 0:
        return solve_rapidities(model, 0, seed, config)
    args = rg_args(model)
    x, res, ok, _ = _newton_rapidities(seed, args, config)
    if not ok:
        G = model.coupling
        t = 1e-2
        sub = replace(model, coupling=G * t)
        x, res, ok, _ = _newton_rapidities(_hermite_seed(model, N, part, G * t), rg_args(sub), config)
        while ok and t < 1.0:
            t = min(1.0, t * 1.3)
            x, res, ok, _ = _newton_rapidities(x, rg_args(replace(model, coupling=G * t)), config)
    if not ok:
        raise NoConvergence("could not converge the Dicke solution for this partition")
    _pole_check(x, args, config.pole_guard)
    lam = lambdas_from_rapidities(model, x)
    if model.all_half:
        lam = refine_lambdas(model, N, lam)
    sol = _finish(model, N, x, lam, res, config, label=tuple(part))
    return sol


# --------------------------------------------------------------------------- xi continuation

def _match_order(new, ref):
    """Reorder ``new`` to follow ``ref`` (greedy nearest neighbours)."""
    idx = list(range(len(new)))
    out = []
    for r in ref:
        j = min(idx, key=lambda j: abs(new[j] - r))
        out.append(new[j])
        idx.remove(j)
    return np.array(out, dtype=complex)


def _predict(hist, xi_next, x_cur):
    """Extrapolate the monic polynomial with the rapidities as roots."""
    if len(hist) < 2:
        return x_cur.copy()
    pts = hist[-3:]
    ts = np.array([t for t, _ in pts])
    cs = np.array([c for _, c in pts])
    deg = len(pts) - 1
    pred = np.array([np.polyval(np.polyfit(ts, cs[:, j], deg), xi_next) for j in range(cs.shape[1])])
    roots = np.roots(pred)
    if roots.size != x_cur.size or not np.all(np.isfinite(roots)):
        return x_cur.copy()
    return _match_order(roots, x_cur)


def continuation_xi(model: ModelSpec, N: int, start: BetheSolution, config: SolveConfig = SolveConfig(),
                    xi_start: float = 0.0, xi_end: float = 1.0, s0: float = 0.5) -> ContinuationPath:
    """Follow a Dicke eigenstate through the xi-deformed equations.

    Steps adapt between ``min_step`` and ``max_step``.  A step is rejected
    when Newton fails, a rapidity hits the pole guard, the Jacobian
    condition number exceeds ``cond_max``, or the corrector moves further
    than ``trust`` beyond the predictor motion.  When the step underflows,
    the window is bridged by extrapolation: the bridging samples are flagged
    unconverged and tracking resumes on the far side.
    """
    if model.variant is not Variant.DICKE:
        raise WrongVariant("xi continuation is defined for the Dicke model")
    if start.rapidities is None:
        raise InputError("start solution needs rapidities")
    x = np.array(start.rapidities, dtype=complex)
    if x.size != N:
        raise SeedDimensionMismatch("start solution has the wrong number of rapidities")
    path = ContinuationPath()
    direction = 1.0 if xi_end >= xi_start else -1.0
    args0 = rg_args(model, xi_start, s0)
    x, res, ok, cond = _newton_rapidities(x, args0, config)
    if not ok:
        raise NoConvergence("start solution does not satisfy the equations at the initial xi")
    path.append(xi_start, x, True, cond)
    if N == 0:
        path.append(xi_end, x, True, 1.0)
        return path
    xi = xi_start
    h = config.xi_step
    hist = [(xi, np.poly(x))]

    def attempt(xn, pred, x_ref):
        try:
            args = rg_args(model, xn, s0)
            _pole_check(pred, args, config.pole_guard)
            xc, r, good, c = _newton_rapidities(pred, args, config)
            if good:
                _pole_check(xc, args, config.pole_guard)
        except PoleCollision:
            return None
        if not good or c > config.cond_max:
            return None
        motion = np.max(np.abs(pred - x_ref))
        if np.max(np.abs(xc - pred)) > config.trust * (1 + np.max(np.abs(x_ref))) + 0.5 * motion:
            return None
        return xc, c

    while direction * (xi_end - xi) > 1e-15:
        h = min(h, abs(xi_end - xi))
        xn = xi + direction * h
        pred = _predict(hist, xn, x)
        got = attempt(xn, pred, x)
        if got is not None:
            x, cond = got
            xi = xn
            path.append(xi, x, True, cond)
            hist.append((xi, np.poly(x)))
            h = min(config.max_step, h * config.grow)
            continue
        h *= config.shrink
        if h >= config.min_step:
            continue
        # bridge a singular window by extrapolation
        bridged = False
        for width in (1e-5, 1e-4, 1e-3, 1e-2, 3e-2):
            width = min(width, abs(xi_end - xi))
            xf = xi + direction * width
            pred = _predict(hist, xf, x)
            got = attempt(xf, pred, pred)
            if got is None:
                continue
            nfill = max(1, int(round(width / config.xi_step)))
            for k in range(1, nfill):
                xm = xi + direction * width * k / (nfill + 0.0)
                path.append(xm, _predict(hist, xm, x), False, float("inf"))
            x, cond = got
            xi = xf
            path.append(xi, x, True, cond)
            hist = [(xi, np.poly(x))]
            h = config.xi_step
            bridged = True
            break
        if not bridged:
            raise PathStalled(f"continuation stalled at xi = {xi:.6g}", last_xi=xi, path=path)
    return path


def xi_rg_residual(model: ModelSpec, x, xi: float, s0: float = 0.5) -> float:
    """Max residual of the xi-deformed Dicke equations."""
    x = np.asarray(x, dtype=complex)
    if x.size == 0:
        return 0.0
    return float(np.max(np.abs(_rg_fj(x, rg_args(model, xi, s0))[0])))


def xi_endpoint_xxz(model: ModelSpec, x, xi: float = 1.0, s0: float = 0.5):
    """Map an xi-deformed Dicke solution onto a trigonometric spin model.

    The deformed boson becomes a spin ``s0`` at ``eta_0 -> infinity``; levels
    map to ``eta_i = -c eps_i`` and rapidities to ``y = -c x`` with
    ``c = sqrt(xi / (2 s0 G^2))`` and coupling ``g = 2 c G^2 / eps0``.
    Returns ``(xxz_model, y, residual)`` where the residual is evaluated with
    the trigonometric kernel directly:
    ``1 + g s0 y_a + g sum_i s_i Z(eta_i, y_a) - g sum_b Z(y_b, y_a)``.
    """
    if model.variant is not Variant.DICKE:
        raise WrongVariant("needs a Dicke model")
    G = model.coupling
    c = math.sqrt(xi / (2 * s0 * G * G))
    g = 2 * c * G * G / model.eps0
    xxz = model_xxz("trig", -c * model.eps, g, model.spins)
    kern = xxz.kernel()
    y = -c * np.asarray(x, dtype=complex)
    res = 0.0
    for a, ya in enumerate(y):
        f = 1 + g * s0 * ya
        f += g * sum(si * kernel_Z(kern, eta, ya) for si, eta in zip(xxz.spins, xxz.levels))
        f -= g * sum(kernel_Z(kern, yb, ya) for b, yb in enumerate(y) if b != a)
        res = max(res, abs(f))
    return xxz, y, res
