"""Gaudin-algebra realizations.

Two antisymmetric kernels are provided, each with its constant ``gamma``
(the value of ``X(u, v)**2 - Z(u, v)**2``):

``trig``
    ``X = sqrt(1+u^2) sqrt(1+v^2) / (u-v)``, ``Z = (1+uv)/(u-v)``, gamma = +1.
``hyp``
    ``X = 2 sqrt(u) sqrt(v) / (u-v)``, ``Z = (u+v)/(u-v)``, gamma = -1.

Square roots are taken per argument with the principal branch, so a
rapidity-dependent factor always factorizes out of a column of X values.
All functions accept complex arguments.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import mpmath
import numpy as np

from .errors import CoincidentArguments, DuplicateParameter, NonpositiveParameter

COINCIDENCE_TOL = 1e-12


class Realization(str, Enum):
    TRIGONOMETRIC = "trig"
    HYPERBOLIC = "hyp"

    @classmethod
    def parse(cls, value) -> "Realization":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"trig": cls.TRIGONOMETRIC, "trigonometric": cls.TRIGONOMETRIC,
                   "hyp": cls.HYPERBOLIC, "hyperbolic": cls.HYPERBOLIC}
        if key not in aliases:
            raise ValueError(f"unknown realization {value!r}")
        return aliases[key]


@dataclass(frozen=True)
class GaudinKernel:
    realization: Realization
    parameters: tuple
    gamma: float

    @property
    def n(self) -> int:
        return len(self.parameters)


def kernel_build(realization, parameters: Iterable[float]) -> GaudinKernel:
    """Validate level parameters and attach the realization constant."""
    real = Realization.parse(realization)
    params = tuple(float(p) for p in parameters)
    for i, a in enumerate(params):
        for b in params[:i]:
            if abs(a - b) <= COINCIDENCE_TOL * max(1.0, abs(a), abs(b)):
                raise DuplicateParameter(f"parameters {b!r} and {a!r} coincide")
    if real is Realization.HYPERBOLIC and any(p <= 0 for p in params):
        raise NonpositiveParameter("hyperbolic parameters must be positive")
    gamma = 1.0 if real is Realization.TRIGONOMETRIC else -1.0
    return GaudinKernel(real, params, gamma)


def _check_distinct(u, v):
    if abs(u - v) <= COINCIDENCE_TOL * max(1.0, abs(u), abs(v)):
        raise CoincidentArguments(f"kernel evaluated at coincident points {u!r}, {v!r}")


def weight(kernel_or_realization, u, sqrt=cmath.sqrt):
    """Per-argument factor f(u) with X(u, v) = f(u) f(v) / (u - v)."""
    real = getattr(kernel_or_realization, "realization", kernel_or_realization)
    real = Realization.parse(real)
    if real is Realization.TRIGONOMETRIC:
        return sqrt(1 + u * u)
    return math.sqrt(2.0) * sqrt(u) if sqrt is cmath.sqrt else sqrt(2) * sqrt(u)


def _z_num(real, u, v):
    return 1 + u * v if real is Realization.TRIGONOMETRIC else u + v


def kernel_X(kernel: GaudinKernel, u, v) -> complex:
    _check_distinct(u, v)
    r = kernel.realization
    return weight(r, u) * weight(r, v) / (u - v)


def kernel_Z(kernel: GaudinKernel, u, v) -> complex:
    _check_distinct(u, v)
    return _z_num(kernel.realization, u, v) / (u - v)


def weights(kernel: GaudinKernel, us) -> np.ndarray:
    """Vectorized :func:`weight` (principal branch)."""
    us = np.asarray(us, dtype=complex)
    if kernel.realization is Realization.TRIGONOMETRIC:
        return np.sqrt(1 + us * us)
    return np.sqrt(2.0) * np.sqrt(us)


def x_matrix(kernel: GaudinKernel, us, vs) -> np.ndarray:
    """Matrix ``X(us[a], vs[b])``; entries at coincident points are set to 0."""
    us = np.asarray(us, dtype=complex)
    vs = np.asarray(vs, dtype=complex)
    d = us[:, None] - vs[None, :]
    mask = np.abs(d) <= COINCIDENCE_TOL * np.maximum(1.0, np.maximum(np.abs(us)[:, None], np.abs(vs)[None, :]))
    d = np.where(mask, 1.0, d)
    out = weights(kernel, us)[:, None] * weights(kernel, vs)[None, :] / d
    return np.where(mask, 0.0, out)


def z_matrix(kernel: GaudinKernel, us, vs) -> np.ndarray:
    """Matrix ``Z(us[a], vs[b])``; entries at coincident points are set to 0."""
    us = np.asarray(us, dtype=complex)
    vs = np.asarray(vs, dtype=complex)
    d = us[:, None] - vs[None, :]
    mask = np.abs(d) <= COINCIDENCE_TOL * np.maximum(1.0, np.maximum(np.abs(us)[:, None], np.abs(vs)[None, :]))
    d = np.where(mask, 1.0, d)
    if kernel.realization is Realization.TRIGONOMETRIC:
        num = 1 + us[:, None] * vs[None, :]
    else:
        num = us[:, None] + vs[None, :]
    return np.where(mask, 0.0, num / d)


def kernel_check(kernel: GaudinKernel, sample_triples: Sequence[Sequence[float]], dps: int = 40) -> dict:
    """Maximum violation of the Gaudin constraint and of ``X^2 - Z^2 = gamma``.

    The identities involve cancellations between terms that grow like
    ``1/(u-v)^2``; in binary64 their absolute residual is bounded by roundoff
    of those terms, not by the algebra.  The headline numbers ``constraint``
    and ``gamma`` are therefore evaluated from the same formulas in
    ``dps``-digit arithmetic.  ``constraint_rel64`` and ``gamma_rel64`` give the
    binary64 residual divided by the largest term, which is the figure of
    merit for the floating-point kernels used elsewhere.
    """
    real = kernel.realization
    gam = kernel.gamma
    worst = {"constraint": 0.0, "gamma": 0.0, "constraint_rel64": 0.0, "gamma_rel64": 0.0,
             "samples": 0}
    with mpmath.workdps(dps):
        def mX(a, b):
            return weight(real, a, mpmath.sqrt) * weight(real, b, mpmath.sqrt) / (a - b)

        def mZ(a, b):
            return _z_num(real, a, b) / (a - b)

        for triple in sample_triples:
            u, v, w = (float(t) for t in triple)
            for a, b in ((u, v), (v, w), (u, w)):
                _check_distinct(a, b)
            mu, mv, mw = mpmath.mpf(u), mpmath.mpf(v), mpmath.mpf(w)
            c = abs(mX(mu, mv) * mX(mv, mw) - mX(mu, mw) * (mZ(mu, mv) + mZ(mv, mw)))
            g = abs(mX(mu, mv) ** 2 - mZ(mu, mv) ** 2 - gam)
            worst["constraint"] = max(worst["constraint"], float(c))
            worst["gamma"] = max(worst["gamma"], float(g))

            xuv, xvw, xuw = kernel_X(kernel, u, v), kernel_X(kernel, v, w), kernel_X(kernel, u, w)
            zuv, zvw = kernel_Z(kernel, u, v), kernel_Z(kernel, v, w)
            t1, t2 = xuv * xvw, xuw * (zuv + zvw)
            scale = max(abs(t1), abs(xuw * zuv), abs(xuw * zvw), 1.0)
            worst["constraint_rel64"] = max(worst["constraint_rel64"], abs(t1 - t2) / scale)
            gscale = max(abs(xuv) ** 2, abs(zuv) ** 2, 1.0)
            worst["gamma_rel64"] = max(worst["gamma_rel64"], abs(xuv * xuv - zuv * zuv - gam) / gscale)
            worst["samples"] += 1
    return worst
