"""Model families, sector bookkeeping and charge eigenvalues in Lambda variables.

Three families are supported:

* ``XXZSpin`` -- Richardson-Gaudin spin model on a trigonometric or hyperbolic
  kernel with coupling ``g``.
* ``Dicke`` -- spins coupled to one boson of energy ``eps0`` with coupling ``G``.
* ``PipBoson`` -- the extended (p+ip) pairing model with boson parameters
  ``eta0_sq`` and ``kappa``.

Lambda conventions (rapidities ``x``):

* Dicke: ``Lambda_i = sum_a 1/(eps_i - x_a)``
* PipBoson: ``Lambda_i = sum_a (eps_i + x_a)/(eps_i - x_a)``, ``Lambda_0 = sum_a eta0_sq/x_a``
* XXZSpin: ``Lambda_i = sum_a Z(eps_i, x_a)``
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Optional, Sequence

import mpmath
import numpy as np

from .errors import (DimensionMismatch, DuplicateLevel, InputError, NonpositiveEta0,
                     NonpositiveLevel, WrongVariant, ZeroCoupling)
from .kernels import COINCIDENCE_TOL, GaudinKernel, Realization, kernel_build, z_matrix


class Variant(str, Enum):
    XXZ = "xxz"
    DICKE = "dicke"
    PIP = "pip"


@dataclass(frozen=True)
class ModelSpec:
    """Immutable description of one model instance."""

    variant: Variant
    levels: tuple
    spins: tuple
    coupling: float = 0.0
    eps0: Optional[float] = None
    eta0_sq: Optional[float] = None
    kappa: Optional[float] = None
    realization: Optional[Realization] = None

    @property
    def m(self) -> int:
        return len(self.levels)

    @property
    def eps(self) -> np.ndarray:
        return np.asarray(self.levels, dtype=float)

    @property
    def s(self) -> np.ndarray:
        return np.asarray(self.spins, dtype=float)

    @property
    def capacity(self) -> int:
        """Maximum number of spin excitations ``sum_i 2 s_i``."""
        return int(round(2 * sum(self.spins)))

    @property
    def all_half(self) -> bool:
        return all(abs(s - 0.5) < 1e-12 for s in self.spins)

    @property
    def eta0(self) -> float:
        return math.sqrt(self.eta0_sq)

    def kernel(self) -> GaudinKernel:
        if self.variant is Variant.XXZ:
            return kernel_build(self.realization, self.levels)
        if self.variant is Variant.PIP:
            return kernel_build(Realization.HYPERBOLIC, self.levels)
        raise WrongVariant("the Dicke model uses rational 1/(eps - x) kernels")


@dataclass(frozen=True)
class BasisState:
    """Product state: ``boson_count`` quanta and per-level spin excitations."""

    boson_count: int
    occupations: tuple

    @property
    def excitations(self) -> int:
        return self.boson_count + sum(self.occupations)

    @property
    def occupied(self) -> tuple:
        return tuple(i for i, n in enumerate(self.occupations) if n)


# --------------------------------------------------------------------------- constructors

def _spins(spins, m):
    if spins is None:
        return (0.5,) * m
    spins = tuple(float(s) for s in spins)
    if len(spins) != m:
        raise DimensionMismatch(f"{len(spins)} spins for {m} levels")
    for s in spins:
        if s <= 0 or abs(2 * s - round(2 * s)) > 1e-12:
            raise InputError(f"spin {s} is not a positive half-integer")
    return spins


def _distinct(levels, extra=()):
    pts = list(levels) + list(extra)
    for i, a in enumerate(pts):
        for b in pts[:i]:
            if abs(a - b) <= COINCIDENCE_TOL * max(1.0, abs(a), abs(b)):
                raise DuplicateLevel(f"levels {b!r} and {a!r} coincide")


def model_dicke(eps0: float, levels: Sequence[float], G: float, spins=None) -> ModelSpec:
    levels = tuple(float(e) for e in levels)
    _distinct(levels, (float(eps0),))
    if G == 0:
        raise ZeroCoupling("Dicke coupling G must be nonzero")
    return ModelSpec(Variant.DICKE, levels, _spins(spins, len(levels)), float(G), eps0=float(eps0))


def model_pip(eta0_sq: float, kappa: float, levels: Sequence[float], spins=None) -> ModelSpec:
    if eta0_sq <= 0:
        raise NonpositiveEta0("eta0_sq must be positive")
    levels = tuple(float(e) for e in levels)
    if any(e <= 0 for e in levels):
        raise NonpositiveLevel("(p+ip) levels must be positive")
    _distinct(levels)
    return ModelSpec(Variant.PIP, levels, _spins(spins, len(levels)), 0.0,
                     eta0_sq=float(eta0_sq), kappa=float(kappa))


def model_xxz(realization, levels: Sequence[float], g: float, spins=None) -> ModelSpec:
    real = Realization.parse(realization)
    levels = tuple(float(e) for e in levels)
    kernel_build(real, levels)  # validation only
    _distinct(levels)
    if g == 0:
        raise ZeroCoupling("XXZ coupling g must be nonzero")
    return ModelSpec(Variant.XXZ, levels, _spins(spins, len(levels)), float(g), realization=real)


# --------------------------------------------------------------------------- sectors

def spin_configurations(model: ModelSpec, k: int):
    """All occupation tuples with ``k`` spin excitations, lexicographic order."""
    caps = [int(round(2 * s)) for s in model.spins]
    out = []

    def rec(i, left, acc):
        if i == len(caps):
            if left == 0:
                out.append(tuple(acc))
            return
        for n in range(min(caps[i], left), -1, -1):
            acc.append(n)
            rec(i + 1, left - n, acc)
            acc.pop()

    rec(0, k, [])
    return sorted(out, reverse=True)


def sector_dimension(model: ModelSpec, N: int) -> int:
    if N < 0:
        raise InputError("N must be nonnegative")
    if model.variant is Variant.XXZ:
        return len(spin_configurations(model, N)) if N <= model.capacity else 0
    if model.all_half:
        return sum(math.comb(model.m, k) for k in range(min(N, model.m) + 1))
    return sum(len(spin_configurations(model, k)) for k in range(min(N, model.capacity) + 1))


def occupation_patterns(model: ModelSpec, N: int):
    """Occupied-level subsets labelling the states of a spin-1/2 sector."""
    if model.variant is Variant.XXZ:
        return [set(c) for c in combinations(range(model.m), N)]
    out = []
    for k in range(min(N, model.m) + 1):
        out.extend(set(c) for c in combinations(range(model.m), k))
    return out


# --------------------------------------------------------------------------- charges

def _as_lambdas(model, lambdas):
    lam = np.asarray(lambdas, dtype=float)
    if lam.shape != (model.m,):
        raise DimensionMismatch(f"expected {model.m} Lambda values, got shape {lam.shape}")
    return lam


def level_z(model: ModelSpec, precise: bool = False) -> np.ndarray:
    """Matrix of level-level Z values (zero diagonal), real.

    ``precise=True`` returns an object array of ``mpmath.mpf`` at the
    current working precision.
    """
    if precise:
        e = np.array([mpmath.mpf(v) for v in model.levels], dtype=object)
        d = e[:, None] - e[None, :]
        np.fill_diagonal(d, mpmath.mpf(1))
        if model.variant is Variant.DICKE:
            num = np.full(d.shape, mpmath.mpf(1), dtype=object)
        elif model.realization is Realization.TRIGONOMETRIC:
            num = 1 + e[:, None] * e[None, :]
        else:
            num = e[:, None] + e[None, :]
        out = num / d
        np.fill_diagonal(out, mpmath.mpf(0))
        return out
    if model.variant is Variant.DICKE:
        e = model.eps
        d = e[:, None] - e[None, :]
        np.fill_diagonal(d, np.inf)
        return 1.0 / d
    return z_matrix(model.kernel(), model.eps, model.eps).real


def pip_lambda0(model: ModelSpec, lambdas, N: int) -> float:
    """``Lambda_0`` from the linear constraint ``2 Lambda_0 = sum Lambda_i + 2 kappa N``."""
    return 0.5 * float(np.sum(lambdas)) + model.kappa * N


def charge_eigenvalues(model: ModelSpec, lambdas, N: int | None = None) -> np.ndarray:
    """Eigenvalues of the conserved charges ``R_i`` given the Lambda variables.

    The expressions carry explicit spin weights ``s_i``; for spin 1/2 they
    reduce to the usual closed forms.
    """
    lam = _as_lambdas(model, lambdas)
    s = model.s
    zl = level_z(model)
    if model.variant is Variant.DICKE:
        G2 = model.coupling ** 2
        return s * ((model.eps - model.eps0) + 2 * G2 * lam - 2 * G2 * (zl @ s))
    if model.variant is Variant.PIP:
        return s * (-model.kappa - lam + model.eta0_sq / model.eps + zl @ s)
    return xxz_charge_eigenvalues(model, lam)


def xxz_charge_eigenvalues(model: ModelSpec, lambdas) -> np.ndarray:
    """Particle-representation eigenvalues ``s_i (-1 - g Lambda_i + g sum_k Z_ik s_k)``."""
    if model.variant is not Variant.XXZ:
        raise WrongVariant("xxz_charge_eigenvalues needs an XXZ model")
    lam = _as_lambdas(model, lambdas)
    g, s = model.coupling, model.s
    return s * (-1 - g * lam + g * (level_z(model) @ s))


def xxz_charge_eigenvalues_hole(model: ModelSpec, lambdas_hole) -> np.ndarray:
    """Hole-representation eigenvalues ``s_i (1 - g Lambda'_i + g sum_k Z_ik s_k)``."""
    if model.variant is not Variant.XXZ:
        raise WrongVariant("xxz_charge_eigenvalues_hole needs an XXZ model")
    lam = _as_lambdas(model, lambdas_hole)
    g, s = model.coupling, model.s
    return s * (1 - g * lam + g * (level_z(model) @ s))


# --------------------------------------------------------------------------- JSON

_KEYS = {
    "dicke": {"model", "levels", "spins", "coupling", "eps0", "N"},
    "pip": {"model", "levels", "spins", "coupling", "eta0_sq", "kappa", "N"},
    "xxz": {"model", "levels", "spins", "coupling", "realization", "N"},
}


def _num(d, key, required=True):
    if key not in d:
        if required:
            raise InputError(f"missing key {key!r}")
        return None
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InputError(f"{key!r} must be a number")
    return float(v)


def model_from_dict(d: dict):
    """Parse the model schema; returns ``(model, N)`` with ``N`` possibly None."""
    if not isinstance(d, dict):
        raise InputError("model file must hold a JSON object")
    kind = d.get("model")
    if kind not in _KEYS:
        raise InputError(f"'model' must be one of {sorted(_KEYS)}")
    unknown = set(d) - _KEYS[kind]
    if unknown:
        raise InputError(f"unknown keys for {kind} model: {sorted(unknown)}")
    levels = d.get("levels")
    if not isinstance(levels, list) or not levels or not all(
            isinstance(e, (int, float)) and not isinstance(e, bool) for e in levels):
        raise InputError("'levels' must be a nonempty list of numbers")
    spins = d.get("spins")
    if spins is not None and (not isinstance(spins, list) or not all(
            isinstance(s, (int, float)) and not isinstance(s, bool) for s in spins)):
        raise InputError("'spins' must be a list of numbers")
    N = d.get("N")
    if N is not None and (isinstance(N, bool) or not isinstance(N, int) or N < 0):
        raise InputError("'N' must be a nonnegative integer")
    if kind == "dicke":
        model = model_dicke(_num(d, "eps0"), levels, _num(d, "coupling"), spins)
    elif kind == "pip":
        model = model_pip(_num(d, "eta0_sq"), _num(d, "kappa"), levels, spins)
    else:
        real = d.get("realization", "trig")
        try:
            Realization.parse(real)
        except ValueError as exc:
            raise InputError(str(exc)) from None
        model = model_xxz(real, levels, _num(d, "coupling"), spins)
    return model, N


def model_to_dict(model: ModelSpec, N: int | None = None) -> dict:
    d = {"model": model.variant.value, "levels": list(model.levels), "spins": list(model.spins)}
    if model.variant is Variant.DICKE:
        d.update(coupling=model.coupling, eps0=model.eps0)
    elif model.variant is Variant.PIP:
        d.update(eta0_sq=model.eta0_sq, kappa=model.kappa)
    else:
        d.update(coupling=model.coupling, realization=model.realization.value)
    if N is not None:
        d["N"] = int(N)
    return d


def load_model(path):
    """Read a model JSON file; returns ``(model, N)``."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"malformed JSON in {path}: {exc}") from None
    return model_from_dict(data)
