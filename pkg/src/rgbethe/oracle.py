"""Exact diagonalization inside a fixed excitation-number sector.

Operators are identified by short strings:

``"S0:i"``, ``"S+:i"``, ``"S-:i"``  spin generators of level ``i`` (0-based)
``"b+"``, ``"b-"``, ``"nb"``        boson creation, annihilation, number
``"R:i"``                           conserved charge of level ``i``
``"H"``                             model Hamiltonian
``"Ntot"``                          ``b+b + sum_i S0_i``
``"I"``                             identity

Raising operators map the ``N`` sector to ``N+1`` and come back as
rectangular matrices of shape ``(dim(N+1), dim(N))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatch, EigensolverFailure, NoMatch, UnknownOperator
from .kernels import x_matrix, z_matrix
from .models import BasisState, ModelSpec, Variant, sector_dimension, spin_configurations

MAX_DIM = 5000

# An action maps a basis state to a list of (state, amplitude).
Action = Callable[[BasisState], List[Tuple[BasisState, float]]]


@dataclass
class SectorBasis:
    model: ModelSpec
    N: int
    states: list
    index: dict = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.states)


def build_sector_basis(model: ModelSpec, N: int) -> SectorBasis:
    """Product basis with ``N`` excitations, spin excitations ascending."""
    states = []
    if model.variant is Variant.XXZ:
        if N <= model.capacity:
            states = [BasisState(0, occ) for occ in spin_configurations(model, N)]
    else:
        for k in range(min(N, model.capacity) + 1):
            states.extend(BasisState(N - k, occ) for occ in spin_configurations(model, k))
    if len(states) > MAX_DIM:
        raise DimensionMismatch(f"sector dimension {len(states)} exceeds the oracle cap {MAX_DIM}")
    return SectorBasis(model, N, states, {s: i for i, s in enumerate(states)})


# --------------------------------------------------------------------------- elementary actions

def _spin(model, i):
    return model.spins[i]


def _s0(model, i) -> Action:
    s = _spin(model, i)
    return lambda st: [(st, st.occupations[i] - s)]


def _sp(model, i) -> Action:
    cap = int(round(2 * _spin(model, i)))

    def act(st):
        n = st.occupations[i]
        if n >= cap:
            return []
        occ = list(st.occupations)
        occ[i] += 1
        return [(BasisState(st.boson_count, tuple(occ)), math.sqrt((cap - n) * (n + 1)))]
    return act


def _sm(model, i) -> Action:
    cap = int(round(2 * _spin(model, i)))

    def act(st):
        n = st.occupations[i]
        if n == 0:
            return []
        occ = list(st.occupations)
        occ[i] -= 1
        return [(BasisState(st.boson_count, tuple(occ)), math.sqrt(n * (cap - n + 1)))]
    return act


def _bp(st):
    return [(BasisState(st.boson_count + 1, st.occupations), math.sqrt(st.boson_count + 1))]


def _bm(st):
    if st.boson_count == 0:
        return []
    return [(BasisState(st.boson_count - 1, st.occupations), math.sqrt(st.boson_count))]


def _nb(st):
    return [(st, float(st.boson_count))]


def _compose(*acts: Action) -> Action:
    """Product ``acts[0] @ acts[1] @ ...`` (rightmost applied first)."""
    def act(st):
        cur = {st: 1.0}
        for a in reversed(acts):
            nxt: Dict[BasisState, float] = {}
            for s, amp in cur.items():
                for t, c in a(s):
                    nxt[t] = nxt.get(t, 0.0) + amp * c
            cur = nxt
        return list(cur.items())
    return act


def _lin(terms: Sequence[Tuple[float, Action]]) -> Action:
    def act(st):
        out: Dict[BasisState, float] = {}
        for coef, a in terms:
            if coef == 0:
                continue
            for t, c in a(st):
                out[t] = out.get(t, 0.0) + coef * c
        return list(out.items())
    return act


# --------------------------------------------------------------------------- model operators

def _charge(model: ModelSpec, i: int) -> Action:
    m = model.m
    s0, sp, sm = _s0(model, i), _sp(model, i), _sm(model, i)
    if model.variant is Variant.DICKE:
        G = model.coupling
        e = model.eps
        terms = [(model.eps0 - e[i], s0), (-G, _compose(sp, _bm)), (-G, _compose(sm, _bp))]
        for k in range(m):
            if k == i:
                continue
            c = -2 * G * G / (e[i] - e[k])
            terms += [(0.5 * c, _compose(sp, _sm(model, k))), (0.5 * c, _compose(sm, _sp(model, k))),
                      (c, _compose(s0, _s0(model, k)))]
        return _lin(terms)
    if model.variant is Variant.PIP:
        e = model.eps
        eta0 = model.eta0
        terms = [(eta0 / math.sqrt(e[i]), _compose(sp, _bm)), (eta0 / math.sqrt(e[i]), _compose(sm, _bp)),
                 (model.kappa - model.eta0_sq / e[i], s0), (1.0, _compose(s0, _nb))]
        for k in range(m):
            if k == i:
                continue
            x = math.sqrt(e[i] * e[k]) / (e[i] - e[k])
            z = (e[i] + e[k]) / (e[i] - e[k])
            terms += [(x, _compose(sp, _sm(model, k))), (x, _compose(sm, _sp(model, k))),
                      (z, _compose(s0, _s0(model, k)))]
        return _lin(terms)
    kern = model.kernel()
    X = x_matrix(kern, model.eps, model.eps).real
    Z = z_matrix(kern, model.eps, model.eps).real
    g = model.coupling
    terms = [(1.0, s0)]
    for k in range(m):
        if k == i:
            continue
        terms += [(0.5 * g * X[i, k], _compose(_sp(model, k), sm)), (0.5 * g * X[i, k], _compose(_sm(model, k), sp)),
                  (g * Z[i, k], _compose(s0, _s0(model, k)))]
    return _lin(terms)


def _ntot(model: ModelSpec) -> Action:
    return _lin([(1.0, _nb)] + [(1.0, _s0(model, i)) for i in range(model.m)])


def _hamiltonian(model: ModelSpec) -> Action:
    """Dicke: ``eps0 b+b + sum eps_i S0_i + G sum (S+_i b + S-_i b+)``; otherwise
    ``sum_i eps_i R_i``."""
    if model.variant is Variant.DICKE:
        G = model.coupling
        terms = [(model.eps0, _nb)]
        for i in range(model.m):
            terms += [(model.eps[i], _s0(model, i)), (G, _compose(_sp(model, i), _bm)),
                      (G, _compose(_sm(model, i), _bp))]
        return _lin(terms)
    return _lin([(model.eps[i], _charge(model, i)) for i in range(model.m)])


def _parse(model: ModelSpec, operator_id: str) -> Tuple[Action, int]:
    """Return the action and the excitation-number shift it produces."""
    oid = operator_id.strip()
    head, _, idx = oid.partition(":")
    if idx:
        try:
            i = int(idx)
        except ValueError:
            raise UnknownOperator(operator_id) from None
        if not 0 <= i < model.m:
            raise UnknownOperator(f"level index {i} out of range in {operator_id!r}")
        table = {"S0": (_s0, 0), "S+": (_sp, 1), "S-": (_sm, -1), "R": (_charge, 0)}
        if head not in table:
            raise UnknownOperator(operator_id)
        fn, shift = table[head]
        return fn(model, i), shift
    bosonic = model.variant is not Variant.XXZ
    table = {"I": (lambda st: [(st, 1.0)], 0), "H": (_hamiltonian(model), 0), "Ntot": (_ntot(model), 0)}
    if bosonic:
        table.update({"b+": (_bp, 1), "b-": (_bm, -1), "nb": (_nb, 0)})
    if oid not in table:
        raise UnknownOperator(operator_id)
    return table[oid]


def build_operator(basis: SectorBasis, operator_id: str, target: Optional[SectorBasis] = None) -> np.ndarray:
    """Dense matrix of an operator between ``basis`` and its image sector."""
    action, shift = _parse(basis.model, operator_id)
    if target is None:
        target = basis if shift == 0 else build_sector_basis(basis.model, basis.N + shift)
    elif target.N != basis.N + shift:
        raise DimensionMismatch(f"{operator_id} maps sector {basis.N} to {basis.N + shift}, not {target.N}")
    mat = np.zeros((target.dim, basis.dim))
    for col, st in enumerate(basis.states):
        for t, amp in action(st):
            row = target.index.get(t)
            if row is None:
                if abs(amp) > 0:
                    raise DimensionMismatch(f"{operator_id} leaves the target sector")
                continue
            mat[row, col] += amp
    return mat


def sector_leakage(basis: SectorBasis, operator_id: str = "H") -> float:
    """Largest amplitude an operator sends outside the sector (should be 0)."""
    action, shift = _parse(basis.model, operator_id)
    worst = 0.0
    for st in basis.states:
        for t, amp in action(st):
            if t.excitations != basis.N + shift:
                worst = max(worst, abs(amp))
    return worst


# --------------------------------------------------------------------------- diagonalization

@dataclass
class Eigenpairs:
    basis: SectorBasis
    energies: np.ndarray       # expectation of the operator that was requested
    vectors: np.ndarray        # columns, orthonormal, real
    charges: np.ndarray        # shape (dim, m): eigenvalue of R_i per state
    offdiag: float             # largest off-diagonal charge element after rotation


def diagonalize(basis: SectorBasis, hamiltonian_id: str = "H", seed: int = 12345) -> Eigenpairs:
    """Joint eigenbasis of the Hamiltonian and all charges.

    A random positive combination of the charges and the Hamiltonian splits
    degeneracies, so each returned vector is labelled by its charge tuple.
    """
    m = basis.model.m
    H = build_operator(basis, hamiltonian_id)
    Rs = [build_operator(basis, f"R:{i}") for i in range(m)]
    rng = np.random.default_rng(seed)
    coef = rng.uniform(0.5, 1.5, m + 1)
    scale = max(1.0, np.abs(H).max())
    C = coef[0] * H / scale + sum(c * R / max(1.0, np.abs(R).max()) for c, R in zip(coef[1:], Rs))
    C = 0.5 * (C + C.T)
    try:
        _, vecs = np.linalg.eigh(C)
    except np.linalg.LinAlgError as exc:
        raise EigensolverFailure(str(exc)) from None
    energies = np.einsum("ia,ij,ja->a", vecs, H, vecs)
    charges = np.array([np.einsum("ia,ij,ja->a", vecs, R, vecs) for R in Rs]).T.reshape(basis.dim, m)
    off = 0.0
    for M in Rs + [H]:
        D = vecs.T @ M @ vecs
        off = max(off, float(np.abs(D - np.diag(np.diag(D))).max(initial=0.0)))
    order = np.argsort(energies, kind="stable")
    return Eigenpairs(basis, energies[order], vecs[:, order], charges[order], off)


@dataclass
class MatchReport:
    index: int
    deviation: float
    angle: Optional[float] = None


def compare_solution(basis_or_pairs, bethe, threshold: float = 1e-6, overlaps=None) -> MatchReport:
    """Locate the ED state whose charge tuple is closest to ``bethe.charges``.

    ``overlaps`` (optional) are basis-state components of the Bethe vector in
    the basis ordering; the angle to the ED vector is then reported.
    """
    pairs = basis_or_pairs if isinstance(basis_or_pairs, Eigenpairs) else diagonalize(basis_or_pairs)
    target = np.asarray(bethe.charges if hasattr(bethe, "charges") else bethe, dtype=float)
    if pairs.charges.shape[0] == 0:
        raise NoMatch("empty sector")
    dev = np.abs(pairs.charges - target[None, :]).max(axis=1)
    k = int(np.argmin(dev))
    if dev[k] > threshold:
        raise NoMatch(f"closest ED state deviates by {dev[k]:.3e}")
    angle = None
    if overlaps is not None:
        v = np.asarray(overlaps, dtype=complex)
        c = abs(np.vdot(pairs.vectors[:, k], v)) / np.linalg.norm(v)
        angle = float(np.arccos(min(1.0, c)))
    return MatchReport(k, float(dev[k]), angle)


def matrix_element(bra_vec, operator, ket_vec) -> complex:
    bra = np.asarray(bra_vec)
    ket = np.asarray(ket_vec)
    op = np.asarray(operator)
    if op.ndim != 2 or op.shape != (bra.size, ket.size):
        raise DimensionMismatch(f"operator shape {op.shape} vs vectors {bra.size}, {ket.size}")
    val = np.vdot(bra, op @ ket)
    return val.real if np.isrealobj(bra) and np.isrealobj(ket) and np.isrealobj(op) else val
