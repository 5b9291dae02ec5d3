"""Command-line front end.

``rgbethe <command> --model FILE [--n INT] [--seed-partition SPEC] [--xi-steps INT]
[--out FILE] [--tol REAL]``

Exit status: 0 success, 1 input error, 2 numerical failure.  JSON results
and CSV trajectories are written with 17 significant digits so that they
round-trip exactly and are byte-identical across runs.
"""
from __future__ import annotations

import argparse
import io
import itertools
import json
import math
import os
import sys
import time
from dataclasses import replace
from typing import List, Optional

import numpy as np

from . import detforms, oracle, solver
from .errors import InputError, NumericalError, RGBetheError, WrongVariant
from .models import BasisState, ModelSpec, Variant, charge_eigenvalues, load_model, sector_dimension

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2

COMMANDS = ("solve", "enumerate", "continuation", "overlap", "norm", "formfactor", "validate", "bench")

# tolerances of the validate battery
TOL_SPECTRUM = 1e-8
TOL_OVERLAP = 1e-10
TOL_NORM = 1e-8
TOL_FF = 1e-7
TOL_SUM = 1e-8


# --------------------------------------------------------------------------- serialization

def fmt(v: float) -> str:
    v = float(v)
    if not math.isfinite(v):
        return "null"
    s = format(v, ".17g")
    return s if any(c in s for c in ".en") else s + ".0"


def to_json(obj, indent: int = 0) -> str:
    """Deterministic JSON: insertion-ordered keys, floats at 17 digits, NaN as null."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray, complex, np.complexfloating)) for v in seq):
            return "[" + ", ".join(to_json(v, indent + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(inner + to_json(v, indent + 1) for v in seq) + "\n" + pad + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return to_json({"re": float(obj.real), "im": float(obj.imag)}, indent)
    return json.dumps(str(obj))


def _cplx(v):
    v = complex(v)
    return float(v.real) if v.imag == 0 else v


def _basis_dict(st: BasisState) -> dict:
    return {"boson": st.boson_count, "occupations": list(st.occupations)}


def _state_record(sid: int, sol: solver.BetheSolution) -> dict:
    rec = {"state_id": sid, "label": None if sol.label is None else list(sol.label),
           "lambdas": [float(v) for v in sol.lambdas],
           "charges": [float(v) for v in sol.charges]}
    if sol.lambda0 is not None:
        rec["lambda0"] = float(sol.lambda0)
    rec["residual_lambda"] = float(sol.residual_lambda)
    if sol.rapidities is not None:
        rec["rapidities"] = [complex(v) for v in sol.rapidities]
        rec["residual_rapidity"] = float(sol.residual_rapidity)
    return rec


# --------------------------------------------------------------------------- request plumbing

class Request:
    def __init__(self, args: argparse.Namespace):
        self.command = args.command
        self.model, n_file = load_model(args.model)
        self.N = args.n if args.n is not None else n_file
        if self.N is None:
            raise InputError("excitation number missing: give 'N' in the model file or --n")
        if self.N < 0:
            raise InputError("--n must be nonnegative")
        if args.tol is not None and not (args.tol > 0 and math.isfinite(args.tol)):
            raise InputError("--tol must be a positive number")
        if args.xi_steps is not None and args.xi_steps < 1:
            raise InputError("--xi-steps must be a positive integer")
        self.partition = args.seed_partition
        self.xi_steps = args.xi_steps or 50
        self.out = args.out
        self.lambdas_file = args.lambdas
        kw = {"workers": _threads()}
        if args.tol is not None:
            kw["newton_tol"] = args.tol
        self.config = solver.SolveConfig(**kw)


def _threads() -> int:
    raw = os.environ.get("RGBETHE_THREADS")
    if raw is None or raw == "":
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"RGBETHE_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise InputError("RGBETHE_THREADS must be a positive integer")
    return n


def _emit(req: Request, text: str):
    if req.out:
        with open(req.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _solve_one(req: Request) -> solver.BetheSolution:
    """State selected by ``--seed-partition``.

    Dicke: multiplicities on the secular roots.  Other families: occupations
    of the levels in the weak-coupling limit.
    """
    model, N = req.model, req.N
    if req.partition is None:
        raise InputError("--seed-partition is required for this command")
    part = solver.parse_partition(req.partition)
    if model.variant is Variant.DICKE:
        return solver.solve_from_partition(model, N, part, req.config)
    if len(part) != model.m or any(k not in (0, 1) for k in part) or sum(part) != N:
        raise InputError(f"partition needs {model.m} entries in {{0, 1}} summing to N = {N}")
    sol = solver.solve_pattern(model, N, [i for i, k in enumerate(part) if k], req.config)
    return solver.with_rapidities(sol, req.config)


# --------------------------------------------------------------------------- commands

def run_solve(req: Request) -> int:
    sol = _solve_one(req)
    _emit(req, to_json(_state_record(0, sol)) + "\n")
    return EXIT_OK


def run_enumerate(req: Request) -> int:
    model, N = req.model, req.N
    try:
        sols = solver.enumerate_states(model, N, req.config)
    except solver.IncompleteEnumeration as exc:
        out = {"complete": False, "sector_dimension": sector_dimension(model, N),
               "states": [_state_record(i, s) for i, s in enumerate(exc.found)],
               "failures": [{"pattern": f["pattern"], "reason": f["reason"]} for f in exc.failures]}
        _emit(req, to_json(out) + "\n")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _emit(req, to_json([_state_record(i, s) for i, s in enumerate(sols)]) + "\n")
    return EXIT_OK


def trajectory_csv(path: solver.ContinuationPath) -> str:
    n = len(path.rapidity_snapshots[0]) if path.rapidity_snapshots else 0
    buf = io.StringIO()
    buf.write(",".join(["xi"] + [f"{p}_x{a + 1}" for a in range(n) for p in ("re", "im")] + ["flag"]) + "\n")
    for xi, x, ok in zip(path.xi_samples, path.rapidity_snapshots, path.converged):
        cells = [fmt(xi)]
        for v in x:
            cells += [fmt(v.real), fmt(v.imag)]
        cells.append("0" if ok else "1")
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def run_continuation(req: Request) -> int:
    model = req.model
    if model.variant is not Variant.DICKE:
        raise WrongVariant("continuation follows Dicke states to the xi = 1 spin model")
    step = 1.0 / req.xi_steps
    cfg = replace(req.config, xi_step=min(step, 1e-3), max_step=step)
    if req.partition is not None:
        part = solver.parse_partition(req.partition)
    elif req.N == 0:
        part = [0] * (model.m + 1)
    else:
        raise InputError("--seed-partition is required for continuation")
    start = solver.solve_from_partition(model, req.N, part, cfg)
    try:
        path = solver.continuation_xi(model, req.N, start, cfg)
    except solver.PathStalled as exc:
        if exc.path is not None and exc.path.xi_samples:
            _emit(req, trajectory_csv(exc.path))
        print(f"error: {exc}; last accepted xi = {exc.last_xi!r}", file=sys.stderr)
        return EXIT_NUMERIC
    _emit(req, trajectory_csv(path))
    return EXIT_OK


def _states_or_one(req: Request) -> List[solver.BetheSolution]:
    if req.partition is not None:
        return [_solve_one(req)]
    return solver.enumerate_states(req.model, req.N, req.config)


def run_overlap(req: Request) -> int:
    model, N = req.model, req.N
    basis = oracle.build_sector_basis(model, N)
    out = []
    for i, sol in enumerate(_states_or_one(req)):
        vals = [_cplx(detforms.overlap(model, sol, st)) for st in basis.states]
        out.append({"state_id": i, "lambdas": [float(v) for v in sol.lambdas],
                    "overlaps": [dict(_basis_dict(st), value=v) for st, v in zip(basis.states, vals)]})
    _emit(req, to_json(out) + "\n")
    return EXIT_OK


def run_norm(req: Request) -> int:
    model = req.model
    if model.variant is Variant.XXZ:
        raise WrongVariant("norm formulas are implemented for the Dicke and (p+ip) models")
    out = []
    for i, sol in enumerate(_states_or_one(req)):
        rep = detforms.norm(model, sol, report=True)
        out.append({"state_id": i, "lambdas": [float(v) for v in sol.lambdas],
                    "norm": _cplx(rep.value), "conditioning": rep.conditioning})
    _emit(req, to_json(out) + "\n")
    return EXIT_OK


def _formfactors(model: ModelSpec, N: int, config) -> dict:
    """Normalized (p+ip) form factors in sector N and between N and N-1."""
    up = solver.enumerate_states(model, N, config)
    norms_up = [float(np.real(detforms.norm(model, s))) for s in up]
    number = []
    for a, b in itertools.product(range(len(up)), repeat=2):
        r = detforms.ff_number_pip(model, up[a], up[b])
        sc = 1.0 if r["normalized"] else math.sqrt(norms_up[a] * norms_up[b])
        number.append({"bra": a, "ket": b, "S0": [float(v) / sc for v in r["S0"]], "nb": r["nb"] / sc})
    raise_, boson = [], []
    if N >= 1:
        down = solver.enumerate_states(model, N - 1, config)
        norms_dn = [float(np.real(detforms.norm(model, s))) for s in down]
        for a, u in itertools.product(range(len(up)), range(len(down))):
            sc = math.sqrt(norms_up[a] * norms_dn[u])
            raise_.append({"bra": a, "ket": u, "values": [
                float(np.real(detforms.ff_raise_pip(model, up[a], down[u], k))) / sc for k in range(model.m)]})
            boson.append({"bra": a, "ket": u,
                          "value": float(np.real(detforms.ff_boson_pip(model, up[a], down[u]))) / sc})
    return {"N": N, "states_N": [_state_record(i, s) for i, s in enumerate(up)],
            "raise": raise_, "boson": boson, "number": number}


def run_formfactor(req: Request) -> int:
    if req.model.variant is not Variant.PIP:
        raise WrongVariant("form factors are implemented for the (p+ip) model")
    _emit(req, to_json(_formfactors(req.model, req.N, req.config)) + "\n")
    return EXIT_OK


# --------------------------------------------------------------------------- validate

def _load_lambdas(path, model: ModelSpec, N: int) -> List[solver.BetheSolution]:
    """Lambda records in the format written by ``enumerate``."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path}: {exc}") from None
    if isinstance(data, dict):
        data = data.get("states")
    if not isinstance(data, list):
        raise InputError("lambda file must hold a list of state records")
    out = []
    for rec in data:
        lam = rec.get("lambdas") if isinstance(rec, dict) else None
        if not isinstance(lam, list) or len(lam) != model.m:
            raise InputError(f"each record needs 'lambdas' with {model.m} numbers")
        lam = np.array(lam, dtype=float)
        sol = solver.BetheSolution(model, N, None, lam, None, charges=charge_eigenvalues(model, lam, N))
        if model.variant is Variant.PIP:
            sol.lambda0 = solver.pip_lambda0(model, lam, N)
        out.append(sol)
    return out


def _check(name, value, tol, passed=None, **extra) -> dict:
    ok = bool(value <= tol) if passed is None else bool(passed)
    return dict({"check": name, "passed": ok, "max_deviation": float(value), "tolerance": tol}, **extra)


def overlap_deviation(d, p, scale) -> float:
    """Relative deviation, measured against ``1e-6 * scale`` for numerically vanishing entries."""
    return abs(d - p) / max(abs(p), 1e-6 * scale, 1e-300)


def validate(model: ModelSpec, N: int, config, lambdas: Optional[List] = None) -> list:
    basis = oracle.build_sector_basis(model, N)
    pairs = oracle.diagonalize(basis)
    sols = solver.enumerate_states(model, N, config) if lambdas is None else lambdas
    checks = []

    # spectrum: bijective charge-tuple match
    dev, used, bij = 0.0, set(), len(sols) == basis.dim
    for s in sols:
        d = np.abs(pairs.charges - np.asarray(s.charges)[None, :]).max(axis=1) if basis.dim else np.zeros(0)
        if d.size == 0:
            bij = False
            continue
        k = int(np.argmin(d))
        dev = max(dev, float(d[k]))
        bij = bij and k not in used
        used.add(k)
    checks.append(_check("spectrum", dev, TOL_SPECTRUM, passed=bij and dev <= TOL_SPECTRUM,
                         states=len(sols), sector_dimension=basis.dim))
    if not checks[-1]["passed"]:
        return checks

    # overlaps: determinant against permanent, and alignment with the ED vector
    dev_p, dev_v, vecs = 0.0, 0.0, []
    for s in sols:
        x = solver.with_rapidities(s, config).rapidities if N else np.zeros(0)
        d = np.array([complex(detforms.overlap(model, s, st)) for st in basis.states])
        p = np.array([complex(detforms.permanent_expansion(model, x, st)) for st in basis.states])
        sc = float(np.abs(p).max(initial=0.0))
        dev_p = max([dev_p] + [overlap_deviation(a, b, sc) for a, b in zip(d, p)])
        k = oracle.compare_solution(pairs, s, threshold=TOL_SPECTRUM).index
        u = pairs.vectors[:, k]
        c = abs(np.vdot(u, d)) / np.linalg.norm(d)
        dev_v = max(dev_v, abs(1 - c))
        vecs.append((s, d, u * np.sign(np.real(np.vdot(u, d))) if np.real(np.vdot(u, d)) else u))
    checks.append(_check("overlap_permanent", dev_p, TOL_OVERLAP))
    checks.append(_check("overlap_eigenvector", dev_v, TOL_SPECTRUM))

    if model.variant is Variant.XXZ:
        return checks

    # norms: Parseval
    dev_n = 0.0
    for s, d, _ in vecs:
        n = float(np.real(detforms.norm(model, s)))
        pars = float(np.vdot(d, d).real)
        dev_n = max(dev_n, abs(n - pars) / pars)
    checks.append(_check("norm_parseval", dev_n, TOL_NORM))

    if model.variant is not Variant.PIP:
        return checks

    # form factors against ED matrix elements, and the sum rule
    ed = {id(s): u for s, _, u in vecs}
    norms = {id(s): float(np.real(detforms.norm(model, s))) for s, _, _ in vecs}
    S0 = [oracle.build_operator(basis, f"S0:{i}") for i in range(model.m)]
    nb = oracle.build_operator(basis, "nb")
    dev_f, dev_s = 0.0, 0.0
    for a, b in itertools.product(sols, repeat=2):
        r = detforms.ff_number_pip(model, a, b)
        sc = 1.0 if r["normalized"] else math.sqrt(norms[id(a)] * norms[id(b)])
        ua, ub = ed[id(a)], ed[id(b)]
        ref = np.array([ua @ S @ ub for S in S0])
        dev_f = max(dev_f, float(np.abs(np.asarray(r["S0"]) / sc - ref).max(initial=0.0)),
                    abs(r["nb"] / sc - ua @ nb @ ub))
        if a is b:
            dev_s = max(dev_s, abs(float(np.sum(r["S0"])) + r["nb"] - (N - float(model.s.sum()))))
    if N >= 1:
        lower = oracle.build_sector_basis(model, N - 1)
        lp = oracle.diagonalize(lower)
        down = solver.enumerate_states(model, N - 1, config)
        dvec = {}
        for s in down:
            k = oracle.compare_solution(lp, s, threshold=TOL_SPECTRUM).index
            ov = np.array([complex(detforms.overlap(model, s, st)) for st in lower.states])
            u = lp.vectors[:, k]
            dvec[id(s)] = u * np.sign(np.real(np.vdot(u, ov)))
        Sp = [oracle.build_operator(lower, f"S+:{k}", basis) for k in range(model.m)]
        bp = oracle.build_operator(lower, "b+", basis)
        for a, u in itertools.product(sols, down):
            sc = math.sqrt(norms[id(a)] * float(np.real(detforms.norm(model, u))))
            ua, uu = ed[id(a)], dvec[id(u)]
            dev_f = max(dev_f, abs(float(np.real(detforms.ff_boson_pip(model, a, u))) / sc - ua @ bp @ uu))
            for k in range(model.m):
                val = float(np.real(detforms.ff_raise_pip(model, a, u, k))) / sc
                dev_f = max(dev_f, abs(val - ua @ Sp[k] @ uu))
    checks.append(_check("form_factors", dev_f, TOL_FF))
    checks.append(_check("sum_rule", dev_s, TOL_SUM))
    return checks


def run_validate(req: Request) -> int:
    lam = _load_lambdas(req.lambdas_file, req.model, req.N) if req.lambdas_file else None
    checks = validate(req.model, req.N, req.config, lam)
    ok = all(c["passed"] for c in checks)
    _emit(req, to_json({"passed": ok, "checks": checks}) + "\n")
    return EXIT_OK if ok else EXIT_NUMERIC


# --------------------------------------------------------------------------- bench

def _clock(fn, repeat: int = 3) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_rows(model: ModelSpec, N: int, config) -> list:
    """Determinant route against ED for the first m levels, m growing."""
    rows = []
    for m in range(max(N, 1), model.m + 1):
        sub = replace(model, levels=model.levels[:m], spins=model.spins[:m])
        sol = solver.solve_pattern(sub, N, list(range(min(N, m))), config)
        basis = oracle.build_sector_basis(sub, N)
        if sub.variant is Variant.XXZ:
            def det_route():
                detforms.overlap_xxz_spin(sub, sol, list(range(N)))
        else:
            def det_route():
                detforms.norm(sub, sol)
        t_det = _clock(det_route)
        t_ed = _clock(lambda: oracle.diagonalize(basis), repeat=1)
        rows.append({"m": m, "sector_dimension": basis.dim, "determinant_seconds": t_det, "ed_seconds": t_ed})
    return rows


def run_bench(req: Request) -> int:
    _emit(req, to_json({"N": req.N, "rows": bench_rows(req.model, req.N, req.config)}) + "\n")
    return EXIT_OK


# --------------------------------------------------------------------------- entry point

HANDLERS = {"solve": run_solve, "enumerate": run_enumerate, "continuation": run_continuation,
            "overlap": run_overlap, "norm": run_norm, "formfactor": run_formfactor,
            "validate": run_validate, "bench": run_bench}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rgbethe", description="Richardson-Gaudin solvers for spin-boson models.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--n", type=int, help="excitation number (overrides N in the model file)")
    p.add_argument("--seed-partition", help="comma-separated multiplicities or occupations")
    p.add_argument("--xi-steps", type=int, help="continuation: largest xi step is 1/xi-steps (default 50)")
    p.add_argument("--out", help="output file (default: standard output)")
    p.add_argument("--tol", type=float, help="Newton tolerance on the max residual")
    p.add_argument("--lambdas", help="validate: check Lambda records from this file instead of enumerating")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        req = Request(args)
        with np.errstate(all="ignore"):
            return HANDLERS[args.command](req)
    except (InputError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except RGBetheError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
