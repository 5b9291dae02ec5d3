"""Richardson-Gaudin integrable spin and spin-boson models.

Submodules: ``kernels`` (Gaudin kernels), ``models`` (model specs and
charges), ``solver`` (rapidity and Lambda solvers), ``detforms``
(determinant overlaps, norms and form factors), ``oracle`` (exact
diagonalization) and ``cli``.
"""

from ._backend import BACKEND
from .kernels import Realization, kernel_build, kernel_check
from .models import BasisState, ModelSpec, Variant, load_model, model_dicke, model_pip, model_xxz
from .solver import (BetheSolution, SolveConfig, continuation_xi, enumerate_states, solve_lambdas,
                     solve_rapidities, with_rapidities)
from .detforms import norm, overlap
from .oracle import build_sector_basis, compare_solution, diagonalize

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Realization", "kernel_build", "kernel_check", "BasisState", "ModelSpec", "Variant",
    "load_model", "model_dicke", "model_pip", "model_xxz", "BetheSolution", "SolveConfig",
    "continuation_xi", "enumerate_states", "solve_lambdas", "solve_rapidities", "with_rapidities",
    "norm", "overlap", "build_sector_basis", "compare_solution", "diagonalize", "__version__",
]
