"""Nearest point on the convex hull of a dataset.

Given an n-by-d dataset and a query point q, the solvers return the point of
the convex hull of the rows closest to q together with the convex combination
weights producing it. The main path is a staged gradient-projection method
that grows the working set outward from q, warm-starting each stage; a
dual-form solver and two brute-force oracles provide independent routes for
verification.
"""

import os as _os

# BLAS thread caps must be exported before numpy loads its backend, so this
# block runs ahead of any numpy import below.
_threads = _os.environ.get("HULLPROJ_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                 "NUMEXPR_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)
del _os

from . import kernels
from .dataio import generate, load_dataset, save_dataset
from .dual import (DualMultipliers, SvdFactors, dual_gradient, dual_objective,
                   factorize, recover_alpha, solve_dual)
from .gradproj import cauchy_point, kkt_check, solve, subspace_minimize
from .model import (Dataset, HullSolution, KktReport, SolveStats, SolverConfig,
                    gradient, objective)
from .oracle import cross_validate, solve_enumerate, solve_pgd
from .simplex import (Breakpoint, breakpoints, is_feasible, project_onto_simplex,
                      projected_direction)
from .sketch import (PartitionPlan, make_partition, solve_full, solve_sketched,
                     sort_by_distance, warm_start_extend)

__version__ = "0.1.0"

__all__ = [
    "Breakpoint", "Dataset", "DualMultipliers", "HullSolution", "KktReport",
    "PartitionPlan", "SolveStats", "SolverConfig", "SvdFactors",
    "breakpoints", "cauchy_point", "cross_validate", "dual_gradient",
    "dual_objective", "factorize", "generate", "gradient", "is_feasible",
    "kernels", "kkt_check", "load_dataset", "make_partition", "objective",
    "project_onto_simplex", "projected_direction", "recover_alpha",
    "save_dataset", "solve", "solve_dual", "solve_enumerate", "solve_full",
    "solve_pgd", "solve_sketched", "sort_by_distance", "subspace_minimize",
]
