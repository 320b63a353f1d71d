"""Mass concentration comparison for fractional singular elliptic problems.

Numerical building blocks for (-Delta)^s u = f / u^gamma in bounded domains:
the radial interaction kernel, Schwarz and decreasing rearrangements, a
radial Galerkin solver on balls, a planar collocation solver, and executable
checks of the comparison lemmata and theorems.
"""
from ._backend import BACKEND
from .analysis import (ProblemSpec, ab_inequality_check, chain_rule_check, maxmin_lemma_check,
                       verify_energy, verify_regularity, verify_theorem1, verify_theorem2)
from .kernel import KernelEvaluator, theta, theta_hypergeometric, theta_quadrature
from .planar import (GridFunction2D, PlanarDomain, assemble_operator_2d, build_domain,
                     seminorm_2d_squared, solve_linear_2d, solve_singular_2d)
from .radial import (RadialFunction, RadialGrid, SolveReport, assemble_gagliardo_radial,
                     make_radial_mesh, solve_linear_radial, solve_singular_radial)
from .rearrange import (WeightedSample, decreasing_rearrangement, is_less_concentrated,
                        riesz_check, schwarz_profile)
from .specfun import DomainError, KernelParams, hyp2f1

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DomainError",
    "GridFunction2D",
    "KernelEvaluator",
    "KernelParams",
    "PlanarDomain",
    "ProblemSpec",
    "RadialFunction",
    "RadialGrid",
    "SolveReport",
    "WeightedSample",
    "ab_inequality_check",
    "assemble_gagliardo_radial",
    "assemble_operator_2d",
    "build_domain",
    "chain_rule_check",
    "decreasing_rearrangement",
    "hyp2f1",
    "is_less_concentrated",
    "make_radial_mesh",
    "maxmin_lemma_check",
    "riesz_check",
    "schwarz_profile",
    "seminorm_2d_squared",
    "solve_linear_2d",
    "solve_linear_radial",
    "solve_singular_2d",
    "solve_singular_radial",
    "theta",
    "theta_hypergeometric",
    "theta_quadrature",
    "verify_energy",
    "verify_regularity",
    "verify_theorem1",
    "verify_theorem2",
    "__version__",
]
