"""Fixed points of contractive maps on metric type spaces."""

from .certificates import Certificate, CheckConfig, ViolationReport, check_certificate
from .maps import MappingSpec
from .oracle import cross_check, enumerate_fixed_points
from .solvers import ConvergenceTrace, SolverConfig, coupled_solve, family_solve, picard
from .spaces import DistanceSpace, FiniteSpace, StructureError, minimal_alpha, verify_axioms

__all__ = [
    "Certificate", "CheckConfig", "ConvergenceTrace", "DistanceSpace", "FiniteSpace",
    "MappingSpec", "SolverConfig", "StructureError", "ViolationReport", "check_certificate",
    "coupled_solve", "cross_check", "enumerate_fixed_points", "family_solve", "minimal_alpha",
    "picard", "verify_axioms",
]
