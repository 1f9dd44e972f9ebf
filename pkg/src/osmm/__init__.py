"""Oracle-structured minimization of ``h = f + g``.

``f`` is reached only through value/gradient callbacks (:class:`Oracle`);
``g`` is a :class:`StructuredFunction` built from a fixed set of atoms and
lowered to a QP.  :func:`solve` runs the method; see ``osmm.problems`` for
the built-in instances.
"""

from .bundle import Bundle, BundlePiece
from .curvature import CurvatureModel
from .oracle import Oracle, OracleEval, gradient_check, quadratic_oracle
from .qp import QpProblem, QpSolution, QpStatus
from .qp import solve as solve_qp
from .solver import (IterRecord, SolveReport, SolverConfig, Status, line_search, lower_bound,
                     recover_subgradient, solve, tentative_step, trust_update)
from .structured import (HingeBudget, StructuredFunction, canonicalize, eval_g, project,
                         subgradient_valid)

__all__ = [
    "Bundle", "BundlePiece", "CurvatureModel", "Oracle", "OracleEval", "gradient_check",
    "quadratic_oracle", "QpProblem", "QpSolution", "QpStatus", "solve_qp", "IterRecord",
    "SolveReport", "SolverConfig", "Status", "line_search", "lower_bound",
    "recover_subgradient", "solve", "tentative_step", "trust_update", "HingeBudget",
    "StructuredFunction", "canonicalize", "eval_g", "project", "subgradient_valid",
]
