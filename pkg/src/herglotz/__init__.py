"""Solver and verifier for Herglotz-type variational problems.

The functional value of a Herglotz problem is carried by the auxiliary
differential equation ``z' = L(t, x, x', z)`` instead of an integral.
This package computes extremals of such problems by shooting on the
terminal transversality condition and certifies, sample by sample, every
first-order necessary condition: the generalized Euler-Lagrange
equation, the transversality condition, the Pontryagin optimality and
adjoint conditions of the equivalent control problem, the
DuBois-Reymond identity, and Noether-type conserved quantities of
invariant transformation families.
"""

__version__ = "0.1.0"

from .conditions import (
    classical_el_residual,
    dubois_reymond_residual,
    el_residual,
    hamiltonian,
    pmp_residuals,
    transversality_residual,
)
from .errors import MeshError, ToolkitError
from .expr import (
    DomainError,
    Expression,
    ParseError,
    UnboundVariableError,
    UnknownIdentifierError,
    differentiate,
    evaluate,
    free_variables,
    parse,
    to_source,
)
from .extremal import (
    IrregularLagrangianError,
    ShootingError,
    ShootingResult,
    el_explicit_form,
    shoot,
)
from .files import load_problem_data, load_problem_file, read_trajectory_csv, write_trajectory_csv
from .integrate import (
    IntegrationError,
    QuadratureError,
    compute_psi_z,
    compute_psi_z_quadrature,
    cumulative_integral,
    rk4_ivp,
    sampled_derivative,
    simpson,
)
from .noether import (
    Generators,
    InvarianceReport,
    NoetherError,
    TransformationFamily,
    check_invariance,
    conserved_quantity,
    constancy,
    generators,
    georgieva_quantity,
    make_family,
    xi_constancy_check,
)
from .problem import (
    HerglotzProblem,
    Multipliers,
    OCForm,
    ProblemError,
    Trajectory,
    admissibility_residual,
    is_admissible,
    is_classical,
    make_problem,
    partials,
)
from .reports import ResidualReport

__all__ = [
    "__version__",
    "ToolkitError",
    "MeshError",
    "Expression",
    "ParseError",
    "UnknownIdentifierError",
    "UnboundVariableError",
    "DomainError",
    "parse",
    "evaluate",
    "differentiate",
    "free_variables",
    "to_source",
    "HerglotzProblem",
    "OCForm",
    "Trajectory",
    "Multipliers",
    "ProblemError",
    "make_problem",
    "partials",
    "is_classical",
    "is_admissible",
    "admissibility_residual",
    "rk4_ivp",
    "simpson",
    "cumulative_integral",
    "sampled_derivative",
    "compute_psi_z",
    "compute_psi_z_quadrature",
    "IntegrationError",
    "QuadratureError",
    "el_explicit_form",
    "shoot",
    "ShootingResult",
    "ShootingError",
    "IrregularLagrangianError",
    "el_residual",
    "classical_el_residual",
    "transversality_residual",
    "dubois_reymond_residual",
    "pmp_residuals",
    "hamiltonian",
    "ResidualReport",
    "TransformationFamily",
    "Generators",
    "InvarianceReport",
    "NoetherError",
    "make_family",
    "generators",
    "check_invariance",
    "conserved_quantity",
    "georgieva_quantity",
    "xi_constancy_check",
    "constancy",
    "load_problem_file",
    "load_problem_data",
    "read_trajectory_csv",
    "write_trajectory_csv",
]
