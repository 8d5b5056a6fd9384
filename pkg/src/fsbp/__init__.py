"""Generalised Gauss / Gauss-Lobatto quadrature and function-space SBP operators."""

from .integrate import Engine, IntegralResult, IntegrationError, integrate, moments
from .spaces import (
    BasisFunction,
    FunctionSpace,
    TchebyshevReport,
    FamilyError,
    RankError,
    make_family,
    product_derivative_space,
    orthonormalize,
    augment_to_even,
    tchebyshev_screen,
)
from .gauss import (
    QuadratureRule,
    ExactnessCertificate,
    SolveOptions,
    SolverError,
    ScreenFailure,
    newton_solve,
    continuation_solve,
    verify_exactness,
    equispaced_rule,
    classical_gauss_rule,
    classical_lobatto_rule,
)
from .operators import (
    FsbpOperator,
    SbpVerdict,
    AssemblyError,
    build_operator,
    verify_sbp,
    scale_to_element,
)

__version__ = "0.1.0"
