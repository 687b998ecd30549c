"""Substate bounds between quantum states: divergences, smoothing SDPs and constructions.

All entropic quantities are in bits. Fidelity uses the squared convention
``F(rho, sigma) = ||sqrt(rho) sqrt(sigma)||_1^2``.
"""

from .constructions import (
    ConverseReport,
    PurificationTriple,
    angle_fidelity_bound,
    converse_check,
    gentle_projection,
    purification_decomposition,
    substate_for_measurement,
    substate_smoothing,
)
from .divergences import (
    DivergenceResult,
    SmoothingCertificate,
    fidelity_sdp,
    kappa_via_dual,
    min_sigma_weight,
    observational_divergence,
    relative_entropy,
    relative_min_entropy,
    smooth_relative_min_entropy,
)
from .errors import DomainError, SolverError, SubstateError, SupportError, ValidationError
from .operators import (
    PureState,
    fidelity,
    hermitian_eig,
    loewner_leq,
    matrix_function,
    partial_trace,
    purify,
    random_density,
    smallest_nonzero_eigenvalue,
    support_contained,
    support_projector,
    trace_norm,
)
from .sdp import SdpProblem, SdpSolution, solve, verify_certificate

__version__ = "0.1.0"
