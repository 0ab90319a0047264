"""driftflow: modified Ricci flow meets the drift Laplacian, at desk scale.

Simulates the coupled metric/weight evolution on flat model geometries,
computes the evolving spectrum of the drift Laplacian, and checks the sharp
eigenvalue bound, the evolution identities, the sharpness example, and the
splitting rigidity numerically.
"""

from .comparison import (
    BoundCase,
    BoundCurve,
    blowup_horizon,
    eigenvalue_bound,
    forward_diff_check,
    linear_comparison,
    logistic_envelope,
)
from .errors import (
    AssemblyError,
    ConfigurationError,
    DegeneracyError,
    DomainError,
    DriftflowError,
    ExtinctionError,
    FlowBreakdownError,
    HorizonError,
    OracleError,
    OutOfRegimeError,
    SolverError,
    StabilityError,
    UndefinedQuotientError,
    UsageError,
)
from .flow import (
    FlowState,
    FlowTrajectory,
    RunRequest,
    commutator_residual,
    evolve_scalar,
    flow_equation_residual,
    functional_residuals,
    gram_schmidt_frame,
    run_flow,
    step_modified_flow,
)
from .geometry import (
    ContinuumState,
    DiscreteWeightedManifold,
    discretize,
    evaluate_family,
    gaussian_line,
    product_family,
    round_circle_family,
    scaled_gaussian_family,
    weighted_circle,
)
from .oracles import (
    OracleReport,
    dense_spectrum,
    finite_diff_time_derivative,
    integrate_equality_ode,
    quadrature_integral,
)
from .spectral import (
    QuadraticForms,
    SpectralResult,
    assemble_forms,
    bochner_residual,
    bochner_sides,
    drift_divergence,
    drift_laplacian,
    energy_profile,
    hessian_norm_sq,
    lowest_eigenpairs,
    weighted_pairings,
)
from .splitting import (
    SplittingCertificate,
    SplittingHypothesisFailure,
    SplittingTolerances,
    certificate_residuals,
    detect_splitting,
)

__version__ = "0.1.0"
