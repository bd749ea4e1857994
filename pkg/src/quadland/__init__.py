"""Teacher-student simulation and landscape analysis for shallow networks
with quadratic activation.

The network computes f(W; x) = sum_j a_j * act(<W_j, x>) with act(z) = z^2
by default, so the function depends on W only through the Gram matrix W^T W.
The package provides closed-form population risks and gradients, energy
barrier certification for rank-deficient weights, gradient descent drivers,
initialization diagnostics, and the tensorized sample geometry that decides
when interpolation forces exact Gram recovery.
"""

from .data import Dataset, label_dataset, sample_dataset
from .errors import (
    ContractViolation,
    DegenerateDistribution,
    InvalidArgument,
    NonfiniteValue,
    QuadlandError,
)
from .geometry import (
    NullInterpolatorResult,
    PrimeCertificate,
    RecoveryResult,
    SpanReport,
    TensorizedDesign,
    critical_sample_count,
    null_interpolator,
    prime_vandermonde_certificate,
    prime_vandermonde_data,
    recover_gram_discrepancy,
    spans_symmetric,
    sym_matrix,
    sym_vector,
    tensorize,
    tensorized_covariance,
)
from .initialization import (
    SEMICIRCLE_SECOND_MOMENT,
    SpectrumReport,
    check_init_below_barrier,
    identity_init,
    sample_teacher,
    wishart_spectrum_report,
)
from .landscape import (
    BarrierReport,
    StationaryCertificate,
    SweepResult,
    barrier_report,
    certify_stationary_global,
    embed_gram,
    energy_barrier,
    rank_deficient_sweep,
    sublevel_norm_bound,
    worst_rank_deficient,
)
from .model import (
    Custom,
    Discrepancy,
    Gaussian,
    Moments,
    Rademacher,
    StudentWeights,
    TeacherModel,
    Uniform,
    absorb_output_weights,
    discrepancy,
    forward,
    forward_batch,
    gram,
    moments_of,
    parse_distribution,
    truncated_moments,
)
from .optimize import (
    Backtracking,
    FixedStep,
    GDConfig,
    InverseSmoothness,
    StationarityReport,
    Trajectory,
    TrajectoryRecord,
    build_objective,
    epsilon_stationarity_report,
    estimate_smoothness,
    gradient_descent,
)
from .risk import (
    RiskReport,
    empirical_gradient,
    empirical_risk,
    population_gradient,
    population_risk,
    population_risk_of,
)

__version__ = "0.1.0"

__all__ = [
    "Backtracking",
    "BarrierReport",
    "ContractViolation",
    "Custom",
    "Dataset",
    "DegenerateDistribution",
    "Discrepancy",
    "FixedStep",
    "GDConfig",
    "Gaussian",
    "InvalidArgument",
    "InverseSmoothness",
    "Moments",
    "NonfiniteValue",
    "NullInterpolatorResult",
    "PrimeCertificate",
    "QuadlandError",
    "Rademacher",
    "RecoveryResult",
    "RiskReport",
    "SEMICIRCLE_SECOND_MOMENT",
    "SpanReport",
    "SpectrumReport",
    "StationarityReport",
    "StationaryCertificate",
    "StudentWeights",
    "SweepResult",
    "TeacherModel",
    "TensorizedDesign",
    "Trajectory",
    "TrajectoryRecord",
    "Uniform",
    "absorb_output_weights",
    "barrier_report",
    "build_objective",
    "certify_stationary_global",
    "check_init_below_barrier",
    "critical_sample_count",
    "discrepancy",
    "embed_gram",
    "empirical_gradient",
    "empirical_risk",
    "energy_barrier",
    "epsilon_stationarity_report",
    "estimate_smoothness",
    "forward",
    "forward_batch",
    "gradient_descent",
    "gram",
    "identity_init",
    "label_dataset",
    "moments_of",
    "null_interpolator",
    "parse_distribution",
    "population_gradient",
    "population_risk",
    "population_risk_of",
    "prime_vandermonde_certificate",
    "prime_vandermonde_data",
    "rank_deficient_sweep",
    "recover_gram_discrepancy",
    "sample_dataset",
    "sample_teacher",
    "spans_symmetric",
    "sublevel_norm_bound",
    "sym_matrix",
    "sym_vector",
    "tensorize",
    "tensorized_covariance",
    "truncated_moments",
    "wishart_spectrum_report",
    "worst_rank_deficient",
    "__version__",
]
