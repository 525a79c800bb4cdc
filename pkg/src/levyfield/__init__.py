"""levyfield: Ornstein-Uhlenbeck fields under heavy-tailed stable noise.

Desk-scale simulation and verification lab for the diagonal OU field
dX^n = -lambda_n X^n dt + beta_n dL^n with i.i.d. symmetric alpha-stable
drivers: exact marginal simulation, jump-resolved trajectories with an
explicit jump ledger, weighted-norm membership scans, dense-jump-time
statistics and oscillation (cadlag-failure) experiments, plus the Gaussian
alpha = 2 reference line.
"""

__version__ = "0.1.0"

from .dynamics import (
    ComponentPath,
    FieldPath,
    JumpEvent,
    SpectralModel,
    conv_scale,
    evaluate_field,
    ou_exact_update,
    simulate_component_jump_resolved,
    simulate_field,
    simulate_noise_partial_sum,
)
from .errors import InsufficientReplicasError, ParameterError, ResourceCapError
from .gaussian import HSIntegralSpec, gaussian_continuity_contrast, hs_integral
from .irregularity import (
    CoverageReport,
    OscillationReport,
    cadlag_failure_scan,
    coverage_scan,
    first_jump_times,
    oscillation_lower_bound,
    question4_probe,
)
from .sampling import (
    JumpDecomposition,
    RngStreamKey,
    StableLaw,
    jump_decomposition,
    sample_big_jump,
    sample_poisson_times,
    sample_stable,
    small_jump_sigma2,
    stable_tail_mass,
    standard_stable,
    tail_constant,
)
from .spaces import (
    MembershipVerdict,
    PartialSumProfile,
    SlopeFit,
    WeightedNormSpec,
    analytic_membership,
    h_delta_norm,
    partial_sum_profile,
    predicted_median_slope,
    tail_exponent_via_medians,
)

__all__ = [
    "__version__",
    "StableLaw",
    "JumpDecomposition",
    "RngStreamKey",
    "SpectralModel",
    "JumpEvent",
    "FieldPath",
    "ComponentPath",
    "WeightedNormSpec",
    "MembershipVerdict",
    "SlopeFit",
    "PartialSumProfile",
    "OscillationReport",
    "CoverageReport",
    "HSIntegralSpec",
    "ParameterError",
    "ResourceCapError",
    "InsufficientReplicasError",
    "tail_constant",
    "standard_stable",
    "sample_stable",
    "stable_tail_mass",
    "sample_big_jump",
    "sample_poisson_times",
    "small_jump_sigma2",
    "jump_decomposition",
    "conv_scale",
    "ou_exact_update",
    "simulate_component_jump_resolved",
    "simulate_field",
    "simulate_noise_partial_sum",
    "evaluate_field",
    "h_delta_norm",
    "analytic_membership",
    "tail_exponent_via_medians",
    "partial_sum_profile",
    "predicted_median_slope",
    "oscillation_lower_bound",
    "first_jump_times",
    "coverage_scan",
    "cadlag_failure_scan",
    "question4_probe",
    "hs_integral",
    "gaussian_continuity_contrast",
]
