"""Numerical laboratory for Carleman ultraholomorphic classes.

Strongly regular sequences are modeled in log-space; their associated
functions, growth and quasianalyticity indices are evaluated and
estimated; proximate-order weights are validated and turned into flat
functions and Laplace-type kernels; moment sequences are computed by
quadrature and certified equivalent to the defining sequence; and the
truncated-Laplace extension operator realizes a right inverse of the
asymptotic Borel map, with numerical coefficient recovery closing the
loop.

Submodules
----------
sequences   sequence models, regularity witnesses, equivalence, powers
growth      h_M, M(t), nu, d(r) and the omega/rho/gamma estimators
proximate   weights, Maergoiz-property validation, flat functions
moments     kernels e_V, moment tables, growth certificates
extension   formal Borel sums, extension operator, recovery, round trip
cli         command-line front end (JSON reports, CSV grids, figures)
"""

from .errors import (
    CarlemanError,
    CertificationFailureError,
    DivergenceDetectedError,
    InvalidParameterError,
    InvalidSequenceError,
    InvalidVariantError,
    LowerBoundFailureError,
    NotInClassError,
    NumericalFailureError,
    OutOfDomainError,
    OutOfSectorError,
    RangeExceededError,
    RecoveryFailureError,
    TableExhaustedError,
    WeightEvaluationError,
)
from .extension import (
    BorelSum,
    CoefficientSequence,
    ExtensionOperator,
    RightInverseConfig,
    asymptotic_error,
    borel_recover,
    certify_expansion,
    extend,
    formal_borel,
    lambda_norm,
    right_inverse_check,
)
from .growth import (
    GrowthProfile,
    check_hM_power,
    exponent_of_convergence,
    gamma_index,
    korenbljum_verdict,
    omega_index,
    proximate_order_check,
    rho_order,
    surjectivity_conditions,
    watson_verdict,
)
from .moments import (
    FV_eval,
    Kernel,
    MomentTable,
    VARIANT_CLASSICAL,
    VARIANT_GENERAL,
    equivalence_certificate,
    hM_integral_bound,
    kernel,
    kernel_bound_certificate,
    komatsu_growth_check,
    moment,
    moment_table,
)
from .proximate import (
    FlatFunction,
    PolarPoint,
    Weight,
    flat_function,
    flatness_certificate,
    gevrey_weight,
    lift_flat,
    real_weight_from_M,
    sector_lower_bound,
    user_weight,
    validate_weight,
)
from .sequences import (
    SequenceModel,
    build_builtin,
    certify_regularity,
    equivalence_constants,
    parse_sequence_spec,
    power_sequence,
    quotient,
)

__version__ = "0.1.0"
