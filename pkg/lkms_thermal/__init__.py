"""
LKMS thermal two-point functions of the free Klein-Gordon field
"""

__version__ = "1.0.0"
__author__ = "LKMS Thermal Team"
__description__ = "Local-KMS thermal two-point functions, constraint checks and beta-field classification"

from .beta_classifier import (
    Verdict,
    VerdictKind,
    Worldline,
    classify_affine,
    classify_field,
    maximal_region,
    profile_along_worldline,
    temperature,
)
from .cli_reporting import RunConfig, main, parse_config
from .constraint_checks import (
    ResidualReport,
    beta_box,
    beta_jacobian,
    constraint1_residual,
    constraint2_residual,
    default_shell_samples,
    kms_detailed_balance,
    observed_order,
    w_pde_residuals,
)
from .exceptions import (
    BetaFieldError,
    ConfigError,
    DomainError,
    InvalidInputError,
    LKMSException,
    QuadratureError,
)
from .minkowski import (
    BoxRegion,
    ConeKind,
    ConeRegion,
    FourVector,
    LorentzBoost,
    boost_from_velocity,
    boost_to_rest,
    mink_dot,
    point_split,
    shell_lift,
    split_point,
)
from .shell_tensor import Tensor2, antisymmetric_from_components, massive_null_test, massless_null_decompose
from .thermal_wightman import (
    AffineBetaField,
    BetaFieldFn,
    QuadratureConfig,
    StateSpec,
    coincidence_limit,
    evaluate_regular_part,
    fourier_weights,
    regular_part,
)

__all__ = [
    "FourVector", "LorentzBoost", "ConeKind", "ConeRegion", "BoxRegion",
    "mink_dot", "point_split", "split_point", "shell_lift", "boost_to_rest", "boost_from_velocity",
    "Tensor2", "antisymmetric_from_components", "massless_null_decompose", "massive_null_test",
    "AffineBetaField", "BetaFieldFn", "QuadratureConfig", "StateSpec",
    "fourier_weights", "regular_part", "evaluate_regular_part", "coincidence_limit",
    "ResidualReport", "kms_detailed_balance", "beta_jacobian", "beta_box", "default_shell_samples",
    "constraint1_residual", "constraint2_residual", "w_pde_residuals", "observed_order",
    "Verdict", "VerdictKind", "Worldline", "classify_affine", "classify_field", "maximal_region",
    "temperature", "profile_along_worldline",
    "RunConfig", "parse_config", "main",
    "LKMSException", "InvalidInputError", "BetaFieldError", "DomainError", "QuadratureError", "ConfigError",
]
