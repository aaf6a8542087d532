"""
Core modules for vtruncem

- sde: SDE systems, Lyapunov specifications and the generator
- validation: numeric checks of model hypotheses
- truncation: growth envelopes, truncation maps and growth bounds
- bisection_algorithm: numeric envelope inversion
"""

from .bisection_algorithm import BisectionAlgorithm
from .sde import (
    DecayFunction,
    LyapunovClass,
    LyapunovSpec,
    RateAssumption,
    SdeSystem,
    generator,
    generator_power,
)
from .truncation import (
    MonotoneEnvelope,
    PolicyVariant,
    TruncationPolicy,
    envelope_inverse,
    envelope_ratio,
    envelope_validate,
    growth_bound_check,
    growth_bound_mask,
    lambda_rho,
    policy_feasibility,
    rate_envelope,
    truncate,
    truncation_radius,
)
from .validation import (
    ValidationReport,
    Violation,
    probe_higher_derivatives,
    sample_box,
    validate_class_membership,
    validate_decay_condition,
    validate_derivatives,
    validate_equilibrium,
    validate_finite,
    validate_radial_growth,
    validate_structure_condition,
)

__all__ = [
    "BisectionAlgorithm",
    "DecayFunction",
    "LyapunovClass",
    "LyapunovSpec",
    "RateAssumption",
    "SdeSystem",
    "generator",
    "generator_power",
    "MonotoneEnvelope",
    "PolicyVariant",
    "TruncationPolicy",
    "envelope_inverse",
    "envelope_ratio",
    "envelope_validate",
    "growth_bound_check",
    "growth_bound_mask",
    "lambda_rho",
    "policy_feasibility",
    "rate_envelope",
    "truncate",
    "truncation_radius",
    "ValidationReport",
    "Violation",
    "probe_higher_derivatives",
    "sample_box",
    "validate_class_membership",
    "validate_decay_condition",
    "validate_derivatives",
    "validate_equilibrium",
    "validate_finite",
    "validate_radial_growth",
    "validate_structure_condition",
]
