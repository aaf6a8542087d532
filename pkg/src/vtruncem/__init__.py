"""
vtruncem - V-truncated Euler-Maruyama schemes for SDEs with locally
Lipschitz coefficients

Truncated schemes for finite-time moment bounds and for long-run
stability, the Lyapunov-function checks they rely on, and a Monte Carlo
harness measuring moment uniformity, strong convergence order and
almost-sure decay.
"""

__version__ = "1.0.0"
__license__ = "GPL-3.0-or-later"

from .core.sde import DecayFunction, LyapunovClass, LyapunovSpec, SdeSystem, generator, generator_power
from .core.truncation import MonotoneEnvelope, PolicyVariant, TruncationPolicy, truncate, truncation_radius
from .errors import (
    ConfigError,
    DegenerateInput,
    DomainError,
    NumericFailure,
    PolicyViolation,
    ValidationError,
    VTruncError,
)
from .schemes.simulation import PathResult, SchemeConfig, SchemeKind, simulate, simulate_batch
from .models.bundle import ModelBundle
from .models.examples import BUILTIN_MODELS, build_model
from .models.polynomial import build_polynomial_model
from .montecarlo.brownian import brownian_grid
from .montecarlo.estimators import (
    estimate_lyapunov,
    estimate_moment_sup,
    estimate_strong_error,
    fit_loglog,
    stability_experiment,
)
from .montecarlo.executor import PathExecutor

__all__ = [
    "DecayFunction",
    "LyapunovClass",
    "LyapunovSpec",
    "SdeSystem",
    "generator",
    "generator_power",
    "MonotoneEnvelope",
    "PolicyVariant",
    "TruncationPolicy",
    "truncate",
    "truncation_radius",
    "ConfigError",
    "DegenerateInput",
    "DomainError",
    "NumericFailure",
    "PolicyViolation",
    "ValidationError",
    "VTruncError",
    "PathResult",
    "SchemeConfig",
    "SchemeKind",
    "simulate",
    "simulate_batch",
    "ModelBundle",
    "BUILTIN_MODELS",
    "build_model",
    "build_polynomial_model",
    "brownian_grid",
    "estimate_lyapunov",
    "estimate_moment_sup",
    "estimate_strong_error",
    "fit_loglog",
    "stability_experiment",
    "PathExecutor",
]
