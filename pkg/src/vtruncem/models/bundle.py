"""
Model bundles

A bundle packages an SDE with its Lyapunov data, decay function,
truncation policy and default initial state, and validates all of it on
a sample box when it is built.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Mapping, Optional

import numpy as np

from ..core.sde import DecayFunction, LyapunovSpec, RateAssumption, SdeSystem
from ..core.truncation import (
    TruncationPolicy,
    envelope_validate,
    policy_feasibility,
    truncation_radius,
)
from ..core.validation import (
    ReportBuilder,
    ValidationReport,
    sample_box,
    validate_class_membership,
    validate_decay_condition,
    validate_derivatives,
    validate_equilibrium,
    validate_finite,
    validate_radial_growth,
    validate_structure_condition,
)
from ..errors import ConfigError
from ..core.numerics import vector_norm

logger = logging.getLogger(__name__)

DEFAULT_SAMPLE_COUNT = 128


def distance_to_kernel(decay: Optional[DecayFunction], x) -> float:
    """
    Distance from x to Ker(w)

    |x| when the kernel is the origin, otherwise the decay function's own
    distance callable.

    Raises:
        ConfigError: no kernel descriptor is available
    """
    x = np.asarray(x, dtype=float)
    if decay is not None and decay.kernel_is_origin:
        out = vector_norm(x)
    elif decay is not None and decay.kernel_distance is not None:
        out = np.asarray(decay.kernel_distance(x), dtype=float)
    else:
        raise ConfigError("no description of Ker(w): need kernel_is_origin or a distance callable")
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class ModelBundle:
    """Everything the schemes and estimators need about one model"""

    name: str
    system: SdeSystem
    spec: LyapunovSpec
    decay: Optional[DecayFunction]
    policy: TruncationPolicy
    initial_state: np.ndarray
    rate_assumption: Optional[RateAssumption] = None
    provenance: Mapping[str, str] = field(default_factory=dict)
    structure_lambda: float = 0.0
    box_half_width: Optional[float] = None
    convergence_metric: Optional[Callable[[np.ndarray], np.ndarray]] = None
    description: str = ""

    def __post_init__(self):
        x0 = np.array(self.initial_state, dtype=float).reshape(self.system.state_dim)
        x0.setflags(write=False)
        object.__setattr__(self, "initial_state", x0)

    @property
    def state_dim(self) -> int:
        return self.system.state_dim

    @property
    def noise_dim(self) -> int:
        return self.system.noise_dim

    def radius(self, dt: float) -> float:
        return truncation_radius(self.policy, dt)

    def with_initial_state(self, x0) -> "ModelBundle":
        """Same model started elsewhere; the policy is left unchanged."""
        return replace(self, initial_state=np.asarray(x0, dtype=float))

    def terminal_metric(self, x) -> np.ndarray:
        """Convergence measure used by stability runs."""
        if self.convergence_metric is not None:
            return np.asarray(self.convergence_metric(np.asarray(x, dtype=float)), dtype=float)
        return np.asarray(distance_to_kernel(self.decay, x), dtype=float)

    def sample_points(self, count: int = DEFAULT_SAMPLE_COUNT) -> np.ndarray:
        half = self.box_half_width
        if half is None:
            half = 2.0 * max(float(np.linalg.norm(self.initial_state)), 1.0)
        d = self.state_dim
        extra = [self.initial_state]
        if self.system.equilibrium is not None:
            extra.append(self.system.equilibrium)
        return sample_box([-half] * d, [half] * d, count, extra)

    def feasibility_report(self) -> ValidationReport:
        builder = ReportBuilder("policy feasibility")
        lhs, rhs, ok = policy_feasibility(self.policy, self.initial_state)
        builder.checked = 1
        builder.record(self.initial_state, rhs, lhs, ok, "φ(|x0| ∨ 1) ≤ K(Δ*)^(−θ)")
        builder.notes.append(f"K(Δ*)^(−θ) = {lhs:.17g}, φ(|x0| ∨ 1) = {rhs:.17g}")
        return builder.report()

    def validation_reports(self, count: int = DEFAULT_SAMPLE_COUNT) -> List[ValidationReport]:
        """Run every hypothesis check on the default sample box."""
        samples = self.sample_points(count)
        x0_norm = max(float(np.linalg.norm(self.initial_state)), 1.0)
        reports = [
            validate_finite(self.system, samples),
            validate_equilibrium(self.system),
            validate_derivatives(self.spec, samples),
            validate_class_membership(self.spec, samples),
            validate_radial_growth(self.spec, samples),
            validate_structure_condition(self.spec, self.system, self.structure_lambda, samples),
            self.policy.envelope.check(),
            envelope_validate(self.policy, self.spec, self.system, self.decay, [1.0, x0_norm, 2.0 * x0_norm]),
            self.feasibility_report(),
        ]
        if self.decay is not None and self.policy.variant.is_stability:
            reports.append(validate_decay_condition(self.spec, self.system, self.decay, samples))
        return reports

    def validate(self, count: int = DEFAULT_SAMPLE_COUNT) -> "ModelBundle":
        """Raise ValidationError on the first failing check, return self otherwise."""
        for report in self.validation_reports(count):
            report.raise_if_failed()
        logger.debug("model %s passed validation", self.name)
        return self

    def summary(self) -> Dict[str, str]:
        return {
            "name": self.name,
            "d": str(self.state_dim),
            "m": str(self.noise_dim),
            "variant": self.policy.variant.value,
            "delta_star": f"{self.policy.delta_star:g}",
            "x0": ", ".join(f"{c:g}" for c in self.initial_state),
        }
