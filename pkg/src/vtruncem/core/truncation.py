"""
Truncation Module

Growth envelopes, the radial truncation map π_Δ and the per-step growth
bounds that a truncated step satisfies.

Three policy variants share one mechanism and differ only in the weights
of the envelope ratio:

    finite-time:    |f|/(1+V)^δ,                 |g|²/(1+V)^{2δ}
    stability-bar:  |f|/(Λ^{1/2} V^δ),           |g|²/(Λ V^{2δ})
    stability-hat:  (1+V)^{1/2−δ}|f|/(ΛV)^{1/2}, (1+V)^{1−2δ}|g|²/(ΛV)

with Λ = Λ_ρ = 1 ∧ (w/V^ρ). The envelope dominates the ratio on the ball
|x| ≤ u, and the truncation radius at step size Δ is φ⁻¹(KΔ^{−θ}).
"""

import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from ..errors import DomainError, NumericFailure, PolicyViolation
from .bisection_algorithm import BisectionAlgorithm
from .numerics import as_state, frobenius_squared, scalar_or_array, squared_norm, vector_norm
from .sde import DecayFunction, LyapunovSpec, RateAssumption, SdeSystem
from .validation import SLACK_TOL, ValidationReport, ReportBuilder, sample_sphere

logger = logging.getLogger(__name__)

INVERSE_ROUND_TRIP_TOL = 1e-9
DT_TOL = 1e-12


class PolicyVariant(Enum):
    """Which truncated scheme a policy drives"""

    FINITE_TIME = "finite-time"
    STABILITY_BAR = "stability-bar"
    STABILITY_HAT = "stability-hat"

    @classmethod
    def parse(cls, text: str) -> "PolicyVariant":
        key = text.strip().lower().replace("_", "-")
        aliases = {"finite": "finite-time", "bar": "stability-bar", "hat": "stability-hat"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise DomainError(f"unknown policy variant '{text}'") from None

    @property
    def is_stability(self) -> bool:
        return self is not PolicyVariant.FINITE_TIME


@dataclass(frozen=True, eq=False)
class MonotoneEnvelope:
    """Strictly increasing growth envelope φ on [domain_floor, ∞)"""

    forward: Callable[[float], float]
    inverse: Optional[Callable[[float], float]] = None
    domain_floor: float = 1.0
    description: str = ""

    def __call__(self, u: float) -> float:
        return float(self.forward(u))

    def invert(self, v: float) -> float:
        floor_value = self(self.domain_floor)
        if not v >= floor_value:
            raise DomainError(f"envelope inverse undefined at {v:g} < φ({self.domain_floor:g})={floor_value:g}")
        if self.inverse is not None:
            return float(self.inverse(v))
        return BisectionAlgorithm().find_preimage(self.forward, v, self.domain_floor)

    def check(self, grid: Optional[Sequence[float]] = None) -> ValidationReport:
        """Strict monotonicity on a grid and, if present, the inverse round trip."""
        if grid is None:
            grid = self.domain_floor * np.geomspace(1.0, 1e4, 64)
        grid = np.asarray(grid, dtype=float)
        collector = ReportBuilder(f"envelope monotonicity {self.description}".strip())
        values = np.array([self(u) for u in grid])
        for u0, u1, v0, v1 in zip(grid, grid[1:], values, values[1:]):
            collector.checked += 1
            collector.record([u1], v0, v1, v0 < v1, "φ strictly increasing")
        if self.inverse is not None:
            for u, v in zip(grid, values):
                collector.checked += 1
                back = self(float(self.inverse(v)))
                err = abs(back - v)
                collector.record([u], err, INVERSE_ROUND_TRIP_TOL * abs(v), err <= INVERSE_ROUND_TRIP_TOL * abs(v), "φ(φ⁻¹(v)) = v")
        return collector.report()


def admissible_theta(variant: PolicyVariant, smoothness_order: int = 4) -> Tuple[float, bool]:
    """Upper end of the admissible θ interval and whether it is included."""
    upper = 1.0 / 3.0 if smoothness_order == 3 else 0.5
    return upper, not variant.is_stability


@dataclass(frozen=True, eq=False)
class TruncationPolicy:
    """Envelope and constants fixing the truncation radius at every step size"""

    variant: PolicyVariant
    envelope: MonotoneEnvelope
    k_const: float
    theta: float
    delta_star: float
    smoothness_order: int = 2
    initial_state: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.k_const > 0:
            raise PolicyViolation(f"K must be positive, got {self.k_const}")
        if not 0 < self.delta_star <= 1:
            raise PolicyViolation(f"Δ* must lie in (0, 1], got {self.delta_star}")
        upper, closed = admissible_theta(self.variant, self.smoothness_order)
        if not (self.theta > 0 and (self.theta <= upper if closed else self.theta < upper)):
            bracket = "]" if closed else ")"
            raise PolicyViolation(f"θ={self.theta} outside (0, {upper:.6g}{bracket} for the {self.variant.value} variant")
        if self.initial_state is not None:
            x0 = np.array(self.initial_state, dtype=float).reshape(-1)
            x0.setflags(write=False)
            object.__setattr__(self, "initial_state", x0)
            lhs, rhs, ok = policy_feasibility(self, x0)
            if not ok:
                raise PolicyViolation(f"K(Δ*)^(−θ)={lhs:.17g} < φ(|x0| ∨ 1)={rhs:.17g}")

    @classmethod
    def from_initial_state(
        cls,
        variant: PolicyVariant,
        envelope: MonotoneEnvelope,
        theta: float,
        delta_star: float,
        initial_state,
        smoothness_order: int = 2,
    ) -> "TruncationPolicy":
        """Policy with KΔ^{−θ} := φ(|x0| ∨ 1)Δ^{−θ}, i.e. K = φ(|x0| ∨ 1)."""
        x0 = np.asarray(initial_state, dtype=float).reshape(-1)
        k_const = envelope(max(float(np.linalg.norm(x0)), 1.0))
        return cls(variant, envelope, k_const, theta, delta_star, smoothness_order, x0)

    def threshold(self, dt: float) -> float:
        """KΔ^{−θ}"""
        return self.k_const * dt ** (-self.theta)

    def check_step(self, dt: float) -> None:
        if not dt > 0:
            raise DomainError(f"step size must be positive, got {dt}")
        if dt > self.delta_star * (1.0 + DT_TOL):
            raise PolicyViolation(f"step size {dt:g} exceeds Δ*={self.delta_star:g}")


def policy_feasibility(policy: TruncationPolicy, x0) -> Tuple[float, float, bool]:
    """Return (K(Δ*)^{−θ}, φ(|x0| ∨ 1), lhs ≥ rhs)."""
    lhs = policy.threshold(policy.delta_star)
    rhs = policy.envelope(max(float(np.linalg.norm(np.asarray(x0, dtype=float))), 1.0))
    return lhs, rhs, lhs >= rhs


def envelope_inverse(policy: TruncationPolicy, v: float) -> float:
    """φ⁻¹(v), closed form when supplied, bisection otherwise."""
    return policy.envelope.invert(v)


def truncation_radius(policy: TruncationPolicy, dt: float) -> float:
    """
    Radius φ⁻¹(KΔ^{−θ}) of the truncation ball at step size dt

    Raises:
        DomainError: dt ≤ 0
        PolicyViolation: dt > Δ*
    """
    policy.check_step(dt)
    return envelope_inverse(policy, policy.threshold(dt))


def project_onto_ball(x: np.ndarray, radius: float) -> np.ndarray:
    """
    Radial projection min(|x|, R)·x/|x| on the last axis.

    Points with |x| ≤ R are returned bitwise unchanged; projected points
    satisfy |result| ≤ R in floating point.
    """
    norm = vector_norm(x)
    outside = norm > radius
    if not np.any(outside):
        return x.copy()
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(outside, radius / np.where(outside, norm, 1.0), 1.0)
        projected = x * scale[..., None]
        # rounding can leave |x·R/|x|| a few ulps above R
        for _ in range(8):
            over = outside & (vector_norm(projected) > radius)
            if not np.any(over):
                break
            scale = np.where(over, np.nextafter(scale, 0.0), scale)
            projected = x * scale[..., None]
    return np.where(outside[..., None], projected, x)


def truncate(policy: TruncationPolicy, dt: float, x, radius: Optional[float] = None) -> np.ndarray:
    """
    π_Δ(x) = (|x| ∧ R) x/|x| with R = truncation_radius(policy, dt); 0 ↦ 0

    Raises:
        NumericFailure: x is not finite
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise NumericFailure("cannot truncate a non-finite state", state=x if x.ndim == 1 else None)
    if radius is None:
        radius = truncation_radius(policy, dt)
    return project_onto_ball(x, radius)


def lambda_rho(spec: LyapunovSpec, decay: DecayFunction, x):
    """Λ_ρ(x) = 1 ∧ (w(x)/V^ρ(x)), with Λ_ρ = 1 where V(x) = 0."""
    x = np.asarray(x, dtype=float)
    vr = spec.v(x) ** spec.rho
    w = decay(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(vr > 0, w / np.where(vr > 0, vr, 1.0), 1.0)
    return scalar_or_array(np.clip(ratio, 0.0, 1.0))


def _safe_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """num/den with 0/0 = 0 and positive/0 = inf."""
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.where(num > 0, np.inf, 0.0))
    return out


def envelope_ratio(
    policy: TruncationPolicy,
    spec: LyapunovSpec,
    system: SdeSystem,
    decay: Optional[DecayFunction],
    x,
) -> np.ndarray:
    """The variant's growth ratio at x, the quantity the envelope must dominate."""
    x = as_state(x, system.state_dim)
    f_norm = np.sqrt(squared_norm(system.f(x)))
    g_sq = frobenius_squared(system.g(x))
    v = spec.v(x)
    delta = spec.delta
    if policy.variant is PolicyVariant.FINITE_TIME:
        first = f_norm / (1.0 + v) ** delta
        second = g_sq / (1.0 + v) ** (2.0 * delta)
    else:
        lam = np.asarray(lambda_rho(spec, _require_decay(decay), x), dtype=float)
        if policy.variant is PolicyVariant.STABILITY_BAR:
            first = _safe_ratio(f_norm, np.sqrt(lam) * v**delta)
            second = _safe_ratio(g_sq, lam * v ** (2.0 * delta))
        else:
            first = _safe_ratio((1.0 + v) ** (0.5 - delta) * f_norm, np.sqrt(lam * v))
            second = _safe_ratio((1.0 + v) ** (1.0 - 2.0 * delta) * g_sq, lam * v)
    return np.maximum(first, second)


def _require_decay(decay: Optional[DecayFunction]) -> DecayFunction:
    if decay is None:
        raise DomainError("stability variants need a decay function w")
    return decay


def envelope_validate(
    policy: TruncationPolicy,
    spec: LyapunovSpec,
    system: SdeSystem,
    decay: Optional[DecayFunction],
    radii: Sequence[float],
    directions: int = 64,
    seed: int = 0,
    tol: float = SLACK_TOL,
) -> ValidationReport:
    """
    Check the envelope dominates the growth ratio on balls.

    For each tested u (clamped to the domain floor) the ratio is sampled
    on spheres of radii u, u/2 and u/4 and compared with φ(u).
    """
    collector = ReportBuilder(f"envelope ({policy.variant.value})")
    worst_overall = None
    for u in radii:
        u = max(float(u), policy.envelope.domain_floor)
        bound = policy.envelope(u)
        pts = np.vstack([sample_sphere(r, system.state_dim, directions, seed) for r in (u, u / 2.0, u / 4.0)])
        ratios = envelope_ratio(policy, spec, system, decay, pts)
        worst = float(np.max(ratios))
        worst_overall = worst / bound if worst_overall is None else max(worst_overall, worst / bound)
        collector.notes.append(f"u={u:g}: worst ratio {worst:.6g} vs φ(u)={bound:.6g}")
        for x, ratio in zip(pts, ratios):
            collector.checked += 1
            collector.record(x, ratio, bound, ratio <= bound * (1.0 + tol) + tol, f"growth ratio ≤ φ({u:g})")
    report = collector.report()
    report.worst_ratio = worst_overall
    return report


def growth_bound_mask(
    policy: TruncationPolicy,
    spec: LyapunovSpec,
    system: SdeSystem,
    decay: Optional[DecayFunction],
    x,
    dt: float,
    tol: float = SLACK_TOL,
) -> np.ndarray:
    """Per-state truth of the variant's pair of growth inequalities at step size dt."""
    x = as_state(x, system.state_dim)
    level = policy.threshold(dt)
    f_sq = squared_norm(system.f(x))
    g_sq = frobenius_squared(system.g(x))
    v = spec.v(x)
    delta = spec.delta

    def holds(lhs, rhs):
        return lhs <= rhs * (1.0 + tol) + tol

    if policy.variant is PolicyVariant.FINITE_TIME:
        return holds(np.sqrt(f_sq), level * (1.0 + v) ** delta) & holds(g_sq, level * (1.0 + v) ** (2.0 * delta))
    lam = np.asarray(lambda_rho(spec, _require_decay(decay), x), dtype=float)
    if policy.variant is PolicyVariant.STABILITY_BAR:
        weight = lam * v ** (2.0 * delta)
    else:
        weight = lam * v / (1.0 + v) ** (1.0 - 2.0 * delta)
    return holds(f_sq, level * level * weight) & holds(g_sq, level * weight)


def growth_bound_check(
    policy: TruncationPolicy,
    spec: LyapunovSpec,
    system: SdeSystem,
    decay: Optional[DecayFunction],
    x_truncated,
    dt: float,
    tol: float = SLACK_TOL,
) -> bool:
    """True iff every given truncated state satisfies the growth bounds."""
    return bool(np.all(growth_bound_mask(policy, spec, system, decay, x_truncated, dt, tol)))


def rate_envelope(assumption: RateAssumption, spec: LyapunovSpec, constant: float) -> MonotoneEnvelope:
    """
    Envelope φ(u) = C(1 + κ^ℓ(u^q)) suggested by a rate assumption.

    Its inverse is [κ⁻¹((v/C − 1)^{1/ℓ})]^{1/q}.
    """
    ell = assumption.ell(spec.delta)
    if ell <= 0:
        raise DomainError(f"rate assumption has ℓ={ell:g} ≤ 0")
    q = assumption.q

    def forward(u: float) -> float:
        return constant * (1.0 + assumption.kappa(u**q) ** ell)

    def inverse(v: float) -> float:
        return assumption.kappa_inverse(max(v / constant - 1.0, 0.0) ** (1.0 / ell)) ** (1.0 / q)

    return MonotoneEnvelope(forward, inverse, 1.0, f"C(1+κ^ℓ(u^q)), C={constant:g}, ℓ={Fraction(ell).limit_denominator(1000)}")
