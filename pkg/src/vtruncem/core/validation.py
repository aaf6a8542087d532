"""
Numeric validators for model hypotheses

Every validator samples a finite set of states and returns a
ValidationReport. Violations are data: a validator never raises because a
hypothesis fails, only the caller decides (see ValidationReport.raise_if_failed).
"""

import logging
from typing import Iterable, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field
from scipy.stats import qmc

from ..errors import ValidationError
from .numerics import as_state, frobenius_squared, vector_norm
from .sde import DecayFunction, LyapunovSpec, SdeSystem, generator_power

logger = logging.getLogger(__name__)

DERIVATIVE_TOL = 1e-5
SLACK_TOL = 1e-9
EQUILIBRIUM_TOL = 1e-12
MAX_LISTED_VIOLATIONS = 20


class Violation(BaseModel):
    """One failing sample with the inequality it broke"""

    point: List[float]
    lhs: float
    rhs: float
    detail: str


class ValidationReport(BaseModel):
    """Outcome of a validator run over a sample set"""

    name: str
    passed: bool
    checked: int = 0
    skipped: int = 0
    failures: int = 0
    violations: List[Violation] = Field(default_factory=list)
    worst_ratio: Optional[float] = None
    notes: List[str] = Field(default_factory=list)

    def summary(self) -> str:
        status = "passed" if self.passed else "FAILED"
        text = f"{self.name}: {status} ({self.checked} checked"
        if self.skipped:
            text += f", {self.skipped} skipped"
        text += ")"
        if self.violations:
            first = self.violations[0]
            text += f"; first violation {first.detail} at x={first.point}: {first.lhs:.6g} > {first.rhs:.6g}"
        return text

    def raise_if_failed(self) -> "ValidationReport":
        if not self.passed:
            raise ValidationError(self)
        return self


class ReportBuilder:
    """Accumulates violations while a validator walks its samples"""

    def __init__(self, name: str):
        self.name = name
        self.checked = 0
        self.skipped = 0
        self.failures = 0
        self.violations: List[Violation] = []
        self.worst: Optional[float] = None
        self.notes: List[str] = []

    def record(self, point, lhs: float, rhs: float, ok: bool, detail: str) -> None:
        if rhs > 0 and np.isfinite(lhs):
            ratio = lhs / rhs
            self.worst = ratio if self.worst is None else max(self.worst, ratio)
        if not ok:
            self.failures += 1
            if len(self.violations) < MAX_LISTED_VIOLATIONS:
                self.violations.append(
                    Violation(point=np.atleast_1d(point).tolist(), lhs=float(lhs), rhs=float(rhs), detail=detail)
                )

    def report(self) -> ValidationReport:
        report = ValidationReport(
            name=self.name,
            passed=self.failures == 0,
            checked=self.checked,
            skipped=self.skipped,
            failures=self.failures,
            violations=self.violations,
            worst_ratio=self.worst,
            notes=self.notes,
        )
        logger.debug(report.summary())
        return report


def sample_box(
    lower: Sequence[float],
    upper: Sequence[float],
    count: int,
    extra: Iterable[Sequence[float]] = (),
) -> np.ndarray:
    """
    Deterministic low-discrepancy samples on a box plus extra points.

    Args:
        lower: lower corner of the box
        upper: upper corner of the box
        count: number of Halton points
        extra: additional states appended verbatim (initial condition, equilibrium)

    Returns:
        Array of shape (count + len(extra), d)
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    dim = lower.shape[0]
    points = qmc.scale(qmc.Halton(d=dim, scramble=False).random(count), lower, upper) if count else np.empty((0, dim))
    extras = [np.asarray(e, dtype=float).reshape(dim) for e in extra]
    if extras:
        points = np.vstack([points, np.array(extras)])
    return points


def sample_sphere(radius: float, dim: int, count: int, seed: int = 0) -> np.ndarray:
    """Points on the sphere of the given radius; ±radius in one dimension."""
    if dim == 1:
        return np.array([[radius], [-radius]])
    rng = np.random.default_rng(seed)
    directions = rng.standard_normal((count, dim))
    directions /= vector_norm(directions)[:, None]
    return radius * directions


def _as_samples(samples, dim: int) -> np.ndarray:
    pts = as_state(samples, dim)
    return pts.reshape(-1, dim)


def _finite_difference_step(x: np.ndarray) -> np.ndarray:
    return np.maximum(1e-6, 1e-6 * np.abs(x))


def validate_structure_condition(
    spec: LyapunovSpec,
    system: SdeSystem,
    lam: float,
    samples,
    tol: float = SLACK_TOL,
    rho: Optional[float] = None,
) -> ValidationReport:
    """
    Check ℒW^ρ ≤ λ(1+V^ρ) on every sample.

    W is 1+V, or V for the kernel-zero class; there samples with V(x)=0
    are skipped.
    """
    rho = spec.rho if rho is None else rho
    collector = ReportBuilder("structure condition")
    pts = _as_samples(samples, system.state_dim)
    v = spec.v(pts)
    if spec.uses_kernel_power:
        collector.skipped = int(np.sum(v <= 0))
        pts, v = pts[v > 0], v[v > 0]
    if pts.shape[0] == 0:
        return collector.report()
    lhs = np.atleast_1d(generator_power(spec, system, pts, rho))
    rhs = lam * (1.0 + v**rho)
    label = "ℒV^ρ ≤ λ(1+V^ρ)" if spec.uses_kernel_power else "ℒ(1+V)^ρ ≤ λ(1+V^ρ)"
    for x, left, right in zip(pts, lhs, rhs):
        collector.checked += 1
        collector.record(x, left, right, left <= right + tol, label)
    return collector.report()


def validate_decay_condition(
    spec: LyapunovSpec,
    system: SdeSystem,
    decay: DecayFunction,
    samples,
    tol: float = SLACK_TOL,
) -> ValidationReport:
    """
    Check ℒV^ρ ≤ −w and, when μ is set, w ≥ μV^ρ.

    Samples with V(x)=0 are skipped; ℒV^ρ is undefined there for ρ < 1.
    """
    collector = ReportBuilder("decay condition")
    pts = _as_samples(samples, system.state_dim)
    v = spec.v(pts)
    w = decay(pts)
    for x, vx, wx in zip(pts, v, w):
        if wx < -tol:
            collector.checked += 1
            collector.record(x, -wx, 0.0, False, "w(x) ≥ 0")
            continue
        if vx <= 0:
            collector.skipped += 1
            continue
        collector.checked += 1
        lv = generator_power(spec, system, x, spec.rho, offset=False)
        scale = max(1.0, abs(wx))
        collector.record(x, lv, -wx, lv <= -wx + tol * scale, "ℒV^ρ ≤ −w")
        if decay.mu is not None:
            floor = decay.mu * vx**spec.rho
            collector.record(x, floor, wx, wx >= floor - tol * max(1.0, floor), "w ≥ μV^ρ")
    return collector.report()


def validate_derivatives(spec: LyapunovSpec, samples, tol: float = DERIVATIVE_TOL) -> ValidationReport:
    """Compare the analytic gradient and hessian with central differences."""
    pts = np.atleast_2d(np.asarray(samples, dtype=float))
    dim = pts.shape[-1]
    collector = ReportBuilder("derivatives")
    for x in pts:
        collector.checked += 1
        h = _finite_difference_step(x)
        grad = spec.grad(x)
        hess = spec.hess(x)
        fd_grad = np.empty(dim)
        fd_hess = np.empty((dim, dim))
        for i in range(dim):
            step = np.zeros(dim)
            step[i] = h[i]
            fd_grad[i] = (spec.v(x + step) - spec.v(x - step)) / (2.0 * h[i])
            fd_hess[:, i] = (spec.grad(x + step) - spec.grad(x - step)) / (2.0 * h[i])
        grad_err = float(np.linalg.norm(fd_grad - grad))
        grad_scale = max(1.0, float(np.linalg.norm(grad)))
        collector.record(x, grad_err, tol * grad_scale, grad_err <= tol * grad_scale, "gradient vs central differences")
        hess_err = float(np.linalg.norm(fd_hess - hess))
        hess_scale = max(1.0, float(np.linalg.norm(hess)))
        collector.record(x, hess_err, tol * hess_scale, hess_err <= tol * hess_scale, "hessian vs central differences")
        if not np.allclose(hess, np.swapaxes(hess, -1, -2), rtol=tol, atol=tol):
            collector.record(x, 1.0, 0.0, False, "hessian symmetry")
    return collector.report()


def _class_bound(spec: LyapunovSpec, v: float, order: int) -> float:
    base = spec.growth_base(v)
    exponent = 1.0 - order * spec.delta
    if base == 0.0:
        return spec.growth_constant if exponent == 0.0 else 0.0
    return spec.growth_constant * base**exponent


def validate_class_membership(
    spec: LyapunovSpec,
    samples,
    tol: float = SLACK_TOL,
    scalings: Sequence[float] = (0.1, 0.5, 0.9),
) -> ValidationReport:
    """
    Check the derivative-growth bounds for n=1,2 and the scaling property.

    |D⁽ⁿ⁾V(x)| ≤ c(1+V)^{1−nδ} (offset and hat classes) or c V^{1−nδ}
    (kernel-zero class), V(εx) ≤ V(x), V ≥ 0, and for the V-power and hat
    classes V(x) > 0 away from the origin.
    """
    pts = np.atleast_2d(np.asarray(samples, dtype=float))
    collector = ReportBuilder(f"class membership ({spec.class_flag.value})")
    for x in pts:
        collector.checked += 1
        v = float(spec.v(x))
        collector.record(x, -v, 0.0, v >= -tol, "V(x) ≥ 0")
        if spec.class_flag.value != "offset" and np.any(x != 0):
            collector.record(x, 0.0, v, v > 0.0, "V(x) > 0 for x ≠ 0")
        grad_norm = float(np.linalg.norm(spec.grad(x)))
        bound1 = _class_bound(spec, v, 1)
        collector.record(x, grad_norm, bound1, grad_norm <= bound1 * (1 + tol) + tol, "|∇V| ≤ c·base^{1−δ}")
        hess_norm = float(np.linalg.norm(spec.hess(x)))
        bound2 = _class_bound(spec, v, 2)
        collector.record(x, hess_norm, bound2, hess_norm <= bound2 * (1 + tol) + tol, "|∇²V| ≤ c·base^{1−2δ}")
        for eps in scalings:
            scaled = float(spec.v(eps * x))
            collector.record(x, scaled, v, scaled <= v + tol * max(1.0, v), f"V({eps:g}x) ≤ V(x)")
    return collector.report()


def probe_higher_derivatives(spec: LyapunovSpec, samples, tol: float = 1e-3) -> ValidationReport:
    """
    Finite-difference probe of |D⁽³⁾V| against c·base^{1−3δ}.

    Informational: only the n ≤ 2 bounds are housed analytically.
    """
    pts = np.atleast_2d(np.asarray(samples, dtype=float))
    dim = pts.shape[-1]
    collector = ReportBuilder("third derivative probe")
    for x in pts:
        v = float(spec.v(x))
        if spec.uses_kernel_power and v <= 0 and 1.0 - 3.0 * spec.delta < 0:
            collector.skipped += 1
            continue
        collector.checked += 1
        h = np.maximum(1e-4, 1e-4 * np.abs(x))
        third_sq = 0.0
        for i in range(dim):
            step = np.zeros(dim)
            step[i] = h[i]
            slab = (spec.hess(x + step) - spec.hess(x - step)) / (2.0 * h[i])
            third_sq += float(np.sum(slab * slab))
        third = np.sqrt(third_sq)
        bound = _class_bound(spec, v, 3)
        collector.record(x, third, bound, third <= bound * (1 + tol) + tol, "|D³V| ≤ c·base^{1−3δ}")
    if spec.smoothness_order < 3:
        collector.notes.append("smoothness order below 3; probe is informational")
    return collector.report()


def validate_radial_growth(spec: LyapunovSpec, samples, factors: Sequence[float] = (1.0, 2.0, 4.0, 8.0)) -> ValidationReport:
    """Check that V(tx) is nondecreasing in t along each sampled ray."""
    pts = np.atleast_2d(np.asarray(samples, dtype=float))
    collector = ReportBuilder("radial growth")
    for x in pts:
        if not np.any(x != 0):
            collector.skipped += 1
            continue
        collector.checked += 1
        values = [float(spec.v(t * x)) for t in factors]
        for (t0, v0), (t1, v1) in zip(zip(factors, values), zip(factors[1:], values[1:])):
            collector.record(x, v0, v1, v1 >= v0 - SLACK_TOL * max(1.0, v0), f"V({t0:g}x) ≤ V({t1:g}x)")
    return collector.report()


def validate_equilibrium(system: SdeSystem, tol: float = EQUILIBRIUM_TOL) -> ValidationReport:
    """Check |f(x*)| and |g(x*)|_F vanish at the declared equilibrium."""
    collector = ReportBuilder("equilibrium")
    if system.equilibrium is None:
        collector.notes.append("no equilibrium declared")
        return collector.report()
    x = system.equilibrium
    collector.checked += 1
    drift = float(np.linalg.norm(system.f(x)))
    diffusion = float(np.sqrt(frobenius_squared(system.g(x))))
    collector.record(x, drift, tol, drift <= tol, "|f(x*)| ≤ 1e-12")
    collector.record(x, diffusion, tol, diffusion <= tol, "|g(x*)|_F ≤ 1e-12")
    return collector.report()


def validate_finite(system: SdeSystem, samples) -> ValidationReport:
    """Check drift and diffusion return finite values on the samples."""
    pts = _as_samples(samples, system.state_dim)
    collector = ReportBuilder("finite coefficients")
    with np.errstate(all="ignore"):
        drift = system.f(pts)
        diffusion = system.g(pts)
    if drift.shape != pts.shape:
        collector.notes.append(f"drift returned shape {drift.shape}, expected {pts.shape}")
    if diffusion.shape != pts.shape + (system.noise_dim,):
        collector.notes.append(f"diffusion returned shape {diffusion.shape}, expected {pts.shape + (system.noise_dim,)}")
    if collector.notes:
        collector.checked = 1
        collector.record(pts[0], 1.0, 0.0, False, "coefficient shapes")
        return collector.report()
    finite = np.all(np.isfinite(drift), axis=-1) & np.all(np.isfinite(diffusion), axis=(-2, -1))
    for x, ok in zip(pts, finite):
        collector.checked += 1
        collector.record(x, 0.0 if ok else np.inf, 0.0, bool(ok), "finite f(x), g(x)")
    return collector.report()

