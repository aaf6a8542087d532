"""
SDE Core Module

Domain types for dX = f(X)dt + g(X)dB together with a Lyapunov function V
and the generator operator ℒV = ⟨∇V, f⟩ + ½ tr(gᵀ ∇²V g).

All model callables broadcast over leading batch axes: a state array of
shape (..., d) gives drift (..., d), diffusion (..., d, m), value (...,),
gradient (..., d) and hessian (..., d, d).
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional

import numpy as np

from ..errors import DegenerateInput, DomainError, NumericFailure
from .numerics import (
    as_state,
    dot,
    gradient_noise_squared,
    noise_trace,
    scalar_or_array,
)

logger = logging.getLogger(__name__)

StateMap = Callable[[np.ndarray], np.ndarray]


class LyapunovClass(Enum):
    """Which growth class V belongs to"""

    OFFSET = "offset"  # bounds in powers of 1+V
    KERNEL_ZERO = "kernel-zero"  # bounds in powers of V, Ker(V)={0}
    HAT = "hat"

    @classmethod
    def parse(cls, text: str) -> "LyapunovClass":
        key = text.strip().lower().replace("_", "-")
        aliases = {"offsetclass": "offset", "kernelzeroclass": "kernel-zero", "hatclass": "hat", "kernel": "kernel-zero"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise DomainError(f"unknown Lyapunov class '{text}'") from None


@dataclass(frozen=True, eq=False)
class SdeSystem:
    """Drift/diffusion pair with its dimensions and optional equilibrium"""

    state_dim: int
    noise_dim: int
    drift: StateMap
    diffusion: StateMap
    equilibrium: Optional[np.ndarray] = None
    name: str = "sde"

    def __post_init__(self):
        if self.state_dim < 1 or self.noise_dim < 1:
            raise DomainError("state_dim and noise_dim must be positive")
        if self.equilibrium is not None:
            eq = np.array(self.equilibrium, dtype=float).reshape(self.state_dim)
            eq.setflags(write=False)
            object.__setattr__(self, "equilibrium", eq)

    def f(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.drift(x), dtype=float)

    def g(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.diffusion(x), dtype=float)


@dataclass(frozen=True, eq=False)
class LyapunovSpec:
    """Lyapunov function V with analytic derivatives and class data"""

    value: StateMap
    gradient: StateMap
    hessian: StateMap
    rho: float
    delta: float
    smoothness_order: int
    growth_constant: float
    class_flag: LyapunovClass = LyapunovClass.OFFSET

    def __post_init__(self):
        if self.rho <= 0:
            raise DomainError(f"rho must be positive, got {self.rho}")
        if self.smoothness_order not in (2, 3, 4):
            raise DomainError(f"smoothness order must be 2, 3 or 4, got {self.smoothness_order}")
        if self.delta <= 0:
            raise DomainError(f"delta must be positive, got {self.delta}")
        inverse = 1.0 / self.delta
        if abs(inverse - round(inverse)) > 1e-9 or round(inverse) < self.smoothness_order:
            raise DomainError(
                f"1/delta must be an integer >= p={self.smoothness_order}, got 1/delta={inverse:g}"
            )
        if self.growth_constant <= 0:
            raise DomainError("growth constant c must be positive")

    def v(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.value(x), dtype=float)

    def grad(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.gradient(x), dtype=float)

    def hess(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.hessian(x), dtype=float)

    @property
    def uses_kernel_power(self) -> bool:
        return self.class_flag is LyapunovClass.KERNEL_ZERO

    def growth_base(self, v: np.ndarray) -> np.ndarray:
        """V for the V-power class, 1+V otherwise."""
        return v if self.uses_kernel_power else 1.0 + v


@dataclass(frozen=True, eq=False)
class DecayFunction:
    """Decay function w with ℒV^ρ ≤ −w and its kernel descriptor"""

    w: StateMap
    kernel_is_origin: bool = True
    mu: Optional[float] = None
    kernel_distance: Optional[StateMap] = None

    def __post_init__(self):
        if self.mu is not None and self.mu <= 0:
            raise DomainError(f"mu must be positive when given, got {self.mu}")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.w(x), dtype=float)


@dataclass(frozen=True, eq=False)
class RateAssumption:
    """
    Data for the convergence-rate estimate of the strong error in the metric U

    Args:
        metric_u: U, applied to the difference of two states
        delta_u: the class exponent δ₂ of U
        kappa: concave modulus κ
        kappa_inverse: inverse of κ
        a, q, tau, c1, iota, kbar, r: constants of the assumption
        p_bar: moment exponent with κ(|x|^p̄) ≤ V^ρ; strong error needs q < p̄
    """

    metric_u: StateMap
    delta_u: float
    kappa: Callable[[float], float]
    kappa_inverse: Callable[[float], float]
    a: float
    q: float
    tau: float
    c1: float
    iota: float
    kbar: float
    r: float
    p_bar: Optional[float] = None

    def __post_init__(self):
        for name in ("a", "q", "tau", "c1", "iota", "kbar", "r", "delta_u"):
            if getattr(self, name) <= 0:
                raise DomainError(f"rate assumption constant {name} must be positive")

    def ell(self, delta_v: float) -> float:
        """ℓ = r + 2δ₂ − 2δ/a, where δ is the class exponent of V."""
        return self.r + 2.0 * self.delta_u - 2.0 * delta_v / self.a

    def check(self, spec: LyapunovSpec, theta: float) -> List[str]:
        """Return the violated constraints, empty when the assumption is usable."""
        problems = []
        ell = self.ell(spec.delta)
        if not self.r > 2.0 * (spec.delta / self.a - self.delta_u):
            problems.append(f"r={self.r:g} must exceed 2(δ/a − δ₂)={2.0 * (spec.delta / self.a - self.delta_u):g}")
        if ell <= 0:
            problems.append(f"ℓ={ell:g} must be positive")
        elif spec.rho <= self.a:
            problems.append(f"rho={spec.rho:g} must exceed a={self.a:g}")
        else:
            bound = theta * (spec.rho - self.a) / (self.a * ell)
            if self.tau > bound:
                problems.append(f"tau={self.tau:g} exceeds θ(ρ−a)/(aℓ)={bound:g}")
        return problems

    def admits_moment(self, q: float) -> bool:
        return self.p_bar is None or q < self.p_bar


def _finite_or_fail(value: np.ndarray, x: np.ndarray, what: str) -> None:
    finite = np.isfinite(value)
    if np.all(finite):
        return
    if x.ndim == 1:
        witness = x
    else:
        witness = x[np.unravel_index(np.argmin(finite), finite.shape)]
    raise NumericFailure(f"non-finite {what}", state=witness)


def generator(spec: LyapunovSpec, system: SdeSystem, x) -> float:
    """
    Apply the generator to V at x.

    Returns ⟨∇V(x), f(x)⟩ + ½ tr(g(x)ᵀ ∇²V(x) g(x)). A batch of states
    gives an array of values.
    """
    x = as_state(x, system.state_dim)
    with np.errstate(all="ignore"):
        drift_part = dot(spec.grad(x), system.f(x))
        noise_part = noise_trace(system.g(x), spec.hess(x))
        value = drift_part + 0.5 * noise_part
    _finite_or_fail(value, x, "generator value")
    return scalar_or_array(value)


def generator_power(
    spec: LyapunovSpec,
    system: SdeSystem,
    x,
    rho: float,
    offset: Optional[bool] = None,
) -> float:
    """
    Apply the generator to W^ρ with W = 1+V (offset form) or W = V.

    ℒW^ρ = (ρ/2) W^{ρ−2} [2W·ℒV + (ρ−1)|∇V g|²]

    Args:
        offset: force the 1+V form (True) or the V form (False); by default
            the V form is used for the kernel-zero class only

    Raises:
        DegenerateInput: V(x) = 0 in the V form
    """
    x = as_state(x, system.state_dim)
    if offset is None:
        offset = not spec.uses_kernel_power
    lv = np.asarray(generator(spec, system, x), dtype=float)
    if offset and rho == 1.0:
        return scalar_or_array(lv)
    with np.errstate(all="ignore"):
        v = spec.v(x)
        base = 1.0 + v if offset else v
        if not offset and np.any(base <= 0):
            raise DegenerateInput("ℒV^ρ is undefined where V(x)=0")
        cross = gradient_noise_squared(spec.grad(x), system.g(x))
        value = 0.5 * rho * base ** (rho - 2.0) * (2.0 * base * lv + (rho - 1.0) * cross)
    _finite_or_fail(value, x, "ℒV^ρ value")
    return scalar_or_array(value)
