"""
Built-in models

Three worked examples with their published constants: a planar quartic
system with a stability-bar policy, a scalar cubic system whose
exponential stability is tunable through ρ, and a stochastic
Duffing-van der Pol oscillator with a stability-hat policy.
"""

import math
from typing import Callable, Dict, Optional

import numpy as np

from ..core.sde import DecayFunction, LyapunovClass, LyapunovSpec, SdeSystem
from ..core.truncation import MonotoneEnvelope, PolicyVariant, TruncationPolicy
from ..errors import ConfigError, DomainError, PolicyViolation
from .bundle import ModelBundle

SQRT2 = math.sqrt(2.0)
SQRT2_5 = math.sqrt(2.5)


def _radius_squared(x: np.ndarray) -> np.ndarray:
    return x[..., 0] * x[..., 0] + x[..., 1] * x[..., 1]


def _identity_like(x: np.ndarray, scale: np.ndarray) -> np.ndarray:
    out = np.zeros(x.shape[:-1] + (2, 2))
    out[..., 0, 0] = scale
    out[..., 1, 1] = scale
    return out


def example_planar_quartic(x0=(1.0, math.sqrt(3.0)), delta_star: float = 1e-4) -> ModelBundle:
    """
    Planar system f = −2|x|²x, g = 2√2|x|²I₂ with V = |x|²

    Converges to the origin almost surely without being moment
    exponentially stable, so the bundle carries no μ.
    """
    rho = 1.0 / 8.0

    def drift(x):
        return -2.0 * _radius_squared(x)[..., None] * x

    def diffusion(x):
        return _identity_like(x, 2.0 * SQRT2 * _radius_squared(x))

    def hessian(x):
        return _identity_like(x, np.full(x.shape[:-1], 2.0))

    def decay(x):
        return 0.25 * _radius_squared(x) ** (rho + 1.0)

    system = SdeSystem(2, 2, drift, diffusion, equilibrium=np.zeros(2), name="planar-quartic")
    spec = LyapunovSpec(
        value=_radius_squared,
        gradient=lambda x: 2.0 * x,
        hessian=hessian,
        rho=rho,
        delta=0.5,
        smoothness_order=2,
        growth_constant=3.0,
        class_flag=LyapunovClass.KERNEL_ZERO,
    )
    envelope = MonotoneEnvelope(
        forward=lambda u: 16.0 * (u + 2.0) ** 2,
        inverse=lambda v: 0.25 * math.sqrt(v) - 2.0,
        description="16(u+2)^2",
    )
    policy = TruncationPolicy.from_initial_state(PolicyVariant.STABILITY_BAR, envelope, 0.4, delta_star, x0)
    return ModelBundle(
        name="planar-quartic",
        system=system,
        spec=spec,
        decay=DecayFunction(decay, kernel_is_origin=True),
        policy=policy,
        initial_state=np.asarray(x0, dtype=float),
        provenance={
            "w": "w(x) = (1/4)|x|^(2ρ+2) = −ℒV^ρ(x) with ρ = 1/8",
            "envelope": "φ̄(u) = 16(u+2)², φ̄⁻¹(v) = 0.25√v − 2",
            "K": "KΔ^(−θ) = φ̄(|x0| ∨ 1)Δ^(−0.4), K = 256 at x0 = (1, √3)",
            "radius": "4Δ^(−0.2) − 2",
            "c": "3 ≥ |D²V| = 2√2",
            "x0": ", ".join(f"{c:g}" for c in x0),
        },
        description="planar quartic drift, LaSalle convergence without exponential moments",
    ).validate()


def example_scalar_cubic(rho: float = 0.5, x0=19.0, delta_star: float = 0.008) -> ModelBundle:
    """
    Scalar SDE dx = (−0.5x − x³)dt + x dB with V = x²

    Args:
        rho: moment exponent in (0, 1)
        x0: initial state (scalar or length-1 sequence)
        delta_star: largest step size; 0.008 keeps 110(Δ*)^(−1/4) ≥ φ̄(19)

    ℒV^ρ = −2ρ|x|^{2ρ+2} − 2ρ(1−ρ)|x|^{2ρ}; w is taken as −ℒV^ρ itself so
    that w ≥ μV^ρ with μ = 2ρ(1−ρ).
    """
    if not 0.0 < rho < 1.0:
        raise DomainError(f"rho must lie in (0, 1), got {rho}")
    mu = 2.0 * rho * (1.0 - rho)
    offset = 1.0 / mu - 1.0
    initial = np.asarray(x0, dtype=float).reshape(1)

    def decay(x):
        r2 = x[..., 0] * x[..., 0]
        return 2.0 * rho * r2 ** (rho + 1.0) + mu * r2**rho

    system = SdeSystem(
        1,
        1,
        drift=lambda x: -0.5 * x - x**3,
        diffusion=lambda x: x[..., None],
        equilibrium=np.zeros(1),
        name="scalar-cubic",
    )
    spec = LyapunovSpec(
        value=lambda x: x[..., 0] * x[..., 0],
        gradient=lambda x: 2.0 * x,
        hessian=lambda x: np.full(x.shape[:-1] + (1, 1), 2.0),
        rho=rho,
        delta=0.5,
        smoothness_order=2,
        growth_constant=2.0,
        class_flag=LyapunovClass.KERNEL_ZERO,
    )
    envelope = MonotoneEnvelope(
        forward=lambda u: u * u + offset,
        inverse=lambda v: math.sqrt(v - offset),
        description=f"u^2 + {offset:g}",
    )
    policy = TruncationPolicy(
        PolicyVariant.STABILITY_BAR,
        envelope,
        k_const=110.0,
        theta=0.25,
        delta_star=delta_star,
        initial_state=initial,
    )
    return ModelBundle(
        name="scalar-cubic",
        system=system,
        spec=spec,
        decay=DecayFunction(decay, kernel_is_origin=True, mu=mu),
        policy=policy,
        initial_state=initial,
        provenance={
            "w": "w = −ℒV^ρ = 2ρ|x|^(2ρ+2) + 2ρ(1−ρ)|x|^(2ρ), μ = 2ρ(1−ρ)",
            "envelope": "φ̄(u) = u² + 1/μ − 1 (u² + 1 at ρ = 1/2)",
            "K": f"K = 110, θ = 1/4, Δ* = {delta_star:g}",
            "radius": "√(110Δ^(−1/4) − 1) at ρ = 1/2",
            "feasibility": "110·0.008^(−1/4) ≈ 367.81 ≥ φ̄(19) = 362",
            "x0": f"{initial[0]:g}",
        },
        description="scalar cubic drift with linear noise, exponentially stable",
    ).validate()


def example_duffing_vdp(x0=(1.0, 1.0), delta_star: float = 0.01) -> ModelBundle:
    """
    Stochastic Duffing-van der Pol oscillator in the state (z, ż)

    V = x₁⁴ + x₂² + x₁x₂ + 4x₁² gives ℒV = −4x₁²x₂² − x₁² − 0.5x₂² − x₁⁴.
    """

    def drift(x):
        x1, x2 = x[..., 0], x[..., 1]
        return np.stack([x2, -3.0 * x1 - 2.0 * x2 - 2.0 * x2 * x1 * x1 - x1 * x1 * x1], axis=-1)

    def diffusion(x):
        out = np.zeros(x.shape[:-1] + (2, 2))
        out[..., 1, 0] = SQRT2 * x[..., 0]
        out[..., 1, 1] = SQRT2_5 * x[..., 1]
        return out

    def value(x):
        x1, x2 = x[..., 0], x[..., 1]
        return x1**4 + x2 * x2 + x1 * x2 + 4.0 * x1 * x1

    def gradient(x):
        x1, x2 = x[..., 0], x[..., 1]
        return np.stack([4.0 * x1**3 + x2 + 8.0 * x1, 2.0 * x2 + x1], axis=-1)

    def hessian(x):
        out = np.empty(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = 12.0 * x[..., 0] ** 2 + 8.0
        out[..., 0, 1] = 1.0
        out[..., 1, 0] = 1.0
        out[..., 1, 1] = 2.0
        return out

    system = SdeSystem(2, 2, drift, diffusion, equilibrium=np.zeros(2), name="duffing-vdp")
    spec = LyapunovSpec(
        value=value,
        gradient=gradient,
        hessian=hessian,
        rho=1.0,
        delta=0.25,
        smoothness_order=4,
        growth_constant=13.0,
        class_flag=LyapunovClass.HAT,
    )
    envelope = MonotoneEnvelope(
        forward=lambda u: (36.0 + 16.0 * u**4) ** 0.75,
        inverse=lambda v: 0.5 * (v ** (4.0 / 3.0) - 36.0) ** 0.25,
        description="(36+16u^4)^(3/4)",
    )
    policy = TruncationPolicy.from_initial_state(
        PolicyVariant.STABILITY_HAT, envelope, 0.4, delta_star, x0, smoothness_order=4
    )
    x0_norm = max(math.hypot(*x0), 1.0)
    return ModelBundle(
        name="duffing-vdp",
        system=system,
        spec=spec,
        decay=DecayFunction(lambda x: 0.5 * _radius_squared(x), kernel_is_origin=True),
        policy=policy,
        initial_state=np.asarray(x0, dtype=float),
        provenance={
            "generator": "ℒV = −4x₁²x₂² − x₁² − 0.5x₂² − x₁⁴ ≤ −0.5|x|²",
            "envelope": "φ̂(u) = (36+16u⁴)^(3/4), φ̂⁻¹(v) = 0.5(v^(4/3) − 36)^(1/4)",
            "K": "KΔ^(−θ) = φ̂(|x0| ∨ 1)Δ^(−0.4)",
            "published radius": f"(|x0| ∨ 1)Δ^(−0.4) = {x0_norm:g}Δ^(−0.4); the bundle uses φ̂⁻¹(KΔ^(−θ)) instead",
            "convergence": "|Z₁| + |Z₂| → 0 almost surely",
            "x0": f"({x0[0]:g}, {x0[1]:g}), Δ* = {delta_star:g} (not fixed by the published example)",
        },
        convergence_metric=lambda x: np.abs(x[..., 0]) + np.abs(x[..., 1]),
        description="stochastic Duffing-van der Pol oscillator",
    ).validate()


BUILTIN_MODELS: Dict[str, Callable[[], ModelBundle]] = {
    "planar-quartic": example_planar_quartic,
    "scalar-cubic": example_scalar_cubic,
    "duffing-vdp": example_duffing_vdp,
}


def build_model(name: str, x0=None, delta_star: Optional[float] = None, **params) -> ModelBundle:
    """
    Build a registered model, passing only the overrides that were given

    Raises:
        ConfigError: unknown model name or an override the model rejects
    """
    try:
        factory = BUILTIN_MODELS[name]
    except KeyError:
        raise ConfigError(f"unknown model '{name}' (choose from {', '.join(BUILTIN_MODELS)})") from None
    if x0 is not None:
        params["x0"] = x0
    if delta_star is not None:
        params["delta_star"] = delta_star
    try:
        return factory(**params)
    except (DomainError, PolicyViolation) as exc:
        raise ConfigError(f"{name}: {exc}") from exc
    except TypeError as exc:
        raise ConfigError(f"{name} does not accept {', '.join(sorted(params))}") from exc
