"""
Shared fixtures for the vtruncem test suite
"""

import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

# Add src directory to path for testing
src_dir = Path(__file__).parent.parent / "src"
sys.path.insert(0, str(src_dir))

from vtruncem.core.sde import LyapunovClass, LyapunovSpec, SdeSystem  # noqa: E402
from vtruncem.models.examples import (  # noqa: E402
    example_duffing_vdp,
    example_planar_quartic,
    example_scalar_cubic,
)


@pytest.fixture(scope="session")
def scalar_cubic():
    return example_scalar_cubic()


@pytest.fixture(scope="session")
def planar_quartic():
    return example_planar_quartic()


@pytest.fixture(scope="session")
def duffing_vdp():
    return example_duffing_vdp()


@pytest.fixture(scope="session")
def builtin_bundles(scalar_cubic, planar_quartic, duffing_vdp):
    return {
        "scalar-cubic": scalar_cubic,
        "planar-quartic": planar_quartic,
        "duffing-vdp": duffing_vdp,
    }


def linear_system(a: float = -1.0, sigma: float = 0.0) -> SdeSystem:
    """dx = a·x dt + σ·x dB in one dimension"""
    return SdeSystem(
        1,
        1,
        drift=lambda x: a * x,
        diffusion=lambda x: sigma * x[..., None],
        equilibrium=np.zeros(1),
        name="linear",
    )


def square_spec(rho: float = 1.0) -> LyapunovSpec:
    """V = x² in one dimension, offset class"""
    return LyapunovSpec(
        value=lambda x: x[..., 0] * x[..., 0],
        gradient=lambda x: 2.0 * x,
        hessian=lambda x: np.full(x.shape[:-1] + (1, 1), 2.0),
        rho=rho,
        delta=0.5,
        smoothness_order=2,
        growth_constant=2.0,
        class_flag=LyapunovClass.OFFSET,
    )


def zero_noise(bundle):
    """The same bundle with g ≡ 0"""
    d, m = bundle.state_dim, bundle.noise_dim
    system = replace(bundle.system, diffusion=lambda x: np.zeros(np.shape(x)[:-1] + (d, m)))
    return replace(bundle, system=system)
