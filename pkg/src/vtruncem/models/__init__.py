"""
Model bundles: the three built-in examples and polynomial descriptions
"""

from .bundle import ModelBundle, distance_to_kernel
from .examples import (
    BUILTIN_MODELS,
    build_model,
    example_duffing_vdp,
    example_planar_quartic,
    example_scalar_cubic,
)
from .polynomial import Polynomial, build_polynomial_model

__all__ = [
    "ModelBundle",
    "distance_to_kernel",
    "BUILTIN_MODELS",
    "build_model",
    "example_duffing_vdp",
    "example_planar_quartic",
    "example_scalar_cubic",
    "Polynomial",
    "build_polynomial_model",
]
