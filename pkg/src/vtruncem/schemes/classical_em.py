"""
Classical Euler-Maruyama step, the blow-up baseline

No truncation is applied; non-finite or huge states are reported by
``diverged_mask`` instead of raising.
"""

import numpy as np

from ..core.sde import SdeSystem
from .truncated_em import euler_predictor

DIVERGENCE_LEVEL = 1e100


def step_classical(system: SdeSystem, y, dt: float, db) -> np.ndarray:
    """y + f(y)·dt + g(y)·db, unmodified."""
    y = np.asarray(y, dtype=float)
    with np.errstate(all="ignore"):
        return euler_predictor(system, y, dt, np.asarray(db, dtype=float))


def diverged_mask(y: np.ndarray) -> np.ndarray:
    """True where any coordinate is non-finite or exceeds 1e100 in magnitude."""
    with np.errstate(invalid="ignore"):
        return np.any(~np.isfinite(y) | (np.abs(y) > DIVERGENCE_LEVEL), axis=-1)
