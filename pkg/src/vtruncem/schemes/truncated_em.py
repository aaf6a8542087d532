"""
V-truncated Euler-Maruyama step

    Ỹ_{k+1} = Y_k + f(Y_k)Δ + g(Y_k)ΔB_k
    Y_{k+1} = π_Δ(Ỹ_{k+1})

The finite-time and both stability schemes share this step; they differ
only in the policy whose envelope fixes the truncation radius.
"""

from typing import Optional, Tuple

import numpy as np

from ..core.numerics import apply_noise
from ..core.sde import SdeSystem
from ..core.truncation import TruncationPolicy, project_onto_ball, truncation_radius
from ..errors import NumericFailure


def euler_predictor(system: SdeSystem, y: np.ndarray, dt: float, db: np.ndarray) -> np.ndarray:
    """y + f(y)·dt + g(y)·db"""
    return y + system.f(y) * dt + apply_noise(system.g(y), db)


def step_truncated(
    policy: TruncationPolicy,
    system: SdeSystem,
    y,
    dt: float,
    db,
    radius: Optional[float] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    One truncated step for a state or a batch of states

    Args:
        policy: truncation policy
        system: the SDE
        y: current (already truncated) state(s), shape (..., d)
        dt: step size, at most Δ*
        db: Brownian increment(s), shape (..., m)
        radius: precomputed truncation radius for dt

    Returns:
        (pre, post): predictor and its truncation

    Raises:
        NumericFailure: the predictor is not finite
    """
    y = np.asarray(y, dtype=float)
    db = np.asarray(db, dtype=float)
    if radius is None:
        radius = truncation_radius(policy, dt)
    with np.errstate(all="ignore"):
        pre = euler_predictor(system, y, dt, db)
    finite = np.all(np.isfinite(pre), axis=-1)
    if not np.all(finite):
        witness = y if y.ndim == 1 else y[np.unravel_index(np.argmin(finite), finite.shape)]
        raise NumericFailure("truncated step produced a non-finite predictor", state=witness)
    return pre, project_onto_ball(pre, radius)
