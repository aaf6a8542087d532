"""
Euler-Maruyama schemes

The truncated scheme projects each Euler predictor onto the ball fixed
by the truncation policy; the finite-time and both stability variants
share one stepper and differ only in the policy's envelope.
"""

from .classical_em import DIVERGENCE_LEVEL, diverged_mask, step_classical
from .simulation import (
    PathResult,
    SchemeConfig,
    SchemeKind,
    interpolate_auxiliary,
    simulate,
    simulate_batch,
)
from .truncated_em import euler_predictor, step_truncated

__all__ = [
    "DIVERGENCE_LEVEL",
    "diverged_mask",
    "step_classical",
    "PathResult",
    "SchemeConfig",
    "SchemeKind",
    "interpolate_auxiliary",
    "simulate",
    "simulate_batch",
    "euler_predictor",
    "step_truncated",
]
