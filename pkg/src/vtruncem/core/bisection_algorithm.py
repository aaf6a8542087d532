"""
Bisection Algorithm Module

Numeric inversion of strictly increasing growth envelopes. The bisection
method repeatedly bisects a bracketing interval and keeps the half in
which the preimage must lie; the bracket itself is found by doubling
from the envelope's domain floor.
"""

import logging
import math
from typing import Callable, Tuple

from scipy.optimize import bisect

from ..errors import DomainError

logger = logging.getLogger(__name__)


class BisectionAlgorithm:
    """
    Bisection inversion of an increasing function on [floor, ∞)

    Terminates at relative bracket width ``rel_width`` or after
    ``max_iterations`` halvings, whichever comes first.
    """

    def __init__(self, rel_width: float = 1e-12, max_iterations: int = 200, max_doublings: int = 1100):
        self.rel_width = rel_width
        self.max_iterations = max_iterations
        self.max_doublings = max_doublings

    def find_bracket(self, func: Callable[[float], float], target: float, floor: float) -> Tuple[float, float]:
        """
        Find [lo, hi] with func(lo) ≤ target ≤ func(hi)

        Args:
            func: Strictly increasing function
            target: Value to bracket
            floor: Smallest admissible argument

        Returns:
            The bracketing pair
        """
        lo = floor
        if func(lo) > target:
            raise DomainError(f"value {target:g} lies below the envelope's range at u={floor:g}")
        hi = max(2.0 * lo, 1.0) if lo > 0 else 1.0
        for _ in range(self.max_doublings):
            value = func(hi)
            if value >= target:
                return lo, hi
            if not math.isfinite(value) or not math.isfinite(hi):
                break
            lo, hi = hi, 2.0 * hi
        raise DomainError(f"could not bracket the preimage of {target:g}")

    def find_preimage(self, func: Callable[[float], float], target: float, floor: float = 1.0) -> float:
        """
        Solve func(u) = target for u ≥ floor

        Args:
            func: Strictly increasing function
            target: Value in the range of func on [floor, ∞)
            floor: Smallest admissible argument

        Returns:
            u with func(u) within the bisection tolerance of target
        """
        lo, hi = self.find_bracket(func, target, floor)
        if func(lo) == target:
            return lo
        if func(hi) == target:
            return hi
        root = bisect(
            lambda u: func(u) - target,
            lo,
            hi,
            xtol=1e-300,
            rtol=self.rel_width,
            maxiter=self.max_iterations,
            disp=False,
        )
        logger.debug("bisection preimage of %.17g on [%.6g, %.6g] -> %.17g", target, lo, hi, root)
        return float(root)
