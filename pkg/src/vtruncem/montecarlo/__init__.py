"""
Monte Carlo harness

- brownian: per-path Brownian increments and coarse/fine coupling
- executor: chunked path execution reduced in path_id order
- estimators: moment, strong-error, Lyapunov and stability estimators
  (import from ``vtruncem.montecarlo.estimators``; the schemes depend on
  this package's Brownian grids)
"""

from .brownian import BrownianGrid, brownian_grid, coarsen, coarsen_increments, step_count
from .executor import PathExecutor

__all__ = [
    "BrownianGrid",
    "brownian_grid",
    "coarsen",
    "coarsen_increments",
    "step_count",
    "PathExecutor",
]
