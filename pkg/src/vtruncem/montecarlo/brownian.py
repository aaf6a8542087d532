"""
Brownian increments keyed by (seed, path_id)

Each path draws from its own numpy Philox stream seeded with
SeedSequence([seed, path_id]); draws are standard normals scaled by
√dt_fine. For a fixed numpy version a grid is bitwise reproducible from
(seed, path_id, T, dt_fine, m) alone, independently of any other path.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DomainError

logger = logging.getLogger(__name__)

STEP_COUNT_TOL = 1e-9


def step_count(horizon: float, dt: float) -> int:
    """N = round(T/dt), requiring |N·dt − T| ≤ 1e-9·T."""
    if not dt > 0 or not horizon > 0:
        raise ConfigError(f"horizon and step size must be positive (T={horizon}, dt={dt})")
    n = int(round(horizon / dt))
    if n < 1 or abs(n * dt - horizon) > STEP_COUNT_TOL * horizon:
        raise ConfigError(f"T={horizon:g} is not an integer multiple of dt={dt:g}")
    return n


def path_generator(seed: int, path_id: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(path_id)])))


@dataclass(frozen=True, eq=False)
class BrownianGrid:
    """Fine-grid Brownian increments of one path"""

    seed: int
    path_id: int
    horizon: float
    fine_step: float
    noise_dim: int
    increments: np.ndarray

    @property
    def n_steps(self) -> int:
        return self.increments.shape[0]

    def path(self) -> np.ndarray:
        """B at the fine nodes, shape (N+1, m), starting from 0."""
        out = np.zeros((self.n_steps + 1, self.noise_dim))
        np.cumsum(self.increments, axis=0, out=out[1:])
        return out

    def value_at(self, t: float) -> np.ndarray:
        """B(t), linear between fine nodes."""
        if t < 0 or t > self.horizon * (1.0 + STEP_COUNT_TOL):
            raise DomainError(f"t={t:g} outside [0, {self.horizon:g}]")
        nodes = self.path()
        position = min(t / self.fine_step, float(self.n_steps))
        if abs(position - round(position)) <= STEP_COUNT_TOL * max(position, 1.0):
            position = float(round(position))
        j = int(np.floor(position))
        if j >= self.n_steps:
            return nodes[self.n_steps].copy()
        frac = position - j
        if frac == 0.0:
            return nodes[j].copy()
        return nodes[j] + frac * (nodes[j + 1] - nodes[j])


def brownian_grid(seed: int, path_id: int, horizon: float, dt_fine: float, noise_dim: int) -> BrownianGrid:
    """
    Draw the fine-grid increments of one path

    Args:
        seed: experiment seed
        path_id: path index; distinct ids give independent streams
        horizon: T
        dt_fine: fine step; T/dt_fine must be an integer
        noise_dim: m
    """
    if noise_dim < 1:
        raise ConfigError("noise dimension must be positive")
    n = step_count(horizon, dt_fine)
    draws = path_generator(seed, path_id).standard_normal((n, noise_dim))
    increments = draws * np.sqrt(dt_fine)
    increments.setflags(write=False)
    return BrownianGrid(int(seed), int(path_id), float(horizon), float(dt_fine), int(noise_dim), increments)


def coarsen_increments(increments: np.ndarray, factor: int) -> np.ndarray:
    """
    Block sums of ``factor`` consecutive increments along the step axis.

    ``increments`` has shape (..., N, m); sums run in index order.
    """
    if isinstance(factor, float):
        if not factor.is_integer():
            raise ConfigError(f"coarsening factor must be an integer, got {factor}")
        factor = int(factor)
    n = increments.shape[-2]
    if factor < 1 or n % factor:
        raise ConfigError(f"factor {factor} does not divide the {n} fine steps")
    if factor == 1:
        return np.array(increments, copy=True)
    blocks = increments.reshape(increments.shape[:-2] + (n // factor, factor, increments.shape[-1]))
    acc = blocks[..., 0, :].copy()
    for i in range(1, factor):
        acc += blocks[..., i, :]
    return acc


def coarsen(grid: BrownianGrid, factor: int) -> np.ndarray:
    """Coarse increments at dt = factor·dt_fine, shape (N/factor, m)."""
    return coarsen_increments(grid.increments, factor)


def coarsening_factor(dt: float, dt_fine: float) -> int:
    """Integer r with r·dt_fine = dt within 1e-9."""
    ratio = dt / dt_fine
    r = int(round(ratio))
    if r < 1 or abs(r - ratio) > STEP_COUNT_TOL * max(ratio, 1.0):
        raise ConfigError(f"dt={dt:g} is not an integer multiple of the fine step {dt_fine:g}")
    return r
