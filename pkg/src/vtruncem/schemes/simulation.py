"""
Path simulation for the truncated and classical schemes

``simulate_batch`` advances a whole batch of paths with elementwise
array arithmetic, one row per path, so each path's numbers are the same
whatever batch it is simulated in.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, List, Optional, Sequence

import numpy as np

from ..core.numerics import apply_noise, as_state, vector_norm
from ..core.sde import LyapunovSpec, SdeSystem
from ..core.truncation import TruncationPolicy, truncation_radius
from ..errors import ConfigError, DomainError
from ..montecarlo.brownian import BrownianGrid, coarsen_increments, coarsening_factor, step_count
from .classical_em import diverged_mask, step_classical
from .truncated_em import step_truncated

logger = logging.getLogger(__name__)


class SchemeKind(Enum):
    TRUNCATED = "truncated"
    CLASSICAL = "classical"

    @classmethod
    def parse(cls, text: str) -> "SchemeKind":
        key = text.strip().lower()
        aliases = {"truncatedem": "truncated", "truncated-em": "truncated", "classicalem": "classical", "classical-em": "classical", "em": "classical"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ConfigError(f"unknown scheme '{text}' (expected truncated or classical)") from None


@dataclass(frozen=True, eq=False)
class SchemeConfig:
    """Scheme, step size, horizon and initial state of a simulation"""

    scheme_kind: SchemeKind
    dt: float
    horizon: float
    initial_state: np.ndarray
    policy: Optional[TruncationPolicy] = None

    def __post_init__(self):
        x0 = np.array(self.initial_state, dtype=float).reshape(-1)
        x0.setflags(write=False)
        object.__setattr__(self, "initial_state", x0)
        if self.scheme_kind is SchemeKind.TRUNCATED:
            if self.policy is None:
                raise ConfigError("the truncated scheme needs a truncation policy")
            self.policy.check_step(self.dt)
        object.__setattr__(self, "_n_steps", step_count(self.horizon, self.dt))

    @property
    def n_steps(self) -> int:
        return self._n_steps

    @property
    def radius(self) -> Optional[float]:
        if self.scheme_kind is not SchemeKind.TRUNCATED:
            return None
        return truncation_radius(self.policy, self.dt)


@dataclass(eq=False)
class PathResult:
    """One simulated trajectory and its diagnostics"""

    path_id: int
    seed: int
    scheme_kind: SchemeKind
    dt: float
    n_steps: int
    initial_state: np.ndarray
    terminal_state: np.ndarray
    states: Optional[np.ndarray] = None
    pre_truncation: Optional[np.ndarray] = None
    v_values: Optional[np.ndarray] = None
    truncated_flags: Optional[np.ndarray] = None
    first_truncation_step: Optional[int] = None
    diverged_at: Optional[int] = None
    radius: Optional[float] = None
    max_norm: float = 0.0

    @property
    def diverged(self) -> bool:
        return self.diverged_at is not None

    @property
    def times(self) -> np.ndarray:
        count = self.states.shape[0] if self.states is not None else self.v_values.shape[0]
        return np.arange(count) * self.dt

    @property
    def norms(self) -> np.ndarray:
        if self.states is None:
            raise ConfigError("path was simulated without stored states")
        with np.errstate(over="ignore", invalid="ignore"):
            return vector_norm(self.states)

    def rows(self) -> Iterator[list]:
        """Rows of (step, t, y_1..y_d, v, truncated) for the path CSV."""
        if self.states is None:
            raise ConfigError("path was simulated without stored states")
        for k, y in enumerate(self.states):
            v = float(self.v_values[k]) if self.v_values is not None else float("nan")
            flag = 0
            if k >= 1 and self.truncated_flags is not None:
                flag = int(self.truncated_flags[k - 1])
            yield [k, k * self.dt, *(float(c) for c in y), v, flag]


def _check_grids(config: SchemeConfig, system: SdeSystem, grids: Sequence[BrownianGrid]) -> int:
    fine = grids[0].fine_step
    for grid in grids:
        if grid.noise_dim != system.noise_dim:
            raise ConfigError(f"Brownian grid has {grid.noise_dim} noise dimensions, model has {system.noise_dim}")
        if abs(grid.horizon - config.horizon) > 1e-9 * config.horizon:
            raise ConfigError(f"Brownian grid horizon {grid.horizon:g} differs from T={config.horizon:g}")
        if grid.fine_step != fine:
            raise ConfigError("Brownian grids in one batch must share the fine step")
    factor = coarsening_factor(config.dt, fine)
    if grids[0].n_steps != factor * config.n_steps:
        raise ConfigError("Brownian grid does not cover the simulation horizon")
    return factor


def simulate_batch(
    config: SchemeConfig,
    system: SdeSystem,
    spec: Optional[LyapunovSpec],
    grids: Sequence[BrownianGrid],
    store_states: bool = True,
    store_pre: bool = False,
    store_values: bool = True,
) -> List[PathResult]:
    """
    Simulate one path per Brownian grid, all in one array pass

    Args:
        config: scheme configuration
        system: the SDE
        spec: Lyapunov spec used to record V(Y_k); None skips the values
        grids: Brownian grids, fine step dividing config.dt
        store_states: keep Y_0..Y_N (terminal state is always kept)
        store_pre: keep the predictors Ỹ_1..Ỹ_N of the truncated scheme
        store_values: keep V(Y_k)

    Returns:
        PathResults in the order of ``grids``
    """
    if not grids:
        return []
    x0 = as_state(config.initial_state, system.state_dim)
    factor = _check_grids(config, system, grids)
    increments = np.stack([grid.increments for grid in grids])
    db_all = increments if factor == 1 else coarsen_increments(increments, factor)

    n, dt = config.n_steps, config.dt
    paths, dim = len(grids), system.state_dim
    truncated = config.scheme_kind is SchemeKind.TRUNCATED
    radius = config.radius
    store_values = store_values and spec is not None

    y = np.broadcast_to(x0, (paths, dim)).copy()
    states = np.empty((paths, n + 1, dim)) if store_states else None
    pre = np.empty((paths, n, dim)) if (store_pre and truncated) else None
    values = np.empty((paths, n + 1)) if store_values else None
    flags = np.zeros((paths, n), dtype=bool) if truncated else None
    first_hit = np.full(paths, -1)
    diverged_at = np.full(paths, -1)
    alive = np.ones(paths, dtype=bool)
    last = y.copy()
    max_norm = vector_norm(y)

    def record(k: int, current: np.ndarray) -> None:
        if states is not None:
            states[:, k] = current
        if values is not None:
            with np.errstate(all="ignore"):
                values[:, k] = spec.v(current)

    record(0, y)
    logger.debug("simulating %d %s paths, %d steps of %g", paths, config.scheme_kind.value, n, dt)
    for k in range(n):
        db = db_all[:, k, :]
        if truncated:
            predictor, y = step_truncated(config.policy, system, y, dt, db, radius)
            hit = vector_norm(predictor) > radius
            flags[:, k] = hit
            first_hit[hit & (first_hit < 0)] = k + 1
            if pre is not None:
                pre[:, k] = predictor
            record(k + 1, y)
            max_norm = np.maximum(max_norm, vector_norm(y))
        else:
            dead_before = ~alive
            nxt = step_classical(system, y, dt, db)
            newly = diverged_mask(nxt) & alive
            diverged_at[newly] = k + 1
            alive &= ~newly
            last = np.where(dead_before[:, None], last, nxt)
            y = np.where(alive[:, None], nxt, 0.0)
            record(k + 1, np.where(dead_before[:, None], np.nan, nxt))
            with np.errstate(all="ignore"):
                max_norm = np.where(dead_before, max_norm, np.fmax(max_norm, vector_norm(nxt)))
    if truncated:
        last = y

    results = []
    for i, grid in enumerate(grids):
        stop = n + 1 if diverged_at[i] < 0 else diverged_at[i] + 1
        results.append(
            PathResult(
                path_id=grid.path_id,
                seed=grid.seed,
                scheme_kind=config.scheme_kind,
                dt=dt,
                n_steps=n,
                initial_state=x0.copy(),
                terminal_state=last[i].copy(),
                states=None if states is None else states[i, :stop].copy(),
                pre_truncation=None if pre is None else pre[i].copy(),
                v_values=None if values is None else values[i, :stop].copy(),
                truncated_flags=None if flags is None else flags[i].copy(),
                first_truncation_step=None if first_hit[i] < 0 else int(first_hit[i]),
                diverged_at=None if diverged_at[i] < 0 else int(diverged_at[i]),
                radius=radius,
                max_norm=float(max_norm[i]),
            )
        )
    return results


def simulate(
    config: SchemeConfig,
    system: SdeSystem,
    spec: Optional[LyapunovSpec],
    brownian: BrownianGrid,
    store_pre: bool = True,
) -> PathResult:
    """Simulate a single path with every field recorded."""
    return simulate_batch(config, system, spec, [brownian], store_states=True, store_pre=store_pre)[0]


def interpolate_auxiliary(path: PathResult, system: SdeSystem, brownian: BrownianGrid, t: float) -> np.ndarray:
    """
    Affine interpolant Ȳ(t) = Y_k + f(Y_k)(t − t_k) + g(Y_k)(B(t) − B(t_k))

    Returns Y_k itself at grid times.

    Raises:
        DomainError: t outside [0, T]
    """
    horizon = path.n_steps * path.dt
    if t < 0 or t > horizon * (1.0 + 1e-12):
        raise DomainError(f"t={t:g} outside [0, {horizon:g}]")
    if path.states is None:
        raise ConfigError("path was simulated without stored states")
    position = t / path.dt
    k = int(round(position))
    if abs(position - k) <= 1e-9 * max(position, 1.0):
        return path.states[min(k, path.states.shape[0] - 1)].copy()
    k = int(np.floor(position))
    yk = path.states[k]
    tk = k * path.dt
    db = brownian.value_at(t) - brownian.value_at(tk)
    return yk + system.f(yk) * (t - tk) + apply_noise(system.g(yk), db)
