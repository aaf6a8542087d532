"""
Monte Carlo estimators

Each estimator simulates paths chunk by chunk through a PathExecutor and
reduces the per-path numbers in path_id order, so a report is a pure
function of its inputs and seed whatever the worker count.
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from ..core.sde import LyapunovSpec, RateAssumption
from ..errors import ConfigError, DegenerateInput, NumericFailure
from ..models.bundle import ModelBundle
from ..schemes.simulation import PathResult, SchemeConfig, SchemeKind, simulate_batch
from .brownian import brownian_grid, coarsening_factor
from .executor import PathExecutor

logger = logging.getLogger(__name__)

DEFAULT_BURN_IN = 0.2
MIN_SLOPE_ROWS = 3


class ErrorRow(BaseModel):
    dt: float
    mean_error: float
    stderr: float
    paths: int
    q: float
    u_metric: Optional[float] = None
    u_stderr: Optional[float] = None


class ErrorReport(BaseModel):
    """Strong error of the truncated scheme against a fine reference"""

    model: str
    q: float
    dt_ref: float
    horizon: float
    seed: int
    rows: List[ErrorRow] = Field(default_factory=list)
    slope: Optional[float] = None
    intercept: Optional[float] = None
    notes: List[str] = Field(default_factory=list)


class MomentRow(BaseModel):
    dt: float
    sup_moment: float
    stderr: float
    argmax_step: int
    paths: int
    mean_moment_slope: Optional[float] = None
    series: Optional[List[float]] = None


class MomentReport(BaseModel):
    """sup_k of the sample mean of V^ρ(Y_k), one row per step size"""

    model: str
    rho: float
    horizon: float
    seed: int
    rows: List[MomentRow] = Field(default_factory=list)


class LyapunovEstimate(BaseModel):
    """Least-squares decay rates of log V(Z_k) and log mean V^ρ(Z_k)"""

    slopes: List[float]
    mean_moment_slope: Optional[float] = None
    burn_in_fraction: float = DEFAULT_BURN_IN
    window_start: float = 0.0

    @property
    def median_slope(self) -> float:
        return float(np.median(self.slopes))


class StabilityPathRow(BaseModel):
    path_id: int
    scheme: str
    terminal_norm: float
    terminal_distance: float
    max_vrho: float
    lyap_slope: float
    diverged: bool = False
    diverged_at: Optional[int] = None
    first_truncation_step: Optional[int] = None
    within_radius: bool = True


class StabilityReport(BaseModel):
    """Truncated and classical paths on shared Brownian grids"""

    model: str
    dt: float
    horizon: float
    paths: int
    seed: int
    threshold: float
    radius: float
    rows: List[StabilityPathRow] = Field(default_factory=list)
    converged_fraction: float = 0.0
    bounded_fraction: float = 0.0
    classical_divergence_fraction: Optional[float] = None
    median_lyap_slope: Optional[float] = None
    lyap_slope_stderr: Optional[float] = None
    mean_moment_slope: Optional[float] = None

    @property
    def truncated_rows(self) -> List[StabilityPathRow]:
        return [row for row in self.rows if row.scheme == SchemeKind.TRUNCATED.value]

    @property
    def classical_rows(self) -> List[StabilityPathRow]:
        return [row for row in self.rows if row.scheme == SchemeKind.CLASSICAL.value]


def fit_loglog(xs: Sequence[float], ys: Sequence[float]) -> Tuple[float, float]:
    """
    Least-squares line through (log x, log y)

    Returns:
        (slope, intercept)

    Raises:
        DegenerateInput: fewer than two points or a non-positive value
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise DegenerateInput("need at least two points of equal count for a log-log fit")
    if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise DegenerateInput("log-log fit needs positive finite values")
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope), float(intercept)


def _fit_line(t: np.ndarray, y: np.ndarray) -> float:
    slope, _ = np.polyfit(t, y, 1)
    return float(slope)


def _mean_and_stderr(samples: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Column means and normal-approximation standard errors over axis 0."""
    count = samples.shape[0]
    mean = samples.mean(axis=0)
    if count < 2:
        return mean, np.zeros_like(mean)
    return mean, samples.std(axis=0, ddof=1) / math.sqrt(count)


def _window_start(n_steps: int, burn_in_fraction: float) -> int:
    return int(math.ceil(burn_in_fraction * n_steps - 1e-9))


def pathwise_slope(v_values: np.ndarray, dt: float, burn_in_fraction: float = DEFAULT_BURN_IN) -> float:
    """
    Slope of log V(Z_k) against kΔ after the burn-in

    Steps with V = 0 or non-finite V are skipped; a path with fewer than
    two usable points reports −inf.
    """
    v = np.asarray(v_values, dtype=float)
    start = _window_start(v.shape[0] - 1, burn_in_fraction)
    k = np.arange(start, v.shape[0])
    window = v[start:]
    usable = np.isfinite(window) & (window > 0)
    if np.count_nonzero(usable) < 2:
        return -math.inf
    return _fit_line(k[usable] * dt, np.log(window[usable]))


def _mean_moment_slope(v_rho: np.ndarray, dt: float, burn_in_fraction: float) -> Optional[float]:
    mean = v_rho.mean(axis=0)
    start = _window_start(mean.shape[0] - 1, burn_in_fraction)
    k = np.arange(start, mean.shape[0])
    window = mean[start:]
    usable = np.isfinite(window) & (window > 0)
    if np.count_nonzero(usable) < 2:
        return None
    return _fit_line(k[usable] * dt, np.log(window[usable]))


def estimate_lyapunov(
    paths: Sequence[PathResult],
    spec: LyapunovSpec,
    dt: float,
    burn_in_fraction: float = DEFAULT_BURN_IN,
) -> LyapunovEstimate:
    """
    Pathwise and mean-moment exponential decay rates

    Args:
        paths: simulated paths sharing dt, with V values recorded
        spec: supplies ρ for the mean-moment series
        dt: common step size
        burn_in_fraction: leading share of the horizon left out of the fit

    Raises:
        ConfigError: paths with another dt, missing V values, or a burn-in outside [0, 0.9]
        DegenerateInput: every path starts with V = 0
    """
    if not 0.0 <= burn_in_fraction <= 0.9:
        raise ConfigError(f"burn-in fraction must lie in [0, 0.9], got {burn_in_fraction}")
    if not paths:
        raise ConfigError("no paths to fit")
    for path in paths:
        if path.v_values is None:
            raise ConfigError(f"path {path.path_id} was simulated without V values")
        if abs(path.dt - dt) > 1e-12 * dt:
            raise ConfigError(f"path {path.path_id} has dt={path.dt:g}, expected {dt:g}")
    if all(path.v_values[0] == 0.0 for path in paths):
        raise DegenerateInput("every path starts at V = 0; no decay rate to estimate")

    slopes = [pathwise_slope(path.v_values, dt, burn_in_fraction) for path in paths]
    full = [path.v_values for path in paths if path.v_values.shape[0] == path.n_steps + 1]
    mean_slope = None
    if full:
        with np.errstate(all="ignore"):
            stacked = np.stack(full) ** spec.rho
        if np.all(np.isfinite(stacked)):
            mean_slope = _mean_moment_slope(stacked, dt, burn_in_fraction)
    n_steps = paths[0].n_steps
    return LyapunovEstimate(
        slopes=slopes,
        mean_moment_slope=mean_slope,
        burn_in_fraction=burn_in_fraction,
        window_start=_window_start(n_steps, burn_in_fraction) * dt,
    )


def _executor(executor: Optional[PathExecutor]) -> PathExecutor:
    return executor if executor is not None else PathExecutor()


def estimate_moment_sup(
    bundle: ModelBundle,
    rho: float,
    dts: Sequence[float],
    horizon: float,
    paths: int,
    seed: int,
    executor: Optional[PathExecutor] = None,
    keep_series: bool = False,
) -> MomentReport:
    """
    sup over k ≤ T/Δ of the sample mean of V^ρ(Y_k) for each Δ

    Raises:
        ConfigError: fewer than two paths
        PolicyViolation: a step size above Δ*
        NumericFailure: a non-finite V value on a truncated path
    """
    if paths < 2:
        raise ConfigError(f"need at least 2 paths, got {paths}")
    if not rho > 0:
        raise ConfigError(f"rho must be positive, got {rho}")
    runner = _executor(executor)
    report = MomentReport(model=bundle.name, rho=rho, horizon=horizon, seed=seed)
    for dt in sorted(dts, reverse=True):
        config = SchemeConfig(SchemeKind.TRUNCATED, dt, horizon, bundle.initial_state, bundle.policy)

        def run(chunk: range) -> List[np.ndarray]:
            grids = [brownian_grid(seed, pid, horizon, dt, bundle.noise_dim) for pid in chunk]
            results = simulate_batch(config, bundle.system, bundle.spec, grids, store_states=False)
            out = []
            for result in results:
                if not np.all(np.isfinite(result.v_values)):
                    raise NumericFailure(f"non-finite V on truncated path {result.path_id}", result.terminal_state)
                out.append(np.power(result.v_values, rho))
            return out

        series = np.stack(runner.map_paths(run, paths))
        mean, stderr = _mean_and_stderr(series)
        k = int(np.argmax(mean))
        report.rows.append(
            MomentRow(
                dt=dt,
                sup_moment=float(mean[k]),
                stderr=float(stderr[k]),
                argmax_step=k,
                paths=paths,
                mean_moment_slope=_mean_moment_slope(series, dt, DEFAULT_BURN_IN),
                series=[float(m) for m in mean] if keep_series else None,
            )
        )
        logger.info("dt=%g: sup mean V^%g = %.6g at step %d", dt, rho, mean[k], k)
    return report


def estimate_strong_error(
    bundle: ModelBundle,
    q: float,
    dts: Sequence[float],
    dt_ref: float,
    horizon: float,
    paths: int,
    seed: int,
    rate_assumption: Optional[RateAssumption] = None,
    executor: Optional[PathExecutor] = None,
) -> ErrorReport:
    """
    Mean of |X_ref(T) − Y(T)|^q over coupled paths for each Δ

    The reference is the truncated scheme at dt_ref; the coarse paths use
    block sums of the same fine increments.

    Raises:
        ConfigError: q ≤ 0, fewer than two paths, or dt_ref not dividing a Δ
        PolicyViolation: a step size above Δ*
    """
    if not q > 0:
        raise ConfigError(f"q must be positive, got {q}")
    if paths < 2:
        raise ConfigError(f"need at least 2 paths, got {paths}")
    steps = sorted(set(float(dt) for dt in dts), reverse=True)
    for dt in steps:
        coarsening_factor(dt, dt_ref)
    assumption = rate_assumption if rate_assumption is not None else bundle.rate_assumption
    report = ErrorReport(model=bundle.name, q=q, dt_ref=dt_ref, horizon=horizon, seed=seed)
    if assumption is not None:
        if not assumption.admits_moment(q):
            report.notes.append(f"q={q:g} is not below p̄={assumption.p_bar:g}; the error bound does not apply")
        report.notes.extend(assumption.check(bundle.spec, bundle.policy.theta))

    reference = SchemeConfig(SchemeKind.TRUNCATED, dt_ref, horizon, bundle.initial_state, bundle.policy)
    coarse = [SchemeConfig(SchemeKind.TRUNCATED, dt, horizon, bundle.initial_state, bundle.policy) for dt in steps]
    runner = _executor(executor)

    def run(chunk: range) -> List[Tuple[np.ndarray, List[np.ndarray]]]:
        grids = [brownian_grid(seed, pid, horizon, dt_ref, bundle.noise_dim) for pid in chunk]
        ref = simulate_batch(reference, bundle.system, None, grids, store_states=False, store_values=False)
        per_dt = [
            simulate_batch(config, bundle.system, None, grids, store_states=False, store_values=False)
            for config in coarse
        ]
        return [
            (ref[i].terminal_state, [results[i].terminal_state for results in per_dt])
            for i in range(len(grids))
        ]

    outcomes = runner.map_paths(run, paths)
    x_ref = np.stack([ref for ref, _ in outcomes])
    for j, dt in enumerate(steps):
        y = np.stack([terminals[j] for _, terminals in outcomes])
        diff = y - x_ref
        errors = np.linalg.norm(diff, axis=-1) ** q
        mean, stderr = _mean_and_stderr(errors[:, None])
        row = ErrorRow(dt=dt, mean_error=float(mean[0]), stderr=float(stderr[0]), paths=paths, q=q)
        if assumption is not None:
            u = np.asarray(assumption.metric_u(diff), dtype=float)
            u_mean, u_err = _mean_and_stderr(u[:, None])
            row.u_metric, row.u_stderr = float(u_mean[0]), float(u_err[0])
        report.rows.append(row)
        logger.info("dt=%g: mean error %.6g ± %.2g", dt, row.mean_error, row.stderr)

    usable = [row for row in report.rows if row.mean_error > 0 and math.isfinite(row.mean_error)]
    if len(usable) >= MIN_SLOPE_ROWS:
        report.slope, report.intercept = fit_loglog([r.dt for r in usable], [r.mean_error for r in usable])
    else:
        report.notes.append(f"slope needs at least {MIN_SLOPE_ROWS} rows with positive error, have {len(usable)}")
    return report


def stability_experiment(
    bundle: ModelBundle,
    dt: float,
    horizon: float,
    paths: int,
    seed: int,
    threshold: float,
    executor: Optional[PathExecutor] = None,
    burn_in_fraction: float = DEFAULT_BURN_IN,
    classical: bool = True,
) -> StabilityReport:
    """
    Long-run behaviour of the truncated scheme against classical EM

    Both schemes consume the same Brownian grid per path_id. Divergence
    of a classical path is recorded as data.

    Raises:
        ConfigError: fewer than one path or a non-positive threshold
        PolicyViolation: dt above Δ*
    """
    if paths < 1:
        raise ConfigError(f"need at least 1 path, got {paths}")
    if not threshold > 0:
        raise ConfigError(f"threshold must be positive, got {threshold}")
    truncated_cfg = SchemeConfig(SchemeKind.TRUNCATED, dt, horizon, bundle.initial_state, bundle.policy)
    classical_cfg = SchemeConfig(SchemeKind.CLASSICAL, dt, horizon, bundle.initial_state)
    radius = truncated_cfg.radius
    rho = bundle.spec.rho
    runner = _executor(executor)

    def row_for(result: PathResult) -> StabilityPathRow:
        with np.errstate(all="ignore"):
            v_rho = np.power(result.v_values, rho)
            finite = v_rho[np.isfinite(v_rho)]
            terminal_norm = float(np.linalg.norm(result.terminal_state))
            distance = float(bundle.terminal_metric(result.terminal_state))
        if result.diverged:
            terminal_norm = distance = math.inf
        return StabilityPathRow(
            path_id=result.path_id,
            scheme=result.scheme_kind.value,
            terminal_norm=terminal_norm,
            terminal_distance=distance,
            max_vrho=math.inf if result.diverged else float(finite.max()),
            lyap_slope=pathwise_slope(result.v_values, dt, burn_in_fraction),
            diverged=result.diverged,
            diverged_at=result.diverged_at,
            first_truncation_step=result.first_truncation_step,
            within_radius=result.radius is None or result.max_norm <= result.radius,
        )

    def run(chunk: range):
        grids = [brownian_grid(seed, pid, horizon, dt, bundle.noise_dim) for pid in chunk]
        truncated = simulate_batch(truncated_cfg, bundle.system, bundle.spec, grids, store_states=False)
        others = (
            simulate_batch(classical_cfg, bundle.system, bundle.spec, grids, store_states=False)
            if classical
            else [None] * len(grids)
        )
        return [
            (row_for(t), None if c is None else row_for(c), np.power(t.v_values, rho))
            for t, c in zip(truncated, others)
        ]

    outcomes = runner.map_paths(run, paths)
    truncated_rows = [t for t, _, _ in outcomes]
    classical_rows = [c for _, c, _ in outcomes if c is not None]
    report = StabilityReport(
        model=bundle.name,
        dt=dt,
        horizon=horizon,
        paths=paths,
        seed=seed,
        threshold=threshold,
        radius=radius,
        rows=truncated_rows + classical_rows,
    )
    report.converged_fraction = sum(r.terminal_distance < threshold for r in truncated_rows) / paths
    report.bounded_fraction = sum(r.within_radius for r in truncated_rows) / paths
    if classical:
        report.classical_divergence_fraction = sum(r.diverged for r in classical_rows) / paths

    slopes = np.array([r.lyap_slope for r in truncated_rows])
    if np.any(slopes > -math.inf):
        report.median_lyap_slope = float(np.median(slopes))
        finite = slopes[np.isfinite(slopes)]
        if finite.size >= 2:
            report.lyap_slope_stderr = float(finite.std(ddof=1) / math.sqrt(finite.size))
        moments = np.stack([series for _, _, series in outcomes])
        report.mean_moment_slope = _mean_moment_slope(moments, dt, burn_in_fraction)
    else:
        report.median_lyap_slope = -math.inf
    logger.info(
        "%s: %.0f%% converged, %.0f%% within radius, classical divergence %s",
        bundle.name,
        100 * report.converged_fraction,
        100 * report.bounded_fraction,
        "n/a" if report.classical_divergence_fraction is None else f"{100 * report.classical_divergence_fraction:.0f}%",
    )
    return report
