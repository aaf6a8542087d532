"""
Tests for Brownian streams, the path executor and the Monte Carlo estimators
"""

import math
import threading

import numpy as np
import pytest

from tests.conftest import linear_system, square_spec, zero_noise
from vtruncem.errors import ConfigError, DegenerateInput, PolicyViolation
from vtruncem.models.examples import example_scalar_cubic
from vtruncem.montecarlo.brownian import (
    brownian_grid,
    coarsen,
    coarsen_increments,
    coarsening_factor,
    step_count,
)
from vtruncem.montecarlo.estimators import (
    estimate_lyapunov,
    estimate_moment_sup,
    estimate_strong_error,
    fit_loglog,
    pathwise_slope,
    stability_experiment,
)
from vtruncem.montecarlo.executor import PathExecutor
from vtruncem.schemes.simulation import SchemeConfig, SchemeKind, simulate, simulate_batch


class TestBrownian:
    """Test keyed Brownian increments and their coarsening"""

    def test_reproducible(self):
        a = brownian_grid(7, 3, 1.0, 2**-8, 2)
        b = brownian_grid(7, 3, 1.0, 2**-8, 2)
        np.testing.assert_array_equal(a.increments, b.increments)
        assert a.increments.shape == (256, 2)

    def test_streams_differ_by_path_and_seed(self):
        base = brownian_grid(7, 3, 1.0, 2**-8, 1).increments
        assert not np.array_equal(base, brownian_grid(7, 4, 1.0, 2**-8, 1).increments)
        assert not np.array_equal(base, brownian_grid(8, 3, 1.0, 2**-8, 1).increments)

    def test_variance_scales_with_step(self):
        """Increments are N(0, dt_fine): sample variance within a few percent"""
        dt = 2**-10
        grid = brownian_grid(0, 0, 64.0, dt, 1)
        assert grid.increments.var() == pytest.approx(dt, rel=0.05)
        assert abs(grid.increments.mean()) < 5.0 * math.sqrt(dt / grid.n_steps)

    def test_coarsen_block_sums(self):
        increments = np.array([[1.0], [2.0], [4.0], [8.0]])
        np.testing.assert_array_equal(coarsen_increments(increments, 2), [[3.0], [12.0]])
        np.testing.assert_array_equal(coarsen_increments(increments, 4), [[15.0]])

    def test_coarsen_preserves_endpoint(self):
        grid = brownian_grid(1, 0, 1.0, 2**-10, 2)
        coarse = coarsen(grid, 2**4)
        assert coarse.shape == (64, 2)
        np.testing.assert_allclose(coarse.sum(axis=0), grid.path()[-1], rtol=1e-12, atol=1e-14)

    def test_coarsen_rejects_non_divisor(self):
        with pytest.raises(ConfigError):
            coarsen_increments(np.zeros((6, 1)), 4)
        with pytest.raises(ConfigError):
            coarsen_increments(np.zeros((6, 1)), 1.5)

    def test_coarsening_factor(self):
        assert coarsening_factor(2**-6, 2**-16) == 1024
        with pytest.raises(ConfigError):
            coarsening_factor(0.003, 0.002)

    def test_step_count(self):
        assert step_count(10.0, 0.005) == 2000
        with pytest.raises(ConfigError):
            step_count(1.0, 0.3)

    def test_value_at_interpolates(self):
        grid = brownian_grid(2, 0, 1.0, 0.25, 1)
        nodes = grid.path()
        np.testing.assert_array_equal(grid.value_at(0.5), nodes[2])
        np.testing.assert_allclose(grid.value_at(0.375), 0.5 * (nodes[1] + nodes[2]))


class TestPathExecutor:
    """Test chunked execution and ordered reduction"""

    def test_chunks(self):
        chunks = PathExecutor(chunk_size=4).chunks(10)
        assert [list(c) for c in chunks] == [[0, 1, 2, 3], [4, 5, 6, 7], [8, 9]]

    def test_results_in_path_order(self):
        """Results come back by path id whatever the thread interleaving"""
        seen = []
        lock = threading.Lock()

        def work(chunk):
            with lock:
                seen.append(chunk.start)
            return [pid * pid for pid in chunk]

        results = PathExecutor(workers=4, chunk_size=3).map_paths(work, 20)
        assert results == [pid * pid for pid in range(20)]
        assert sorted(seen) == list(range(0, 20, 3))

    def test_progress_counts_paths(self):
        done = []
        executor = PathExecutor(workers=2, chunk_size=4, progress=done.append)
        executor.map_paths(lambda chunk: list(chunk), 10)
        assert sum(done) == 10

    def test_short_chunk_result(self):
        with pytest.raises(RuntimeError):
            PathExecutor(chunk_size=4).map_paths(lambda chunk: [0], 8)


class TestFits:
    """Test log-log and pathwise slope fits"""

    def test_exact_half_order(self):
        dts = [2.0**-k for k in range(4, 10)]
        errors = [3.0 * dt**0.5 for dt in dts]
        slope, intercept = fit_loglog(dts, errors)
        assert slope == pytest.approx(0.5, abs=1e-12)
        assert intercept == pytest.approx(math.log(3.0), abs=1e-12)

    def test_fit_needs_positive_values(self):
        with pytest.raises(DegenerateInput):
            fit_loglog([0.1, 0.01], [0.0, 1.0])
        with pytest.raises(DegenerateInput):
            fit_loglog([0.1], [1.0])

    def test_pathwise_slope_skips_zeros(self):
        dt = 0.1
        v = np.exp(-2.0 * np.arange(11) * dt)
        v[7] = 0.0
        assert pathwise_slope(v, dt, 0.0) == pytest.approx(-2.0, rel=1e-10)

    def test_pathwise_slope_all_zero(self):
        assert pathwise_slope(np.zeros(11), 0.1) == -math.inf


class TestLyapunovEstimate:
    """Test decay-rate estimation on paths with known rates"""

    def _linear_path(self, x0=2.0):
        system, spec = linear_system(-1.0, 0.0), square_spec()
        config = SchemeConfig(SchemeKind.CLASSICAL, 0.01, 1.0, [x0])
        return simulate(config, system, spec, brownian_grid(0, 0, 1.0, 0.01, 1)), spec

    def test_linear_decay(self):
        """V(Y_k) = (0.99)^{2k}V(x0), slope 2·ln(0.99)/0.01"""
        path, spec = self._linear_path()
        estimate = estimate_lyapunov([path], spec, 0.01)
        expected = 2.0 * math.log(0.99) / 0.01
        assert estimate.slopes[0] == pytest.approx(expected, rel=1e-9)
        assert estimate.median_slope == pytest.approx(expected, rel=1e-9)
        assert estimate.mean_moment_slope == pytest.approx(expected, rel=1e-9)
        assert estimate.window_start == pytest.approx(0.2)

    def test_all_paths_at_equilibrium(self):
        path, spec = self._linear_path(x0=0.0)
        with pytest.raises(DegenerateInput):
            estimate_lyapunov([path], spec, 0.01)

    def test_step_mismatch(self):
        path, spec = self._linear_path()
        with pytest.raises(ConfigError):
            estimate_lyapunov([path], spec, 0.02)

    def test_burn_in_range(self):
        path, spec = self._linear_path()
        with pytest.raises(ConfigError):
            estimate_lyapunov([path], spec, 0.01, burn_in_fraction=0.95)


class TestMomentSup:
    """Test the moment-supremum estimator"""

    def test_zero_noise_sup_at_start(self, scalar_cubic):
        """Without noise |Y_k| decreases from 2, so the sup of V^ρ is V^ρ(2) = 2"""
        bundle = zero_noise(scalar_cubic.with_initial_state([2.0]))
        report = estimate_moment_sup(bundle, 0.5, [2**-8, 2**-9], 1.0, 4, seed=0)
        assert [row.dt for row in report.rows] == [2**-8, 2**-9]
        for row in report.rows:
            assert row.sup_moment == pytest.approx(2.0)
            assert row.argmax_step == 0
            assert row.stderr == 0.0

    def test_needs_two_paths(self, scalar_cubic):
        with pytest.raises(ConfigError):
            estimate_moment_sup(scalar_cubic, 0.5, [2**-8], 1.0, 1, seed=0)

    def test_step_above_cap(self, scalar_cubic):
        with pytest.raises(PolicyViolation):
            estimate_moment_sup(scalar_cubic, 0.5, [2**-6], 1.0, 4, seed=0)

    def test_keep_series(self, scalar_cubic):
        report = estimate_moment_sup(scalar_cubic, 0.5, [2**-8], 0.25, 8, seed=1, keep_series=True)
        row = report.rows[0]
        assert len(row.series) == 65
        assert row.sup_moment == max(row.series)
        assert row.series[0] == pytest.approx(19.0)


class TestStrongError:
    """Test the coupled strong-error estimator"""

    def test_coupling_identity(self, scalar_cubic):
        """Δ = Δ_ref gives error exactly zero"""
        report = estimate_strong_error(scalar_cubic, 1.0, [2**-10], 2**-10, 0.0625, 4, seed=3)
        assert report.rows[0].mean_error == 0.0
        assert report.rows[0].stderr == 0.0
        assert report.slope is None
        assert any("slope needs" in note for note in report.notes)

    def test_rows_descending_with_slope(self):
        bundle = example_scalar_cubic(x0=2.0, delta_star=2**-6)
        report = estimate_strong_error(bundle, 1.0, [2**-9, 2**-7, 2**-8], 2**-11, 0.25, 16, seed=4)
        assert [row.dt for row in report.rows] == [2**-7, 2**-8, 2**-9]
        assert all(row.mean_error > 0 for row in report.rows)
        assert report.slope is not None

    def test_reproducible_across_workers(self, scalar_cubic):
        """Reports are identical for one and four worker threads"""
        args = (scalar_cubic, 1.0, [2**-7, 2**-8, 2**-9], 2**-10, 0.25, 10)
        serial = estimate_strong_error(*args, seed=5, executor=PathExecutor(1, 3))
        threaded = estimate_strong_error(*args, seed=5, executor=PathExecutor(4, 3))
        assert serial.rows == threaded.rows
        assert serial.slope == threaded.slope

    def test_reference_must_divide(self, scalar_cubic):
        with pytest.raises(ConfigError):
            estimate_strong_error(scalar_cubic, 1.0, [0.005], 2**-10, 0.25, 4, seed=0)

    def test_q_positive(self, scalar_cubic):
        with pytest.raises(ConfigError):
            estimate_strong_error(scalar_cubic, 0.0, [2**-8], 2**-10, 0.25, 4, seed=0)


class TestStabilityExperiment:
    """Test the paired truncated/classical experiment"""

    def test_equilibrium_start(self, scalar_cubic):
        """Paths at the equilibrium stay there: −inf slopes, all converged"""
        bundle = scalar_cubic.with_initial_state([0.0])
        report = stability_experiment(bundle, 0.005, 0.1, 4, seed=0, threshold=1.0)
        assert report.converged_fraction == 1.0
        assert report.classical_divergence_fraction == 0.0
        assert report.median_lyap_slope == -math.inf
        assert all(row.lyap_slope == -math.inf for row in report.rows)

    def test_rows_pair_schemes(self, scalar_cubic):
        report = stability_experiment(scalar_cubic, 0.005, 0.5, 5, seed=2, threshold=1.0)
        assert len(report.rows) == 10
        assert [row.path_id for row in report.truncated_rows] == list(range(5))
        assert [row.path_id for row in report.classical_rows] == list(range(5))
        assert report.bounded_fraction == 1.0
        assert report.radius == pytest.approx(math.sqrt(110.0 * 0.005**-0.25 - 1.0))

    def test_classical_diverges_from_far_start(self, scalar_cubic):
        """From 25 every classical path blows up while truncated paths stay in the ball"""
        bundle = scalar_cubic.with_initial_state([25.0])
        report = stability_experiment(bundle, 0.005, 1.0, 8, seed=1, threshold=1.0)
        assert report.classical_divergence_fraction == 1.0
        assert all(math.isinf(row.terminal_norm) for row in report.classical_rows)
        assert all(not row.diverged for row in report.truncated_rows)
        assert all(row.terminal_norm <= report.radius for row in report.truncated_rows)

    def test_without_classical(self, duffing_vdp):
        report = stability_experiment(duffing_vdp, 0.01, 0.5, 3, seed=0, threshold=0.5, classical=False)
        assert len(report.rows) == 3
        assert report.classical_divergence_fraction is None

    def test_same_noise_for_both_schemes(self, scalar_cubic):
        """Inside the ball the two schemes coincide step for step"""
        bundle = scalar_cubic.with_initial_state([1.0])
        report = stability_experiment(bundle, 0.005, 0.5, 4, seed=8, threshold=1.0)
        for truncated, classical in zip(report.truncated_rows, report.classical_rows):
            if truncated.first_truncation_step is None:
                assert truncated.terminal_norm == classical.terminal_norm
                assert truncated.lyap_slope == classical.lyap_slope

    def test_invalid_threshold(self, scalar_cubic):
        with pytest.raises(ConfigError):
            stability_experiment(scalar_cubic, 0.005, 0.1, 2, seed=0, threshold=0.0)

    def test_batch_simulation_unchanged_by_chunking(self, scalar_cubic):
        config = SchemeConfig(SchemeKind.TRUNCATED, 0.005, 0.5, scalar_cubic.initial_state, scalar_cubic.policy)
        grids = [brownian_grid(6, pid, 0.5, 0.005, 1) for pid in range(4)]
        whole = simulate_batch(config, scalar_cubic.system, scalar_cubic.spec, grids, store_states=False)
        halves = simulate_batch(config, scalar_cubic.system, scalar_cubic.spec, grids[:2], store_states=False)
        halves += simulate_batch(config, scalar_cubic.system, scalar_cubic.spec, grids[2:], store_states=False)
        for a, b in zip(whole, halves):
            np.testing.assert_array_equal(a.terminal_state, b.terminal_state)
            np.testing.assert_array_equal(a.v_values, b.v_values)
