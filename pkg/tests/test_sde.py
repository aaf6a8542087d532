"""
Tests for the SDE core: generator, domain types and hypothesis validators
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tests.conftest import linear_system, square_spec
from vtruncem.core.sde import (
    LyapunovClass,
    LyapunovSpec,
    RateAssumption,
    generator,
    generator_power,
)
from vtruncem.core.truncation import rate_envelope
from vtruncem.core.validation import (
    probe_higher_derivatives,
    sample_box,
    validate_class_membership,
    validate_decay_condition,
    validate_derivatives,
    validate_equilibrium,
    validate_radial_growth,
    validate_structure_condition,
)
from vtruncem.errors import DegenerateInput, DomainError, ValidationError


class TestGenerator:
    """Test the generator against closed forms"""

    def test_scalar_cubic_at_rho_one(self, scalar_cubic):
        """ℒV = −2x⁴ for f = −0.5x − x³, g = x, V = x²"""
        x = np.random.default_rng(1).uniform(-3.0, 3.0, size=(1000, 1))
        values = generator(scalar_cubic.spec, scalar_cubic.system, x)
        np.testing.assert_allclose(values, -2.0 * x[:, 0] ** 4, rtol=0, atol=1e-10)

    def test_duffing_vdp(self, duffing_vdp):
        """Test the oscillator's generator closed form"""
        x = np.random.default_rng(2).uniform(-2.0, 2.0, size=(1000, 2))
        x1, x2 = x[:, 0], x[:, 1]
        expected = -4.0 * x1**2 * x2**2 - x1**2 - 0.5 * x2**2 - x1**4
        values = generator(duffing_vdp.spec, duffing_vdp.system, x)
        np.testing.assert_allclose(values, expected, rtol=0, atol=1e-10)

    def test_single_state_returns_float(self, scalar_cubic):
        """A single state gives a plain float"""
        value = generator(scalar_cubic.spec, scalar_cubic.system, [2.0])
        assert isinstance(value, float)
        assert value == pytest.approx(-32.0)

    def test_power_of_v(self, scalar_cubic):
        """ℒV^ρ = −|x|³ − 0.5|x| at ρ = 1/2"""
        x = np.array([[0.5], [2.0], [-3.0]])
        values = generator_power(scalar_cubic.spec, scalar_cubic.system, x, 0.5)
        r = np.abs(x[:, 0])
        np.testing.assert_allclose(values, -(r**3) - 0.5 * r, rtol=1e-12)

    def test_offset_form_at_rho_one_is_generator(self):
        """ℒ(1+V) = ℒV"""
        system, spec = linear_system(-1.0, 0.5), square_spec()
        x = np.array([[0.3], [1.7]])
        np.testing.assert_array_equal(generator_power(spec, system, x, 1.0, offset=True), generator(spec, system, x))

    def test_power_of_v_undefined_at_kernel(self, planar_quartic):
        """The V form has no value where V = 0"""
        with pytest.raises(DegenerateInput):
            generator_power(planar_quartic.spec, planar_quartic.system, [0.0, 0.0], 0.125)

    def test_wrong_state_shape(self, duffing_vdp):
        """States must have d coordinates"""
        with pytest.raises(DomainError):
            generator(duffing_vdp.spec, duffing_vdp.system, [1.0, 2.0, 3.0])

    @settings(max_examples=60, deadline=None)
    @given(
        a=st.floats(-5.0, 5.0),
        sigma=st.floats(-3.0, 3.0),
        x=st.floats(-100.0, 100.0),
    )
    def test_geometric_motion(self, a, sigma, x):
        """ℒx² = (2a + σ²)x² for dx = ax dt + σx dB"""
        value = generator(square_spec(), linear_system(a, sigma), [x])
        assert value == pytest.approx((2.0 * a + sigma * sigma) * x * x, rel=1e-12, abs=1e-12 * (1.0 + x * x) * 40.0)


class TestLyapunovSpec:
    """Test the class data checks"""

    def _spec(self, **overrides):
        params = dict(
            value=lambda x: x[..., 0] ** 2,
            gradient=lambda x: 2.0 * x,
            hessian=lambda x: np.full(x.shape[:-1] + (1, 1), 2.0),
            rho=1.0,
            delta=0.25,
            smoothness_order=4,
            growth_constant=2.0,
        )
        params.update(overrides)
        return LyapunovSpec(**params)

    def test_valid(self):
        spec = self._spec()
        assert spec.class_flag is LyapunovClass.OFFSET
        assert not spec.uses_kernel_power

    def test_delta_inverse_below_order(self):
        """1/δ = 3 is too small for p = 4"""
        with pytest.raises(DomainError):
            self._spec(delta=1.0 / 3.0)

    def test_delta_inverse_not_integer(self):
        with pytest.raises(DomainError):
            self._spec(delta=0.3, smoothness_order=2)

    def test_rho_positive(self):
        with pytest.raises(DomainError):
            self._spec(rho=0.0)

    def test_class_aliases(self):
        assert LyapunovClass.parse("KernelZeroClass") is LyapunovClass.KERNEL_ZERO
        assert LyapunovClass.parse("hat") is LyapunovClass.HAT
        with pytest.raises(DomainError):
            LyapunovClass.parse("quadratic")


class TestRateAssumption:
    """Test the rate-assumption constraint check"""

    def _assumption(self, tau: float) -> RateAssumption:
        return RateAssumption(
            metric_u=lambda d: np.linalg.norm(d, axis=-1),
            delta_u=0.5,
            kappa=lambda s: s,
            kappa_inverse=lambda s: s,
            a=0.5,
            q=1.0,
            tau=tau,
            c1=1.0,
            iota=1.0,
            kbar=1.0,
            r=2.0,
            p_bar=4.0,
        )

    def test_admissible(self):
        spec = square_spec()
        assumption = self._assumption(0.1)
        assert assumption.ell(spec.delta) == pytest.approx(1.0)
        assert assumption.check(spec, 0.25) == []
        assert assumption.admits_moment(2.0)
        assert not assumption.admits_moment(4.0)

    def test_tau_too_large(self):
        problems = self._assumption(0.5).check(square_spec(), 0.25)
        assert len(problems) == 1
        assert "tau" in problems[0]

    def test_suggested_envelope(self):
        """φ(u) = C(1 + u) for κ = id, q = 1 and ℓ = 1"""
        envelope = rate_envelope(self._assumption(0.1), square_spec(), 2.0)
        assert envelope(3.0) == pytest.approx(8.0)
        assert envelope.invert(8.0) == pytest.approx(3.0)
        assert envelope.check().passed


class TestValidators:
    """Test the hypothesis validators on passing and failing models"""

    def test_builtin_models_pass(self, builtin_bundles):
        """Every check passes on the built-in models"""
        for bundle in builtin_bundles.values():
            for report in bundle.validation_reports():
                assert report.passed, report.summary()

    def test_structure_condition_fails_for_unstable_drift(self):
        """ℒ(1+V) = 2x² is not bounded by 0"""
        samples = sample_box([-2.0], [2.0], 32)
        report = validate_structure_condition(square_spec(), linear_system(1.0), 0.0, samples)
        assert not report.passed
        assert report.failures > 0
        assert report.violations[0].lhs > report.violations[0].rhs
        with pytest.raises(ValidationError):
            report.raise_if_failed()

    def test_structure_condition_skips_kernel(self, planar_quartic):
        """Samples with V = 0 are skipped in the V form"""
        samples = np.array([[0.0, 0.0], [1.0, 0.5]])
        report = validate_structure_condition(planar_quartic.spec, planar_quartic.system, 0.0, samples)
        assert report.skipped == 1
        assert report.checked == 1

    def test_wrong_gradient_detected(self):
        """A gradient off by a factor fails the central-difference comparison"""
        good = square_spec()
        bad = LyapunovSpec(good.value, lambda x: 3.0 * x, good.hessian, 1.0, 0.5, 2, 2.0)
        samples = sample_box([-2.0], [2.0], 16)
        assert validate_derivatives(good, samples).passed
        assert not validate_derivatives(bad, samples).passed

    def test_decay_condition(self, scalar_cubic):
        """w = −ℒV^ρ meets ℒV^ρ ≤ −w and w ≥ μV^ρ"""
        samples = sample_box([-5.0], [5.0], 64, [[0.0]])
        report = validate_decay_condition(scalar_cubic.spec, scalar_cubic.system, scalar_cubic.decay, samples)
        assert report.passed, report.summary()
        assert report.skipped >= 1

    def test_class_membership_fails_for_small_constant(self):
        """|∇²V| = 2 exceeds c = 1"""
        tight = square_spec()
        spec = LyapunovSpec(tight.value, tight.gradient, tight.hessian, 1.0, 0.5, 2, 1.0)
        report = validate_class_membership(spec, sample_box([-2.0], [2.0], 16))
        assert not report.passed

    def test_equilibrium(self, scalar_cubic):
        report = validate_equilibrium(scalar_cubic.system)
        assert report.passed
        assert report.checked == 1

    def test_no_equilibrium_declared(self):
        system = linear_system()
        bare = type(system)(1, 1, system.drift, system.diffusion)
        report = validate_equilibrium(bare)
        assert report.passed
        assert report.notes == ["no equilibrium declared"]

    def test_summary_names_violation(self):
        samples = sample_box([-2.0], [2.0], 8)
        report = validate_structure_condition(square_spec(), linear_system(1.0), 0.0, samples)
        assert "FAILED" in report.summary()
        assert "ℒ(1+V)^ρ ≤ λ(1+V^ρ)" in report.summary()

    def test_third_derivative_probe(self, scalar_cubic):
        """V = x² has no third derivative; the kernel point is skipped"""
        report = probe_higher_derivatives(scalar_cubic.spec, sample_box([0.5], [3.0], 16, [[0.0]]))
        assert report.passed
        assert report.skipped == 1
        assert report.notes == ["smoothness order below 3; probe is informational"]

    def test_radial_growth(self, duffing_vdp):
        report = validate_radial_growth(duffing_vdp.spec, sample_box([-2.0, -2.0], [2.0, 2.0], 16))
        assert report.passed
        assert report.checked == 16
