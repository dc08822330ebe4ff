import math

import numpy as np
import pytest

from magzoh import (
    AveragingConfig,
    OrbitSpec,
    attitude_hold_kernel,
    average_coupling,
    average_coupling_zero,
    field_inertial,
    hold_coupling,
    orbit_stabilizable,
    rate_hold_kernel,
    skew,
)


def equatorial_orbit():
    return OrbitSpec(radius_m=6.821e6, incl_rad=0.0)


def trapezoid_kernel(spec, k, T, panels, weighted):
    """Independent quadrature oracle: trapezoid rule on the matrix integrand."""
    ts = np.linspace(k * T, (k + 1) * T, panels + 1)
    b = field_inertial(spec, ts)
    mats = np.array([skew(v) for v in b])
    w = np.full(panels + 1, T / panels)
    w[0] *= 0.5
    w[-1] *= 0.5
    if weighted:
        w = w * 0.5 * ((k + 1) * T - ts)
    return np.einsum("j,jab->ab", w, mats)


class TestAveragingConfig:
    def test_rejects_odd_substeps(self):
        with pytest.raises(ValueError, match="even"):
            AveragingConfig(quad_substeps=63)

    def test_rejects_tiny_substeps(self):
        with pytest.raises(ValueError):
            AveragingConfig(quad_substeps=4)

    def test_rejects_nonpositive_samples(self):
        with pytest.raises(ValueError):
            AveragingConfig(avg_samples=0)


class TestHoldKernels:
    def test_constant_field_closed_forms(self):
        spec = equatorial_orbit()
        b = field_inertial(spec, 0.0)
        T = 37.0
        assert np.allclose(rate_hold_kernel(spec, 2, T), T * skew(b), rtol=1e-12)
        assert np.allclose(attitude_hold_kernel(spec, 2, T), 0.25 * T * T * skew(b), rtol=1e-12)

    def test_rate_kernel_exactly_antisymmetric(self, ref_orbit):
        g2 = rate_hold_kernel(ref_orbit, 5, 20.0)
        assert np.array_equal(g2 + g2.T, np.zeros((3, 3)))

    def test_matches_refined_trapezoid(self, ref_orbit):
        for k in (0, 3):
            g2 = rate_hold_kernel(ref_orbit, k, 20.0)
            ref = trapezoid_kernel(ref_orbit, k, 20.0, 4096, weighted=False)
            assert np.linalg.norm(g2 - ref, 2) <= 1e-8 * np.linalg.norm(ref, 2)
            g1 = attitude_hold_kernel(ref_orbit, k, 20.0)
            ref = trapezoid_kernel(ref_orbit, k, 20.0, 4096, weighted=True)
            assert np.linalg.norm(g1 - ref, 2) <= 1e-8 * np.linalg.norm(ref, 2)

    def test_small_period_leading_order(self, ref_orbit):
        # rate kernel / T -> skew(B(kT)); attitude kernel / T^2 -> skew(B)/4
        T = 1e-3
        b0 = field_inertial(ref_orbit, 0.0)
        assert np.allclose(rate_hold_kernel(ref_orbit, 0, T) / T, skew(b0), rtol=1e-6)
        assert np.allclose(
            attitude_hold_kernel(ref_orbit, 0, T) / T**2, 0.25 * skew(b0), rtol=1e-6
        )

    def test_rejects_nonpositive_period(self, ref_orbit):
        with pytest.raises(ValueError, match="positive"):
            rate_hold_kernel(ref_orbit, 0, 0.0)
        with pytest.raises(ValueError, match="positive"):
            attitude_hold_kernel(ref_orbit, 0, -1.0)


class TestHoldCoupling:
    def test_constant_field_gram_form(self):
        spec = equatorial_orbit()
        b = field_inertial(spec, 0.0)
        L = hold_coupling(spec, 1, 50.0)
        expected = skew(b) @ skew(b).T
        assert np.allclose(L, expected, rtol=1e-12)
        assert np.allclose(L, L.T, atol=1e-30)
        assert np.linalg.norm(L @ b) <= 1e-12 * np.linalg.norm(L, 2) * np.linalg.norm(b)

    def test_spot_value_against_refined_quadrature(self, ref_orbit):
        k, T = 3, 20.0
        got = hold_coupling(ref_orbit, k, T)
        g2_ref = trapezoid_kernel(ref_orbit, k, T, 4096, weighted=False)
        expected = (g2_ref / T) @ skew(field_inertial(ref_orbit, k * T)).T
        assert np.linalg.norm(got - expected, 2) <= 1e-8 * np.linalg.norm(expected, 2)

    def test_linear_convergence_to_instantaneous_gram(self, ref_orbit):
        # fix the interval start, halve T, and watch the error halve
        t0 = 500.0
        b0 = field_inertial(ref_orbit, t0)
        target = skew(b0) @ skew(b0).T
        errors = []
        for T in (16.0, 8.0, 4.0, 2.0):
            L = hold_coupling(ref_orbit, 0, T, AveragingConfig(t0_offset=t0))
            errors.append(np.linalg.norm(L - target, 2))
        for coarse, fine in zip(errors, errors[1:]):
            assert coarse / fine == pytest.approx(2.0, rel=0.05)


class TestAverageCoupling:
    def test_equatorial_orbit_all_periods(self):
        spec = equatorial_orbit()
        scale = spec.mu_m / spec.radius_m**3
        expected = scale**2 * np.diag([1.0, 1.0, 0.0])
        for T in (5.0, 50.0, 500.0):
            avg = average_coupling(spec, T, AveragingConfig(avg_samples=200))
            assert np.allclose(avg, expected, atol=1e-12 * scale**2)

    def test_shift_invariance(self, ref_orbit):
        T = 20.0
        a0 = average_coupling(ref_orbit, T)
        a1 = average_coupling(ref_orbit, T, AveragingConfig(t0_offset=1000 * T))
        rel = np.linalg.norm(a1 - a0, 2) / np.linalg.norm(a0, 2)
        assert rel <= 1e-4

    def test_doubling_samples_consistency(self, ref_orbit):
        # doubling the default horizon (a whole number of orbital periods)
        # moves the estimate by no more than the quoted tolerance
        from magzoh.averaging import _default_samples

        T = 20.0
        n = _default_samples(ref_orbit, T)
        base = average_coupling(ref_orbit, T, AveragingConfig(avg_samples=n))
        doubled = average_coupling(ref_orbit, T, AveragingConfig(avg_samples=2 * n))
        rel = np.linalg.norm(doubled - base, 2) / np.linalg.norm(base, 2)
        assert rel <= 1e-4

    def test_symmetric_part_dominates(self, ref_orbit):
        # the antisymmetric part is first order in (orbit rate * T): about 2e-2
        # at T = 20 s on the reference orbit
        a = average_coupling(ref_orbit, 20.0)
        ratio = np.linalg.norm(a - a.T, 2) / np.linalg.norm(a, 2)
        assert ratio <= 3e-2


class TestAverageCouplingZero:
    def test_equatorial_singular(self):
        spec = equatorial_orbit()
        scale = spec.mu_m / spec.radius_m**3
        limit = average_coupling_zero(spec)
        assert np.allclose(limit, scale**2 * np.diag([1.0, 1.0, 0.0]), rtol=1e-10)
        assert abs(np.linalg.eigvalsh(limit)[0]) <= 1e-9 * np.trace(limit)

    def test_exactly_symmetric(self, ref_orbit):
        limit = average_coupling_zero(ref_orbit)
        assert np.array_equal(limit, limit.T)

    def test_definite_iff_inclined(self):
        for deg, definite in ((0.0, False), (5.0, True), (45.0, True), (87.0, True), (90.0, True)):
            spec = OrbitSpec(radius_m=6.821e6, incl_rad=math.radians(deg), phi0_rad=0.94)
            limit = average_coupling_zero(spec)
            min_eig = np.linalg.eigvalsh(limit)[0]
            if definite:
                assert min_eig > 1e-6 * np.trace(limit) / 3.0
            else:
                assert min_eig <= 1e-9 * np.trace(limit)

    def test_small_period_average_approaches_limit(self, ref_orbit):
        limit = average_coupling_zero(ref_orbit)
        for T in (1.0, 0.5):
            avg = average_coupling(ref_orbit, T)
            rel = np.linalg.norm(avg - limit, 2) / np.linalg.norm(limit, 2)
            assert rel <= 1e-3

    def test_rejects_coarse_panels(self, ref_orbit):
        with pytest.raises(ValueError, match="4096"):
            average_coupling_zero(ref_orbit, panels=512)


class TestOrbitStabilizable:
    def test_reference_orbit(self, ref_orbit):
        ok, margin = orbit_stabilizable(ref_orbit)
        assert ok and margin > 0.0

    def test_equatorial_fails(self):
        ok, margin = orbit_stabilizable(equatorial_orbit())
        assert not ok and margin <= 0.0

    def test_margin_grows_with_inclination(self, ref_orbit):
        low = OrbitSpec(radius_m=6.821e6, incl_rad=math.radians(5.0), phi0_rad=0.94)
        ok_low, margin_low = orbit_stabilizable(low)
        _, margin_high = orbit_stabilizable(ref_orbit)
        assert ok_low
        assert 0.0 < margin_low < margin_high
