import math

import numpy as np
import pytest

from magzoh import (
    OrbitSpec,
    QUAT_IDENTITY,
    field_body,
    field_inertial,
    orbit_period,
    orbital_rate,
    position_unit_inertial,
)

from conftest import random_unit_quaternion


class TestOrbitSpec:
    def test_rejects_subsurface_radius(self):
        with pytest.raises(ValueError, match="radius"):
            OrbitSpec(radius_m=6.0e6, incl_rad=0.5)

    def test_rejects_bad_inclination(self):
        with pytest.raises(ValueError, match="inclination"):
            OrbitSpec(radius_m=7.0e6, incl_rad=-0.1)

    def test_rejects_nonpositive_dipole(self):
        with pytest.raises(ValueError, match="mu_m"):
            OrbitSpec(radius_m=7.0e6, incl_rad=0.5, mu_m=0.0)


class TestOrbitalRate:
    def test_reference_orbit_values(self, ref_orbit):
        # sqrt(3.986e14 / 6.821e6^3) = 1.120719e-3 rad/s, period 5606.4 s
        assert orbital_rate(ref_orbit) == pytest.approx(1.1207186e-3, rel=1e-6)
        assert orbit_period(ref_orbit) == pytest.approx(5606.39, abs=0.5)
        # quoted round number for this altitude
        assert abs(orbit_period(ref_orbit) - 5600.0) < 50.0

    def test_scaling_law(self, ref_orbit):
        # quadrupling R^3 (radius times 4^(1/3)) halves the rate
        larger = OrbitSpec(radius_m=ref_orbit.radius_m * 4.0 ** (1.0 / 3.0),
                           incl_rad=ref_orbit.incl_rad)
        assert orbital_rate(larger) == pytest.approx(0.5 * orbital_rate(ref_orbit), rel=1e-12)


class TestPosition:
    def test_equatorial_start(self):
        spec = OrbitSpec(radius_m=7.0e6, incl_rad=0.0)
        assert np.allclose(position_unit_inertial(spec, 0.0), [1.0, 0.0, 0.0], atol=1e-15)

    def test_polar_orbit_stays_in_xz_plane(self):
        spec = OrbitSpec(radius_m=7.0e6, incl_rad=math.pi / 2.0)
        n = orbital_rate(spec)
        for t in (0.0, 100.0, 1000.0, 4000.0):
            r = position_unit_inertial(spec, t)
            expected = [math.cos(n * t), 0.0, math.sin(n * t)]
            assert np.allclose(r, expected, atol=1e-14)

    def test_unit_norm_reference_orbit(self, ref_orbit):
        t = np.linspace(0.0, 2.0 * orbit_period(ref_orbit), 500)
        r = position_unit_inertial(ref_orbit, t)
        assert np.max(np.abs(np.linalg.norm(r, axis=1) - 1.0)) <= 1e-14


class TestFieldInertial:
    def test_equatorial_orbit_constant_field(self):
        spec = OrbitSpec(radius_m=6.821e6, incl_rad=0.0)
        scale = spec.mu_m / spec.radius_m**3
        assert scale == pytest.approx(2.44081e-5, rel=1e-5)
        for t in (0.0, 500.0, 2000.0):
            assert np.allclose(field_inertial(spec, t), [0.0, 0.0, scale], rtol=1e-12)

    def test_polar_field_twice_equatorial(self):
        # polar orbit passes over the pole a quarter period after the node
        spec = OrbitSpec(radius_m=6.821e6, incl_rad=math.pi / 2.0)
        scale = spec.mu_m / spec.radius_m**3
        t_pole = 0.25 * orbit_period(spec)
        b = field_inertial(spec, t_pole)
        assert np.allclose(b, [0.0, 0.0, -2.0 * scale], rtol=1e-9, atol=1e-12 * scale)

    def test_periodicity(self, ref_orbit):
        period = orbit_period(ref_orbit)
        t = np.linspace(0.0, period, 50)
        b0 = field_inertial(ref_orbit, t)
        b1 = field_inertial(ref_orbit, t + period)
        assert np.max(np.linalg.norm(b1 - b0, axis=1)) <= 1e-12 * np.max(np.linalg.norm(b0, axis=1))

    def test_norm_bounds(self, ref_orbit):
        scale = ref_orbit.mu_m / ref_orbit.radius_m**3
        t = np.linspace(0.0, orbit_period(ref_orbit), 2000)
        norms = np.linalg.norm(field_inertial(ref_orbit, t), axis=1)
        assert np.all(norms >= scale * (1.0 - 1e-12))
        assert np.all(norms <= 2.0 * scale * (1.0 + 1e-12))


class TestFieldBody:
    def test_identity_attitude(self, ref_orbit):
        b_i = field_inertial(ref_orbit, 321.0)
        assert np.allclose(field_body(QUAT_IDENTITY, ref_orbit, 321.0), b_i, atol=1e-18)

    def test_half_turn_attitude(self, ref_orbit):
        b_i = field_inertial(ref_orbit, 321.0)
        b_b = field_body([1.0, 0.0, 0.0, 0.0], ref_orbit, 321.0)
        assert np.allclose(b_b, np.diag([1.0, -1.0, -1.0]) @ b_i, atol=1e-18)

    def test_norm_preserved_under_rotation(self, ref_orbit):
        rng = np.random.default_rng(13)
        for _ in range(25):
            q = random_unit_quaternion(rng)
            t = float(rng.uniform(0.0, 1e4))
            nb = np.linalg.norm(field_body(q, ref_orbit, t))
            ni = np.linalg.norm(field_inertial(ref_orbit, t))
            assert nb == pytest.approx(ni, rel=1e-12)
