"""Circular-orbit geometry and the tilted-dipole geomagnetic field.

The satellite moves on a circular orbit of radius R. In-plane coordinates are
rotated into the Earth-centered inertial frame with the fixed sequence

    r_i(t) = R_z(raan) @ R_x(incl) @ [R cos(n t + phi0), R sin(n t + phi0), 0]

so that for raan = 0 the ascending node lies on the inertial x axis. The
field is the first-order dipole

    B_i(t) = mu_m / R^3 * (3 (m_hat . r_hat(t)) r_hat(t) - m_hat)

with the dipole axis fixed along -z (colelevation 180 deg); B_i is periodic
with the orbital period. All quantities are SI (meters, seconds, tesla).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .attmath import dcm_from_quat

__all__ = [
    "EARTH_MU",
    "EARTH_RADIUS",
    "DIPOLE_STRENGTH",
    "OrbitSpec",
    "orbital_rate",
    "orbit_period",
    "plane_to_inertial",
    "position_unit_inertial",
    "field_inertial",
    "field_body",
]

EARTH_MU = 3.986e14         # m^3/s^2
EARTH_RADIUS = 6.371e6      # m
DIPOLE_STRENGTH = 7.746e15  # Wb*m


@dataclass(frozen=True)
class OrbitSpec:
    """Circular orbit plus geomagnetic dipole constants.

    Angles in radians; ``m_hat_i`` is the dipole axis direction in inertial
    coordinates (unit vector).
    """

    radius_m: float
    incl_rad: float
    raan_rad: float = 0.0
    phi0_rad: float = 0.0
    mu_earth: float = EARTH_MU
    mu_m: float = DIPOLE_STRENGTH
    m_hat_i: tuple[float, float, float] = (0.0, 0.0, -1.0)

    def __post_init__(self) -> None:
        if not self.radius_m > EARTH_RADIUS:
            raise ValueError(f"orbit radius {self.radius_m} must exceed {EARTH_RADIUS}")
        if not 0.0 <= self.incl_rad <= math.pi:
            raise ValueError("inclination must lie in [0, pi]")
        if not self.mu_m > 0:
            raise ValueError("dipole strength mu_m must be positive")
        n = np.linalg.norm(self.m_hat_i)
        if abs(n - 1.0) > 1e-9:
            raise ValueError("m_hat_i must be a unit vector")


def orbital_rate(spec: OrbitSpec) -> float:
    """Mean motion n = sqrt(mu / R^3) in rad/s."""
    return math.sqrt(spec.mu_earth / spec.radius_m**3)


def orbit_period(spec: OrbitSpec) -> float:
    """Orbital period 2 pi / n in seconds."""
    return 2.0 * math.pi / orbital_rate(spec)


def plane_to_inertial(spec: OrbitSpec) -> np.ndarray:
    """Rotation R_z(raan) @ R_x(incl) taking orbit-plane axes to inertial axes."""
    ci, si = math.cos(spec.incl_rad), math.sin(spec.incl_rad)
    co, so = math.cos(spec.raan_rad), math.sin(spec.raan_rad)
    rx = np.array([[1.0, 0.0, 0.0], [0.0, ci, -si], [0.0, si, ci]])
    rz = np.array([[co, -so, 0.0], [so, co, 0.0], [0.0, 0.0, 1.0]])
    return rz @ rx


def position_unit_inertial(spec: OrbitSpec, t) -> np.ndarray:
    """Unit position vector r_hat_i(t); vectorized over t.

    Scalar t gives shape (3,), an array of shape (...) gives (..., 3).
    """
    t = np.asarray(t, dtype=float)
    u = orbital_rate(spec) * t + spec.phi0_rad
    c, s = np.cos(u), np.sin(u)
    m = plane_to_inertial(spec)
    return np.stack(
        [m[0, 0] * c + m[0, 1] * s,
         m[1, 0] * c + m[1, 1] * s,
         m[2, 0] * c + m[2, 1] * s],
        axis=-1,
    )


def field_inertial(spec: OrbitSpec, t) -> np.ndarray:
    """Dipole geomagnetic field in the inertial frame, tesla; vectorized over t.

    The magnitude lies between mu_m/R^3 (over the dipole equator) and
    2 mu_m/R^3 (over the poles).
    """
    r = position_unit_inertial(spec, t)
    m_hat = np.asarray(spec.m_hat_i, dtype=float)
    scale = spec.mu_m / spec.radius_m**3
    proj = r @ m_hat
    return scale * (3.0 * proj[..., None] * r - m_hat)


def field_body(q, spec: OrbitSpec, t: float) -> np.ndarray:
    """Geomagnetic field rotated into the body frame: C(q) @ B_i(t)."""
    return dcm_from_quat(q) @ field_inertial(spec, float(t))
