"""Averaged field-coupling matrices for sampled magnetic attitude control.

Holding the dipole command constant over a sampling interval [kT, (k+1)T]
turns the linearized attitude/rate response to that command into integrals of
the field skew matrix over the interval:

    rate_hold_kernel(k, T)     = integral skew(B_i(tau)) dtau
    attitude_hold_kernel(k, T) = integral (1/2) ((k+1)T - tau) skew(B_i(tau)) dtau

Feeding the measured field back through the hold yields, per interval, the
coupling matrix

    hold_coupling(k, T) = (rate_hold_kernel(k, T) / T) @ skew(B_i(kT))^T

whose long-run mean over k, ``average_coupling(T)``, governs stability of the
averaged closed loop. Its T -> 0 limit ``average_coupling_zero`` is the
orbit-average of skew(B) skew(B)^T, symmetric positive semidefinite, and
positive definite exactly when the orbit is not equatorial; that definiteness
is the stabilizability condition tested by :func:`orbit_stabilizable`.

No closed form is attempted: all integrals use composite Simpson quadrature
and the mean is a finite sum, long enough that the result is independent of
the start offset to about 1e-4 relative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attmath import skew
from .geomag import OrbitSpec, field_inertial, orbit_period
from .matan import min_eig_sym

__all__ = [
    "AveragingConfig",
    "attitude_hold_kernel",
    "rate_hold_kernel",
    "hold_coupling",
    "average_coupling",
    "average_coupling_zero",
    "orbit_stabilizable",
]

# Defaults for the finite-sum estimator of the average coupling: the horizon
# covers at least this many orbital periods and at least this many samples.
# 40 periods keeps the estimate insensitive to the grid start offset to
# better than 1e-4 relative. The sample floor matters near resonant periods
# (T close to a low-order rational fraction of the orbit period), where
# samples cover orbit phase slowly and a short horizon is far from the limit.
AVERAGE_HORIZON_ORBITS = 40
AVERAGE_SAMPLE_FLOOR = 400

_CHUNK = 4096


@dataclass(frozen=True)
class AveragingConfig:
    """Quadrature and averaging-horizon knobs.

    ``avg_samples=None`` selects the default sample count
    max(ceil(40 periods / T), 400). ``t0_offset`` shifts the whole sampling
    grid in time; estimates must be insensitive to it (to ~1e-4 relative).
    """

    quad_substeps: int = 64
    avg_samples: int | None = None
    t0_offset: float = 0.0

    def __post_init__(self) -> None:
        if self.quad_substeps < 8 or self.quad_substeps % 2 != 0:
            raise ValueError("quad_substeps must be even and at least 8")
        if self.avg_samples is not None and self.avg_samples < 1:
            raise ValueError("avg_samples must be positive")


def _simpson_weights(panels: int) -> np.ndarray:
    # panels must be even; weights already include the 1/3 factor, not h
    w = np.ones(panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / 3.0


def _field_hold_integrals(
    spec: OrbitSpec, starts: np.ndarray, T: float, substeps: int
) -> tuple[np.ndarray, np.ndarray]:
    """Simpson integrals of B and of (1/2)(t_end - tau) B over [s, s+T].

    Returns two arrays of shape (len(starts), 3). Integrating the field
    vector and taking the skew afterwards keeps the kernels exactly
    antisymmetric.
    """
    h = T / substeps
    offsets = np.arange(substeps + 1) * h
    tau = starts[:, None] + offsets[None, :]
    b = field_inertial(spec, tau)                      # (N, substeps+1, 3)
    w = _simpson_weights(substeps) * h
    int_b = np.einsum("j,njc->nc", w, b)
    int_wb = np.einsum("j,njc->nc", w * 0.5 * (T - offsets), b)
    return int_b, int_wb


def _check_period(T: float) -> float:
    T = float(T)
    if T <= 0.0:
        raise ValueError("sampling period T must be positive")
    return T


def attitude_hold_kernel(
    spec: OrbitSpec, k: int, T: float, cfg: AveragingConfig = AveragingConfig()
) -> np.ndarray:
    """Attitude response kernel of a held dipole over [kT, (k+1)T].

    Equals integral of (1/2)((k+1)T - tau) skew(B_i(tau)) dtau; for constant
    field it reduces to (T^2/4) skew(B). Quadrature is composite Simpson with
    ``cfg.quad_substeps`` panels, accurate to ~1e-8 relative against a
    doubled-resolution reference on these smooth fields.
    """
    T = _check_period(T)
    starts = np.array([cfg.t0_offset + k * T])
    _, int_wb = _field_hold_integrals(spec, starts, T, cfg.quad_substeps)
    return skew(int_wb[0])


def rate_hold_kernel(
    spec: OrbitSpec, k: int, T: float, cfg: AveragingConfig = AveragingConfig()
) -> np.ndarray:
    """Rate response kernel of a held dipole: integral of skew(B_i) over the hold.

    Antisymmetric by construction; for constant field it equals T * skew(B),
    and rate_hold_kernel / T tends to skew(B_i(kT)) as T -> 0.
    """
    T = _check_period(T)
    starts = np.array([cfg.t0_offset + k * T])
    int_b, _ = _field_hold_integrals(spec, starts, T, cfg.quad_substeps)
    return skew(int_b[0])


def hold_coupling(
    spec: OrbitSpec, k: int, T: float, cfg: AveragingConfig = AveragingConfig()
) -> np.ndarray:
    """Per-interval coupling (rate_hold_kernel(k,T)/T) @ skew(B_i(kT))^T.

    For constant field this is skew(B) skew(B)^T, symmetric positive
    semidefinite with null vector B; the same limit holds pointwise as T -> 0.
    """
    T = _check_period(T)
    g2 = rate_hold_kernel(spec, k, T, cfg)
    b_k = field_inertial(spec, cfg.t0_offset + k * T)
    return (g2 / T) @ skew(b_k).T


def _default_samples(spec: OrbitSpec, T: float) -> int:
    period = orbit_period(spec)
    return max(int(np.ceil(AVERAGE_HORIZON_ORBITS * period / T)), AVERAGE_SAMPLE_FLOOR)


def average_coupling(
    spec: OrbitSpec, T: float, cfg: AveragingConfig = AveragingConfig()
) -> np.ndarray:
    """Mean of hold_coupling(k, T) over k = 1 .. N.

    N comes from ``cfg.avg_samples`` or the default horizon rule. The sum is
    evaluated in fixed k order (chunked for memory), so results are exactly
    reproducible; shifting the grid by ``t0_offset`` moves the estimate by no
    more than about 1e-4 relative at the default horizon.
    """
    T = _check_period(T)
    n_samples = cfg.avg_samples if cfg.avg_samples is not None else _default_samples(spec, T)
    total = np.zeros((3, 3))
    for lo in range(1, n_samples + 1, _CHUNK):
        hi = min(lo + _CHUNK, n_samples + 1)
        ks = np.arange(lo, hi)
        starts = cfg.t0_offset + ks * T
        int_b, _ = _field_hold_integrals(spec, starts, T, cfg.quad_substeps)
        b_k = field_inertial(spec, starts)
        # batched (skew(int_b)/T) @ skew(b_k)^T
        s_g = _skew_batch(int_b / T)
        s_b = _skew_batch(b_k)
        total += np.einsum("nab,ncb->ac", s_g, s_b)
    return total / n_samples


def _skew_batch(v: np.ndarray) -> np.ndarray:
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def average_coupling_zero(spec: OrbitSpec, panels: int = 4096) -> np.ndarray:
    """T -> 0 limit of the average coupling: orbit mean of skew(B) skew(B)^T.

    Evaluated by composite Simpson over one field period and symmetrized
    exactly on return. Positive definite iff the orbit is non-equatorial.
    """
    if panels < 4096:
        raise ValueError("need at least 4096 panels for the limit quadrature")
    if panels % 2 != 0:
        raise ValueError("panel count must be even")
    period = orbit_period(spec)
    t = np.linspace(0.0, period, panels + 1)
    s = _skew_batch(field_inertial(spec, t))
    w = _simpson_weights(panels) * (period / panels)
    mean = np.einsum("j,jab,jcb->ac", w, s, s) / period
    return 0.5 * (mean + mean.T)


def orbit_stabilizable(spec: OrbitSpec, pd_tol: float = 1e-6) -> tuple[bool, float]:
    """Test positive definiteness of the zero-period average coupling.

    Three-axis magnetic stabilization needs the orbit-average of
    skew(B) skew(B)^T to be positive definite, which fails exactly on
    equatorial orbits where the field direction never leaves one axis.
    Returns (ok, margin) with margin = min_eig - pd_tol * trace / 3.
    """
    limit = average_coupling_zero(spec)
    threshold = pd_tol * np.trace(limit) / 3.0
    margin = float(min_eig_sym(limit) - threshold)
    return margin > 0.0, margin
