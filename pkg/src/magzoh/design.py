"""Sampling-period and gain-scaling design for the averaged closed loop.

The averaged discrete loop advances z(k+1) = z(k) + eps * T * A(T) z(k),
where A(T) is built from the inertia, the feedback gains, and the average
field coupling at sampling period T. Design proceeds in three steps:

1. check the orbit admits three-axis magnetic stabilization
   (:func:`magzoh.averaging.orbit_stabilizable`);
2. locate the largest period below which A(T) stays Hurwitz
   (:func:`max_stable_period`);
3. at the chosen T, solve P A + A^T P = -I and bound the admissible gain
   scaling by eps <= 1 / (2 T ||A^T P A||) (:func:`gain_scale_bound`).

The bound is sufficient, not tight: practical loops usually run with eps
chosen somewhat below it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .averaging import AveragingConfig, average_coupling, orbit_stabilizable
from .geomag import OrbitSpec, orbit_period
from .matan import eigenvalues, is_hurwitz, solve_lyapunov, spectral_norm

__all__ = [
    "DesignError",
    "StateGains",
    "OutputGains",
    "InertiaSpec",
    "SamplingDesign",
    "averaged_state_matrix",
    "averaged_output_matrix",
    "lyapunov_state",
    "lyapunov_output",
    "max_stable_period",
    "gain_scale_bound",
    "sampling_design",
]


class DesignError(RuntimeError):
    """Raised when no stabilizing design exists for the requested inputs."""


@dataclass(frozen=True)
class StateGains:
    """Gains of the state-feedback dipole law."""

    k1: float
    k2: float

    def __post_init__(self) -> None:
        if not (self.k1 > 0 and self.k2 > 0):
            raise ValueError("state-feedback gains k1, k2 must be positive")


@dataclass(frozen=True)
class OutputGains:
    """Gains of the attitude-only (observer-based) dipole law."""

    k1: float
    k2: float
    alpha: float
    lam: float

    def __post_init__(self) -> None:
        if not (self.k1 > 0 and self.k2 > 0 and self.alpha > 0 and self.lam > 0):
            raise ValueError("output-feedback gains k1, k2, alpha, lam must be positive")


@dataclass(frozen=True, eq=False)
class InertiaSpec:
    """Spacecraft inertia matrix, kg m^2, symmetric positive definite."""

    matrix: np.ndarray
    inverse: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        j = np.asarray(self.matrix, dtype=float)
        if j.shape != (3, 3):
            raise ValueError("inertia matrix must be 3x3")
        if spectral_norm(j - j.T) > 1e-9 * spectral_norm(j):
            raise ValueError("inertia matrix must be symmetric")
        if np.linalg.eigvalsh(0.5 * (j + j.T))[0] <= 0:
            raise ValueError("inertia matrix must be positive definite")
        object.__setattr__(self, "matrix", j)
        object.__setattr__(self, "inverse", np.linalg.inv(j))

    @classmethod
    def from_diagonal(cls, diag) -> "InertiaSpec":
        return cls(np.diag(np.asarray(diag, dtype=float)))


@dataclass(frozen=True, eq=False)
class SamplingDesign:
    """Design output: chosen period, its admissible range, and the gain bound."""

    T: float
    period_limit: float
    lyapunov_matrix: np.ndarray
    epsilon_bound: float
    spectrum_at_T: np.ndarray

    def __post_init__(self) -> None:
        if not 0.0 < self.T < self.period_limit:
            raise ValueError("need 0 < T < period_limit")
        if not self.epsilon_bound > 0:
            raise ValueError("epsilon bound must be positive")


def averaged_state_matrix(inertia: InertiaSpec, gains: StateGains, coupling) -> np.ndarray:
    """System matrix of the averaged state-feedback loop, 6x6.

    Blocks [[0, I/2], [-k1 J^-1 C, -k2 J^-1 C]] over state (attitude error,
    scaled rate), with C the average coupling matrix.
    """
    c = np.asarray(coupling, dtype=float)
    jinv_c = inertia.inverse @ c
    a = np.zeros((6, 6))
    a[0:3, 3:6] = 0.5 * np.eye(3)
    a[3:6, 0:3] = -gains.k1 * jinv_c
    a[3:6, 3:6] = -gains.k2 * jinv_c
    return a


def averaged_output_matrix(inertia: InertiaSpec, gains: OutputGains, coupling) -> np.ndarray:
    """System matrix of the averaged output-feedback loop, 10x10.

    State blocks are (attitude error, scaled rate, observer residual,
    observer scalar defect); the scalar block is decoupled, so the matrix is
    block triangular in it.
    """
    c = np.asarray(coupling, dtype=float)
    jinv_c = inertia.inverse @ c
    al = gains.alpha * gains.lam
    eye3 = np.eye(3)
    a = np.zeros((10, 10))
    a[0:3, 3:6] = 0.5 * eye3
    a[3:6, 0:3] = -gains.k1 * jinv_c
    a[3:6, 6:9] = -0.5 * gains.k2 * al * jinv_c
    a[6:9, 3:6] = 0.5 * eye3
    a[6:9, 6:9] = -al * eye3
    a[9, 9] = -al
    return a


def lyapunov_state(w, gains: StateGains, inertia: InertiaSpec, coupling_zero) -> float:
    """Energy-like function k1 w1.C0 w1 + (1/2) w2.J w2 for the 6-state loop.

    Non-increasing along trajectories of the zero-period averaged system; its
    decay is what makes the averaged state matrix Hurwitz for small T.
    """
    w = np.asarray(w, dtype=float)
    w1, w2 = w[0:3], w[3:6]
    c0 = np.asarray(coupling_zero, dtype=float)
    return float(gains.k1 * w1 @ c0 @ w1 + 0.5 * w2 @ inertia.matrix @ w2)


def lyapunov_output(w, gains: OutputGains, inertia: InertiaSpec, coupling_zero) -> float:
    """Energy-like function for the 10-state loop.

    Adds (1/2) k2 alpha lam w3.C0 w3 + (1/2) w4^2 to the state-feedback form.
    """
    w = np.asarray(w, dtype=float)
    w1, w2, w3, w4 = w[0:3], w[3:6], w[6:9], w[9]
    c0 = np.asarray(coupling_zero, dtype=float)
    al = gains.alpha * gains.lam
    return float(
        gains.k1 * w1 @ c0 @ w1
        + 0.5 * w2 @ inertia.matrix @ w2
        + 0.5 * gains.k2 * al * w3 @ c0 @ w3
        + 0.5 * w4 * w4
    )


def _averaged_matrix(inertia, gains, kind: str, coupling) -> np.ndarray:
    if kind == "state":
        return averaged_state_matrix(inertia, gains, coupling)
    if kind == "output":
        return averaged_output_matrix(inertia, gains, coupling)
    raise ValueError(f"kind must be 'state' or 'output', got {kind!r}")


def max_stable_period(
    spec: OrbitSpec,
    inertia: InertiaSpec,
    gains,
    kind: str = "state",
    scan_step: float = 10.0,
    bisect_tol: float = 1.0,
    t_max: float | None = None,
    margin: float | None = None,
    avg: AveragingConfig = AveragingConfig(),
) -> float:
    """Largest sampling period below which the averaged matrix stays Hurwitz.

    Scans T = scan_step, 2*scan_step, ... up to ``t_max`` (default one orbital
    period), stops at the first Hurwitz failure, and bisects the bracketing
    interval down to ``bisect_tol``. If the scan never fails, the scan limit
    itself is returned. Raises DesignError when the orbit is not stabilizable
    or the very first scanned period is already unstable.
    """
    ok, pd_margin = orbit_stabilizable(spec)
    if not ok:
        raise DesignError(
            "average field coupling is not positive definite "
            f"(margin {pd_margin:.3e}); the orbit is too close to equatorial"
        )
    if scan_step <= 0 or bisect_tol <= 0:
        raise ValueError("scan_step and bisect_tol must be positive")
    if t_max is None:
        t_max = orbit_period(spec)

    def hurwitz_at(T: float) -> bool:
        a = _averaged_matrix(inertia, gains, kind, average_coupling(spec, T, avg))
        return is_hurwitz(a, margin=margin)

    last_good = None
    first_bad = None
    T = scan_step
    while T <= t_max + 1e-12:
        if hurwitz_at(T):
            last_good = T
        else:
            first_bad = T
            break
        T += scan_step
    if last_good is None:
        raise DesignError(
            f"averaged loop is unstable even at the smallest scanned period {scan_step} s"
        )
    if first_bad is None:
        return float(last_good)

    lo, hi = last_good, first_bad
    while hi - lo > bisect_tol:
        mid = 0.5 * (lo + hi)
        if hurwitz_at(mid):
            lo = mid
        else:
            hi = mid
    return float(lo)


def gain_scale_bound(a, T: float) -> tuple[float, np.ndarray]:
    """Admissible gain-scaling bound at sampling period T.

    Solves P A + A^T P = -I and returns
    (1 / (2 T ||A^T P A||), P). Any scaling eps in (0, bound] keeps the
    averaged iteration z + eps T A z exponentially contracting in the P norm.
    """
    if T <= 0:
        raise ValueError("sampling period T must be positive")
    a = np.asarray(a, dtype=float)
    p = solve_lyapunov(a)  # raises for non-Hurwitz input
    bound = 1.0 / (2.0 * T * spectral_norm(a.T @ p @ a))
    return float(bound), p


def sampling_design(
    spec: OrbitSpec,
    inertia: InertiaSpec,
    gains,
    T: float,
    kind: str = "state",
    scan_step: float = 10.0,
    bisect_tol: float = 1.0,
    avg: AveragingConfig = AveragingConfig(),
) -> SamplingDesign:
    """Full design pass: stabilizability, period limit, and gain bound at T.

    Raises DesignError if the orbit fails the stabilizability test or if T is
    not strictly inside the admissible period range.
    """
    limit = max_stable_period(
        spec, inertia, gains, kind=kind, scan_step=scan_step, bisect_tol=bisect_tol, avg=avg
    )
    if not 0.0 < T < limit:
        raise DesignError(f"sampling period T={T:g} s is not inside (0, {limit:g}) s")
    a = _averaged_matrix(inertia, gains, kind, average_coupling(spec, T, avg))
    bound, p = gain_scale_bound(a, T)
    return SamplingDesign(
        T=float(T),
        period_limit=limit,
        lyapunov_matrix=p,
        epsilon_bound=bound,
        spectrum_at_T=eigenvalues(a),
    )
