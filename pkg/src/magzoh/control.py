"""Magnetic dipole control laws: state and output feedback, continuous and held.

Every law commands a coil dipole moment of the form m = skew(B_b)^T v for
some feedback vector v, which equals v x B_b; the resulting torque m x B_b is
therefore always orthogonal to the local field, the fundamental actuation
constraint of magnetic control.

The state-feedback law uses attitude and rate,

    m = skew(B_b)^T (eps^2 k1 qv + eps k2 omega),

while the output-feedback law replaces the rate term with a first-order
observer of the quaternion, delta in R^4:

    delta' = alpha (q - eps lam delta)
    m = skew(B_b)^T eps^2 (k1 qv + k2 alpha lam W(q)^T (q - eps lam delta)).

Held ("zoh") variants evaluate these at the sampling instants only, with the
observer discretized by forward differencing. ``epsilon`` scales the loop
gain; zero disables actuation entirely, which is occasionally useful for
free-motion checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attmath import kin_matrix, skew
from .design import OutputGains, StateGains

__all__ = [
    "CONTROLLER_KINDS",
    "ControllerConfig",
    "state_fb_dipole",
    "continuous_state_fb",
    "output_fb_step",
    "continuous_output_fb",
    "initial_observer_state",
]

CONTROLLER_KINDS = ("continuous-state", "continuous-output", "zoh-state", "zoh-output")


@dataclass(frozen=True, eq=False)
class ControllerConfig:
    """Controller selection: law kind, gains, gain scaling, sampling period.

    ``T`` is required (and positive) for the held kinds and ignored by the
    continuous ones. ``epsilon`` may be zero to switch actuation off.
    """

    kind: str
    gains: StateGains | OutputGains
    epsilon: float
    T: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in CONTROLLER_KINDS:
            raise ValueError(f"unknown controller kind {self.kind!r}")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.kind.endswith("-output"):
            if not isinstance(self.gains, OutputGains):
                raise ValueError(f"{self.kind} requires OutputGains")
        elif not isinstance(self.gains, StateGains):
            raise ValueError(f"{self.kind} requires StateGains")
        if self.kind.startswith("zoh"):
            if self.T is None or not self.T > 0:
                raise ValueError("held controllers need a positive sampling period T")

    @property
    def is_sampled(self) -> bool:
        return self.kind.startswith("zoh")


def state_fb_dipole(q, omega, b_body, cfg: ControllerConfig) -> np.ndarray:
    """State-feedback dipole command m = skew(B_b)^T (eps^2 k1 qv + eps k2 omega).

    For the held kind this is evaluated once per sampling instant and the
    result applied over the whole interval.
    """
    q = np.asarray(q, dtype=float)
    omega = np.asarray(omega, dtype=float)
    g = cfg.gains
    v = cfg.epsilon**2 * g.k1 * q[:3] + cfg.epsilon * g.k2 * omega
    return skew(np.asarray(b_body, dtype=float)).T @ v


def continuous_state_fb(q, omega, b_body, cfg: ControllerConfig) -> np.ndarray:
    """Continuous-time state feedback; same formula as the held law, applied pointwise."""
    return state_fb_dipole(q, omega, b_body, cfg)


def output_fb_step(delta, q, b_body, cfg: ControllerConfig) -> tuple[np.ndarray, np.ndarray]:
    """One sampled output-feedback update.

    Computes the dipole from the current observer state and advances the
    observer by forward differencing over the sampling period:

        m       = skew(B_b)^T eps^2 (k1 qv + k2 alpha lam W(q)^T (q - eps lam delta))
        delta+  = delta + T alpha (q - eps lam delta)

    Returns (m, delta_next). The pair (q, delta) = (identity, identity/(eps lam))
    is a fixed point with m = 0.
    """
    q = np.asarray(q, dtype=float)
    delta = np.asarray(delta, dtype=float)
    m, _ = continuous_output_fb(delta, q, b_body, cfg)
    g = cfg.gains
    delta_next = delta + cfg.T * g.alpha * (q - cfg.epsilon * g.lam * delta)
    return m, delta_next


def continuous_output_fb(delta, q, b_body, cfg: ControllerConfig) -> tuple[np.ndarray, np.ndarray]:
    """Continuous output feedback: returns (m, delta_dot).

    The observer rate delta_dot = alpha (q - eps lam delta) is integrated by
    the caller; forward-Euler with step T reproduces :func:`output_fb_step`
    exactly.
    """
    q = np.asarray(q, dtype=float)
    delta = np.asarray(delta, dtype=float)
    g = cfg.gains
    residual = q - cfg.epsilon * g.lam * delta
    v = cfg.epsilon**2 * (
        g.k1 * q[:3] + g.k2 * g.alpha * g.lam * (kin_matrix(q).T @ residual)
    )
    m = skew(np.asarray(b_body, dtype=float)).T @ v
    delta_dot = g.alpha * residual
    return m, delta_dot


def initial_observer_state(q0, cfg: ControllerConfig) -> np.ndarray:
    """Default observer initialization delta(0) = q(0) / (eps lam).

    Starts the observer residual q - eps lam delta at zero, avoiding a
    startup transient unrelated to the loop being tested. Only meaningful for
    output-feedback kinds with epsilon > 0.
    """
    if not isinstance(cfg.gains, OutputGains):
        raise ValueError("observer state applies to output-feedback controllers only")
    if cfg.epsilon <= 0:
        raise ValueError("observer initialization needs epsilon > 0")
    return np.asarray(q0, dtype=float) / (cfg.epsilon * cfg.gains.lam)
