"""Closed-loop simulation of sampled magnetic attitude control.

The plant is the rigid-body attitude system

    q'     = W(q) omega
    J w'   = -omega x (J omega) - skew(B_b(q, t)) m

integrated with fixed-step classical RK4 and the quaternion renormalized
after every step. Held controllers are re-evaluated exactly at t = kT, which
the step size is required to hit (T/h integral), so no event detection is
needed. Continuous controllers are folded into the right-hand side and
evaluated at every integrator stage.

The integrator hot path runs on plain Python floats: at half a million steps
per case-study run, scalar arithmetic beats small-array numpy by an order of
magnitude. The numpy-facing :func:`dynamics_rhs` is the readable reference
for the same equations and the scalar core is tested against it.
"""

from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .attmath import QUAT_IDENTITY, kin_matrix, normalize, skew
from .averaging import AveragingConfig, attitude_hold_kernel, rate_hold_kernel
from .control import (
    ControllerConfig,
    initial_observer_state,
    output_fb_step,
    state_fb_dipole,
)
from .design import InertiaSpec
from .geomag import OrbitSpec, field_body, field_inertial, orbital_rate, plane_to_inertial

__all__ = [
    "SimulationDivergenceError",
    "SimConfig",
    "SimSample",
    "Trajectory",
    "MetricsReport",
    "dynamics_rhs",
    "rk4_step",
    "run_closed_loop",
    "run_linearized_sampled",
    "metrics",
]

# Divergence guard: no physically meaningful run reaches this rate.
OMEGA_LIMIT = 10.0  # rad/s


class SimulationDivergenceError(RuntimeError):
    """Raised when the integrated state blows up or turns non-finite."""

    def __init__(self, message: str, last_valid_time: float):
        super().__init__(message)
        self.last_valid_time = last_valid_time


@dataclass(eq=False)
class SimConfig:
    """Everything a closed-loop run needs.

    ``h`` defaults to T/200 for held controllers and is required otherwise;
    for held controllers T/h must be a positive integer so that control
    updates land exactly on step boundaries. ``delta0`` overrides the default
    observer initialization q0 / (eps lam).
    """

    orbit: OrbitSpec
    inertia: InertiaSpec
    controller: ControllerConfig
    t_final: float
    q0: np.ndarray | None = None
    omega0: np.ndarray | None = None
    h: float | None = None
    delta0: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.q0 = normalize(QUAT_IDENTITY if self.q0 is None else np.asarray(self.q0, float))
        self.omega0 = (
            np.zeros(3) if self.omega0 is None else np.asarray(self.omega0, dtype=float)
        )
        if self.omega0.shape != (3,) or not np.all(np.isfinite(self.omega0)):
            raise ValueError("omega0 must be a finite 3-vector")
        if not self.t_final > 0:
            raise ValueError("t_final must be positive")
        if self.controller.is_sampled:
            T = self.controller.T
            if self.h is None:
                self.h = T / 200.0
            ratio = T / self.h
            if abs(ratio - round(ratio)) > 1e-9 * ratio or round(ratio) < 1:
                raise ValueError(f"T/h = {ratio!r} must be a positive integer")
            if self.t_final < T:
                raise ValueError("t_final must cover at least one sampling interval")
        elif self.h is None:
            raise ValueError("continuous controllers need an explicit step size h")
        if not self.h > 0:
            raise ValueError("step size h must be positive")
        if self.delta0 is not None:
            self.delta0 = np.asarray(self.delta0, dtype=float)
            if self.delta0.shape != (4,):
                raise ValueError("delta0 must be a 4-vector")

    def steps_per_hold(self) -> int:
        return int(round(self.controller.T / self.h))

    def fingerprint(self) -> str:
        """Short deterministic hash of the full configuration."""
        parts = [
            repr(self.orbit),
            repr(self.inertia.matrix.tolist()),
            self.controller.kind,
            repr(self.controller.gains),
            repr((self.controller.epsilon, self.controller.T)),
            repr((self.q0.tolist(), self.omega0.tolist(), self.t_final, self.h)),
            repr(None if self.delta0 is None else self.delta0.tolist()),
        ]
        return hashlib.sha256("|".join(parts).encode()).hexdigest()[:16]


@dataclass(eq=False)
class SimSample:
    """One logged instant: state, the dipole command in force, and the body field."""

    t: float
    q: np.ndarray
    omega: np.ndarray
    m: np.ndarray
    b_body: np.ndarray


@dataclass(eq=False)
class Trajectory:
    """Column-major log of a run, one row per integrator step.

    The dipole row m[i] is the command in force on [t[i], t[i] + h); the
    final row repeats the last command. ``sample(i)`` returns a row view as
    a :class:`SimSample`.
    """

    t: np.ndarray
    q: np.ndarray
    omega: np.ndarray
    m: np.ndarray
    b_body: np.ndarray
    config_hash: str = ""
    wall_time_s: float = 0.0

    def __post_init__(self) -> None:
        if len(self.t) == 0:
            raise ValueError("trajectory must contain at least one sample")
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("sample times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.t)

    def sample(self, i: int) -> SimSample:
        return SimSample(
            t=float(self.t[i]), q=self.q[i], omega=self.omega[i],
            m=self.m[i], b_body=self.b_body[i],
        )


@dataclass(frozen=True)
class MetricsReport:
    """Settling and magnitude summary of a trajectory."""

    settled: bool
    settle_time_s: float | None
    final_omega_norm: float
    final_qv_norm: float
    max_dipole: float


# --- reference dynamics (numpy) ---


def dynamics_rhs(q, omega, m, t, orbit: OrbitSpec, inertia: InertiaSpec):
    """Right-hand side of the closed plant with the dipole command held.

    Returns (q_dot, omega_dot) with q_dot = W(q) omega and
    J omega_dot = -omega x (J omega) - skew(B_b(q, t)) m. The commanded
    torque, cross(m, B_b), is orthogonal to the local field by construction.
    """
    q = np.asarray(q, dtype=float)
    omega = np.asarray(omega, dtype=float)
    m = np.asarray(m, dtype=float)
    q_dot = kin_matrix(q) @ omega
    b_b = field_body(q, orbit, t)
    torque = np.cross(m, b_b)
    omega_dot = inertia.inverse @ (torque - np.cross(omega, inertia.matrix @ omega))
    return q_dot, omega_dot


# --- scalar core ---


class _DynCore:
    """Scalar-arithmetic twin of :func:`dynamics_rhs` plus an RK4 stepper."""

    __slots__ = ("b_inertial", "b_body", "rhs", "step_raw")

    def __init__(self, orbit: OrbitSpec, inertia: InertiaSpec):
        n = orbital_rate(orbit)
        phi0 = orbit.phi0_rad
        scale = orbit.mu_m / orbit.radius_m**3
        rot = plane_to_inertial(orbit)
        m00, m01 = rot[0, 0], rot[0, 1]
        m10, m11 = rot[1, 0], rot[1, 1]
        m20, m21 = rot[2, 0], rot[2, 1]
        hx, hy, hz = (float(v) for v in orbit.m_hat_i)
        j = inertia.matrix
        j00, j01, j02 = j[0]
        j10, j11, j12 = j[1]
        j20, j21, j22 = j[2]
        ji = inertia.inverse
        i00, i01, i02 = ji[0]
        i10, i11, i12 = ji[1]
        i20, i21, i22 = ji[2]
        cos, sin = math.cos, math.sin

        def b_inertial(t):
            u = n * t + phi0
            c, s = cos(u), sin(u)
            rx = m00 * c + m01 * s
            ry = m10 * c + m11 * s
            rz = m20 * c + m21 * s
            p3 = 3.0 * (hx * rx + hy * ry + hz * rz)
            return (
                scale * (p3 * rx - hx),
                scale * (p3 * ry - hy),
                scale * (p3 * rz - hz),
            )

        def b_body(qx, qy, qz, q4, t):
            bx, by, bz = b_inertial(t)
            s0 = q4 * q4 - (qx * qx + qy * qy + qz * qz)
            d = 2.0 * (qx * bx + qy * by + qz * bz)
            cx = qy * bz - qz * by
            cy = qz * bx - qx * bz
            cz = qx * by - qy * bx
            q42 = 2.0 * q4
            return (
                s0 * bx + d * qx - q42 * cx,
                s0 * by + d * qy - q42 * cy,
                s0 * bz + d * qz - q42 * cz,
            )

        def rhs(qx, qy, qz, q4, wx, wy, wz, mx, my, mz, t):
            bbx, bby, bbz = b_body(qx, qy, qz, q4, t)
            # torque = m x B_b
            tx = my * bbz - mz * bby
            ty = mz * bbx - mx * bbz
            tz = mx * bby - my * bbx
            # q_dot = 0.5 * (q4 w + qv x w; -qv . w)
            qdx = 0.5 * (q4 * wx + qy * wz - qz * wy)
            qdy = 0.5 * (q4 * wy + qz * wx - qx * wz)
            qdz = 0.5 * (q4 * wz + qx * wy - qy * wx)
            qd4 = -0.5 * (qx * wx + qy * wy + qz * wz)
            # J w_dot = torque - w x (J w)
            jwx = j00 * wx + j01 * wy + j02 * wz
            jwy = j10 * wx + j11 * wy + j12 * wz
            jwz = j20 * wx + j21 * wy + j22 * wz
            gx = tx - (wy * jwz - wz * jwy)
            gy = ty - (wz * jwx - wx * jwz)
            gz = tz - (wx * jwy - wy * jwx)
            return (
                qdx, qdy, qdz, qd4,
                i00 * gx + i01 * gy + i02 * gz,
                i10 * gx + i11 * gy + i12 * gz,
                i20 * gx + i21 * gy + i22 * gz,
            )

        def step_raw(state, mx, my, mz, t, h):
            qx, qy, qz, q4, wx, wy, wz = state
            h2 = 0.5 * h
            a1, a2, a3, a4, a5, a6, a7 = rhs(qx, qy, qz, q4, wx, wy, wz, mx, my, mz, t)
            b1, b2, b3, b4, b5, b6, b7 = rhs(
                qx + h2 * a1, qy + h2 * a2, qz + h2 * a3, q4 + h2 * a4,
                wx + h2 * a5, wy + h2 * a6, wz + h2 * a7, mx, my, mz, t + h2,
            )
            c1, c2, c3, c4, c5, c6, c7 = rhs(
                qx + h2 * b1, qy + h2 * b2, qz + h2 * b3, q4 + h2 * b4,
                wx + h2 * b5, wy + h2 * b6, wz + h2 * b7, mx, my, mz, t + h2,
            )
            d1, d2, d3, d4, d5, d6, d7 = rhs(
                qx + h * c1, qy + h * c2, qz + h * c3, q4 + h * c4,
                wx + h * c5, wy + h * c6, wz + h * c7, mx, my, mz, t + h,
            )
            h6 = h / 6.0
            return (
                qx + h6 * (a1 + 2.0 * (b1 + c1) + d1),
                qy + h6 * (a2 + 2.0 * (b2 + c2) + d2),
                qz + h6 * (a3 + 2.0 * (b3 + c3) + d3),
                q4 + h6 * (a4 + 2.0 * (b4 + c4) + d4),
                wx + h6 * (a5 + 2.0 * (b5 + c5) + d5),
                wy + h6 * (a6 + 2.0 * (b6 + c6) + d6),
                wz + h6 * (a7 + 2.0 * (b7 + c7) + d7),
            )

        self.b_inertial = b_inertial
        self.b_body = b_body
        self.rhs = rhs
        self.step_raw = step_raw


@lru_cache(maxsize=32)
def _dyn_core(orbit: OrbitSpec, inertia: InertiaSpec) -> _DynCore:
    return _DynCore(orbit, inertia)


def rk4_step(q, omega, m, t, h, orbit: OrbitSpec, inertia: InertiaSpec,
             renormalize: bool = True):
    """One classical RK4 step of the held-input plant.

    Returns (q, omega) after the step; with ``renormalize=False`` the raw
    quaternion is returned so tests can measure the per-step norm drift.
    """
    if not h > 0:
        raise ValueError("step size must be positive")
    core = _dyn_core(orbit, inertia)
    state = tuple(float(v) for v in np.concatenate([np.asarray(q, float), np.asarray(omega, float)]))
    mx, my, mz = (float(v) for v in np.asarray(m, dtype=float))
    out = core.step_raw(state, mx, my, mz, float(t), float(h))
    q_new = np.array(out[:4])
    if renormalize:
        q_new = normalize(q_new)
    return q_new, np.array(out[4:])


# --- closed-loop runs ---


def _guard(state, t: float, last_ok: float):
    qx, qy, qz, q4, wx, wy, wz = state
    total = qx + qy + qz + q4 + wx + wy + wz
    if not (wx * wx + wy * wy + wz * wz < OMEGA_LIMIT * OMEGA_LIMIT) or total != total:
        raise SimulationDivergenceError(
            f"state diverged at t = {t:.6g} s (last valid t = {last_ok:.6g} s)", last_ok
        )


def _renorm(state):
    qx, qy, qz, q4 = state[:4]
    nq = math.sqrt(qx * qx + qy * qy + qz * qz + q4 * q4)
    if not nq > 1e-12:
        return None
    inv = 1.0 / nq
    return (qx * inv, qy * inv, qz * inv, q4 * inv) + state[4:]


def run_closed_loop(cfg: SimConfig) -> Trajectory:
    """Integrate the closed loop and log every integrator step.

    Held controllers are sampled at t = kT from the current state and the
    body-frame field there; the dipole stays constant until the next sampling
    instant. Raises :class:`SimulationDivergenceError` if the state leaves
    the guard region (|omega| >= 10 rad/s or non-finite values).
    """
    start = time.perf_counter()
    kind = cfg.controller.kind
    if kind.startswith("zoh"):
        cols = _run_sampled(cfg)
    else:
        cols = _run_continuous(cfg)
    ts, qs, ws, ms, bbs = cols
    return Trajectory(
        t=np.array(ts),
        q=np.array(qs),
        omega=np.array(ws),
        m=np.array(ms),
        b_body=np.array(bbs),
        config_hash=cfg.fingerprint(),
        wall_time_s=time.perf_counter() - start,
    )


def _initial_delta(cfg: SimConfig) -> np.ndarray:
    if cfg.delta0 is not None:
        return cfg.delta0.copy()
    if cfg.controller.epsilon > 0:
        return initial_observer_state(cfg.q0, cfg.controller)
    return np.zeros(4)


def _run_sampled(cfg: SimConfig):
    core = _dyn_core(cfg.orbit, cfg.inertia)
    step_raw, b_body = core.step_raw, core.b_body
    h = cfg.h
    n_hold = cfg.steps_per_hold()
    total = int(round(cfg.t_final / h))
    is_output = cfg.controller.kind == "zoh-output"
    delta = _initial_delta(cfg) if is_output else None

    state = tuple(float(v) for v in np.concatenate([cfg.q0, cfg.omega0]))
    ts, qs, ws, ms, bbs = [], [], [], [], []
    m_held = (0.0, 0.0, 0.0)
    t = 0.0
    for i in range(total):
        t = i * h
        if i % n_hold == 0:
            q_arr = np.array(state[:4])
            bb_ctrl = np.array(b_body(state[0], state[1], state[2], state[3], t))
            if is_output:
                m_vec, delta = output_fb_step(delta, q_arr, bb_ctrl, cfg.controller)
            else:
                m_vec = state_fb_dipole(q_arr, np.array(state[4:]), bb_ctrl, cfg.controller)
            m_held = (float(m_vec[0]), float(m_vec[1]), float(m_vec[2]))
        ts.append(t)
        qs.append(state[:4])
        ws.append(state[4:])
        ms.append(m_held)
        bbs.append(b_body(state[0], state[1], state[2], state[3], t))

        raw = step_raw(state, m_held[0], m_held[1], m_held[2], t, h)
        new = _renorm(raw)
        if new is None:
            raise SimulationDivergenceError(
                f"quaternion norm collapsed at t = {t + h:.6g} s", t
            )
        _guard(new, t + h, t)
        state = new

    t_end = total * h
    ts.append(t_end)
    qs.append(state[:4])
    ws.append(state[4:])
    ms.append(m_held)
    bbs.append(b_body(state[0], state[1], state[2], state[3], t_end))
    return ts, qs, ws, ms, bbs


def _run_continuous(cfg: SimConfig):
    core = _dyn_core(cfg.orbit, cfg.inertia)
    rhs7, b_body = core.rhs, core.b_body
    g = cfg.controller.gains
    eps = cfg.controller.epsilon
    is_output = cfg.controller.kind == "continuous-output"

    if is_output:
        k1, k2, alpha, lam = g.k1, g.k2, g.alpha, g.lam
        kobs = k2 * alpha * lam
        el = eps * lam

        def law(s, t):
            qx, qy, qz, q4 = s[:4]
            dx, dy, dz, d4 = s[7:]
            bbx, bby, bbz = b_body(qx, qy, qz, q4, t)
            rx, ry, rz, r4 = qx - el * dx, qy - el * dy, qz - el * dz, q4 - el * d4
            # W(q)^T r = 0.5 * (q4 r_v - qv x r_v - qv r4)
            ux = 0.5 * (q4 * rx - (qy * rz - qz * ry) - qx * r4)
            uy = 0.5 * (q4 * ry - (qz * rx - qx * rz) - qy * r4)
            uz = 0.5 * (q4 * rz - (qx * ry - qy * rx) - qz * r4)
            e2 = eps * eps
            vx = e2 * (k1 * qx + kobs * ux)
            vy = e2 * (k1 * qy + kobs * uy)
            vz = e2 * (k1 * qz + kobs * uz)
            m = (vy * bbz - vz * bby, vz * bbx - vx * bbz, vx * bby - vy * bbx)
            ddot = (alpha * rx, alpha * ry, alpha * rz, alpha * r4)
            return m, ddot

        def rhs(s, t):
            m, ddot = law(s, t)
            return rhs7(*s[:7], m[0], m[1], m[2], t) + ddot

        delta = _initial_delta(cfg)
        state = tuple(float(v) for v in np.concatenate([cfg.q0, cfg.omega0, delta]))
    else:
        k1, k2 = g.k1, g.k2

        def law(s, t):
            qx, qy, qz, q4, wx, wy, wz = s[:7]
            bbx, bby, bbz = b_body(qx, qy, qz, q4, t)
            e2k1 = eps * eps * k1
            ek2 = eps * k2
            vx = e2k1 * qx + ek2 * wx
            vy = e2k1 * qy + ek2 * wy
            vz = e2k1 * qz + ek2 * wz
            return (vy * bbz - vz * bby, vz * bbx - vx * bbz, vx * bby - vy * bbx), ()

        def rhs(s, t):
            m, _ = law(s, t)
            return rhs7(*s, m[0], m[1], m[2], t)

        state = tuple(float(v) for v in np.concatenate([cfg.q0, cfg.omega0]))

    h = cfg.h
    total = int(round(cfg.t_final / h))
    ts, qs, ws, ms, bbs = [], [], [], [], []
    t = 0.0
    for i in range(total):
        t = i * h
        m_now, _ = law(state, t)
        ts.append(t)
        qs.append(state[:4])
        ws.append(state[4:7])
        ms.append(m_now)
        bbs.append(b_body(state[0], state[1], state[2], state[3], t))

        raw = _rk4_generic(rhs, state, t, h)
        new = _renorm(raw)
        if new is None:
            raise SimulationDivergenceError(
                f"quaternion norm collapsed at t = {t + h:.6g} s", t
            )
        _guard(new[:7], t + h, t)
        state = new

    t_end = total * h
    m_now, _ = law(state, t_end)
    ts.append(t_end)
    qs.append(state[:4])
    ws.append(state[4:7])
    ms.append(m_now)
    bbs.append(b_body(state[0], state[1], state[2], state[3], t_end))
    return ts, qs, ws, ms, bbs


def _rk4_generic(rhs, state, t, h):
    h2 = 0.5 * h
    k1 = rhs(state, t)
    k2 = rhs(tuple(s + h2 * d for s, d in zip(state, k1)), t + h2)
    k3 = rhs(tuple(s + h2 * d for s, d in zip(state, k2)), t + h2)
    k4 = rhs(tuple(s + h * d for s, d in zip(state, k3)), t + h)
    h6 = h / 6.0
    return tuple(
        s + h6 * (a + 2.0 * (b + c) + d)
        for s, a, b, c, d in zip(state, k1, k2, k3, k4)
    )


# --- linearized sampled map ---


def run_linearized_sampled(
    cfg: SimConfig, avg: AveragingConfig = AveragingConfig()
) -> Trajectory:
    """Iterate the exact sample-to-sample map of the linearized held-input loop.

    Valid for the zoh-state controller near the pointing equilibrium. With
    attitude error qv and rate omega sampled at t = kT, and the dipole from
    the linearized law m = skew(B_i(kT))^T (eps^2 k1 qv + eps k2 omega), the
    exact update under the linearized dynamics (qv' = omega/2,
    J omega' = -skew(B_i(t)) m) is

        qv+    = qv + (T/2) omega - J^-1 attitude_hold_kernel(k,T) m
        omega+ = omega - J^-1 rate_hold_kernel(k,T) m.

    The logged quaternion lifts qv with q4 = sqrt(max(0, 1 - |qv|^2)) and the
    logged field is the inertial-frame B_i(kT) this map is driven by.
    """
    if cfg.controller.kind != "zoh-state":
        raise ValueError("the linearized sampled map applies to the zoh-state controller")
    T = cfg.controller.T
    eps = cfg.controller.epsilon
    g = cfg.controller.gains
    jinv = cfg.inertia.inverse
    steps = int(round(cfg.t_final / T))
    if steps < 1:
        raise ValueError("t_final must cover at least one sampling interval")

    qv = np.asarray(cfg.q0[:3], dtype=float).copy()
    w = cfg.omega0.copy()
    ts, qs, ws, ms, bbs = [], [], [], [], []
    m = np.zeros(3)
    for k in range(steps):
        t = k * T
        b_k = field_inertial(cfg.orbit, t)
        m = skew(b_k).T @ (eps**2 * g.k1 * qv + eps * g.k2 * w)
        ts.append(t)
        qs.append(_lift_qv(qv))
        ws.append(w.copy())
        ms.append(m.copy())
        bbs.append(b_k)
        qv = qv + 0.5 * T * w - jinv @ (attitude_hold_kernel(cfg.orbit, k, T, avg) @ m)
        w = w - jinv @ (rate_hold_kernel(cfg.orbit, k, T, avg) @ m)

    ts.append(steps * T)
    qs.append(_lift_qv(qv))
    ws.append(w.copy())
    ms.append(m.copy())
    bbs.append(field_inertial(cfg.orbit, steps * T))
    return Trajectory(
        t=np.array(ts), q=np.array(qs), omega=np.array(ws),
        m=np.array(ms), b_body=np.array(bbs),
        config_hash=cfg.fingerprint(), wall_time_s=0.0,
    )


def _lift_qv(qv: np.ndarray) -> np.ndarray:
    q4 = math.sqrt(max(0.0, 1.0 - float(qv @ qv)))
    return np.array([qv[0], qv[1], qv[2], q4])


# --- summary metrics ---


def metrics(traj: Trajectory, tol_omega: float = 1e-4, tol_qv: float = 0.1) -> MetricsReport:
    """Settling summary of a trajectory.

    The settle time is the earliest logged instant from which both
    |omega| < tol_omega and |qv| < tol_qv hold through the end of the run;
    ``settled=False`` (and settle time None) if the final sample violates
    either bound.
    """
    w_norm = np.linalg.norm(traj.omega, axis=1)
    qv_norm = np.linalg.norm(traj.q[:, :3], axis=1)
    ok = (w_norm < tol_omega) & (qv_norm < tol_qv)
    settled = bool(ok[-1])
    if settled:
        bad = np.nonzero(~ok)[0]
        settle_time = float(traj.t[bad[-1] + 1]) if len(bad) else float(traj.t[0])
    else:
        settle_time = None
    return MetricsReport(
        settled=settled,
        settle_time_s=settle_time,
        final_omega_norm=float(w_norm[-1]),
        final_qv_norm=float(qv_norm[-1]),
        max_dipole=float(np.max(np.linalg.norm(traj.m, axis=1))),
    )
