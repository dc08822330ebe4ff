"""Magnetorquer-only attitude stabilization with held (piecewise-constant)
dipole commands: averaging-based sampling-period design and closed-loop
simulation."""

from .attmath import QUAT_IDENTITY, dcm_from_quat, kin_matrix, normalize, skew
from .averaging import (
    AveragingConfig,
    attitude_hold_kernel,
    average_coupling,
    average_coupling_zero,
    hold_coupling,
    orbit_stabilizable,
    rate_hold_kernel,
)
from .control import (
    CONTROLLER_KINDS,
    ControllerConfig,
    continuous_output_fb,
    continuous_state_fb,
    initial_observer_state,
    output_fb_step,
    state_fb_dipole,
)
from .design import (
    DesignError,
    InertiaSpec,
    OutputGains,
    SamplingDesign,
    StateGains,
    averaged_output_matrix,
    averaged_state_matrix,
    gain_scale_bound,
    lyapunov_output,
    lyapunov_state,
    max_stable_period,
    sampling_design,
)
from .geomag import (
    OrbitSpec,
    field_body,
    field_inertial,
    orbit_period,
    orbital_rate,
    position_unit_inertial,
)
from .matan import eigenvalues, is_hurwitz, min_eig_sym, solve_lyapunov, spectral_norm
from .sim import (
    MetricsReport,
    SimConfig,
    SimulationDivergenceError,
    Trajectory,
    dynamics_rhs,
    metrics,
    rk4_step,
    run_closed_loop,
    run_linearized_sampled,
)

__version__ = "0.1.0"
