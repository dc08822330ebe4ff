"""Command-line front end: scenario files, design reports, simulation runs.

Scenario files are TOML with four flat sections (``orbit``, ``inertia``,
``controller``, optional ``sim`` and ``design``); unknown keys are rejected
so typos fail loudly. Three subcommands:

    magzoh design   --config scenario.toml [--kind state|output]
    magzoh simulate --config scenario.toml --out run.csv
    magzoh lav      --config scenario.toml [--T seconds]

Exit codes: 0 success, 2 scenario validation error, 3 design failure,
4 simulation divergence.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, fields

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .averaging import AveragingConfig, average_coupling, average_coupling_zero, orbit_stabilizable
from .control import CONTROLLER_KINDS, ControllerConfig
from .design import (
    DesignError,
    InertiaSpec,
    OutputGains,
    StateGains,
    sampling_design,
)
from .geomag import EARTH_MU, EARTH_RADIUS, DIPOLE_STRENGTH, OrbitSpec
from .matan import min_eig_sym
from .sim import MetricsReport, SimConfig, SimulationDivergenceError, Trajectory, metrics, run_closed_loop

__all__ = [
    "ScenarioError",
    "Scenario",
    "DesignReport",
    "parse_scenario",
    "scenario_to_toml",
    "cmd_design",
    "cmd_simulate",
    "cmd_lav",
    "write_csv",
    "main",
    "console_main",
]

CSV_COLUMNS = "t,q1,q2,q3,q4,wx,wy,wz,mx,my,mz,bbx,bby,bbz"

# Observer gains used when an output-feedback design is requested without
# explicit values; chosen to maximize the guaranteed contraction rate of the
# averaged loop for the bundled reference scenario.
DEFAULT_ALPHA = 1.0
DEFAULT_LAMBDA = 4.0


class ScenarioError(ValueError):
    """Raised for unparseable or invalid scenario files."""


@dataclass(frozen=True)
class Scenario:
    """Validated, fully-resolved scenario: plain data, round-trippable to TOML."""

    # orbit
    radius_m: float
    incl_deg: float
    raan_deg: float
    phi0_rad: float
    mu_earth: float
    mu_m: float
    # inertia (exactly one of the two is set)
    inertia_diag: tuple | None
    inertia_rows: tuple | None
    # controller
    kind: str
    k1: float
    k2: float
    epsilon: float
    T: float | None
    alpha: float | None
    lam: float | None
    # sim (optional)
    q0: tuple
    omega0: tuple
    t_final: float | None
    h: float | None
    # design options
    scan_step: float
    bisect_tol: float
    quad_substeps: int
    avg_samples: int
    t0_offset: float

    # --- builders onto the domain objects (each re-validates its invariants) ---

    def orbit(self) -> OrbitSpec:
        return OrbitSpec(
            radius_m=self.radius_m,
            incl_rad=math.radians(self.incl_deg),
            raan_rad=math.radians(self.raan_deg),
            phi0_rad=self.phi0_rad,
            mu_earth=self.mu_earth,
            mu_m=self.mu_m,
        )

    def inertia(self) -> InertiaSpec:
        if self.inertia_diag is not None:
            return InertiaSpec.from_diagonal(self.inertia_diag)
        return InertiaSpec(np.array(self.inertia_rows, dtype=float))

    def gains(self, kind: str | None = None):
        kind = kind or self.kind
        if kind.endswith("output"):
            return OutputGains(
                k1=self.k1,
                k2=self.k2,
                alpha=self.alpha if self.alpha is not None else DEFAULT_ALPHA,
                lam=self.lam if self.lam is not None else DEFAULT_LAMBDA,
            )
        return StateGains(k1=self.k1, k2=self.k2)

    def controller(self) -> ControllerConfig:
        return ControllerConfig(
            kind=self.kind, gains=self.gains(), epsilon=self.epsilon, T=self.T
        )

    def averaging(self) -> AveragingConfig:
        return AveragingConfig(
            quad_substeps=self.quad_substeps,
            avg_samples=self.avg_samples if self.avg_samples > 0 else None,
            t0_offset=self.t0_offset,
        )

    def sim_config(self) -> SimConfig:
        if self.t_final is None:
            raise ScenarioError("sim.t_final is required to simulate this scenario")
        return SimConfig(
            orbit=self.orbit(),
            inertia=self.inertia(),
            controller=self.controller(),
            t_final=self.t_final,
            q0=np.array(self.q0),
            omega0=np.array(self.omega0),
            h=self.h,
        )


@dataclass(frozen=True)
class DesignReport:
    """Outcome of a design pass; all values finite and JSON-serializable."""

    kind: str
    T: float
    period_limit: float
    epsilon_bound: float
    epsilon_configured: float
    stabilizability_margin: float
    coupling_zero_eigs: tuple
    spectrum_at_T: tuple  # (re, im) pairs

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


# --- parsing ---

_SECTION_KEYS = {
    "orbit": {"radius_m", "altitude_m", "incl_deg", "raan_deg", "phi0_rad", "mu_earth", "mu_m"},
    "inertia": {"diag", "rows"},
    "controller": {"kind", "k1", "k2", "epsilon", "T", "alpha", "lambda"},
    "sim": {"q0", "omega0", "t_final", "h"},
    "design": {"scan_step", "bisect_tol", "quad_substeps", "avg_samples", "t0_offset"},
}


def _number(section: dict, sec: str, key: str, default=None, required=False) -> float | None:
    if key not in section:
        if required:
            raise ScenarioError(f"{sec}.{key} required")
        return default
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{sec}.{key} must be a number, got {value!r}")
    return float(value)


def _vector(section: dict, sec: str, key: str, length: int, default=None):
    if key not in section:
        return default
    value = section[key]
    if not isinstance(value, list) or len(value) != length or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        raise ScenarioError(f"{sec}.{key} must be a list of {length} numbers")
    return tuple(float(v) for v in value)


def parse_scenario(path) -> Scenario:
    """Load, default-fill, and validate a scenario file.

    Any violated invariant of the underlying domain objects surfaces here as
    a :class:`ScenarioError` naming the offending key.
    """
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"scenario parse error: {exc}") from exc

    for sec, body in raw.items():
        if sec not in _SECTION_KEYS:
            raise ScenarioError(f"unknown section [{sec}]")
        if not isinstance(body, dict):
            raise ScenarioError(f"[{sec}] must be a table")
        for key in body:
            if key not in _SECTION_KEYS[sec]:
                raise ScenarioError(f"unknown key {sec}.{key}")
    for sec in ("orbit", "inertia", "controller"):
        if sec not in raw:
            raise ScenarioError(f"missing required section [{sec}]")

    orbit = raw["orbit"]
    radius = _number(orbit, "orbit", "radius_m")
    altitude = _number(orbit, "orbit", "altitude_m")
    if (radius is None) == (altitude is None):
        raise ScenarioError("orbit needs exactly one of radius_m or altitude_m")
    if radius is None:
        radius = EARTH_RADIUS + altitude

    inertia = raw["inertia"]
    diag = _vector(inertia, "inertia", "diag", 3)
    rows = inertia.get("rows")
    if (diag is None) == (rows is None):
        raise ScenarioError("inertia needs exactly one of diag or rows")
    if rows is not None:
        if (
            not isinstance(rows, list)
            or len(rows) != 3
            or any(not isinstance(r, list) or len(r) != 3 for r in rows)
        ):
            raise ScenarioError("inertia.rows must be a 3x3 list of lists")
        rows = tuple(tuple(float(v) for v in r) for r in rows)

    ctrl = raw["controller"]
    kind = ctrl.get("kind")
    if kind not in CONTROLLER_KINDS:
        raise ScenarioError(f"controller.kind must be one of {CONTROLLER_KINDS}, got {kind!r}")
    k1 = _number(ctrl, "controller", "k1", required=True)
    k2 = _number(ctrl, "controller", "k2", required=True)
    if not (k1 > 0 and k2 > 0):
        raise ScenarioError("controller gains k1 and k2 are required and must be > 0")
    epsilon = _number(ctrl, "controller", "epsilon", required=True)
    T = _number(ctrl, "controller", "T")
    alpha = _number(ctrl, "controller", "alpha")
    lam = _number(ctrl, "controller", "lambda")
    if kind.endswith("output"):
        alpha = DEFAULT_ALPHA if alpha is None else alpha
        lam = DEFAULT_LAMBDA if lam is None else lam

    sim = raw.get("sim", {})
    design = raw.get("design", {})
    avg_samples = design.get("avg_samples", 0)
    if not isinstance(avg_samples, int) or isinstance(avg_samples, bool) or avg_samples < 0:
        raise ScenarioError("design.avg_samples must be a nonnegative integer (0 = automatic)")
    quad_substeps = design.get("quad_substeps", 64)
    if not isinstance(quad_substeps, int) or isinstance(quad_substeps, bool):
        raise ScenarioError("design.quad_substeps must be an integer")

    scenario = Scenario(
        radius_m=radius,
        incl_deg=_number(orbit, "orbit", "incl_deg", required=True),
        raan_deg=_number(orbit, "orbit", "raan_deg", 0.0),
        phi0_rad=_number(orbit, "orbit", "phi0_rad", 0.0),
        mu_earth=_number(orbit, "orbit", "mu_earth", EARTH_MU),
        mu_m=_number(orbit, "orbit", "mu_m", DIPOLE_STRENGTH),
        inertia_diag=diag,
        inertia_rows=rows,
        kind=kind,
        k1=k1,
        k2=k2,
        epsilon=epsilon,
        T=T,
        alpha=alpha,
        lam=lam,
        q0=_vector(sim, "sim", "q0", 4, (0.0, 0.0, 0.0, 1.0)),
        omega0=_vector(sim, "sim", "omega0", 3, (0.0, 0.0, 0.0)),
        t_final=_number(sim, "sim", "t_final"),
        h=_number(sim, "sim", "h"),
        scan_step=_number(design, "design", "scan_step", 10.0),
        bisect_tol=_number(design, "design", "bisect_tol", 1.0),
        quad_substeps=quad_substeps,
        avg_samples=avg_samples,
        t0_offset=_number(design, "design", "t0_offset", 0.0),
    )
    _validate(scenario, has_sim="sim" in raw)
    return scenario


def _validate(s: Scenario, has_sim: bool) -> None:
    try:
        s.orbit()
        s.inertia()
        s.controller()
        s.averaging()
        if has_sim and s.t_final is not None:
            s.sim_config()
        if s.scan_step <= 0 or s.bisect_tol <= 0:
            raise ValueError("design.scan_step and design.bisect_tol must be > 0")
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc


def _fmt(value) -> str:
    if isinstance(value, bool):
        raise TypeError("no boolean scenario values")
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    if isinstance(value, str):
        return f'"{value}"'
    raise TypeError(f"cannot format {value!r}")


def scenario_to_toml(s: Scenario) -> str:
    """Serialize a scenario; parsing the result reproduces it exactly."""
    lines = ["[orbit]"]
    lines.append(f"radius_m = {_fmt(s.radius_m)}")
    lines.append(f"incl_deg = {_fmt(s.incl_deg)}")
    lines.append(f"raan_deg = {_fmt(s.raan_deg)}")
    lines.append(f"phi0_rad = {_fmt(s.phi0_rad)}")
    lines.append(f"mu_earth = {_fmt(s.mu_earth)}")
    lines.append(f"mu_m = {_fmt(s.mu_m)}")
    lines.append("")
    lines.append("[inertia]")
    if s.inertia_diag is not None:
        lines.append(f"diag = {_fmt(s.inertia_diag)}")
    else:
        lines.append("rows = [" + ", ".join(_fmt(r) for r in s.inertia_rows) + "]")
    lines.append("")
    lines.append("[controller]")
    lines.append(f'kind = "{s.kind}"')
    lines.append(f"k1 = {_fmt(s.k1)}")
    lines.append(f"k2 = {_fmt(s.k2)}")
    lines.append(f"epsilon = {_fmt(s.epsilon)}")
    if s.T is not None:
        lines.append(f"T = {_fmt(s.T)}")
    if s.alpha is not None:
        lines.append(f"alpha = {_fmt(s.alpha)}")
    if s.lam is not None:
        lines.append(f"lambda = {_fmt(s.lam)}")
    lines.append("")
    lines.append("[sim]")
    lines.append(f"q0 = {_fmt(s.q0)}")
    lines.append(f"omega0 = {_fmt(s.omega0)}")
    if s.t_final is not None:
        lines.append(f"t_final = {_fmt(s.t_final)}")
    if s.h is not None:
        lines.append(f"h = {_fmt(s.h)}")
    lines.append("")
    lines.append("[design]")
    lines.append(f"scan_step = {_fmt(s.scan_step)}")
    lines.append(f"bisect_tol = {_fmt(s.bisect_tol)}")
    lines.append(f"quad_substeps = {_fmt(s.quad_substeps)}")
    lines.append(f"avg_samples = {_fmt(s.avg_samples)}")
    lines.append(f"t0_offset = {_fmt(s.t0_offset)}")
    return "\n".join(lines) + "\n"


# --- commands ---


def cmd_design(scenario: Scenario, kind: str = "state", out=sys.stdout) -> DesignReport:
    """Run the full design pass and print a summary.

    Fails with :class:`DesignError` when the orbit is not stabilizable or the
    configured sampling period exceeds the stable range.
    """
    if scenario.T is None:
        raise ScenarioError("controller.T is required for design")
    orbit = scenario.orbit()
    inertia = scenario.inertia()
    gains = scenario.gains("zoh-" + kind)
    ok, margin = orbit_stabilizable(orbit)
    if not ok:
        raise DesignError(
            f"average field coupling is not positive definite (margin {margin:.3e}); "
            "three-axis magnetic stabilization needs a non-equatorial orbit"
        )
    result = sampling_design(
        orbit,
        inertia,
        gains,
        scenario.T,
        kind=kind,
        scan_step=scenario.scan_step,
        bisect_tol=scenario.bisect_tol,
        avg=scenario.averaging(),
    )
    zero_eigs = np.linalg.eigvalsh(average_coupling_zero(orbit))
    report = DesignReport(
        kind=kind,
        T=result.T,
        period_limit=result.period_limit,
        epsilon_bound=result.epsilon_bound,
        epsilon_configured=scenario.epsilon,
        stabilizability_margin=margin,
        coupling_zero_eigs=tuple(float(v) for v in zero_eigs),
        spectrum_at_T=tuple((float(v.real), float(v.imag)) for v in result.spectrum_at_T),
    )
    print(f"design kind:            {report.kind}", file=out)
    print(f"sampling period T:      {report.T:g} s", file=out)
    print(f"stable period limit:    {report.period_limit:g} s", file=out)
    print(f"gain-scale bound eps0:  {report.epsilon_bound:.6g}", file=out)
    print(f"configured epsilon:     {report.epsilon_configured:.6g}"
          + ("  (above bound!)" if report.epsilon_configured > report.epsilon_bound else ""),
          file=out)
    print(f"stabilizability margin: {report.stabilizability_margin:.6e}", file=out)
    print(f"coupling limit eigs:    {report.coupling_zero_eigs}", file=out)
    return report


def write_csv(traj: Trajectory, path) -> None:
    """Write a trajectory as CSV with 17-significant-digit floats."""
    with open(path, "w", newline="\n") as fh:
        fh.write(CSV_COLUMNS + "\n")
        for i in range(len(traj)):
            row = (
                traj.t[i], *traj.q[i], *traj.omega[i], *traj.m[i], *traj.b_body[i]
            )
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def cmd_simulate(scenario: Scenario, out_path, out=sys.stdout) -> tuple[Trajectory, MetricsReport]:
    """Run the closed loop, write the CSV, and print settling metrics."""
    traj = run_closed_loop(scenario.sim_config())
    write_csv(traj, out_path)
    report = metrics(traj)
    print(f"samples:          {len(traj)}", file=out)
    print(f"final |omega|:    {report.final_omega_norm:.6e} rad/s", file=out)
    print(f"final |qv|:       {report.final_qv_norm:.6e}", file=out)
    print(f"max |m|:          {report.max_dipole:.6g} A m^2", file=out)
    if report.settled:
        print(f"settle time:      {report.settle_time_s:g} s", file=out)
    else:
        print("settle time:      not settled", file=out)
    print(f"wall time:        {traj.wall_time_s:.2f} s", file=out)
    print(f"csv written to:   {out_path}", file=out)
    return traj, report


def cmd_lav(scenario: Scenario, T: float | None = None, out=sys.stdout):
    """Print the average coupling at T, its zero-period limit, and eigenvalues."""
    orbit = scenario.orbit()
    if T is None:
        T = scenario.T
    if T is None:
        raise ScenarioError("a sampling period is required (controller.T or --T)")
    avg_T = average_coupling(orbit, T, scenario.averaging())
    avg_zero = average_coupling_zero(orbit)
    with np.printoptions(precision=6):
        print(f"average coupling at T = {T:g} s:", file=out)
        print(avg_T, file=out)
        print("zero-period limit:", file=out)
        print(avg_zero, file=out)
    print(f"limit eigenvalues: {np.linalg.eigvalsh(avg_zero)}", file=out)
    print(f"limit min eigenvalue: {min_eig_sym(avg_zero):.6e}", file=out)
    return avg_T, avg_zero


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="magzoh",
        description="Magnetic attitude control with held dipole commands: "
        "sampling design and closed-loop simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_design = sub.add_parser("design", help="compute the stable period range and gain bound")
    p_design.add_argument("--config", required=True)
    p_design.add_argument("--kind", choices=("state", "output"), default="state")

    p_sim = sub.add_parser("simulate", help="run the closed loop and write a CSV")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--out", required=True)

    p_lav = sub.add_parser("lav", help="print the average coupling matrices")
    p_lav.add_argument("--config", required=True)
    p_lav.add_argument("--T", type=float, default=None)

    args = parser.parse_args(argv)
    try:
        scenario = parse_scenario(args.config)
        if args.command == "design":
            cmd_design(scenario, kind=args.kind)
        elif args.command == "simulate":
            cmd_simulate(scenario, args.out)
        else:
            cmd_lav(scenario, T=args.T)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    except DesignError as exc:
        print(f"design failure: {exc}", file=sys.stderr)
        return 3
    except SimulationDivergenceError as exc:
        print(f"simulation diverged: {exc}", file=sys.stderr)
        return 4
    return 0


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
