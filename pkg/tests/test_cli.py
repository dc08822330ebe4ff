import numpy as np
import pytest

from magzoh.cli import (
    DesignReport,
    ScenarioError,
    cmd_design,
    cmd_lav,
    cmd_simulate,
    main,
    parse_scenario,
    scenario_to_toml,
)

from conftest import SCENARIO_DIR

SMALL_SIM = """
[orbit]
radius_m = 6.821e6
incl_deg = 87.0
phi0_rad = 0.94

[inertia]
diag = [27.0, 17.0, 25.0]

[controller]
kind = "zoh-state"
k1 = 2.0e11
k2 = 3.0e11
epsilon = {epsilon}
T = 2.0

[sim]
omega0 = [0.02, 0.02, -0.03]
t_final = 20.0
h = 0.5

[design]
scan_step = 100.0
bisect_tol = 8.0
"""

DESIGN_ONLY = """
[orbit]
altitude_m = 450.0e3
incl_deg = {incl}
phi0_rad = 0.94

[inertia]
diag = [27.0, 17.0, 25.0]

[controller]
kind = "zoh-state"
k1 = 2.0e11
k2 = 3.0e11
epsilon = 1.0e-3
T = {T}

[design]
scan_step = 100.0
bisect_tol = 8.0
"""


def write(tmp_path, text, name="scenario.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestParseScenario:
    def test_bundled_case_study(self):
        s = parse_scenario(SCENARIO_DIR / "case_study.toml")
        assert s.inertia_diag == (27.0, 17.0, 25.0)
        assert s.incl_deg == 87.0
        assert s.T == 20.0
        assert s.radius_m == pytest.approx(6.821e6)
        assert s.kind == "zoh-state"
        assert s.omega0 == (0.02, 0.02, -0.03)
        assert s.t_final == 56064.0

    def test_bundled_output_variant(self):
        s = parse_scenario(SCENARIO_DIR / "case_study_output.toml")
        assert s.kind == "zoh-output"
        assert s.alpha == 1.0 and s.lam == 4.0
        assert s.epsilon == pytest.approx(4.8e-5)

    def test_missing_k1(self, tmp_path):
        bad = SMALL_SIM.format(epsilon="1.0e-3").replace("k1 = 2.0e11\n", "")
        with pytest.raises(ScenarioError, match="k1"):
            parse_scenario(write(tmp_path, bad))

    def test_nonpositive_k1(self, tmp_path):
        bad = SMALL_SIM.format(epsilon="1.0e-3").replace("k1 = 2.0e11", "k1 = -1.0")
        with pytest.raises(ScenarioError, match="k1"):
            parse_scenario(write(tmp_path, bad))

    def test_non_divisor_step_rejected(self, tmp_path):
        bad = SMALL_SIM.format(epsilon="1.0e-3").replace("h = 0.5", "h = 0.3")
        with pytest.raises(ScenarioError, match="integer"):
            parse_scenario(write(tmp_path, bad))

    def test_unknown_key_rejected(self, tmp_path):
        bad = SMALL_SIM.format(epsilon="1.0e-3").replace("T = 2.0", "T = 2.0\nTT = 3.0")
        with pytest.raises(ScenarioError, match="unknown key"):
            parse_scenario(write(tmp_path, bad))

    def test_unknown_section_rejected(self, tmp_path):
        bad = SMALL_SIM.format(epsilon="1.0e-3") + "\n[actuator]\nx = 1\n"
        with pytest.raises(ScenarioError, match="unknown section"):
            parse_scenario(write(tmp_path, bad))

    def test_radius_and_altitude_mutually_exclusive(self, tmp_path):
        bad = SMALL_SIM.format(epsilon="1.0e-3").replace(
            "radius_m = 6.821e6", "radius_m = 6.821e6\naltitude_m = 450.0e3"
        )
        with pytest.raises(ScenarioError, match="exactly one"):
            parse_scenario(write(tmp_path, bad))

    def test_round_trip_identity(self, tmp_path):
        for name in ("case_study.toml", "case_study_output.toml"):
            s = parse_scenario(SCENARIO_DIR / name)
            again = parse_scenario(write(tmp_path, scenario_to_toml(s), f"rt_{name}"))
            assert again == s


class TestCmdDesign:
    def test_reference_scenario_report(self, tmp_path):
        s = parse_scenario(write(tmp_path, DESIGN_ONLY.format(incl=87.0, T=20.0)))
        report = cmd_design(s, kind="state")
        assert isinstance(report, DesignReport)
        assert 1300.0 < report.period_limit < 1700.0
        assert report.epsilon_bound == pytest.approx(1.31e-3, rel=0.02)
        assert report.stabilizability_margin > 0
        assert min(report.coupling_zero_eigs) > 0
        assert all(re < 0 for re, _ in report.spectrum_at_T)
        d = report.to_dict()
        assert d["T"] == 20.0

    def test_equatorial_orbit_exit_code(self, tmp_path):
        path = write(tmp_path, DESIGN_ONLY.format(incl=0.0, T=20.0))
        assert main(["design", "--config", str(path)]) == 3

    def test_oversized_period_exit_code(self, tmp_path):
        path = write(tmp_path, DESIGN_ONLY.format(incl=87.0, T=2000.0))
        assert main(["design", "--config", str(path)]) == 3

    def test_output_kind_uses_observer_defaults(self, tmp_path):
        s = parse_scenario(write(tmp_path, DESIGN_ONLY.format(incl=87.0, T=20.0)))
        report = cmd_design(s, kind="output")
        assert len(report.spectrum_at_T) == 10
        assert report.epsilon_bound < 1e-3  # far tighter than the state-feedback bound


class TestCmdSimulate:
    def test_csv_schema_and_determinism(self, tmp_path):
        path = write(tmp_path, SMALL_SIM.format(epsilon="1.0e-3"))
        s = parse_scenario(path)
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        cmd_simulate(s, out1)
        cmd_simulate(s, out2)
        text = out1.read_text()
        lines = text.splitlines()
        assert lines[0] == "t,q1,q2,q3,q4,wx,wy,wz,mx,my,mz,bbx,bby,bbz"
        assert len(lines) == 1 + 41  # 40 steps plus the initial sample
        assert text == out2.read_text()  # byte-identical reruns

    def test_csv_round_trips_doubles_exactly(self, tmp_path):
        path = write(tmp_path, SMALL_SIM.format(epsilon="1.0e-3"))
        s = parse_scenario(path)
        out = tmp_path / "run.csv"
        traj, _ = cmd_simulate(s, out)
        data = np.loadtxt(out, delimiter=",", skiprows=1)
        assert np.array_equal(data[:, 0], traj.t)
        assert np.array_equal(data[:, 1:5], traj.q)
        assert np.array_equal(data[:, 5:8], traj.omega)
        assert np.all(np.diff(data[:, 0]) > 0)

    def test_zero_epsilon_zeroes_dipole_columns(self, tmp_path):
        path = write(tmp_path, SMALL_SIM.format(epsilon="0.0"))
        s = parse_scenario(path)
        out = tmp_path / "free.csv"
        cmd_simulate(s, out)
        data = np.loadtxt(out, delimiter=",", skiprows=1)
        assert np.all(data[:, 8:11] == 0.0)

    def test_main_exit_codes(self, tmp_path):
        path = write(tmp_path, SMALL_SIM.format(epsilon="1.0e-3"))
        out = tmp_path / "cli.csv"
        assert main(["simulate", "--config", str(path), "--out", str(out)]) == 0
        assert out.exists()
        assert main(["simulate", "--config", str(tmp_path / "missing.toml"),
                     "--out", str(out)]) == 2

    def test_divergent_run_exit_code(self, tmp_path):
        path = write(tmp_path, SMALL_SIM.format(epsilon="1.0"))
        assert main(["simulate", "--config", str(path), "--out", str(tmp_path / "x.csv")]) == 4


class TestCmdLav:
    def test_inclined_vs_equatorial(self, tmp_path):
        s87 = parse_scenario(write(tmp_path, DESIGN_ONLY.format(incl=87.0, T=20.0), "a.toml"))
        avg_t, avg_zero = cmd_lav(s87)
        assert np.linalg.eigvalsh(avg_zero)[0] > 0
        assert avg_t.shape == (3, 3)

        s0 = parse_scenario(write(tmp_path, DESIGN_ONLY.format(incl=0.0, T=20.0), "b.toml"))
        _, avg_zero0 = cmd_lav(s0)
        assert abs(np.linalg.eigvalsh(avg_zero0)[0]) <= 1e-9 * np.trace(avg_zero0)

    def test_explicit_period_override(self, tmp_path):
        s = parse_scenario(write(tmp_path, DESIGN_ONLY.format(incl=87.0, T=20.0)))
        avg_1, _ = cmd_lav(s, T=1.0)
        from magzoh import average_coupling_zero

        limit = average_coupling_zero(s.orbit())
        assert np.linalg.norm(avg_1 - limit, 2) <= 1e-3 * np.linalg.norm(limit, 2)
