import json
import math
import subprocess
import sys

import pytest

from dichotomic.cli import (
    main,
    parse_grid,
    parse_p0,
    parse_time,
    parse_tol,
    pi_fraction,
)
from dichotomic.errors import ValidationError

QUARTER = math.pi / 4


def run_cli(args, tmp_path=None):
    result = subprocess.run(
        [sys.executable, "-m", "dichotomic.cli", *args],
        capture_output=True,
        text=True,
        cwd=str(tmp_path) if tmp_path else None,
    )
    return result


class TestParsing:
    @pytest.mark.parametrize(
        "token,expected",
        [
            ("0.5", 0.5),
            ("pi", math.pi),
            ("pi/8", math.pi / 8),
            ("3pi/8", 3 * math.pi / 8),
            ("2pi", 2 * math.pi),
            ("0", 0.0),
        ],
    )
    def test_time_tokens(self, token, expected):
        assert parse_time(token) == pytest.approx(expected, abs=1e-15)

    def test_bad_token_rejected(self):
        with pytest.raises(ValidationError):
            parse_time("sqrt2")

    def test_grid_list(self):
        g = parse_grid("0,pi/8,pi/4")
        assert len(g) == 3 and g.horizon == pytest.approx(QUARTER)

    def test_grid_linspace(self):
        g = parse_grid("linspace:0:pi/4:50")
        assert len(g) == 50
        assert g.times[0] == 0.0 and g.horizon == pytest.approx(QUARTER)

    def test_p0_forms(self):
        assert parse_p0("0.3,0.7").p1 == 0.3
        assert parse_p0("0.25").p2 == 0.75

    def test_tol_overrides(self):
        tol = parse_tol("exact=1e-10,stat=5")
        assert tol.tol_exact == 1e-10
        assert tol.tol_solver == 1e-9
        assert tol.tol_stat == 5.0

    @pytest.mark.parametrize(
        "t,expected",
        [
            (0.0, "0"),
            (math.pi, "1"),
            (QUARTER, "1/4"),
            (3 * math.pi / 8, "3/8"),
            (0.123, None),
        ],
    )
    def test_pi_fraction(self, t, expected):
        assert pi_fraction(t) == expected


class TestTrajectoryCommand:
    def test_two_steps_end_at_uniform(self, capsys):
        code = main(["trajectory", "--t-max", "pi/4", "--steps", "2"])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        last = doc["results"]["rows"][-1]
        assert last[0] == pytest.approx(QUARTER)
        assert last[1] == pytest.approx(0.5, abs=1e-12)
        assert last[2] == pytest.approx(0.5, abs=1e-12)
        first = doc["results"]["rows"][0]
        assert first == [0.0, 1.0, 0.0]

    def test_omega_two_halves_feature_times(self, capsys):
        main(["trajectory", "--omega", "2", "--t-max", "pi/8", "--steps", "2"])
        doc = json.loads(capsys.readouterr().out)
        assert doc["results"]["rows"][-1][1] == pytest.approx(0.5, abs=1e-12)

    def test_byte_identical_reports(self):
        a = run_cli(["trajectory", "--steps", "20"])
        b = run_cli(["trajectory", "--steps", "20"])
        assert a.stdout == b.stdout and a.returncode == 0

    def test_csv_out_renders_figure(self, tmp_path):
        out = tmp_path / "traj.csv"
        code = main(
            ["trajectory", "--steps", "30", "--format", "csv", "--out", str(out)]
        )
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "t,p1,p2"
        assert len(lines) == 31
        png = out.with_suffix(".png")
        assert png.exists() and png.stat().st_size > 0

    def test_no_plot_suppresses_figure(self, tmp_path):
        out = tmp_path / "traj.csv"
        main(["trajectory", "--steps", "5", "--format", "csv",
              "--out", str(out), "--no-plot"])
        assert not out.with_suffix(".png").exists()


class TestCKCommand:
    def test_gillespie_fails_with_exit_one(self, capsys):
        code = main(["ck", "--family", "gillespie", "--grid", "0,pi/8,pi/4"])
        doc = json.loads(capsys.readouterr().out)
        assert code == 1
        assert doc["verdict"] == "fail"
        assert doc["results"]["worst_residual"] == pytest.approx(0.25, abs=1e-12)
        assert doc["results"]["worst_triple_pi"] == ["0", "1/8", "1/4"]

    def test_interpolation_passes(self, capsys):
        code = main(
            ["ck", "--family", "interpolation", "--grid", "linspace:0:pi/4:50"]
        )
        doc = json.loads(capsys.readouterr().out)
        assert code == 0
        assert doc["verdict"] == "pass"
        assert doc["results"]["n_triples"] == 19600
        assert doc["results"]["worst_residual"] <= 1e-12

    def test_interpolation_beyond_quarter_reports_witness(self, capsys):
        code = main(
            ["ck", "--family", "interpolation", "--grid", "linspace:0:1.2:10"]
        )
        doc = json.loads(capsys.readouterr().out)
        assert code == 1
        assert doc["verdict"] == "fail"
        failure = doc["results"]["first_failure"]
        assert failure["mode"] in ("positivity", "degenerate_source")
        assert failure["s"] is not None

    def test_two_point_grid_is_vacuous(self, capsys):
        code = main(["ck", "--grid", "0,pi/8"])
        doc = json.loads(capsys.readouterr().out)
        assert code == 0
        assert doc["verdict"] == "n/a"


class TestInvariantCommand:
    def test_gillespie_unique_point(self, capsys):
        code = main(["invariant", "--expect", "unique:0.5"])
        doc = json.loads(capsys.readouterr().out)
        assert code == 0
        assert doc["verdict"] == "pass"
        assert doc["results"]["kind"] == "unique_point"
        assert abs(doc["results"]["value"] - 0.5) <= 1e-9

    def test_interpolation_whole_simplex(self, capsys):
        code = main(
            [
                "invariant",
                "--family",
                "interpolation",
                "--grid",
                "linspace:0:pi/4:6",
                "--expect",
                "all_of_simplex",
            ]
        )
        doc = json.loads(capsys.readouterr().out)
        assert code == 0 and doc["results"]["kind"] == "all_of_simplex"

    def test_wrong_expectation_fails(self, capsys):
        code = main(["invariant", "--expect", "all_of_simplex"])
        assert code == 1


class TestIntervalCommand:
    def test_quarter_period_located(self, capsys):
        code = main(["interval", "--expect-tstar", "pi/4"])
        doc = json.loads(capsys.readouterr().out)
        assert code == 0
        assert doc["verdict"] == "pass"
        assert abs(doc["results"]["t_star"] - QUARTER) <= 2 * doc["results"]["resolution"]
        assert doc["results"]["failure_witness"] is not None


class TestFeasibilityCommand:
    def test_bundled_infeasible(self, capsys):
        code = main(
            ["feasibility", "--bundled", "gillespie-uniform-3", "--expect", "infeasible"]
        )
        doc = json.loads(capsys.readouterr().out)
        assert code == 0
        res = doc["results"]
        assert res["status"] == "infeasible"
        assert res["correlation_check"]["violated"] is True
        assert res["correlation_check"]["lhs_abs_e01_plus_e12"] == pytest.approx(
            math.sqrt(2), abs=1e-9
        )
        assert len(res["certificate"]["combination"]) > 0

    def test_bundled_feasible_with_closure(self, capsys):
        code = main(
            ["feasibility", "--bundled", "interp-markov-5", "--expect", "feasible"]
        )
        doc = json.loads(capsys.readouterr().out)
        assert code == 0
        res = doc["results"]
        assert res["status"] == "feasible"
        assert res["witness_deviation"] <= 1e-9
        assert res["witness_markov_closure_residual"] <= 1e-9
        assert len(res["witness_weights"]) == 32

    def test_spec_file_round_trip(self, tmp_path, capsys):
        spec_path = tmp_path / "spec.json"
        code = main(
            [
                "feasibility",
                "--bundled",
                "gillespie-uniform-3",
                "--dump-spec",
                str(spec_path),
            ]
        )
        assert code == 0
        capsys.readouterr()
        doc = json.loads(spec_path.read_text())
        assert set(doc) == {"times", "marginals", "transitions"}
        assert len(doc["transitions"]) == 3
        code = main(["feasibility", str(spec_path), "--expect", "infeasible"])
        out = json.loads(capsys.readouterr().out)
        assert code == 0
        assert out["results"]["status"] == "infeasible"

    def test_malformed_spec_is_usage_error(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"times": [0, 1]}')
        assert main(["feasibility", str(bad)]) == 2

    def test_spec_with_pi_tokens(self, tmp_path, capsys):
        doc = {
            "times": ["0", "pi/8", "pi/4"],
            "marginals": [[0.5, 0.5]] * 3,
            "transitions": [
                {
                    "from": j,
                    "to": i,
                    "matrix": [
                        [math.cos(gap) ** 2, math.sin(gap) ** 2],
                        [math.sin(gap) ** 2, math.cos(gap) ** 2],
                    ],
                }
                for j, i, gap in (
                    (0, 1, math.pi / 8),
                    (0, 2, QUARTER),
                    (1, 2, math.pi / 8),
                )
            ],
        }
        path = tmp_path / "spec.json"
        path.write_text(json.dumps(doc))
        code = main(["feasibility", str(path)])
        out = json.loads(capsys.readouterr().out)
        assert code == 0  # n/a verdict without --expect
        assert out["results"]["status"] == "infeasible"


class TestSimulateCommand:
    def test_small_run_passes_and_writes_csv(self, tmp_path, capsys):
        out = tmp_path / "ensemble.csv"
        code = main(
            [
                "simulate",
                "--family",
                "interpolation",
                "--n-paths",
                "5000",
                "--seed",
                "99",
                "--format",
                "csv",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 5001
        assert lines[0].count(",") == 2
        assert set(lines[1].split(",")) <= {"1", "2"}
        assert out.with_suffix(".png").exists()

    def test_report_has_z_sections(self, capsys):
        code = main(
            ["simulate", "--family", "interpolation", "--n-paths", "20000", "--seed", "5"]
        )
        doc = json.loads(capsys.readouterr().out)
        assert code == 0
        assert doc["verdict"] == "pass"
        res = doc["results"]
        assert len(res["marginals"]) == 3
        assert len(res["consecutive_transitions"]) == 2
        assert len(res["nonconsecutive_transitions"]) == 1
        assert res["max_abs_z"] <= 4.0

    def test_gillespie_nonconsecutive_mismatch_is_reported_not_failed(self, capsys):
        code = main(
            [
                "simulate",
                "--family",
                "gillespie",
                "--p0",
                "0.5,0.5",
                "--n-paths",
                "50000",
                "--seed",
                "31",
            ]
        )
        doc = json.loads(capsys.readouterr().out)
        assert code == 0
        assert doc["verdict"] == "pass"
        nc = doc["results"]["nonconsecutive_transitions"][0]
        assert nc["within_tol_stat"] is False
        assert nc["max_abs_z"] > 25.0

    def test_deterministic_reports(self):
        args = ["simulate", "--n-paths", "2000", "--seed", "77"]
        a = run_cli(args)
        b = run_cli(args)
        assert a.stdout == b.stdout


class TestUsageErrors:
    def test_bad_grid_is_exit_two(self):
        assert main(["ck", "--grid", "0,banana"]) == 2

    def test_unparseable_flags_exit_two(self):
        result = run_cli(["ck", "--family", "nonsense"])
        assert result.returncode == 2

    def test_decreasing_grid_rejected(self):
        assert main(["ck", "--grid", "1.0,0.5,2.0"]) == 2

    def test_csv_unsupported_for_invariant(self):
        result = run_cli(["invariant", "--format", "csv"])
        assert result.returncode == 2


class TestReproduceSuite:
    def test_full_suite_passes_and_writes_artifacts(self, tmp_path):
        out_dir = tmp_path / "artifacts"
        result = run_cli(
            ["reproduce-paper", "--seed", "12345", "--out", str(out_dir)]
        )
        assert result.returncode == 0
        doc = json.loads(result.stdout)
        assert doc["verdict"] == "pass"
        assert doc["results"]["n_passed"] == doc["results"]["n_steps"]
        for stem in ("trajectory", "ck_gillespie", "ck_interpolation", "invariant",
                     "interval", "feasibility_gillespie_uniform",
                     "feasibility_interp_markov", "simulate"):
            assert (out_dir / f"{stem}.json").exists()
        for stem in ("trajectory", "interval", "simulate", "ck_interpolation"):
            assert (out_dir / f"{stem}.png").stat().st_size > 0
            assert (out_dir / f"{stem}.csv").exists()
