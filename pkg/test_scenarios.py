#!/usr/bin/env python3
"""Tests for scenario loading, validation, runs and the command line"""

import json
from pathlib import Path

import pytest

from pmcm.cli import main
from pmcm.core.errors import ConfigurationError, InvalidInputError
from pmcm.models.measure import Atom, RadialSet
from pmcm.models.profile import RadialDomain
from pmcm.services.approximation import mollify_measure
from pmcm.services.export_service import measure_from_dict, measure_to_dict, read_profile_csv
from pmcm.services.measure_service import measure_of
from pmcm.services.scenario_runner import (
    EXIT_CONFIGURATION,
    EXIT_FAILED,
    EXIT_PASSED,
    ScenarioRunner,
    exit_code_of,
)

SCENARIOS = Path(__file__).parent / "data" / "scenarios"

# the remaining bundled scenarios run the minimizer for minutes
QUICK_SCENARIOS = [
    "checks_one_sphere",
    "flat_empty",
    "max_principle_continuous",
    "nine_family",
    "nine_one_sphere",
    "verify_one_sphere",
]


def _scenario(**overrides) -> dict:
    data = {
        "name": "sample",
        "task": "radial",
        "domain": {"n": 2, "r_a": 1.0, "r_b": 3.0, "R_B": 4.0},
        "measure": {"atoms": [[2.0, 0.8]]},
        "boundary": {"phi_a": 0.0, "phi_b": 3.0},
    }
    data.update(overrides)
    return data


def _write(tmp_path: Path, data: dict, name: str = "sample.json") -> Path:
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


class TestLoading:
    def test_bundled_scenarios_load(self):
        entries = ScenarioRunner.list_scenarios(SCENARIOS)
        names = {entry["name"] for entry in entries}
        assert set(QUICK_SCENARIOS) <= names
        assert "minimize_one_sphere" in names

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            ScenarioRunner.load(path)

    def test_schema_errors_name_the_field(self, tmp_path):
        path = _write(tmp_path, _scenario(domain={"n": 2, "r_a": 3.0, "r_b": 1.0, "R_B": 4.0}))
        report = ScenarioRunner().validate_file(path)
        assert not report.valid
        assert any(line.startswith("domain") and "r_a must be smaller" in line for line in report.errors)

    def test_gamma_needs_decreasing_deltas(self, tmp_path):
        path = _write(tmp_path, _scenario(task="gamma", parameters={"deltas": [0.1, 0.2]}))
        assert not ScenarioRunner().validate_file(path).valid


class TestValidation:
    def test_clean_scenario(self):
        report = ScenarioRunner().validate_file(SCENARIOS / "nine_one_sphere.json")
        assert report.clean

    def test_infeasible_window_is_reported(self, tmp_path):
        path = _write(tmp_path, _scenario(measure={"atoms": [[2.0, 1.6]]}))
        report = ScenarioRunner().validate_file(path)
        assert report.valid
        assert any("necessary condition violated at r=2" in w for w in report.warnings)
        assert any("not certified non-extremal" in w for w in report.warnings)

    def test_oversized_mollifier_is_reported(self, tmp_path):
        path = _write(tmp_path, _scenario(task="gamma", parameters={"deltas": [1.5, 0.1]}))
        report = ScenarioRunner().validate_file(path)
        assert any("too large" in w for w in report.warnings)


class TestRuns:
    @pytest.mark.parametrize("name", QUICK_SCENARIOS)
    def test_quick_scenarios_pass(self, output_dir, name):
        runner = ScenarioRunner(out_dir=output_dir)
        report = runner.run_file(SCENARIOS / f"{name}.json")
        assert report.exit_code == EXIT_PASSED, report.assertions
        assert (output_dir / name / "report.json").exists()
        assert all(Path(artifact).exists() for artifact in report.artifacts)

    def test_report_contents(self, output_dir):
        ScenarioRunner(out_dir=output_dir).run_file(SCENARIOS / "nine_one_sphere.json")
        data = json.loads((output_dir / "nine_one_sphere" / "report.json").read_text(encoding="utf-8"))
        assert data["schema_version"] == "1.0"
        assert data["results"]["jump_kinds"] == ["jump_up"]
        assert data["results"]["gammas"] == pytest.approx([0.4, 2.0], abs=1e-12)
        assert data["config"]["overrides"]["seed"] == 0
        assert data["assertions"] == {"gammas": True, "jump_kinds": True}

    def test_failed_expectation(self, tmp_path, output_dir):
        path = _write(tmp_path, _scenario(expect={"jump_kinds": ["jump_down"]}))
        report = ScenarioRunner(out_dir=output_dir).run_file(path)
        assert report.exit_code == EXIT_FAILED
        assert report.assertions == {"jump_kinds": False}

    def test_task_failure(self, tmp_path, output_dir):
        path = _write(tmp_path, _scenario(measure={"atoms": [[2.0, 1.6]]}))
        report = ScenarioRunner(out_dir=output_dir).run_file(path)
        assert report.exit_code == EXIT_FAILED
        assert report.error["error"] == "InfeasibleError"

    def test_configuration_error(self, tmp_path, output_dir):
        path = _write(tmp_path, _scenario(domain={"n": 1, "r_a": 1.0, "r_b": 3.0, "R_B": 4.0}))
        report = ScenarioRunner(out_dir=output_dir).run_file(path)
        assert report.exit_code == EXIT_CONFIGURATION
        assert (output_dir / "sample" / "report.json").exists()

    def test_csv_output_is_deterministic(self, tmp_path):
        first = ScenarioRunner(out_dir=tmp_path / "a").run_file(SCENARIOS / "nine_family.json")
        second = ScenarioRunner(out_dir=tmp_path / "b").run_file(SCENARIOS / "nine_family.json")
        assert [Path(p).name for p in first.artifacts] == [Path(p).name for p in second.artifacts]
        for a, b in zip(first.artifacts, second.artifacts):
            assert Path(a).read_bytes() == Path(b).read_bytes()

    def test_worst_exit_code(self, tmp_path, output_dir):
        runner = ScenarioRunner(out_dir=output_dir)
        passed = runner.run_file(SCENARIOS / "flat_empty.json")
        broken = runner.run_file(_write(tmp_path, _scenario(expect={"jump_kinds": []})))
        assert exit_code_of([passed]) == EXIT_PASSED
        assert exit_code_of([passed, broken]) == EXIT_FAILED
        assert exit_code_of([]) == EXIT_PASSED


class TestCommandLine:
    def test_list_scenarios(self, capsys):
        assert main(["list-scenarios", "--directory", str(SCENARIOS), "--json"]) == EXIT_PASSED
        entries = json.loads(capsys.readouterr().out)
        assert "nine_family" in {entry["name"] for entry in entries}

    def test_validate(self, tmp_path, capsys):
        broken = _write(tmp_path, _scenario(domain={"n": 2, "r_a": 3.0, "r_b": 1.0, "R_B": 4.0}))
        assert main(["validate", str(SCENARIOS / "nine_one_sphere.json")]) == EXIT_PASSED
        assert main(["validate", str(broken)]) == EXIT_CONFIGURATION
        assert "invalid:" in capsys.readouterr().out

    def test_run(self, output_dir, capsys):
        code = main(["run", str(SCENARIOS / "nine_one_sphere.json"), "--out", str(output_dir)])
        assert code == EXIT_PASSED
        assert "PASS nine_one_sphere" in capsys.readouterr().out

    def test_grid_override_is_recorded(self, output_dir):
        main(["run", str(SCENARIOS / "flat_empty.json"), "--out", str(output_dir), "--grid", "0.05"])
        data = json.loads((output_dir / "flat_empty" / "report.json").read_text(encoding="utf-8"))
        assert data["config"]["parameters"]["grid_step"] == 0.05


class TestArtifacts:
    def test_profile_csv_reads_back(self, output_dir):
        report = ScenarioRunner(out_dir=output_dir).run_file(SCENARIOS / "nine_one_sphere.json")
        domain = RadialDomain(2, 1.0, 3.0, 4.0)
        profile = read_profile_csv(output_dir / "nine_one_sphere" / "profile.csv", domain)
        assert len(profile.jumps) == 1
        jump = profile.jumps[0]
        assert jump.radius == pytest.approx(2.0)
        assert jump.height == pytest.approx(report.results["solution"]["jumps"][0]["height"], abs=1e-9)
        assert profile.inner_trace == pytest.approx(0.0, abs=1e-12)
        assert profile.outer_trace == pytest.approx(3.0, abs=1e-9)

    def test_measure_reads_back_from_report(self, output_dir):
        ScenarioRunner(out_dir=output_dir).run_file(SCENARIOS / "nine_one_sphere.json")
        data = json.loads((output_dir / "nine_one_sphere" / "report.json").read_text(encoding="utf-8"))
        measure = measure_from_dict(data["results"]["solution"]["measure"])
        assert measure.domain == RadialDomain(2, 1.0, 3.0, 4.0)
        assert measure.atoms == (Atom(2.0, 0.8),)

    def test_kernel_pieces_read_back(self, one_sphere_measure):
        mollified = mollify_measure(one_sphere_measure, 0.1)
        restored = measure_from_dict(json.loads(json.dumps(measure_to_dict(mollified))))
        whole = RadialSet.of((1.0, 3.0))
        assert restored.density.pieces == mollified.density.pieces
        assert measure_of(restored, whole) == pytest.approx(measure_of(mollified, whole), rel=1e-14)

    def test_malformed_measure_records(self):
        with pytest.raises(InvalidInputError):
            measure_from_dict({"n": 2, "r_a": 1.0, "r_b": 3.0})
        with pytest.raises(InvalidInputError):
            measure_from_dict({"n": 2, "r_a": 1.0, "r_b": 3.0, "R_B": 4.0,
                               "density": [{"kind": "spline", "r_lo": 1.0, "r_hi": 2.0}]})


@pytest.mark.slow
class TestAcceptanceScenarios:
    def test_minimizer_matches_closed_form(self, output_dir):
        report = ScenarioRunner(out_dir=output_dir).run_file(SCENARIOS / "minimize_one_sphere.json")
        assert report.exit_code == EXIT_PASSED, report.assertions
        assert report.results["l1_relative"] <= 0.02
        assert report.results["energy_relative"] <= 1e-3
        assert report.results["convergence"]["gap"] <= 1e-6

    def test_gamma_gaps_shrink(self, output_dir):
        report = ScenarioRunner(out_dir=output_dir, jobs=4).run_file(SCENARIOS / "gamma_one_sphere.json")
        assert report.exit_code == EXIT_PASSED, report.assertions
        gaps = [row["energy_gap"] for row in report.results["rows"]]
        assert [row["delta"] for row in report.results["rows"]] == [0.2, 0.1, 0.05, 0.025]
        assert report.results["final_gap"] < 1e-2
        assert gaps[-1] < gaps[0]
        assert all(row["L_hat"] < 1.0 for row in report.results["rows"])

    def test_discrete_max_principle(self, output_dir):
        report = ScenarioRunner(out_dir=output_dir).run_file(SCENARIOS / "max_principle_discrete.json")
        assert report.exit_code == EXIT_PASSED, report.assertions
        assert report.results["refused"] is None
        assert report.results["verdict"]["holds"]
        assert report.results["verdict"]["worst_gap"] >= -report.results["verdict"]["tolerance"]
