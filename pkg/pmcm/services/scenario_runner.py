"""
Scenario runner
Loads scenario files, dispatches tasks and writes JSON reports and CSV tables
"""

from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

from loguru import logger
from pydantic import ValidationError

from pmcm import __version__
from pmcm.core.config import settings
from pmcm.core.errors import ConfigurationError, InvalidInputError, PMCMError, PreconditionError
from pmcm.models.measure import Atom, PolynomialPiece, RadialDensity, RadialMeasure
from pmcm.models.problem import RadialCarrier, RadialProblem
from pmcm.models.profile import RadialDomain, RadialProfile
from pmcm.models.solution import JumpAnchor, JumpKind, SolutionFamily
from pmcm.schemas.report_schemas import ScenarioReport, ValidationReport
from pmcm.schemas.scenario_schemas import BoundarySpec, MeasureSpec, ParameterSpec, Scenario
from pmcm.services import export_service
from pmcm.services.approximation import GammaExperimentConfig, gamma_experiment, mollify_measure
from pmcm.services.bv_calculus import l1_distance
from pmcm.services.certificates import (
    certify_radial_solution,
    compare_max_principle,
    discrete_tolerance,
    verify_weak_solution,
)
from pmcm.services.measure_service import (
    ball_condition_check,
    density_bound_check,
    nonextremality_report,
    nonextremality_ratio,
)
from pmcm.services.minimizer import minimize
from pmcm.services.radial_solver import (
    classify_atoms,
    energy_radial,
    field_coefficients,
    oscillation_bound,
    sample_solution,
    solution_field,
    solve_dirichlet_radial,
)

PathLike = Union[str, Path]
TaskOutcome = Tuple[Dict[str, Any], Dict[str, bool], Optional[Dict[str, Any]]]

EXIT_PASSED = 0
EXIT_FAILED = 1
EXIT_CONFIGURATION = 2


def _format_errors(error: ValidationError) -> List[str]:
    lines = []
    for item in error.errors():
        location = ".".join(str(part) for part in item.get("loc", ())) or "<root>"
        lines.append(f"{location}: {item.get('msg', 'invalid')}")
    return lines


def build_domain(scenario: Scenario) -> RadialDomain:
    d = scenario.domain
    return RadialDomain(d.n, d.r_a, d.r_b, d.R_B)


def build_measure(domain: RadialDomain, spec: MeasureSpec) -> RadialMeasure:
    atoms = tuple(Atom(float(r), float(w)) for r, w in spec.atoms)
    pieces = tuple(PolynomialPiece(p.r_lo, p.r_hi, tuple(p.coefficients)) for p in spec.density)
    return RadialMeasure(domain, atoms, RadialDensity(pieces))


def _relative(value: float, reference: float) -> float:
    return abs(value - reference) / max(abs(reference), 1e-300)


def _parallel_map(func: Callable, items: Sequence, jobs: int, *extra) -> List:
    columns = [list(items)] + [[e] * len(items) for e in extra]
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(func, *columns))
    return [func(*args) for args in zip(*columns)]


class ScenarioRunner:
    """Runs scenarios; command-line overrides take precedence over scenario parameters"""

    def __init__(
        self,
        out_dir: Optional[PathLike] = None,
        tol: Optional[float] = None,
        grid: Optional[float] = None,
        seed: Optional[int] = None,
        jobs: Optional[int] = None,
    ):
        self.out_dir = Path(out_dir if out_dir is not None else settings.OUTPUT_PATH)
        self.tol = tol
        self.grid = grid
        self.seed = settings.DEFAULT_SEED if seed is None else seed
        self.jobs = settings.DEFAULT_JOBS if jobs is None else jobs

    @staticmethod
    def load(path: PathLike) -> Scenario:
        """
        Read and validate a scenario file

        Raises:
            ConfigurationError: unreadable file, invalid JSON or schema violation;
                diagnostics["errors"] lists 'location: message' lines
        """
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigurationError(f"cannot read scenario {path}: {e}", {"path": str(path), "errors": [str(e)]})
        try:
            return Scenario.model_validate_json(text)
        except ValidationError as e:
            errors = _format_errors(e)
            raise ConfigurationError(f"invalid scenario {path}: {errors[0]}", {"path": str(path), "errors": errors})

    @staticmethod
    def list_scenarios(directory: Optional[PathLike] = None) -> List[Dict[str, str]]:
        directory = Path(directory if directory is not None else settings.SCENARIO_PATH)
        entries = []
        for path in sorted(directory.glob("*.json")):
            try:
                scenario = ScenarioRunner.load(path)
            except ConfigurationError as e:
                logger.warning(f"skipping {path.name}: {e.message}")
                continue
            entries.append({"name": scenario.name, "task": scenario.task, "path": str(path),
                            "description": scenario.description})
        return entries

    def resolve(self, scenario: Scenario) -> ParameterSpec:
        updates: Dict[str, Any] = {}
        if self.tol is not None:
            updates["tol_gap"] = self.tol
        if self.grid is not None:
            updates["grid_step"] = self.grid
        params = scenario.parameters.model_copy(update=updates)
        return params.model_copy(update={
            "grid_step": params.grid_step if params.grid_step is not None else settings.DEFAULT_GRID_STEP,
            "tol_gap": params.tol_gap if params.tol_gap is not None else settings.DEFAULT_GAP_TOLERANCE,
            "max_iter": params.max_iter if params.max_iter is not None else settings.DEFAULT_MAX_ITERATIONS,
        })

    def semantic_warnings(self, scenario: Scenario) -> List[str]:
        """Checks that need the numerics but no solver run"""
        warnings: List[str] = []
        domain = build_domain(scenario)
        measure = build_measure(domain, scenario.measure)
        for atom, window in zip(measure.atoms, classify_atoms(domain, measure)):
            if window.kind is JumpKind.INFEASIBLE:
                warnings.append(
                    f"necessary condition violated at r={atom.radius:g}: |weight| {abs(atom.weight):g} "
                    f"outside window [{window.lower:.6g}, {window.upper:.6g}]"
                )
        l_hat = nonextremality_ratio(measure)
        if l_hat >= 1.0:
            warnings.append(f"measure is not certified non-extremal: L_hat = {l_hat:.6g}")
        if scenario.task == "gamma":
            for delta in scenario.parameters.deltas:
                try:
                    mollify_measure(measure, delta)
                except InvalidInputError as e:
                    warnings.append(e.message)
        return warnings

    def validate_file(self, path: PathLike) -> ValidationReport:
        """Schema validation plus semantic checks; never raises on bad input"""
        try:
            scenario = self.load(path)
        except ConfigurationError as e:
            return ValidationReport(path=str(path), valid=False, errors=e.diagnostics.get("errors", [e.message]))
        try:
            warnings = self.semantic_warnings(scenario)
        except PMCMError as e:
            return ValidationReport(path=str(path), valid=True, errors=[e.message])
        for warning in warnings:
            logger.warning(f"{scenario.name}: {warning}")
        return ValidationReport(path=str(path), valid=True, warnings=warnings)

    def run_file(self, path: PathLike) -> ScenarioReport:
        try:
            scenario = self.load(path)
        except ConfigurationError as e:
            logger.error(e.message)
            name = Path(path).stem
            report = ScenarioReport(schema_version=export_service.SCHEMA_VERSION, name=name, task="unknown",
                                    version=__version__, error=e.to_dict(), passed=False,
                                    exit_code=EXIT_CONFIGURATION)
            self._write_report(name, report)
            return report
        return self.run(scenario)

    def run(self, scenario: Scenario) -> ScenarioReport:
        """
        Dispatch the scenario's task and write report.json plus CSV tables under out_dir/name

        Exit codes: 0 when every embedded expectation holds, 1 on a failed
        expectation or task failure, 2 on configuration errors.
        """
        params = self.resolve(scenario)
        config = {
            "scenario": scenario.model_dump(),
            "parameters": params.model_dump(),
            "settings": settings.model_dump(),
            "overrides": {"tol": self.tol, "grid": self.grid, "seed": self.seed, "jobs": self.jobs},
        }
        target = self.out_dir / scenario.name
        artifacts: List[str] = []
        logger.info(f"running scenario '{scenario.name}' (task {scenario.task})")
        results: Dict[str, Any] = {}
        assertions: Dict[str, bool] = {}
        certificate = None
        error = None
        try:
            domain = build_domain(scenario)
            measure = build_measure(domain, scenario.measure)
            handler = getattr(self, f"_task_{scenario.task}")
            results, assertions, certificate = handler(scenario, params, domain, measure, target, artifacts)
            exit_code = EXIT_PASSED if all(assertions.values()) else EXIT_FAILED
        except (ConfigurationError, InvalidInputError) as e:
            logger.error(f"configuration error in '{scenario.name}': {e.message}")
            error, exit_code = e.to_dict(), EXIT_CONFIGURATION
        except PMCMError as e:
            logger.error(f"task '{scenario.task}' failed in '{scenario.name}': {e.message}")
            error, exit_code = e.to_dict(), EXIT_FAILED
        failed = [name for name, ok in assertions.items() if not ok]
        if failed:
            logger.error(f"'{scenario.name}': failed expectations {failed}")
        report = ScenarioReport(
            schema_version=export_service.SCHEMA_VERSION,
            name=scenario.name,
            task=scenario.task,
            version=__version__,
            config=config,
            results=results,
            assertions=assertions,
            certificate=certificate,
            error=error,
            artifacts=artifacts,
            passed=exit_code == EXIT_PASSED,
            exit_code=exit_code,
        )
        self._write_report(scenario.name, report)
        logger.info(f"scenario '{scenario.name}' finished with exit code {exit_code}")
        return report

    def _write_report(self, name: str, report: ScenarioReport) -> Path:
        return export_service.write_json(self.out_dir / name / "report.json", report.model_dump())

    def _write_profile(self, target: Path, stem: str, profile: RadialProfile, artifacts: List[str]) -> None:
        artifacts.append(str(export_service.write_csv(export_service.profile_frame(profile), target / f"{stem}.csv")))

    def _solve(self, domain: RadialDomain, measure: RadialMeasure, boundary: BoundarySpec):
        return solve_dirichlet_radial(domain, measure, boundary.phi_a, boundary.phi_b)

    def _minimize(self, params: ParameterSpec, measure: RadialMeasure, boundary: BoundarySpec):
        carrier = RadialCarrier.uniform(measure.domain, params.grid_step, measure)
        problem = RadialProblem(carrier, measure, boundary.phi_a, boundary.phi_b)
        return minimize(problem, params.tol_gap, params.max_iter, self.seed)

    @staticmethod
    def _certificate_block(report) -> Dict[str, Any]:
        block = report.model_dump()
        block["failed_conditions"] = report.failed_conditions()
        return block

    def _task_radial(self, scenario, params, domain, measure, target, artifacts) -> TaskOutcome:
        expect = scenario.expect
        result = self._solve(domain, measure, scenario.boundary)
        family = isinstance(result, SolutionFamily)
        sol = result.member(0.0) if family else result
        windows = classify_atoms(domain, measure)
        jump_rule = {}
        for i, window in enumerate(windows):
            if window.kind in (JumpKind.JUMP_UP, JumpKind.JUMP_DOWN):
                try:
                    jump_rule[str(measure.atoms[i].radius)] = list(field_coefficients(measure, JumpAnchor(i)))
                except PMCMError as e:
                    jump_rule[str(measure.atoms[i].radius)] = None
                    logger.debug(f"jump rule at atom {i} has no admissible fluxes: {e.message}")
        energy = energy_radial(sol, measure)
        results = {
            "family": family,
            "gammas": list(sol.gammas),
            "jump_kinds": [w.kind.value for w in windows],
            "windows": [[w.lower, w.upper] for w in windows],
            "jump_rule_gammas": jump_rule,
            "energy": energy,
            "solution": export_service.solution_to_dict(sol),
        }
        profile = sample_solution(sol, params.cells)
        self._write_profile(target, "profile", profile, artifacts)
        field = solution_field(sol, profile.grid)
        artifacts.append(str(export_service.write_csv(export_service.field_frame(field), target / "field.csv")))
        assertions: Dict[str, bool] = {}
        if expect.gammas is not None:
            assertions["gammas"] = len(expect.gammas) == len(sol.gammas) and all(
                abs(a - b) <= expect.gamma_atol for a, b in zip(sol.gammas, expect.gammas))
        if expect.jump_kinds is not None:
            assertions["jump_kinds"] = results["jump_kinds"] == expect.jump_kinds
        if expect.energy is not None:
            assertions["energy"] = _relative(energy, expect.energy) <= expect.energy_rtol
        return results, assertions, None

    def _task_family(self, scenario, params, domain, measure, target, artifacts) -> TaskOutcome:
        expect = scenario.expect
        result = self._solve(domain, measure, scenario.boundary)
        bound = oscillation_bound(domain, measure)
        results: Dict[str, Any] = {"oscillation_bound": bound, "family": isinstance(result, SolutionFamily)}
        assertions: Dict[str, bool] = {"family": results["family"]}
        if not isinstance(result, SolutionFamily):
            return results, assertions, None
        count = params.family_samples
        parameters = [result.excess * k / (count - 1) for k in range(count)]
        members = [result.member(t) for t in parameters]
        energies = _parallel_map(energy_radial, members, self.jobs, measure)
        profiles = [sample_solution(member, params.cells) for member in members]
        inner = [p.inner_trace for p in profiles]
        outer = [p.outer_trace for p in profiles]
        spread = max(energies) - min(energies)
        results.update({
            "excess": result.excess,
            "gammas": list(result.gammas),
            "slots": [{"index": s.index, "radius": s.radius, "direction": s.direction} for s in result.slots],
            "parameters": parameters,
            "energies": energies,
            "energy_spread": spread,
            "inner_traces": inner,
            "outer_traces": outer,
        })
        frame = export_service.family_frame(parameters, energies, members)
        artifacts.append(str(export_service.write_csv(frame, target / "family.csv")))
        for k, profile in enumerate(profiles):
            self._write_profile(target, f"member_{k}", profile, artifacts)
        scale = max(max(abs(e) for e in energies), 1.0)
        assertions["equal_energies"] = spread <= expect.family_energy_rtol * scale
        assertions["identical_boundary_traces"] = (
            max(inner) - min(inner) <= 1e-9 * (1.0 + max(abs(v) for v in inner))
            and max(outer) - min(outer) <= 1e-9 * (1.0 + max(abs(v) for v in outer))
        )
        if expect.min_family_members is not None:
            assertions["member_count"] = len(members) >= expect.min_family_members
        try:
            compare_max_principle(members[0], members[-1], measure, measure)
            results["comparison_refused"] = None
        except PreconditionError as e:
            results["comparison_refused"] = e.hypothesis
        if expect.comparison_refused is not None:
            assertions["comparison_refused"] = results["comparison_refused"] == expect.comparison_refused
        return results, assertions, None

    def _reference(self, domain, measure, boundary, cells: int) -> Tuple[float, List[RadialProfile]]:
        result = self._solve(domain, measure, boundary)
        if isinstance(result, SolutionFamily):
            members = result.members(5)
            return energy_radial(members[0], measure), [sample_solution(s, cells) for s in members]
        return energy_radial(result, measure), [sample_solution(result, cells)]

    def _task_minimize(self, scenario, params, domain, measure, target, artifacts) -> TaskOutcome:
        expect = scenario.expect
        u, T, report = self._minimize(params, measure, scenario.boundary)
        results: Dict[str, Any] = {"convergence": report.model_dump(), "energy": report.energy}
        self._write_profile(target, "profile", u, artifacts)
        artifacts.append(str(export_service.write_csv(export_service.field_frame(T), target / "field.csv")))
        assertions: Dict[str, bool] = {}
        if measure.atoms_only:
            energy, references = self._reference(domain, measure, scenario.boundary, params.cells)
            zero = RadialProfile.constant(domain, 0.0)
            relative = min(l1_distance(u, ref) / max(l1_distance(ref, zero), 1e-300) for ref in references)
            results.update({"reference_energy": energy, "energy_relative": _relative(report.energy, energy),
                            "l1_relative": relative})
            if expect.max_l1_relative is not None:
                assertions["l1_relative"] = relative <= expect.max_l1_relative
            if expect.max_energy_relative is not None:
                assertions["energy_relative"] = results["energy_relative"] <= expect.max_energy_relative
        if expect.energy is not None:
            assertions["energy"] = _relative(report.energy, expect.energy) <= expect.energy_rtol
        certificate = verify_weak_solution(u, T, measure, tol=params.tolerance or discrete_tolerance(report.gap))
        if expect.certificate_passed is not None:
            assertions["certificate_passed"] = certificate.passed == expect.certificate_passed
        return results, assertions, self._certificate_block(certificate)

    def _task_verify(self, scenario, params, domain, measure, target, artifacts) -> TaskOutcome:
        expect = scenario.expect
        if params.source == "minimizer":
            u, T, report = self._minimize(params, measure, scenario.boundary)
            certificate = verify_weak_solution(u, T, measure, tol=params.tolerance or discrete_tolerance(report.gap))
            results = {"source": "minimizer", "convergence": report.model_dump()}
        else:
            result = self._solve(domain, measure, scenario.boundary)
            sol = result.member(0.5 * result.excess) if isinstance(result, SolutionFamily) else result
            certificate = certify_radial_solution(sol, params.cells, params.tolerance)
            u = sample_solution(sol, params.cells)
            results = {"source": "closed_form", "gammas": list(sol.gammas)}
        self._write_profile(target, "profile", u, artifacts)
        block = self._certificate_block(certificate)
        if block["failed_conditions"]:
            logger.error(f"certificate failed: {block['failed_conditions']}")
        assertions = {}
        if expect.certificate_passed is not None:
            assertions["certificate_passed"] = certificate.passed == expect.certificate_passed
        return results, assertions, block

    def _task_gamma(self, scenario, params, domain, measure, target, artifacts) -> TaskOutcome:
        expect = scenario.expect
        config = GammaExperimentConfig(
            measure=measure,
            phi_a=scenario.boundary.phi_a,
            phi_b=scenario.boundary.phi_b,
            grid_step=params.grid_step,
            tol_gap=params.tol_gap,
            max_iter=params.max_iter,
            family_samples=params.family_samples,
        )
        table = gamma_experiment(config, params.deltas, jobs=self.jobs)
        artifacts.append(str(export_service.write_csv(export_service.gamma_frame(table), target / "gamma.csv")))
        assertions: Dict[str, bool] = {}
        if expect.final_gap is not None:
            assertions["final_gap"] = table.final_gap < expect.final_gap
        if expect.monotone is not None:
            assertions["monotone"] = table.monotone == expect.monotone
        if expect.l_hat_below is not None:
            assertions["l_hat_below"] = all(row.L_hat < expect.l_hat_below for row in table.rows)
        return table.model_dump(), assertions, None

    def _task_maxprinciple(self, scenario, params, domain, measure, target, artifacts) -> TaskOutcome:
        expect = scenario.expect
        second_boundary = params.second_boundary or scenario.boundary
        second_measure = build_measure(domain, params.second_measure) if params.second_measure else measure
        if params.source == "minimizer":
            first, _, r1 = self._minimize(params, measure, scenario.boundary)
            second, _, r2 = self._minimize(params, second_measure, second_boundary)
            results: Dict[str, Any] = {"source": "minimizer", "gaps": [r1.gap, r2.gap]}
        else:
            first = self._solve(domain, measure, scenario.boundary)
            second = self._solve(domain, second_measure, second_boundary)
            if isinstance(first, SolutionFamily) or isinstance(second, SolutionFamily):
                raise PreconditionError("a problem has a family of solutions", "continuity")
            results = {"source": "closed_form"}
        tolerance = params.tolerance or 1e-6
        assertions: Dict[str, bool] = {}
        try:
            verdict = compare_max_principle(first, second, measure, second_measure, tolerance)
            results["verdict"] = verdict.model_dump()
            holds: Optional[bool] = verdict.holds
            results["refused"] = None
        except PreconditionError as e:
            results["refused"] = e.hypothesis
            holds = None
        for stem, item in (("first", first), ("second", second)):
            profile = item if isinstance(item, RadialProfile) else sample_solution(item, params.cells)
            self._write_profile(target, stem, profile, artifacts)
        if expect.max_principle_holds is not None:
            assertions["max_principle_holds"] = holds is not None and holds == expect.max_principle_holds
        if expect.comparison_refused is not None:
            assertions["comparison_refused"] = results["refused"] == expect.comparison_refused
        return results, assertions, None

    def _task_checks(self, scenario, params, domain, measure, target, artifacts) -> TaskOutcome:
        expect = scenario.expect
        nonextremality = nonextremality_report(measure)
        results = {
            "nonextremality": nonextremality.model_dump(),
            "ball_condition": ball_condition_check(measure).model_dump(),
            "density_bound": density_bound_check(measure).model_dump(),
            "windows": [
                {"radius": atom.radius, "kind": w.kind.value, "lower": w.lower, "upper": w.upper}
                for atom, w in zip(measure.atoms, classify_atoms(domain, measure))
            ],
            "total_variation": measure.total_variation(),
        }
        assertions: Dict[str, bool] = {}
        if expect.l_hat is not None:
            assertions["l_hat"] = abs(nonextremality.value - expect.l_hat) <= expect.l_hat_atol
        if expect.l_hat_below is not None:
            assertions["l_hat_below"] = nonextremality.value < expect.l_hat_below
        if expect.jump_kinds is not None:
            assertions["jump_kinds"] = [w["kind"] for w in results["windows"]] == expect.jump_kinds
        return results, assertions, None


def exit_code_of(reports: Sequence[ScenarioReport]) -> int:
    """Worst exit code over several runs"""
    return max((r.exit_code for r in reports), default=EXIT_PASSED)


def scenario_summary(report: ScenarioReport) -> Dict[str, Any]:
    return {
        "name": report.name,
        "task": report.task,
        "passed": report.passed,
        "exit_code": report.exit_code,
        "failed": [k for k, ok in report.assertions.items() if not ok],
    }

