import logging
from dataclasses import asdict, dataclass, field, replace
from multiprocessing.pool import ThreadPool
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from ..core.errors import ConfigError, HabitProxError, OutputError, ProbeRefusedError, TrapMonotonicityError
from ..core.quasi_distance import check_norm_comparability, check_quasi_distance_axioms
from ..core.resistance import check_marginal_power_bound, check_resistance_regularity
from ..core.schedule import StepSequence
from ..dynamics.habit import habit_diagnostics, run_habit_experiment
from ..dynamics.sweep import lambda_sensitivity_sweep
from ..solvers.inexact import SolverResult, inexact_prox_run
from ..solvers.inner import multistart_minimize
from ..solvers.probes import kl_inequality_probe, prox_map_nonexpansiveness_probe
from ..solvers.property_checks import failing_checks, run_property_checks
from ..solvers.proposals import ProposalPolicy
from ..solvers.prox import solve_global
from ..worthwhile.trap_detector import sobol_points, trap_stability_sweep
from ..worthwhile.worthwhile_checker import WorthwhileChecker, WorthwhileSpec
from .config import TRAJECTORY_MODES, ExperimentConfig, RunContext, RunSpec, load_config, resolve_run
from .data_manager import DataManager, OutputKind
from .plot_data import emit_plot_data

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

# Single-step problem each iterated mode repeats, with μ ≡ 1 and ε ≡ 0.
ITERATED_POLICIES = {
    "exact-prox": ProposalPolicy.EXACT_INNER_MIN,
    "local-prox": ProposalPolicy.LOCAL_EXACT,
    "min-over-W": ProposalPolicy.WORTHWHILE_MIN,
}


@dataclass
class RunOutcome:
    name: str
    mode: str
    ok: bool = True
    summary: Dict[str, Any] = field(default_factory=dict)
    probes: Optional[Dict[str, Any]] = None
    error: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        data = {"name": self.name, "mode": self.mode, "status": "ok" if self.ok else "failed"}
        if self.error is not None:
            data["error"] = self.error
        data.update(self.summary)
        return data


@dataclass
class ExperimentOutcome:
    exit_code: int
    runs: List[RunOutcome] = field(default_factory=list)
    output_dir: Optional[Path] = None
    message: str = ""

    @property
    def failed_runs(self) -> List[str]:
        return [run.name for run in self.runs if not run.ok]


class ExperimentRunner:
    """Executes the runs of a config and writes their outputs; summaries are written last."""

    def __init__(self, config: ExperimentConfig, jobs: int = 1):
        self.config = config
        self.jobs = max(1, int(jobs))
        self.data_manager = DataManager(config.output_dir)

    def _rng(self, ctx: RunContext) -> np.random.Generator:
        return np.random.default_rng([self.config.seed, ctx.index])

    # Trajectory modes

    def _trajectory(self, ctx: RunContext) -> Tuple[SolverResult, Any]:
        spec = ctx.spec
        if spec.mode == "habit":
            return run_habit_experiment(ctx.f, ctx.q, ctx.gamma, ctx.experience, ctx.schedule, ctx.x0, ctx.space,
                                        ctx.proposal, ctx.settings, spec.radius)
        schedule, policy = ctx.schedule, ctx.proposal
        if spec.mode in ITERATED_POLICIES:
            schedule = replace(schedule, mu=StepSequence.constant(1.0), epsilon=StepSequence.constant(0.0))
            policy = ITERATED_POLICIES[spec.mode]
        result = inexact_prox_run(ctx.f, ctx.q, ctx.gamma, schedule, ctx.x0, ctx.space, policy, ctx.settings,
                                  spec.radius, rng=self._rng(ctx))
        return result, habit_diagnostics(result, ctx.f, ctx.q, ctx.gamma, ctx.space, ctx.settings)

    def _run_trajectory(self, ctx: RunContext) -> Dict[str, Any]:
        result, diagnostics = self._trajectory(ctx)
        self.data_manager.save_records(ctx.spec.name, (s.to_dict() for s in result.steps))
        if result.steps:
            emit_plot_data(result, diagnostics, self.data_manager.path_for(OutputKind.PLOT, ctx.spec.name))
        habit = diagnostics.to_dict()
        return {
            "stop_reason": result.stop_reason.value,
            "steps": len(result.steps),
            "final_point": result.final.tolist(),
            "final_f": float(result.f_series[-1]) if result.steps else float(ctx.f(result.final)),
            "diagnostics": dict(result.diagnostics),
            "trap_hit_step": habit["trap_hit_step"],
            "trap_probabilistic": habit["trap_probabilistic"],
            "steps_to_tolerance": habit["steps_to_tolerance"],
            "metrics": habit["metrics"],
        }

    # Other modes

    def _run_global(self, ctx: RunContext) -> Dict[str, Any]:
        point, value = solve_global(ctx.f, ctx.space)
        return {"minimizer": point.tolist(), "value": float(value)}

    def _run_trap_sweep(self, ctx: RunContext) -> Dict[str, Any]:
        spec = WorthwhileSpec(ctx.f, ctx.q, ctx.gamma, ctx.spec.lambdas[0])
        reports = trap_stability_sweep(spec, ctx.x0, ctx.space, ctx.spec.lambdas,
                                       samples=ctx.settings.trap_samples, seed=ctx.settings.seed)
        summary: Dict[str, Any] = {"reports": [r.to_dict() for r in reports]}
        if ctx.space.is_grid:
            summary["threshold"] = WorthwhileChecker(spec, ctx.space).trap_threshold(ctx.x0)
        return summary

    def _run_lambda_sweep(self, ctx: RunContext) -> Dict[str, Any]:
        table = lambda_sensitivity_sweep(ctx.f, ctx.q, ctx.gamma, ctx.x0, ctx.space, ctx.spec.lambdas,
                                         ctx.proposal, ctx.schedule, ctx.settings, ctx.spec.radius, self.jobs)
        self.data_manager.save_table(OutputKind.SWEEP, ctx.spec.name, table)
        return {"rows": table.to_dict(orient="records")}

    def _minimizer(self, ctx: RunContext) -> np.ndarray:
        if ctx.space.is_grid:
            return solve_global(ctx.f, ctx.space)[0]
        starts = sobol_points(ctx.space, ctx.settings.n_starts, ctx.settings.seed)[: ctx.settings.n_starts]
        best = multistart_minimize(ctx.f, lambda y: ctx.f.gradient(y, ctx.settings.fd_step), starts,
                                   ctx.space.project, ctx.settings.grad_tol, ctx.settings.max_inner_iter)
        return best.point

    def _run_probes(self, ctx: RunContext) -> Tuple[Dict[str, Any], List[str]]:
        probes, settings = ctx.probes, ctx.settings
        rng = self._rng(ctx)
        failures: List[str] = []
        report: Dict[str, Any] = {}

        properties = run_property_checks(probes["instances"], self.config.seed, probes["checks"], settings)
        report["property_checks"] = properties.to_dict()
        failures += failing_checks(properties)

        axioms = check_quasi_distance_axioms(ctx.q, ctx.space, probes["axiom_samples"], settings.seed,
                                             settings.separation_tol, settings.triangle_rtol)
        report["quasi_distance_axioms"] = {"preset": ctx.q.name, **axioms.to_dict()}
        if not axioms.passed:
            failures.append("quasi_distance_axioms")

        resistance = check_resistance_regularity(ctx.gamma)
        report["resistance"] = {"kind": ctx.gamma.kind, "regular": resistance.regular, **resistance.to_dict()}
        if not resistance.regular:
            failures.append("resistance")
        if "power_bound" in probes:
            c, alpha = probes["power_bound"]
            held = check_marginal_power_bound(ctx.gamma, c, alpha)
            report["power_bound"] = {"c": c, "alpha": alpha, "passed": held}
            if not held:
                failures.append("power_bound")

        if "comparability" in probes:
            c_low, c_high = probes["comparability"]
            comparable = check_norm_comparability(ctx.q, ctx.space, c_low, c_high, probes["axiom_samples"],
                                                  settings.seed)
            report["comparability"] = asdict(comparable)
            if not comparable.passed:
                failures.append("comparability")

        if probes["pairs"] > 0:
            drawn = ctx.space.sample(2 * probes["pairs"], rng).reshape(probes["pairs"], 2, ctx.space.dim)
            try:
                expansion = prox_map_nonexpansiveness_probe(ctx.f, probes["lambda"], [tuple(p) for p in drawn],
                                                            ctx.q, ctx.gamma, settings)
                report["nonexpansiveness"] = expansion.to_dict()
                if not expansion.passed:
                    failures.append("nonexpansiveness")
            except ProbeRefusedError as e:
                report["nonexpansiveness"] = {"refused": str(e)}

        if probes["kl_samples"] > 0:
            try:
                samples = ctx.space.sample(probes["kl_samples"], rng)
                kl = kl_inequality_probe(ctx.f, self._minimizer(ctx), samples, probes["kl_c"],
                                         rel_step=settings.fd_step)
                report["kl_inequality"] = kl.to_dict()
                if not kl.passed:
                    failures.append("kl_inequality")
            except ProbeRefusedError as e:
                report["kl_inequality"] = {"refused": str(e)}

        report["failed"] = failures
        return report, failures

    def execute_run(self, ctx: RunContext) -> RunOutcome:
        spec = ctx.spec
        outcome = RunOutcome(spec.name, spec.mode)
        try:
            if spec.mode in TRAJECTORY_MODES:
                outcome.summary = self._run_trajectory(ctx)
            elif spec.mode == "global":
                outcome.summary = self._run_global(ctx)
            elif spec.mode == "trap-sweep":
                outcome.summary = self._run_trap_sweep(ctx)
            elif spec.mode == "lambda-sweep":
                outcome.summary = self._run_lambda_sweep(ctx)
            elif spec.mode == "probes":
                outcome.probes, failures = self._run_probes(ctx)
                outcome.summary = {"probes_failed": failures}
                if failures:
                    outcome.ok = False
                    outcome.error = f"property checks failed: {', '.join(failures)}"
            else:
                raise ConfigError(f"unknown mode {spec.mode!r}", field=f"runs[{ctx.index}].mode")
        except TrapMonotonicityError as e:
            outcome.ok = False
            outcome.error = str(e)
            outcome.summary = {"lower": e.lower.to_dict(), "higher": e.higher.to_dict()}
        except (HabitProxError, ValueError, RuntimeError) as e:
            outcome.ok = False
            outcome.error = f"{type(e).__name__}: {e}"
            logger.error("run %s failed: %s", spec.name, outcome.error)
        else:
            logger.info("run %s (%s) done", spec.name, spec.mode)
        return outcome

    def execute(self) -> ExperimentOutcome:
        self.data_manager.prepare()
        contexts = [resolve_run(self.config, i) for i in range(len(self.config.runs))]
        if self.jobs > 1 and len(contexts) > 1:
            with ThreadPool(self.jobs) as pool:
                outcomes = pool.map(self.execute_run, contexts)
        else:
            outcomes = [self.execute_run(ctx) for ctx in contexts]

        probes = {o.name: o.probes for o in outcomes if o.probes is not None}
        if probes:
            self.data_manager.save_json(OutputKind.PROBES, probes)
        exit_code = EXIT_OK if all(o.ok for o in outcomes) else EXIT_FAILURE
        self.data_manager.save_json(OutputKind.SUMMARY, {
            "seed": self.config.seed,
            "exit_code": exit_code,
            "runs": [o.to_dict() for o in outcomes],
        })
        return ExperimentOutcome(exit_code, outcomes, self.data_manager.output_dir)


def probes_only(config: ExperimentConfig) -> ExperimentConfig:
    """The probes runs of a config, or one probes run over its base sections when it has none."""
    runs = tuple(run for run in config.runs if run.mode == "probes")
    return replace(config, runs=runs or (RunSpec(name="probes", mode="probes"),))


def run_config(path: Union[str, Path],
               seed: Optional[int] = None,
               output_dir: Optional[str] = None,
               jobs: int = 1,
               only_probes: bool = False) -> ExperimentOutcome:
    """
    Load a config, execute its runs and write every output file.

    Args:
        path (Union[str, Path]): TOML config
        seed (Optional[int]): Overrides the config seed
        output_dir (Optional[str]): Overrides the config output directory
        jobs (int): Runs executed concurrently
        only_probes (bool): Execute the probes runs only

    Returns:
        ExperimentOutcome: Exit code 0 when every run completed and every requested check passed,
            1 on a failed run or check or an unwritable output, 2 on an invalid config
    """
    try:
        config = load_config(path).with_overrides(seed=seed, output_dir=output_dir)
        if only_probes:
            config = probes_only(config)
        return ExperimentRunner(config, jobs).execute()
    except ConfigError as e:
        return ExperimentOutcome(EXIT_CONFIG, message=str(e))
    except OutputError as e:
        return ExperimentOutcome(EXIT_FAILURE, message=str(e))
