import logging
from dataclasses import dataclass, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..core.errors import EquivalenceViolationError
from ..core.objective import ObjectiveSpec
from ..core.quasi_distance import QuasiDistance
from ..core.resistance import ResistanceProfile
from ..core.schedule import ExperienceModel, ProximalSchedule, StepSequence
from ..core.settings import DEFAULT_SETTINGS, SolverSettings
from ..core.space import Point, SearchSpace
from ..solvers.inexact import SolverResult, StopReason, inexact_prox_run
from ..solvers.proposals import ProposalPolicy
from ..solvers.prox import solve_global
from ..worthwhile.trap_detector import detect_trap
from ..worthwhile.worthwhile_checker import WorthwhileSpec
from .trajectory_analyzer import DEFAULT_TOLERANCES, TrajectoryAnalyzer

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HabitDiagnostics:
    """What a run says about habit formation.

    Attributes:
        step_costs: q(x^k, x^{k+1}) per step
        cumulative_cost: Running sum of step costs
        f_series: f(x^0), f(x^1), ...
        trap_hit_step: Step from which the run sits in a trap, None when none was certified
        trap_probabilistic: The trap verdict came from sampling a continuous box
        steps_to_tolerance: First iterate index with f(x^k) - f* <= tol
        lambda_series: Realized λ_k
        metrics: Summary metrics of the trajectory
    """

    step_costs: Tuple[float, ...]
    cumulative_cost: Tuple[float, ...]
    f_series: Tuple[float, ...]
    trap_hit_step: Optional[int]
    trap_probabilistic: bool
    steps_to_tolerance: Dict[float, Optional[int]]
    lambda_series: Tuple[float, ...]
    metrics: Dict[str, Optional[float]]

    def __post_init__(self):
        if any(b < a for a, b in zip(self.cumulative_cost, self.cumulative_cost[1:])):
            raise ValueError("cumulative cost must be non-decreasing")
        if self.trap_hit_step is not None and any(self.step_costs[self.trap_hit_step:]):
            raise ValueError("steps after the trap must cost nothing")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "step_costs": list(self.step_costs),
            "cumulative_cost": list(self.cumulative_cost),
            "f_series": list(self.f_series),
            "trap_hit_step": self.trap_hit_step,
            "trap_probabilistic": self.trap_probabilistic,
            "steps_to_tolerance": {f"{tol:g}": k for tol, k in self.steps_to_tolerance.items()},
            "lambda_series": list(self.lambda_series),
            "metrics": dict(self.metrics),
        }


def reference_minimum(f: ObjectiveSpec, space: SearchSpace) -> Optional[float]:
    """Grid-oracle minimum on finite grids, the declared lower bound otherwise."""
    if space.is_grid:
        return solve_global(f, space)[1]
    return f.lower_bound


def trap_hit_step(result: SolverResult,
                  f: ObjectiveSpec,
                  q: QuasiDistance,
                  gamma: ResistanceProfile,
                  space: SearchSpace,
                  settings: SolverSettings = DEFAULT_SETTINGS) -> Tuple[Optional[int], bool]:
    """
    Step from which the run stays in a variational trap.

    On a finite grid the final action is certified exhaustively at the last ratio λ_k μ_k.
    On a continuous box a trap is declared only when the stopping rule fired on the last
    move and a sampled trap probe finds no worthwhile change; that verdict is probabilistic.

    Returns:
        Tuple[Optional[int], bool]: The step index (None without a trap) and whether it is probabilistic
    """
    if not result.steps:
        return None, False
    analyzer = TrajectoryAnalyzer(result)
    tail = analyzer.last_move_index()
    if result.stop_reason is StopReason.TRAP_REACHED:
        return tail, False
    last = result.steps[-1]
    spec = WorthwhileSpec(f, q, gamma, last.lambda_k * last.mu_k)
    if space.is_grid:
        return (tail, False) if detect_trap(spec, result.final, space).is_trap else (None, False)
    moves = [s for s in result.steps if s.moved]
    if not moves or not moves[-1].stop_rule_fired:
        return None, False
    report = detect_trap(spec, result.final, space, samples=settings.trap_samples, seed=settings.seed)
    if report.is_trap:
        logger.warning("trap at %s is a sampled verdict on a continuous box", result.final.tolist())
        return tail, True
    return None, False


def habit_diagnostics(result: SolverResult,
                      f: ObjectiveSpec,
                      q: QuasiDistance,
                      gamma: ResistanceProfile,
                      space: SearchSpace,
                      settings: SolverSettings = DEFAULT_SETTINGS,
                      tolerances=DEFAULT_TOLERANCES) -> HabitDiagnostics:
    analyzer = TrajectoryAnalyzer(result)
    trap_step, probabilistic = trap_hit_step(result, f, q, gamma, space, settings)
    return HabitDiagnostics(
        step_costs=tuple(float(c) for c in analyzer.get_step_costs()),
        cumulative_cost=tuple(float(c) for c in analyzer.get_cumulative_cost()),
        f_series=tuple(result.f_series),
        trap_hit_step=trap_step,
        trap_probabilistic=probabilistic,
        steps_to_tolerance=analyzer.steps_to_tolerance(reference_minimum(f, space), tolerances),
        lambda_series=tuple(result.lambdas),
        metrics=analyzer.summary_metrics(),
    )


def _same_iterates(a: List[Point], b: List[Point]) -> bool:
    return len(a) == len(b) and all(np.array_equal(x, y) for x, y in zip(a, b))


def run_habit_experiment(f: ObjectiveSpec,
                         q: QuasiDistance,
                         gamma: ResistanceProfile,
                         experience: ExperienceModel,
                         schedule: ProximalSchedule,
                         x0: Point,
                         space: SearchSpace,
                         proposal: ProposalPolicy = ProposalPolicy.EXACT_INNER_MIN,
                         settings: SolverSettings = DEFAULT_SETTINGS,
                         radius: Optional[float] = None) -> Tuple[SolverResult, HabitDiagnostics]:
    """
    Run the experience-weighted worthwhile-change process.

    Weighting the need by v(E^k) with ratio η_k is the plain process with λ_k = η_k / v(E^k),
    where E^k is the realized history. With ``settings.debug_checks`` a plain run over the
    realized λ_k table is replayed and must reproduce the iterates exactly.

    Args:
        f (ObjectiveSpec): Unsatisfied need
        q (QuasiDistance): Cost to change
        gamma (ResistanceProfile): Relative resistance to change
        experience (ExperienceModel): v(E^k) and η_k
        schedule (ProximalSchedule): μ, ε and the step budget; its λ is replaced by η_k / v(E^k)
        x0 (Point): Starting action
        space (SearchSpace): Feasible actions
        proposal (ProposalPolicy): How candidates are found
        settings (SolverSettings): Budgets and tolerances
        radius (Optional[float]): Ball radius for the local-exact proposal

    Returns:
        Tuple[SolverResult, HabitDiagnostics]: The trajectory and its diagnostics
    """
    result = inexact_prox_run(f, q, gamma, schedule, x0, space, proposal, settings, radius,
                              lambda_provider=experience.proximal_ratio)
    if settings.debug_checks and result.steps:
        plain_schedule = replace(schedule, lam=StepSequence.table(result.lambdas))
        plain = inexact_prox_run(f, q, gamma, plain_schedule, x0, space, proposal, settings, radius)
        if not _same_iterates(result.iterates, plain.iterates):
            raise EquivalenceViolationError(
                "experience-weighted run and the plain run over the composed lambda table diverge"
            )
    return result, habit_diagnostics(result, f, q, gamma, space, settings)
