import logging
from dataclasses import replace
from multiprocessing.pool import ThreadPool
from typing import Any, Dict, Optional, Sequence

import pandas as pd

from ..core.objective import ObjectiveSpec
from ..core.quasi_distance import QuasiDistance
from ..core.resistance import ResistanceProfile
from ..core.schedule import ProximalSchedule, StepSequence
from ..core.settings import DEFAULT_SETTINGS, SolverSettings
from ..core.space import Point, SearchSpace
from ..solvers.inexact import inexact_prox_run
from ..solvers.proposals import ProposalPolicy
from ..worthwhile.trap_detector import detect_trap
from ..worthwhile.worthwhile_checker import WorthwhileSpec
from .habit import reference_minimum, trap_hit_step
from .trajectory_analyzer import DEFAULT_TOLERANCES, TrajectoryAnalyzer

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = [
    "lambda", "final_point", "final_f", "x0_is_trap", "trapped", "stop_reason", "steps", "cumulative_cost",
] + [f"steps_to_{tol:g}" for tol in DEFAULT_TOLERANCES]


def lambda_sensitivity_sweep(f: ObjectiveSpec,
                             q: QuasiDistance,
                             gamma: ResistanceProfile,
                             x0: Point,
                             space: SearchSpace,
                             lambdas: Sequence[float],
                             proposal: ProposalPolicy = ProposalPolicy.EXACT_INNER_MIN,
                             schedule: Optional[ProximalSchedule] = None,
                             settings: SolverSettings = DEFAULT_SETTINGS,
                             radius: Optional[float] = None,
                             jobs: int = 1) -> pd.DataFrame:
    """
    One independent run from x0 per constant ratio λ.

    Args:
        f (ObjectiveSpec): Unsatisfied need
        q (QuasiDistance): Cost to change
        gamma (ResistanceProfile): Relative resistance to change
        x0 (Point): Common starting action
        space (SearchSpace): Feasible actions
        lambdas (Sequence[float]): Positive ratios
        proposal (ProposalPolicy): How candidates are found
        schedule (Optional[ProximalSchedule]): μ, ε and step budget; exact with 1000 steps when omitted
        settings (SolverSettings): Budgets and tolerances
        radius (Optional[float]): Ball radius for the local-exact proposal
        jobs (int): Worker threads; rows come back in λ order regardless

    Returns:
        pd.DataFrame: One row per λ with the final point, whether x0 itself is a trap,
            whether the run ended in a trap, steps to each tolerance and the cumulative cost
    """
    lambdas = [float(lam) for lam in lambdas]
    if any(not lam > 0 for lam in lambdas):
        raise ValueError("lambdas must be positive")
    base = schedule or ProximalSchedule.exact(StepSequence.constant(1.0))
    f_star = reference_minimum(f, space)
    start = space.snap(x0)

    def run_one(lam: float) -> Dict[str, Any]:
        sched = replace(base, lam=StepSequence.constant(lam))
        result = inexact_prox_run(f, q, gamma, sched, start, space, proposal, settings, radius)
        analyzer = TrajectoryAnalyzer(result)
        x0_report = detect_trap(WorthwhileSpec(f, q, gamma, lam * sched.mu(0)), start, space,
                                samples=settings.trap_samples, seed=settings.seed)
        trapped, _ = trap_hit_step(result, f, q, gamma, space, settings)
        row = {
            "lambda": lam,
            "final_point": result.final.tolist(),
            "final_f": float(result.f_series[-1]),
            "x0_is_trap": x0_report.is_trap,
            "trapped": trapped is not None,
            "stop_reason": result.stop_reason.value,
            "steps": len(result.steps),
            "cumulative_cost": float(result.diagnostics["cumulative_cost"]),
        }
        for tol, k in analyzer.steps_to_tolerance(f_star).items():
            row[f"steps_to_{tol:g}"] = k
        logger.debug("lambda %.6g: %s after %d steps", lam, result.stop_reason.value, len(result.steps))
        return row

    if jobs > 1:
        with ThreadPool(jobs) as pool:
            rows = pool.map(run_one, lambdas)
    else:
        rows = [run_one(lam) for lam in lambdas]
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)
