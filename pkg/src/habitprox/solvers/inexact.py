import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from ..core.objective import ObjectiveSpec
from ..core.quasi_distance import QuasiDistance
from ..core.resistance import ResistanceProfile
from ..core.schedule import ProximalSchedule
from ..core.settings import DEFAULT_SETTINGS, SolverSettings
from ..core.space import Point, SearchSpace, as_point
from ..worthwhile.trap_detector import detect_trap
from ..worthwhile.worthwhile_checker import WorthwhileSpec
from .proposals import ProposalManager, ProposalPolicy, StepContext, accepts
from .stopping import evaluate_stopping_rule

logger = logging.getLogger(__name__)

LambdaProvider = Callable[[int, List[Point], List[float]], float]


class StopReason(Enum):
    STATIONARY = "stationary"
    STOPPING_RULE = "stopping-rule"
    MAX_STEPS = "max-steps"
    TRAP_REACHED = "trap-reached"


@dataclass(frozen=True)
class StepRecord:
    """One step of a proximal run; a stay has accepted == anchor and moved False.

    Attributes:
        k: Step index
        anchor: x^k
        accepted: x^{k+1}
        f_before: f(x^k)
        f_after: f(x^{k+1})
        step_cost: q(x^k, x^{k+1})
        lambda_k: λ_k
        mu_k: μ_k
        epsilon_k: ε_k
        worthwhile: The move lies in W at ratio λ_k μ_k without the ε_k slack
        moved: x^{k+1} != x^k
        inner_solver: Proposal policy and the method that produced the candidate
        stop_rule_fired: The marginal stopping condition held at x^{k+1}
    """

    k: int
    anchor: Point
    accepted: Point
    f_before: float
    f_after: float
    step_cost: float
    lambda_k: float
    mu_k: float
    epsilon_k: float
    worthwhile: bool
    moved: bool
    inner_solver: str
    stop_rule_fired: bool

    def recheck(self, f: ObjectiveSpec, q: QuasiDistance, gamma: ResistanceProfile) -> bool:
        """Re-evaluate the relaxed acceptance inequality from scratch."""
        return accepts(f(self.anchor), f(self.accepted), q(self.anchor, self.accepted),
                       self.lambda_k, self.mu_k, self.epsilon_k, gamma)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "anchor": self.anchor.tolist(),
            "accepted": self.accepted.tolist(),
            "f_before": self.f_before,
            "f_after": self.f_after,
            "step_cost": self.step_cost,
            "lambda_k": self.lambda_k,
            "mu_k": self.mu_k,
            "epsilon_k": self.epsilon_k,
            "worthwhile": self.worthwhile,
            "moved": self.moved,
            "inner_solver": self.inner_solver,
            "stop_rule_fired": self.stop_rule_fired,
        }


@dataclass(frozen=True)
class SolverResult:
    """Full trajectory of a proximal run."""

    steps: Tuple[StepRecord, ...]
    final: Point
    stop_reason: StopReason
    diagnostics: Dict[str, float] = field(default_factory=dict)

    @property
    def iterates(self) -> List[Point]:
        if not self.steps:
            return [self.final]
        return [self.steps[0].anchor] + [s.accepted for s in self.steps]

    @property
    def f_series(self) -> List[float]:
        if not self.steps:
            return []
        return [self.steps[0].f_before] + [s.f_after for s in self.steps]

    @property
    def step_costs(self) -> List[float]:
        return [s.step_cost for s in self.steps]

    @property
    def lambdas(self) -> List[float]:
        return [s.lambda_k for s in self.steps]


class ProximalRunner:
    """Drives the inexact worthwhile-change iteration from a starting action."""

    def __init__(self,
                 f: ObjectiveSpec,
                 q: QuasiDistance,
                 gamma: ResistanceProfile,
                 schedule: ProximalSchedule,
                 space: SearchSpace,
                 proposal: ProposalPolicy = ProposalPolicy.EXACT_INNER_MIN,
                 settings: SolverSettings = DEFAULT_SETTINGS,
                 radius: Optional[float] = None,
                 lambda_provider: Optional[LambdaProvider] = None,
                 rng: Optional[np.random.Generator] = None):
        """
        Args:
            f (ObjectiveSpec): Unsatisfied need
            q (QuasiDistance): Cost to change
            gamma (ResistanceProfile): Relative resistance to change
            schedule (ProximalSchedule): λ, μ, ε sequences and the step budget
            space (SearchSpace): Feasible actions
            proposal (ProposalPolicy): How candidates are found
            settings (SolverSettings): Budgets and tolerances
            radius (Optional[float]): Ball radius for the local-exact proposal
            lambda_provider (Optional[LambdaProvider]): History-dependent λ_k replacing schedule.lam
            rng (Optional[np.random.Generator]): Stream of sampling proposals
        """
        self.f = f
        self.q = q
        self.gamma = gamma
        self.schedule = schedule
        self.space = space
        self.settings = settings
        self.radius = radius
        self.lambda_provider = lambda_provider
        self.proposals = ProposalManager(f, q, gamma, space, proposal, settings, rng)

    def _start(self, x0: Point) -> Tuple[Point, float]:
        if self.space.is_grid:
            x = self.space.snap(x0)
        else:
            x = as_point(x0)
            if not self.space.contains(x):
                raise ValueError(f"x0 = {x.tolist()} lies outside the box")
        fx = self.f(x)
        if not math.isfinite(fx):
            raise ValueError(f"f(x0) must be finite, got {fx}")
        return x, fx

    def _lambda(self, k: int, history: List[Point], f_values: List[float]) -> float:
        if self.lambda_provider is None:
            return self.schedule.lam(k)
        lam = float(self.lambda_provider(k, history, f_values))
        self.schedule.validate_step(k, lam)
        return lam

    def _check_stop_rule(self, lam: float, anchor: Point, candidate: Point) -> Tuple[bool, bool]:
        # table objectives have no derivative off the grid
        if self.space.is_grid and not self.f.has_subgradient:
            return False, False
        check = evaluate_stopping_rule(self.f, self.q, self.gamma, lam, anchor, candidate,
                                       rel_step=self.settings.fd_step)
        return check.fired, check.abstained

    def run(self, x0: Point) -> SolverResult:
        """
        Iterate worthwhile changes from x0 until a stop condition.

        Each step proposes y; the move is taken iff f(x^k) - f(y) >= λ_k μ_k Γ(q(x^k, y)) - ε_k,
        otherwise the step is a stay. On a finite grid a trap at ratio λ_k μ_k ends the run.

        Returns:
            SolverResult: Every step, the final action, the stop reason and run diagnostics
        """
        x, fx = self._start(x0)
        history: List[Point] = [x]
        f_values: List[float] = [fx]
        steps: List[StepRecord] = []
        stall = 0
        counters = {"inner_nonconverged_steps": 0, "stopping_rule_abstentions": 0}
        reason = StopReason.MAX_STEPS

        for k in range(self.schedule.max_steps):
            lam = self._lambda(k, history, f_values)
            mu, eps = self.schedule.mu(k), self.schedule.epsilon(k)

            if self.space.is_grid:
                trap = detect_trap(WorthwhileSpec(self.f, self.q, self.gamma, lam * mu), x, self.space)
                if trap.is_trap:
                    steps.append(StepRecord(k, x, x, fx, fx, 0.0, lam, mu, eps, True, False, "trap-check", False))
                    reason = StopReason.TRAP_REACHED
                    logger.debug("step %d: %s is a trap at ratio %.6g", k, x.tolist(), lam * mu)
                    break

            proposal = self.proposals.propose(StepContext(x, fx, lam, mu, eps, self.radius))
            tag = self.proposals.policy.value
            y, fy, cost, moved = x, fx, 0.0, False
            if proposal is not None:
                tag = f"{tag}:{proposal.method}" if proposal.method and proposal.method != tag else tag
                if not proposal.converged:
                    counters["inner_nonconverged_steps"] += 1
                if not np.array_equal(proposal.point, x):
                    f_candidate = self.f(proposal.point)
                    c = self.q(x, proposal.point)
                    if accepts(fx, f_candidate, c, lam, mu, eps, self.gamma):
                        y, fy, cost, moved = proposal.point, f_candidate, c, True

            fired = False
            worthwhile = True
            if moved:
                fired, abstained = self._check_stop_rule(lam, x, y)
                counters["stopping_rule_abstentions"] += int(abstained)
                worthwhile = fx == math.inf or fx - fy >= lam * mu * self.gamma(cost)
                stall = 0
            else:
                stall += 1
            steps.append(StepRecord(k, x, y, fx, fy, cost, lam, mu, eps, worthwhile, moved, tag, fired))
            logger.debug("step %d: %s -> %s, f %.6g -> %.6g", k, x.tolist(), y.tolist(), fx, fy)

            x, fx = y, fy
            history.append(x)
            f_values.append(fx)
            if moved and fired and cost <= self.settings.stop_step_tol:
                reason = StopReason.STOPPING_RULE
                break
            if stall >= self.settings.patience:
                reason = StopReason.STATIONARY
                break

        moves = sum(s.moved for s in steps)
        diagnostics = {
            "cumulative_cost": float(sum(s.step_cost for s in steps)),
            "moves": float(moves),
            "stays": float(len(steps) - moves),
            "total_advantage": float(steps[0].f_before - fx) if steps else 0.0,
            "final_f": float(fx),
            **{name: float(value) for name, value in counters.items()},
        }
        logger.info("run from %s ended after %d steps: %s", history[0].tolist(), len(steps), reason.value)
        return SolverResult(tuple(steps), x, reason, diagnostics)


def inexact_prox_run(f: ObjectiveSpec,
                     q: QuasiDistance,
                     gamma: ResistanceProfile,
                     schedule: ProximalSchedule,
                     x0: Point,
                     space: SearchSpace,
                     proposal: ProposalPolicy = ProposalPolicy.EXACT_INNER_MIN,
                     settings: SolverSettings = DEFAULT_SETTINGS,
                     radius: Optional[float] = None,
                     lambda_provider: Optional[LambdaProvider] = None,
                     rng: Optional[np.random.Generator] = None) -> SolverResult:
    """
    Inexact worthwhile-change run: accept y when f(x^k) - f(y) >= λ_k μ_k Γ(q(x^k, y)) - ε_k.

    With μ ≡ 1, ε ≡ 0 and exact proposals this is the exact proximal point sequence.

    Returns:
        SolverResult: The full trajectory
    """
    runner = ProximalRunner(f, q, gamma, schedule, space, proposal, settings, radius, lambda_provider, rng)
    return runner.run(x0)
