import itertools
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Iterator, Optional

import numpy as np

from ..core.errors import ConfigError, UnsupportedSpaceError
from ..core.objective import ObjectiveSpec
from ..core.quasi_distance import QuasiDistance
from ..core.resistance import ResistanceProfile
from ..core.settings import DEFAULT_SETTINGS, SolverSettings
from ..core.space import Point, SearchSpace
from .prox import min_over_worthwhile, solve_local_prox, solve_prox


class ProposalPolicy(Enum):
    """How an inexact step looks for its next action."""

    EXACT_INNER_MIN = "exact-inner-min"
    RANDOM_WORTHWHILE_SAMPLE = "random-worthwhile-sample"
    FIRST_IMPROVING_NEIGHBOR = "first-improving-neighbor"
    GRADIENT_STEP_THEN_TEST = "gradient-step-then-test"
    LOCAL_EXACT = "local-exact"
    WORTHWHILE_MIN = "worthwhile-min"

    @classmethod
    def parse(cls, value) -> "ProposalPolicy":
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError as exc:
            choices = ", ".join(p.value for p in cls)
            raise ConfigError(f"unknown proposal {value!r}, expected one of {choices}",
                              field="proposal") from exc


def accepts(f_before: float, f_after: float, cost: float, lam: float, mu: float, eps: float,
            gamma: ResistanceProfile) -> bool:
    """Relaxed worthwhile test f(x) - f(y) >= λ μ Γ(q(x, y)) - ε."""
    if f_after == math.inf:
        return False
    if f_before == math.inf:
        return True
    return f_before - f_after >= lam * mu * gamma(cost) - eps


@dataclass(frozen=True)
class StepContext:
    """Everything a proposal needs for step k.

    Attributes:
        anchor: Current action x^k
        f_anchor: f(x^k)
        lam: λ_k
        mu: μ_k
        eps: ε_k
        radius: Ball radius of the local policy
    """

    anchor: Point
    f_anchor: float
    lam: float
    mu: float
    eps: float
    radius: Optional[float] = None


@dataclass(frozen=True)
class Proposal:
    point: Point
    converged: bool = True
    method: str = ""


class ProposalManager:
    """Finds candidate actions for one run according to a proposal policy."""

    def __init__(self,
                 f: ObjectiveSpec,
                 q: QuasiDistance,
                 gamma: ResistanceProfile,
                 space: SearchSpace,
                 policy: ProposalPolicy = ProposalPolicy.EXACT_INNER_MIN,
                 settings: SolverSettings = DEFAULT_SETTINGS,
                 rng: Optional[np.random.Generator] = None):
        """
        Args:
            f (ObjectiveSpec): Unsatisfied need
            q (QuasiDistance): Cost to change
            gamma (ResistanceProfile): Relative resistance to change
            space (SearchSpace): Feasible actions
            policy (ProposalPolicy): Candidate search strategy
            settings (SolverSettings): Budgets; ``proposal_budget`` bounds sampling policies
            rng (Optional[np.random.Generator]): Stream of the sampling policy
        """
        self.f = f
        self.q = q
        self.gamma = gamma
        self.space = space
        self.policy = ProposalPolicy.parse(policy)
        self.settings = settings
        self.rng = rng if rng is not None else np.random.default_rng(settings.seed)
        if self.policy is ProposalPolicy.WORTHWHILE_MIN and not space.is_grid:
            raise UnsupportedSpaceError("the worthwhile-min proposal needs a finite grid")
        self._handlers: Dict[ProposalPolicy, Callable[[StepContext], Optional[Proposal]]] = {
            ProposalPolicy.EXACT_INNER_MIN: self._exact,
            ProposalPolicy.RANDOM_WORTHWHILE_SAMPLE: self._random_sample,
            ProposalPolicy.FIRST_IMPROVING_NEIGHBOR: self._first_neighbor,
            ProposalPolicy.GRADIENT_STEP_THEN_TEST: self._gradient_step,
            ProposalPolicy.LOCAL_EXACT: self._local,
            ProposalPolicy.WORTHWHILE_MIN: self._worthwhile_min,
        }

    def propose(self, ctx: StepContext) -> Optional[Proposal]:
        """
        Find a candidate for step k.

        Returns:
            Optional[Proposal]: The candidate, or None when the budget produced nothing
                passing the relaxed worthwhile test
        """
        return self._handlers[self.policy](ctx)

    def _passes(self, ctx: StepContext, y: np.ndarray) -> bool:
        if np.array_equal(y, ctx.anchor):
            return False
        return accepts(ctx.f_anchor, self.f(y), self.q(ctx.anchor, y), ctx.lam, ctx.mu, ctx.eps, self.gamma)

    def _first_passing(self, ctx: StepContext, candidates: Iterator[np.ndarray]) -> Optional[Proposal]:
        for y in itertools.islice(candidates, self.settings.proposal_budget):
            if self._passes(ctx, y):
                return Proposal(self.space.nearest(y), method=self.policy.value)
        return None

    def _exact(self, ctx: StepContext) -> Proposal:
        outcome = solve_prox(self.f, self.q, self.gamma, ctx.lam, ctx.anchor, self.space, self.settings)
        return Proposal(outcome.point, outcome.converged, outcome.method)

    def _local(self, ctx: StepContext) -> Proposal:
        if ctx.radius is None:
            raise ConfigError("the local-exact proposal needs a radius", field="radius")
        outcome = solve_local_prox(self.f, self.q, self.gamma, ctx.lam, ctx.anchor, ctx.radius,
                                   self.space, self.settings)
        return Proposal(outcome.point, outcome.converged, outcome.method)

    def _worthwhile_min(self, ctx: StepContext) -> Proposal:
        point = min_over_worthwhile(self.f, self.q, self.gamma, ctx.lam, ctx.anchor, self.space, self.settings)
        return Proposal(point, method="grid")

    def _random_sample(self, ctx: StepContext) -> Optional[Proposal]:
        samples = self.space.sample(self.settings.proposal_budget, self.rng)
        return self._first_passing(ctx, iter(samples))

    def _neighbors(self, anchor: Point) -> Iterator[np.ndarray]:
        if self.space.is_grid:
            # grid neighbours in lexicographic order of their flat index
            center = np.unravel_index(self.space.index_of(anchor), self.space.resolution)
            points = self.space.points()
            indices = []
            for offset in itertools.product((-1, 0, 1), repeat=self.space.dim):
                multi = np.add(center, offset)
                if any(offset) and np.all(multi >= 0) and np.all(multi < self.space.resolution):
                    indices.append(int(np.ravel_multi_index(tuple(multi), self.space.resolution)))
            for index in sorted(indices):
                yield points[index]
            return
        # coordinate moves at halving lengths on a box
        h = 0.5 * self.space.diameter
        while True:
            for axis in range(self.space.dim):
                for sign in (1.0, -1.0):
                    step = np.zeros(self.space.dim)
                    step[axis] = sign * h
                    yield self.space.project(anchor + step)
            h *= 0.5

    def _first_neighbor(self, ctx: StepContext) -> Optional[Proposal]:
        return self._first_passing(ctx, self._neighbors(ctx.anchor))

    def _gradient_step(self, ctx: StepContext) -> Optional[Proposal]:
        g = self.f.gradient(ctx.anchor, self.settings.fd_step)
        if not np.all(np.isfinite(g)) or not np.any(g):
            return None

        def steps():
            t = 1.0
            while True:
                yield self.space.nearest(ctx.anchor - t * g)
                t *= 0.5

        return self._first_passing(ctx, steps())
