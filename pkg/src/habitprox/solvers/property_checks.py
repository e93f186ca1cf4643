"""Brute-force oracle checks of the prox identities on seeded random grid instances."""
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from ..core.errors import TrapMonotonicityError
from ..core.objective import ObjectiveSpec, grid_values
from ..core.quasi_distance import QuasiDistance, check_quasi_distance_axioms
from ..core.resistance import ResistanceProfile
from ..core.settings import DEFAULT_SETTINGS, SolverSettings
from ..core.space import Point, SearchSpace, as_point
from ..worthwhile.trap_detector import trap_stability_sweep
from ..worthwhile.worthwhile_checker import WorthwhileSpec
from .prox import exact_prox_step, min_over_worthwhile, prox_argmin_indices

logger = logging.getLogger(__name__)

INSTANCE_LAMBDAS = (0.1, 1.0, 10.0)
SWEEP_LAMBDAS = tuple(np.geomspace(1e-3, 1e3, 13).tolist())

LEMMA1 = "lemma1"
LEMMA2 = "lemma2"
TRAP_MONOTONICITY = "trap_monotonicity"
PROPERTY_CHECKS = (LEMMA1, LEMMA2, TRAP_MONOTONICITY)


@dataclass(frozen=True)
class GridInstance:
    """A random finite-grid problem: table f in [0, 10], asymmetric q, linear or quadratic Γ."""

    f: ObjectiveSpec
    q: QuasiDistance
    gamma: ResistanceProfile
    lam: float
    anchor: Point
    space: SearchSpace

    def describe(self) -> Dict[str, Any]:
        return {
            "space": self.space.to_dict(),
            "f": grid_values(self.f, self.space).tolist(),
            "q": {"kind": self.q.name, **self.q.params},
            "gamma": self.gamma.kind,
            "lambda": self.lam,
            "anchor": self.anchor.tolist(),
        }


def random_grid_instance(rng: np.random.Generator) -> GridInstance:
    dim = int(rng.integers(1, 3))
    resolution = int(rng.integers(5, 16)) if dim == 1 else int(rng.integers(3, 7))
    space = SearchSpace.grid([-1.0] * dim, [1.0] * dim, resolution)
    f = ObjectiveSpec.from_table(space, rng.uniform(0.0, 10.0, size=space.size), name="random-table")
    q = QuasiDistance.weighted_asymmetric(up=float(rng.uniform(0.5, 3.0)), down=float(rng.uniform(0.5, 3.0)))
    gamma = ResistanceProfile.linear() if rng.integers(2) == 0 else ResistanceProfile.quadratic()
    lam = float(INSTANCE_LAMBDAS[int(rng.integers(len(INSTANCE_LAMBDAS)))])
    anchor = as_point(space.points()[int(rng.integers(space.size))])
    return GridInstance(f, q, gamma, lam, anchor, space)


@dataclass(frozen=True)
class CheckOutcome:
    passed: bool
    witness: Optional[Dict[str, Any]] = None


def check_lemma_equivalence(instance: GridInstance) -> CheckOutcome:
    """Argmin of the prox payoff over the grid equals its argmin over W_λ(anchor)."""
    args = (instance.f, instance.q, instance.gamma, instance.lam, instance.anchor, instance.space)
    free = prox_argmin_indices(*args)
    constrained = prox_argmin_indices(*args, within_worthwhile=True)
    if np.array_equal(free, constrained):
        return CheckOutcome(True)
    return CheckOutcome(False, {**instance.describe(), "free": free.tolist(), "constrained": constrained.tolist()})


def check_sandwich(instance: GridInstance, settings: SolverSettings = DEFAULT_SETTINGS) -> CheckOutcome:
    """inf f <= f(min over W) <= f(prox step)."""
    args = (instance.f, instance.q, instance.gamma, instance.lam, instance.anchor, instance.space)
    lowest = float(grid_values(instance.f, instance.space).min())
    f5 = instance.f(min_over_worthwhile(*args, settings=settings))
    f2 = instance.f(exact_prox_step(*args, settings=settings))
    if lowest <= f5 <= f2:
        return CheckOutcome(True)
    return CheckOutcome(False, {**instance.describe(), "inf": lowest, "f_min_over_w": f5, "f_prox": f2})


def check_trap_monotonicity(instance: GridInstance, lambdas: Sequence[float] = SWEEP_LAMBDAS) -> CheckOutcome:
    """Once the anchor is a trap along ascending λ it stays one."""
    spec = WorthwhileSpec(instance.f, instance.q, instance.gamma, instance.lam)
    try:
        trap_stability_sweep(spec, instance.anchor, instance.space, lambdas)
    except TrapMonotonicityError as exc:
        return CheckOutcome(False, {**instance.describe(), "trap_at": exc.lower.lam, "free_at": exc.higher.lam})
    return CheckOutcome(True)


@dataclass
class PropertySummary:
    name: str
    passed: int = 0
    total: int = 0
    witness: Optional[Dict[str, Any]] = None
    axiom_failures: int = 0

    @property
    def ok(self) -> bool:
        return self.passed == self.total

    def line(self) -> str:
        return f"{self.name}: {self.passed}/{self.total} pass"

    def to_dict(self) -> Dict[str, Any]:
        return {"passed": self.passed, "total": self.total, "summary": self.line(),
                "axiom_failures": self.axiom_failures, "witness": self.witness}


@dataclass
class PropertyReport:
    checks: Dict[str, PropertySummary] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(summary.ok for summary in self.checks.values())

    def to_dict(self) -> Dict[str, Any]:
        return {name: summary.to_dict() for name, summary in self.checks.items()}


def run_property_checks(instances: int,
                        seed: int,
                        checks: Sequence[str] = PROPERTY_CHECKS,
                        settings: SolverSettings = DEFAULT_SETTINGS) -> PropertyReport:
    """
    Run the requested identities on ``instances`` seeded random grid instances.

    Every instance's cost is first checked against the quasi-distance axioms; the
    instance stream is the same for every check.

    Args:
        instances (int): Number of instances per check
        seed (int): Seed of the instance stream
        checks (Sequence[str]): Any of lemma1, lemma2, trap_monotonicity
        settings (SolverSettings): Budgets for the prox solves

    Returns:
        PropertyReport: Pass counts and the first failing instance per check
    """
    unknown = set(checks) - set(PROPERTY_CHECKS)
    if unknown:
        raise ValueError(f"unknown property checks {sorted(unknown)}")
    runners: Dict[str, Callable[[GridInstance], CheckOutcome]] = {
        LEMMA1: check_lemma_equivalence,
        LEMMA2: lambda inst: check_sandwich(inst, settings),
        TRAP_MONOTONICITY: check_trap_monotonicity,
    }
    report = PropertyReport({name: PropertySummary(name) for name in checks})
    rng = np.random.default_rng(seed)
    for _ in range(instances):
        instance = random_grid_instance(rng)
        axioms = check_quasi_distance_axioms(instance.q, instance.space)
        for name in checks:
            summary = report.checks[name]
            summary.total += 1
            if not axioms.passed:
                summary.axiom_failures += 1
            outcome = runners[name](instance)
            if outcome.passed:
                summary.passed += 1
            elif summary.witness is None:
                summary.witness = outcome.witness
    for summary in report.checks.values():
        logger.info(summary.line())
    return report


def failing_checks(report: PropertyReport) -> List[str]:
    return [name for name, summary in report.checks.items() if not summary.ok]
