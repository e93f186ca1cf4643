import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy.stats import qmc

from ..core.errors import TrapMonotonicityError
from ..core.space import Point, SearchSpace, as_point
from .worthwhile_checker import WorthwhileSpec, is_worthwhile, worthwhile_mask

logger = logging.getLogger(__name__)

# Local refinement around a continuous candidate: radii as fractions of the box diameter
REFINE_RADII = np.geomspace(1e-1, 1e-6, 11)
REFINE_RANDOM_DIRECTIONS = 8


@dataclass(frozen=True)
class TrapReport:
    """Verdict on whether a point is a variational trap at ratio λ.

    Attributes:
        point: The candidate x
        lam: The ratio λ
        is_trap: True iff no y != x is a worthwhile change from x
        counterexample: A worthwhile y != x when not a trap
        candidates_checked: Destinations examined
        probabilistic: True when destinations were sampled rather than enumerated
    """

    point: Point
    lam: float
    is_trap: bool
    counterexample: Optional[Point]
    candidates_checked: int
    probabilistic: bool = False

    def __post_init__(self):
        if self.is_trap != (self.counterexample is None):
            raise ValueError("a trap report has a counterexample exactly when it is not a trap")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "point": self.point.tolist(),
            "lambda": self.lam,
            "is_trap": self.is_trap,
            "counterexample": None if self.counterexample is None else self.counterexample.tolist(),
            "candidates_checked": self.candidates_checked,
            "probabilistic": self.probabilistic,
        }


def sobol_points(space: SearchSpace, n: int, seed: int) -> np.ndarray:
    """Scrambled Sobol points scaled to the box, n rounded up to a power of two."""
    m = max(0, int(np.ceil(np.log2(max(n, 1)))))
    sampler = qmc.Sobol(d=space.dim, scramble=True, seed=seed)
    return qmc.scale(sampler.random_base2(m), space.lower, space.upper)


def refinement_points(candidate: Point, space: SearchSpace, seed: int) -> np.ndarray:
    """Points at shrinking radii around the candidate along axes and random directions."""
    rng = np.random.default_rng(seed)
    axes = np.vstack([np.eye(space.dim), -np.eye(space.dim)])
    randoms = rng.normal(size=(REFINE_RANDOM_DIRECTIONS, space.dim))
    randoms /= np.linalg.norm(randoms, axis=1, keepdims=True)
    directions = np.vstack([axes, randoms])
    radii = REFINE_RADII * space.diameter
    pts = candidate + (radii[:, None, None] * directions[None, :, :]).reshape(-1, space.dim)
    return space.project(pts)


def detect_trap(spec: WorthwhileSpec,
                candidate: Point,
                space: SearchSpace,
                samples: int = 1024,
                seed: int = 0) -> TrapReport:
    """
    Decide whether candidate is a variational trap, W_λ(candidate) = {candidate}.

    Finite grids are enumerated exhaustively. Continuous boxes are probed with
    ``samples`` Sobol points plus a local refinement around the candidate; those
    reports are marked probabilistic.

    Args:
        spec (WorthwhileSpec): Need, cost, resistance and ratio
        candidate (Point): Point to test
        space (SearchSpace): Where destinations live
        samples (int): Sample budget in continuous mode
        seed (int): Seed of the sampling streams

    Returns:
        TrapReport: The verdict, with the first worthwhile y != candidate found
    """
    if space.is_grid:
        candidate = space.snap(candidate)
        mask = worthwhile_mask(spec, candidate, space)
        mask[space.index_of(candidate)] = False
        hits = np.flatnonzero(mask)
        counterexample = as_point(space.points()[hits[0]]) if len(hits) else None
        return TrapReport(candidate, spec.lam, counterexample is None, counterexample, space.size)

    candidate = as_point(candidate)
    probes = np.vstack([sobol_points(space, samples, seed), refinement_points(candidate, space, seed)])
    checked = 0
    for y in probes:
        if np.array_equal(y, candidate):
            continue
        checked += 1
        if is_worthwhile(spec, candidate, y):
            return TrapReport(candidate, spec.lam, False, as_point(y), checked, probabilistic=True)
    logger.debug("no worthwhile move from %s among %d sampled points", candidate.tolist(), checked)
    return TrapReport(candidate, spec.lam, True, None, checked, probabilistic=True)


def trap_stability_sweep(spec: WorthwhileSpec,
                         candidate: Point,
                         space: SearchSpace,
                         lambdas: Sequence[float],
                         samples: int = 1024,
                         seed: int = 0) -> List[TrapReport]:
    """
    Trap verdicts for a strictly ascending list of ratios.

    A trap at λ* stays a trap at every λ > λ*, since W_λ(x) ⊂ W_λ*(x).

    Returns:
        List[TrapReport]: One report per λ, in the given order

    Raises:
        ValueError: If lambdas is not strictly ascending or holds a non-positive value
        TrapMonotonicityError: If a trap stops being one at a higher λ
    """
    lambdas = [float(lam) for lam in lambdas]
    if any(lam <= 0 for lam in lambdas):
        raise ValueError("lambdas must be positive")
    if any(b <= a for a, b in zip(lambdas, lambdas[1:])):
        raise ValueError("lambdas must be strictly ascending")

    reports: List[TrapReport] = []
    first_trap: Optional[TrapReport] = None
    for lam in lambdas:
        report = detect_trap(spec.with_lambda(lam), candidate, space, samples=samples, seed=seed)
        if first_trap is not None and not report.is_trap:
            raise TrapMonotonicityError(
                f"trap at lambda={first_trap.lam} but not at lambda={lam}", first_trap, report
            )
        if report.is_trap and first_trap is None:
            first_trap = report
        reports.append(report)
    return reports
