import math

import numpy as np

from .objective import ObjectiveSpec
from .quasi_distance import QuasiDistance
from .resistance import ResistanceProfile
from .space import Point


def proximal_payoff(f: ObjectiveSpec,
                    q: QuasiDistance,
                    gamma: ResistanceProfile,
                    lam: float,
                    anchor: Point,
                    y: Point) -> float:
    """
    Proximal payoff f(y) + λ Γ(q(anchor, y)).

    Args:
        f (ObjectiveSpec): Unsatisfied need
        q (QuasiDistance): Cost to change
        gamma (ResistanceProfile): Relative resistance to change
        lam (float): Proximal ratio λ > 0
        anchor (Point): Current action x^k
        y (Point): Candidate action

    Returns:
        float: The payoff; +inf when f(y) is +inf
    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    fy = f.evaluate(y)
    if fy == math.inf:
        return math.inf
    return fy + lam * gamma(q(anchor, y))


def payoffs_over(f_values: np.ndarray, costs: np.ndarray, gamma: ResistanceProfile, lam: float) -> np.ndarray:
    """Vectorized payoffs for precomputed f-values and costs q(anchor, y)."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    with np.errstate(invalid="ignore"):
        payoffs = f_values + lam * gamma.many(costs)
    return np.where(np.isinf(f_values), math.inf, payoffs)
