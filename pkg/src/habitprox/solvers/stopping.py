import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..core.objective import ObjectiveSpec
from ..core.quasi_distance import QuasiDistance
from ..core.resistance import ResistanceProfile
from ..core.space import Point

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StoppingCheck:
    """Outcome of the marginal-decrease versus marginal-resistance comparison.

    Attributes:
        fired: True iff ||∂f(candidate)|| <= resistance_bound
        grad_norm: ||∂f(candidate)||
        resistance_bound: λ times the marginal resistance at the candidate
        abstained: The rule could not be evaluated (non-finite finite differences)
    """

    fired: bool
    grad_norm: float
    resistance_bound: float
    abstained: bool = False


def marginal_resistance(q: QuasiDistance,
                        gamma: ResistanceProfile,
                        anchor: Point,
                        candidate: Point,
                        rel_step: float = 1e-6) -> float:
    """||∂_y Γ(q(anchor, y))|| at y = candidate, i.e. Γ′(q) ||∇_y q||; 0 at the anchor itself."""
    cost = q(anchor, candidate)
    if cost == 0.0:
        return 0.0
    return float(gamma.marginal(cost, rel_step) * np.linalg.norm(q.gradient_y(anchor, candidate, rel_step)))


def evaluate_stopping_rule(f: ObjectiveSpec,
                           q: QuasiDistance,
                           gamma: ResistanceProfile,
                           lam: float,
                           anchor: Point,
                           candidate: Point,
                           subgrad_f: Optional[np.ndarray] = None,
                           resistance_bound: Optional[float] = None,
                           rel_step: float = 1e-6) -> StoppingCheck:
    """
    Compare the marginal decrease of the need with the marginal resistance to change.

    Args:
        f (ObjectiveSpec): Unsatisfied need
        q (QuasiDistance): Cost to change
        gamma (ResistanceProfile): Relative resistance to change
        lam (float): Proximal ratio λ
        anchor (Point): Previous action x^k
        candidate (Point): New action x^{k+1}
        subgrad_f (Optional[np.ndarray]): Subgradient of f at the candidate; computed when omitted
        resistance_bound (Optional[float]): λ-scaled marginal resistance; computed when omitted
        rel_step (float): Finite-difference step factor

    Returns:
        StoppingCheck: The verdict; abstains (fired False) when a quantity is not finite
    """
    g = f.gradient(candidate, rel_step) if subgrad_f is None else np.asarray(subgrad_f, dtype=float)
    grad_norm = float(np.linalg.norm(g))
    if resistance_bound is None:
        resistance_bound = lam * marginal_resistance(q, gamma, anchor, candidate, rel_step)
    resistance_bound = float(resistance_bound)
    if resistance_bound < 0:
        raise ValueError(f"resistance bound must be nonnegative, got {resistance_bound}")
    if not (math.isfinite(grad_norm) and math.isfinite(resistance_bound)):
        logger.warning("stopping rule abstains at %s: non-finite derivative estimate",
                       np.asarray(candidate).tolist())
        return StoppingCheck(False, grad_norm, resistance_bound, abstained=True)
    return StoppingCheck(grad_norm <= resistance_bound, grad_norm, resistance_bound)


def stopping_rule(f: ObjectiveSpec,
                  q: QuasiDistance,
                  gamma: ResistanceProfile,
                  lam: float,
                  anchor: Point,
                  candidate: Point,
                  subgrad_f: Optional[np.ndarray] = None,
                  resistance_bound: Optional[float] = None,
                  rel_step: float = 1e-6) -> bool:
    """True iff ||∂f(candidate)|| <= λ Γ′(q(anchor, candidate)) ||∇_y q||."""
    return evaluate_stopping_rule(f, q, gamma, lam, anchor, candidate, subgrad_f, resistance_bound,
                                  rel_step).fired
