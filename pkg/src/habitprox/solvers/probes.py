import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.errors import ProbeRefusedError
from ..core.objective import ObjectiveSpec
from ..core.quasi_distance import QuasiDistance
from ..core.resistance import ResistanceProfile
from ..core.settings import DEFAULT_SETTINGS, SolverSettings
from ..core.space import Point, SearchSpace, as_point
from .prox import exact_prox_step

logger = logging.getLogger(__name__)

EXPANSION_TOL = 1e-6
KL_TOL = 1e-12


@dataclass(frozen=True)
class ProbeReport:
    """Outcome of a sampled probe.

    Attributes:
        name: Probe name
        passed: Whether every checked sample satisfied the probed inequality
        checked: Samples checked
        skipped: Samples skipped (degenerate pairs or samples at the minimizer)
        statistic: Probe statistic (max expansion ratio or pass fraction)
        worst_margin: Smallest margin observed, None when nothing was checked
        witness: First violating sample
    """

    name: str
    passed: bool
    checked: int
    skipped: int
    statistic: float
    worst_margin: Optional[float] = None
    witness: Optional[List[List[float]]] = None
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "checked": self.checked,
            "skipped": self.skipped,
            "statistic": self.statistic,
            "worst_margin": self.worst_margin,
            "witness": self.witness,
            **self.details,
        }


def _enclosing_box(points: np.ndarray, lam: float, margin: float = 10.0) -> SearchSpace:
    low, high = points.min(axis=0), points.max(axis=0)
    pad = margin * (1.0 + (high - low) + 1.0 / lam)
    return SearchSpace.box(low - pad, high + pad)


def prox_map_nonexpansiveness_probe(f: ObjectiveSpec,
                                    lam: float,
                                    pairs: Sequence[Tuple[Point, Point]],
                                    q: Optional[QuasiDistance] = None,
                                    gamma: Optional[ResistanceProfile] = None,
                                    settings: SolverSettings = DEFAULT_SETTINGS) -> ProbeReport:
    """
    Largest ratio ||φ_λ(x') - φ_λ(x)|| / ||x' - x|| of the prox map over the given pairs.

    The prox map of a convex f under quadratic resistance and a symmetric norm cost is
    non-expansive; a ratio above 1 + 1e-6 is reported as a violation.

    Args:
        f (ObjectiveSpec): Convex unsatisfied need
        lam (float): Proximal ratio λ > 0
        pairs (Sequence[Tuple[Point, Point]]): Pairs (x, x')
        q (Optional[QuasiDistance]): Cost to change, Euclidean when omitted
        gamma (Optional[ResistanceProfile]): Resistance, quadratic when omitted

    Returns:
        ProbeReport: Max ratio in ``statistic``; pairs with x == x' are skipped

    Raises:
        ProbeRefusedError: f is not flagged convex, Γ is not quadratic or q is not symmetric
    """
    if not f.convex:
        raise ProbeRefusedError(f"objective {f.name!r} is not flagged convex; non-expansiveness is not claimed")
    q = q or QuasiDistance.euclidean()
    gamma = gamma or ResistanceProfile.quadratic()
    if not gamma.is_quadratic:
        raise ProbeRefusedError(f"resistance {gamma.kind!r} is not quadratic")
    if not q.symmetric:
        raise ProbeRefusedError(f"cost {q.name!r} is not a symmetric norm")

    pairs = [(as_point(x), as_point(y)) for x, y in pairs]
    if not pairs:
        return ProbeReport("nonexpansiveness", True, 0, 0, 0.0)
    space = _enclosing_box(np.array([p for pair in pairs for p in pair]), lam)
    worst, witness, checked, skipped = 0.0, None, 0, 0
    for x, y in pairs:
        spread = float(np.linalg.norm(y - x))
        if spread == 0.0:
            skipped += 1
            continue
        ratio = float(np.linalg.norm(
            exact_prox_step(f, q, gamma, lam, y, space, settings) - exact_prox_step(f, q, gamma, lam, x, space, settings)
        )) / spread
        checked += 1
        if ratio > worst:
            worst = ratio
        if witness is None and ratio > 1.0 + EXPANSION_TOL:
            witness = [x.tolist(), y.tolist()]
    if witness is not None:
        logger.warning("prox map of %s expands: ratio %.9g", f.name, worst)
    return ProbeReport("nonexpansiveness", witness is None, checked, skipped, worst,
                       worst_margin=1.0 + EXPANSION_TOL - worst if checked else None, witness=witness)


def kl_derivative(s: float, c: float, theta: float) -> float:
    """φ′(s) for φ(s) = c s^(1-θ); θ = 0 gives φ(s) = c s."""
    if theta == 0.0:
        return c
    return c * (1.0 - theta) * s ** (-theta)


def kl_inequality_probe(f: ObjectiveSpec,
                        minimizer: Point,
                        samples: Sequence[Point],
                        c: float,
                        theta: Optional[float] = None,
                        rel_step: float = 1e-6) -> ProbeReport:
    """
    Check φ′(f(x) - f*) ||∂f(x)|| >= 1 at each sample, with φ(s) = c s^(1-θ).

    Args:
        f (ObjectiveSpec): Unsatisfied need
        minimizer (Point): Critical point x* with f* = f(x*)
        samples (Sequence[Point]): Points x with f(x) > f*
        c (float): Desingularizing constant c > 0
        theta (Optional[float]): KL exponent, defaults to f.kl_exponent

    Returns:
        ProbeReport: Pass fraction in ``statistic`` and the worst margin; empty samples pass vacuously
    """
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")
    theta = f.kl_exponent if theta is None else theta
    if theta is None:
        raise ProbeRefusedError(f"objective {f.name!r} has no KL exponent")
    if not 0.0 <= theta < 1.0:
        raise ValueError(f"kl exponent must lie in [0, 1), got {theta}")
    f_star = f(minimizer)
    passes, checked, skipped = 0, 0, 0
    worst, witness = math.inf, None
    for x in samples:
        x = as_point(x)
        gap = f(x) - f_star
        if not gap > 0:
            skipped += 1
            continue
        margin = kl_derivative(gap, c, theta) * float(np.linalg.norm(f.gradient(x, rel_step))) - 1.0
        checked += 1
        if margin >= -KL_TOL:
            passes += 1
        elif witness is None:
            witness = [x.tolist()]
        worst = min(worst, margin)
    if checked == 0:
        return ProbeReport("kl-inequality", True, 0, skipped, 1.0, details={"theta": theta, "c": c})
    return ProbeReport("kl-inequality", passes == checked, checked, skipped, passes / checked,
                       worst_margin=worst, witness=witness, details={"theta": theta, "c": c})
