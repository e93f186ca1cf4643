import math
from dataclasses import dataclass, replace

import numpy as np

from ..core.errors import UnsupportedSpaceError
from ..core.objective import ObjectiveSpec, grid_values
from ..core.quasi_distance import QuasiDistance
from ..core.resistance import ResistanceProfile
from ..core.space import Point, SearchSpace


@dataclass(frozen=True)
class WorthwhileSpec:
    """Everything that defines the worthwhile-to-change set W_λ(x).

    Attributes:
        f: Unsatisfied need
        q: Cost to change
        gamma: Relative resistance to change
        lam: Proximal ratio λ > 0
    """

    f: ObjectiveSpec
    q: QuasiDistance
    gamma: ResistanceProfile
    lam: float

    def __post_init__(self):
        if not self.lam > 0 or not math.isfinite(self.lam):
            raise ValueError(f"lambda must be a positive real, got {self.lam}")

    def with_lambda(self, lam: float) -> "WorthwhileSpec":
        return replace(self, lam=float(lam))

    @classmethod
    def from_experience(cls,
                        f: ObjectiveSpec,
                        q: QuasiDistance,
                        gamma: ResistanceProfile,
                        eta: float,
                        weight: float) -> "WorthwhileSpec":
        """Experience-weighted variant: ratio η with need v f is the plain set at λ = η / v."""
        if not weight > 0:
            raise ValueError(f"experience weight must be positive, got {weight}")
        return cls(f, q, gamma, eta / weight)


def is_worthwhile(spec: WorthwhileSpec, anchor: Point, y: Point) -> bool:
    """
    Check whether moving from anchor to y is a worthwhile change.

    Args:
        spec (WorthwhileSpec): Need, cost, resistance and ratio
        anchor (Point): Current action x
        y (Point): Candidate action

    Returns:
        bool: f(x) - f(y) >= λ Γ(q(x, y)), compared exactly. A stay is always
            worthwhile; an infinite f(y) never is; from an infinite f(x) every
            finite-valued y is.
    """
    if np.array_equal(anchor, y):
        return True
    fy = spec.f.evaluate(y)
    if fy == math.inf:
        return False
    fx = spec.f.evaluate(anchor)
    if fx == math.inf:
        return True
    return fx - fy >= spec.lam * spec.gamma(spec.q(anchor, y))


def worthwhile_mask(spec: WorthwhileSpec, anchor: Point, space: SearchSpace) -> np.ndarray:
    """
    Membership of every grid point in W_λ(anchor), in lexicographic grid order.

    The anchor must be a grid point; it is always a member.
    """
    if not space.is_grid:
        raise UnsupportedSpaceError(
            "W_lambda can only be enumerated on a finite grid; use detect_trap's sampling mode "
            "for continuous boxes"
        )
    anchor_index = space.index_of(anchor)
    points = space.points()
    anchor = points[anchor_index]
    f_values = grid_values(spec.f, space)
    fx = f_values[anchor_index]
    if fx == math.inf:
        mask = np.isfinite(f_values)
    else:
        thresholds = spec.lam * spec.gamma.many(spec.q.from_anchor(anchor, points))
        with np.errstate(invalid="ignore"):
            mask = (fx - f_values >= thresholds) & np.isfinite(f_values)
    mask[anchor_index] = True
    return mask


def enumerate_worthwhile(spec: WorthwhileSpec, anchor: Point, space: SearchSpace) -> np.ndarray:
    """
    Enumerate W_λ(anchor) over a finite grid.

    Args:
        spec (WorthwhileSpec): Need, cost, resistance and ratio
        anchor (Point): Current action, a grid point
        space (SearchSpace): Finite grid

    Returns:
        np.ndarray: The member points, shape (m, dim), in lexicographic grid order

    Raises:
        UnsupportedSpaceError: On a continuous box
    """
    return space.points()[worthwhile_mask(spec, anchor, space)]


class WorthwhileChecker:
    """Membership queries against one spec and one space."""

    def __init__(self, spec: WorthwhileSpec, space: SearchSpace):
        """
        Args:
            spec (WorthwhileSpec): Need, cost, resistance and ratio
            space (SearchSpace): Where destinations live
        """
        self.spec = spec
        self.space = space

    def is_worthwhile(self, anchor: Point, y: Point) -> bool:
        return is_worthwhile(self.spec, anchor, y)

    def get_worthwhile_set(self, anchor: Point) -> np.ndarray:
        return enumerate_worthwhile(self.spec, anchor, self.space)

    def get_worthwhile_indices(self, anchor: Point) -> np.ndarray:
        return np.flatnonzero(worthwhile_mask(self.spec, anchor, self.space))

    def get_changeable_count(self, anchor: Point) -> int:
        """Number of worthwhile destinations other than staying."""
        return int(worthwhile_mask(self.spec, anchor, self.space).sum()) - 1

    def trap_threshold(self, anchor: Point) -> float:
        """
        Smallest λ above which anchor is a variational trap on the grid.

        Returns:
            float: max over y != x with f(x) - f(y) >= 0 of (f(x) - f(y)) / Γ(q(x, y));
                0.0 when no other point is at least as good, +inf when some
                point at least as good costs nothing to reach
        """
        points = self.space.points()
        anchor_index = self.space.index_of(anchor)
        f_values = grid_values(self.spec.f, self.space)
        gaps = f_values[anchor_index] - f_values
        resist = self.spec.gamma.many(self.spec.q.from_anchor(points[anchor_index], points))
        others = np.arange(len(points)) != anchor_index
        with np.errstate(invalid="ignore"):
            candidates = others & (gaps >= 0) & np.isfinite(f_values)
        if not candidates.any():
            return 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(resist[candidates] > 0, gaps[candidates] / resist[candidates], math.inf)
        return float(np.max(ratios))
