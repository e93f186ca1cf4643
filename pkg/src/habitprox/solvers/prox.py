"""The single-step proximal problems: global, exact, worthwhile-constrained, local and min-over-W."""
import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from ..core.errors import EquivalenceViolationError, UnsupportedSpaceError
from ..core.objective import ObjectiveSpec, grid_values
from ..core.payoff import payoffs_over, proximal_payoff
from ..core.quasi_distance import QuasiDistance
from ..core.resistance import ResistanceProfile
from ..core.settings import DEFAULT_SETTINGS, SolverSettings
from ..core.space import Point, SearchSpace, as_point
from ..worthwhile.trap_detector import sobol_points
from ..worthwhile.worthwhile_checker import WorthwhileSpec, worthwhile_mask
from .inner import multistart_minimize

logger = logging.getLogger(__name__)

# Slack on the ball constraint of the local problem
BALL_ATOL = 1e-12

CLOSED_FORM = "closed-form"
GRID = "grid"
DESCENT = "descent"


@dataclass(frozen=True)
class ProxOutcome:
    """Result of one proximal subproblem.

    Attributes:
        point: The minimizer found
        payoff: Its proximal payoff
        converged: False when the inner descent hit its budget first
        method: closed-form, grid or descent
    """

    point: Point
    payoff: float
    converged: bool
    method: str


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not lam > 0 or not math.isfinite(lam):
        raise ValueError(f"lambda must be a positive real, got {lam}")
    return lam


def _grid_payoffs(f, q, gamma, lam, anchor, space) -> Tuple[np.ndarray, int]:
    anchor_index = space.index_of(anchor)
    points = space.points()
    costs = q.from_anchor(points[anchor_index], points)
    return payoffs_over(grid_values(f, space), costs, gamma, lam), anchor_index


def _first_min(values: np.ndarray, mask: Optional[np.ndarray] = None) -> int:
    if mask is not None:
        values = np.where(mask, values, math.inf)
    # argmin returns the first minimal index, i.e. the lexicographic tie-break
    return int(np.argmin(values))


def payoff_gradient(f: ObjectiveSpec,
                    q: QuasiDistance,
                    gamma: ResistanceProfile,
                    lam: float,
                    anchor: Point,
                    rel_step: float = 1e-6) -> Callable[[np.ndarray], np.ndarray]:
    """Gradient of y -> f(y) + λ Γ(q(anchor, y)); the resistance term is taken as 0 at the anchor."""

    def grad(y: np.ndarray) -> np.ndarray:
        g = f.gradient(y, rel_step)
        cost = q(anchor, y)
        if cost > 0 and math.isfinite(cost):
            g = g + lam * gamma.marginal(cost, rel_step) * q.gradient_y(anchor, y, rel_step)
        return g

    return grad


def _descent(f, q, gamma, lam, anchor, space, settings, project) -> ProxOutcome:
    starts: List[np.ndarray] = [np.array(anchor, dtype=float)]
    if settings.n_starts > 1:
        extra = sobol_points(space, settings.n_starts - 1, settings.seed)[: settings.n_starts - 1]
        starts.extend(project(s) for s in extra)
    result = multistart_minimize(
        lambda y: proximal_payoff(f, q, gamma, lam, anchor, y),
        payoff_gradient(f, q, gamma, lam, anchor, settings.fd_step),
        starts,
        project,
        tol=settings.grad_tol,
        max_iter=settings.max_inner_iter,
    )
    anchor_payoff = f(anchor)
    if result.value > anchor_payoff:
        # every start lost to staying put
        return ProxOutcome(as_point(anchor), anchor_payoff, result.converged, DESCENT)
    if not result.converged:
        logger.warning("inner descent for the prox step at %s stopped before reaching tolerance %.1e",
                       np.asarray(anchor).tolist(), settings.grad_tol)
    return ProxOutcome(as_point(result.point), result.value, result.converged, DESCENT)


def _closed_form(f, q, gamma, lam, anchor, feasible) -> Optional[Point]:
    if f.prox is None or not q.is_euclidean or not gamma.is_quadratic:
        return None
    candidate = np.asarray(f.prox(np.asarray(anchor, dtype=float), lam), dtype=float)
    if candidate.shape != np.shape(anchor) or not np.all(np.isfinite(candidate)) or not feasible(candidate):
        return None
    return as_point(candidate)


def solve_global(f: ObjectiveSpec, space: SearchSpace) -> Tuple[Point, float]:
    """
    Brute-force global minimum of f over a finite grid.

    Args:
        f (ObjectiveSpec): Unsatisfied need
        space (SearchSpace): Finite grid

    Returns:
        Tuple[Point, float]: First minimizer in lexicographic grid order and its value
    """
    if not space.is_grid:
        raise UnsupportedSpaceError("solve_global is a grid oracle; it needs a finite grid")
    values = grid_values(f, space)
    if values.size == 0:
        raise ValueError("cannot minimize over an empty grid")
    index = _first_min(values)
    return as_point(space.points()[index]), float(values[index])


def solve_prox(f: ObjectiveSpec,
               q: QuasiDistance,
               gamma: ResistanceProfile,
               lam: float,
               anchor: Point,
               space: SearchSpace,
               settings: SolverSettings = DEFAULT_SETTINGS) -> ProxOutcome:
    """
    Minimize the proximal payoff f(y) + λ Γ(q(anchor, y)) over the space.

    Finite grids are solved by enumeration. On continuous boxes the closed-form prox of
    the objective is used when q is Euclidean, Γ quadratic and the closed-form point
    lies in the box; otherwise a multi-start projected gradient descent runs.

    Returns:
        ProxOutcome: The minimizer with its payoff, convergence flag and method
    """
    lam = _check_lambda(lam)
    if space.is_grid:
        payoffs, _ = _grid_payoffs(f, q, gamma, lam, space.snap(anchor), space)
        index = _first_min(payoffs)
        return ProxOutcome(as_point(space.points()[index]), float(payoffs[index]), True, GRID)

    anchor = as_point(anchor)
    if not space.contains(anchor):
        raise ValueError(f"anchor {anchor.tolist()} lies outside the box")
    closed = _closed_form(f, q, gamma, lam, anchor, space.contains)
    if closed is not None:
        return ProxOutcome(closed, proximal_payoff(f, q, gamma, lam, anchor, closed), True, CLOSED_FORM)
    return _descent(f, q, gamma, lam, anchor, space, settings, space.project)


def exact_prox_step(f: ObjectiveSpec,
                    q: QuasiDistance,
                    gamma: ResistanceProfile,
                    lam: float,
                    anchor: Point,
                    space: SearchSpace,
                    settings: SolverSettings = DEFAULT_SETTINGS) -> Point:
    """
    Exact proximal step: argmin over the space of f(y) + λ Γ(q(anchor, y)).

    Args:
        f (ObjectiveSpec): Unsatisfied need
        q (QuasiDistance): Cost to change
        gamma (ResistanceProfile): Relative resistance to change
        lam (float): Proximal ratio λ > 0
        anchor (Point): Current action
        space (SearchSpace): Feasible actions
        settings (SolverSettings): Inner-solver budgets

    Returns:
        Point: The minimizer; the best point found when the inner descent did not converge.
            A non-converged descent is only logged here; call solve_prox for the
            ``converged`` flag and the method used.
    """
    return solve_prox(f, q, gamma, lam, anchor, space, settings).point


def prox_argmin_indices(f: ObjectiveSpec,
                        q: QuasiDistance,
                        gamma: ResistanceProfile,
                        lam: float,
                        anchor: Point,
                        space: SearchSpace,
                        within_worthwhile: bool = False) -> np.ndarray:
    """
    Every grid index attaining the minimal proximal payoff, ascending.

    Args:
        within_worthwhile (bool): Restrict the minimization to W_λ(anchor)

    Returns:
        np.ndarray: Flat grid indices of the argmin set
    """
    if not space.is_grid:
        raise UnsupportedSpaceError("argmin sets are only enumerable on a finite grid")
    lam = _check_lambda(lam)
    anchor = space.snap(anchor)
    payoffs, _ = _grid_payoffs(f, q, gamma, lam, anchor, space)
    if within_worthwhile:
        mask = worthwhile_mask(WorthwhileSpec(f, q, gamma, lam), anchor, space)
        payoffs = np.where(mask, payoffs, math.inf)
    return np.flatnonzero(payoffs == payoffs.min())


def exact_prox_step_constrained(f: ObjectiveSpec,
                                q: QuasiDistance,
                                gamma: ResistanceProfile,
                                lam: float,
                                anchor: Point,
                                space: SearchSpace,
                                settings: SolverSettings = DEFAULT_SETTINGS) -> Point:
    """
    Proximal step restricted to the worthwhile-to-change set W_λ(anchor).

    Its argmin set equals the unconstrained one; with ``settings.debug_checks`` the two
    are compared and a mismatch raises EquivalenceViolationError.

    Returns:
        Point: First minimizer in lexicographic grid order
    """
    if not space.is_grid:
        raise UnsupportedSpaceError("W_lambda is only enumerable on a finite grid")
    lam = _check_lambda(lam)
    anchor = space.snap(anchor)
    constrained = prox_argmin_indices(f, q, gamma, lam, anchor, space, within_worthwhile=True)
    if settings.debug_checks:
        free = prox_argmin_indices(f, q, gamma, lam, anchor, space)
        if not np.array_equal(free, constrained):
            raise EquivalenceViolationError(
                f"argmin over W_lambda {constrained.tolist()} differs from the unconstrained "
                f"argmin {free.tolist()} at anchor {anchor.tolist()}, lambda={lam}"
            )
    return as_point(space.points()[constrained[0]])


def min_over_worthwhile(f: ObjectiveSpec,
                        q: QuasiDistance,
                        gamma: ResistanceProfile,
                        lam: float,
                        anchor: Point,
                        space: SearchSpace,
                        settings: SolverSettings = DEFAULT_SETTINGS) -> Point:
    """
    Minimize f alone over W_λ(anchor).

    With ``settings.debug_checks`` the result is checked against
    inf f <= f(result) <= f(exact prox step).

    Returns:
        Point: First minimizer of f in lexicographic grid order among the worthwhile points
    """
    if not space.is_grid:
        raise UnsupportedSpaceError("W_lambda is only enumerable on a finite grid")
    lam = _check_lambda(lam)
    anchor = space.snap(anchor)
    mask = worthwhile_mask(WorthwhileSpec(f, q, gamma, lam), anchor, space)
    values = grid_values(f, space)
    result = as_point(space.points()[_first_min(values, mask)])
    if settings.debug_checks:
        lowest = float(values.min())
        here = f(result)
        prox_value = f(exact_prox_step(f, q, gamma, lam, anchor, space, settings))
        if not lowest <= here <= prox_value:
            raise EquivalenceViolationError(
                f"sandwich violated at anchor {anchor.tolist()}: {lowest} <= {here} <= {prox_value} fails"
            )
    return result


def _ball_projection(space: SearchSpace, anchor: Point, radius: float):
    """
    Euclidean projection onto B_r(anchor) ∩ box, for an anchor inside the box.

    The projection is clip(anchor + t (z - anchor)) for the largest t in [0, 1] keeping it
    in the ball; its distance to the anchor grows with t, so t is a root found by brentq.
    """
    anchor = np.asarray(anchor, dtype=float)

    def along(z: np.ndarray, t: float) -> np.ndarray:
        return space.project(anchor + t * (z - anchor))

    def project(z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        clipped = along(z, 1.0)
        if float(np.linalg.norm(clipped - anchor)) <= radius:
            return clipped
        t = brentq(lambda s: float(np.linalg.norm(along(z, s) - anchor)) - radius, 0.0, 1.0,
                   xtol=1e-15, rtol=4 * np.finfo(float).eps)
        y = along(z, t)
        norm = float(np.linalg.norm(y - anchor))
        if norm > radius:
            y = anchor + (y - anchor) * (radius / norm)
        return y

    return project


def solve_local_prox(f: ObjectiveSpec,
                     q: QuasiDistance,
                     gamma: ResistanceProfile,
                     lam: float,
                     anchor: Point,
                     radius: float,
                     space: SearchSpace,
                     settings: SolverSettings = DEFAULT_SETTINGS) -> ProxOutcome:
    """Proximal payoff minimized over the ball B_r(anchor) intersected with the space."""
    lam = _check_lambda(lam)
    radius = float(radius)
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    if space.is_grid:
        anchor = space.snap(anchor)
        payoffs, _ = _grid_payoffs(f, q, gamma, lam, anchor, space)
        dist = np.linalg.norm(space.points() - anchor, axis=1)
        index = _first_min(payoffs, dist <= radius + BALL_ATOL)
        return ProxOutcome(as_point(space.points()[index]), float(payoffs[index]), True, GRID)

    anchor = as_point(anchor)
    if not space.contains(anchor):
        raise ValueError(f"anchor {anchor.tolist()} lies outside the box")

    def in_ball(y):
        return space.contains(y) and float(np.linalg.norm(y - anchor)) <= radius + BALL_ATOL

    closed = _closed_form(f, q, gamma, lam, anchor, in_ball)
    if closed is not None:
        return ProxOutcome(closed, proximal_payoff(f, q, gamma, lam, anchor, closed), True, CLOSED_FORM)
    return _descent(f, q, gamma, lam, anchor, space, settings, _ball_projection(space, anchor, radius))


def local_prox_step(f: ObjectiveSpec,
                    q: QuasiDistance,
                    gamma: ResistanceProfile,
                    lam: float,
                    anchor: Point,
                    radius: float,
                    space: SearchSpace,
                    settings: SolverSettings = DEFAULT_SETTINGS) -> Point:
    """
    Local proximal step over X^k = B_r(anchor) ∩ space.

    Minimizing over the ball is minimizing f + I_{X^k} + λ Γ(q): outside the ball the
    indicator is +inf. When the ball holds no grid point but the anchor, the anchor is returned.

    Args:
        radius (float): Ball radius r > 0

    Returns:
        Point: The minimizer; solve_local_prox also reports whether the descent converged
    """
    return solve_local_prox(f, q, gamma, lam, anchor, radius, space, settings).point
