"""Projected gradient descent with backtracking, run from several starts."""
import logging
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

logger = logging.getLogger(__name__)

EPS = np.finfo(float).eps
MIN_STEP = 1e-30

Objective = Callable[[np.ndarray], float]
Gradient = Callable[[np.ndarray], np.ndarray]
Projection = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class InnerResult:
    point: np.ndarray
    value: float
    converged: bool
    iterations: int


def _mapping_norm(x: np.ndarray, g: np.ndarray, project: Projection) -> float:
    # unit-step gradient mapping; equals ||g|| away from the feasible boundary
    return float(np.linalg.norm(x - project(x - g)))


def projected_gradient_descent(fun: Objective,
                               grad: Gradient,
                               x0: np.ndarray,
                               project: Projection,
                               tol: float = 1e-8,
                               max_iter: int = 10_000) -> InnerResult:
    """
    Minimize fun over a convex feasible set given by its projection.

    The step size backtracks on the sufficient-decrease test
    f(x+) <= f(x) + <g, d> + ||d||^2 / (2t). Once the decrease drops under the
    rounding level of f, a step is accepted when it shrinks the gradient mapping.

    Args:
        fun (Objective): Function to minimize
        grad (Gradient): Its gradient (a subgradient is tolerated)
        x0 (np.ndarray): Start; projected before use
        project (Projection): Projection onto the feasible set
        tol (float): Stop when the unit-step gradient mapping is below tol
        max_iter (int): Iteration cap

    Returns:
        InnerResult: Best point, its value, and whether tol was reached
    """
    x = project(np.array(x0, dtype=float))
    fx = fun(x)
    g = grad(x)
    step = 1.0
    for it in range(max_iter):
        if not np.all(np.isfinite(g)) or not np.isfinite(fx):
            return InnerResult(x, fx, False, it)
        gap = _mapping_norm(x, g, project)
        if gap <= tol:
            return InnerResult(x, fx, True, it)
        t = step
        while True:
            x_new = project(x - t * g)
            d = x_new - x
            f_new = fun(x_new)
            noise = 8.0 * EPS * max(1.0, abs(fx))
            if abs(f_new - fx) <= noise:
                g_new = grad(x_new)
                if np.all(np.isfinite(g_new)) and _mapping_norm(x_new, g_new, project) < gap:
                    break
            elif f_new <= fx + float(np.dot(g, d)) + float(np.dot(d, d)) / (2.0 * t):
                g_new = grad(x_new)
                break
            t *= 0.5
            if t < MIN_STEP:
                logger.debug("backtracking stalled at gradient mapping %.3e", gap)
                return InnerResult(x, fx, False, it)
        x, fx, g = x_new, f_new, g_new
        step = min(2.0 * t, 1.0)
    converged = _mapping_norm(x, g, project) <= tol if np.all(np.isfinite(g)) else False
    return InnerResult(x, fx, converged, max_iter)


def multistart_minimize(fun: Objective,
                        grad: Gradient,
                        starts: Iterable[np.ndarray],
                        project: Projection,
                        tol: float = 1e-8,
                        max_iter: int = 10_000) -> InnerResult:
    """Run the descent from every start and keep the lowest value (first wins ties)."""
    best: Optional[InnerResult] = None
    for start in starts:
        result = projected_gradient_descent(fun, grad, start, project, tol, max_iter)
        if best is None or result.value < best.value:
            best = result
    if best is None:
        raise ValueError("multistart_minimize needs at least one start")
    return best
