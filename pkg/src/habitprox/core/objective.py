import math
import threading
import weakref
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Sequence

import numpy as np

from .space import Point, SearchSpace


INF = math.inf

GradientFn = Callable[[Point], np.ndarray]
ProxFn = Callable[[Point, float], np.ndarray]


def finite_difference_gradient(fun: Callable[[Point], float],
                               x: Point,
                               rel_step: float = 1e-6) -> np.ndarray:
    """
    Central-difference gradient with step h = rel_step * (1 + ||x||).

    Args:
        fun (Callable): Scalar function of a point
        x (Point): Evaluation point
        rel_step (float): Relative step factor

    Returns:
        np.ndarray: Gradient estimate; entries are non-finite when the
            function is infinite or undefined around x
    """
    x = np.asarray(x, dtype=float)
    h = rel_step * (1.0 + float(np.linalg.norm(x)))
    grad = np.empty_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = h
        with np.errstate(invalid="ignore", over="ignore"):
            grad[i] = (fun(x + step) - fun(x - step)) / (2.0 * h)
    return grad


@dataclass(frozen=True, eq=False)
class ObjectiveSpec:
    """An unsatisfied-need function f: X -> R ∪ {+inf}.

    Attributes:
        name: Preset name or free-form label
        fun: The raw function
        subgradient: Optional analytic (sub)gradient
        convex: Whether f is convex
        lower_bound: Known lower bound (the exact minimum for the shipped presets)
        kl_exponent: Known KL exponent theta
        prox: Optional closed form of argmin f(y) + lam * ||y - x||^2
        params: Preset parameters, kept for serialization
    """

    name: str
    fun: Callable[[Point], float]
    subgradient: Optional[GradientFn] = None
    convex: bool = False
    lower_bound: Optional[float] = None
    kl_exponent: Optional[float] = None
    prox: Optional[ProxFn] = None
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kl_exponent is not None and not 0.0 <= self.kl_exponent < 1.0:
            raise ValueError(f"kl exponent must lie in [0, 1), got {self.kl_exponent}")

    def evaluate(self, x: Point) -> float:
        value = float(self.fun(np.asarray(x, dtype=float)))
        if math.isnan(value):
            raise ValueError(f"objective {self.name!r} returned NaN at {np.asarray(x).tolist()}")
        if value == -INF:
            raise ValueError(f"objective {self.name!r} is not proper: -inf at {np.asarray(x).tolist()}")
        return value

    __call__ = evaluate

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        return np.fromiter((self.evaluate(p) for p in points), dtype=float, count=len(points))

    def gradient(self, x: Point, rel_step: float = 1e-6) -> np.ndarray:
        """Analytic subgradient when available, central differences otherwise."""
        if self.subgradient is not None:
            return np.asarray(self.subgradient(np.asarray(x, dtype=float)), dtype=float).reshape(-1)
        return finite_difference_gradient(self.evaluate, x, rel_step)

    @property
    def has_subgradient(self) -> bool:
        return self.subgradient is not None

    def check_lower_bound(self, space: SearchSpace, samples: int = 256, seed: int = 0) -> bool:
        """Sample the space and confirm f never goes under the declared lower bound."""
        if self.lower_bound is None:
            return True
        rng = np.random.default_rng(seed)
        pts = space.points() if space.is_grid and space.size <= samples else space.sample(samples, rng)
        return bool(np.all(self.evaluate_many(pts) >= self.lower_bound))

    # Presets

    @classmethod
    def quadratic(cls, center: Sequence[float] = (0.0,)) -> "ObjectiveSpec":
        a = np.asarray(center, dtype=float)
        return cls(
            name="quadratic",
            fun=lambda x: float(np.sum((x - a) ** 2)),
            subgradient=lambda x: 2.0 * (x - a),
            convex=True,
            lower_bound=0.0,
            kl_exponent=0.5,
            prox=lambda x, lam: (a + lam * np.asarray(x)) / (1.0 + lam),
            params={"center": a.tolist()},
        )

    @classmethod
    def absolute(cls, center: Sequence[float] = (0.0,)) -> "ObjectiveSpec":
        a = np.asarray(center, dtype=float)

        def prox(x, lam):
            shift = np.asarray(x) - a
            return a + np.sign(shift) * np.maximum(np.abs(shift) - 1.0 / (2.0 * lam), 0.0)

        return cls(
            name="absolute",
            fun=lambda x: float(np.sum(np.abs(x - a))),
            subgradient=lambda x: np.sign(x - a),
            convex=True,
            lower_bound=0.0,
            kl_exponent=0.0,
            prox=prox,
            params={"center": a.tolist()},
        )

    @classmethod
    def linear(cls, slope: Sequence[float] = (1.0,)) -> "ObjectiveSpec":
        c = np.asarray(slope, dtype=float)
        return cls(
            name="linear",
            fun=lambda x: float(np.dot(c, x)),
            subgradient=lambda x: c.copy(),
            convex=True,
            prox=lambda x, lam: np.asarray(x) - c / (2.0 * lam),
            params={"slope": c.tolist()},
        )

    @classmethod
    def rosenbrock(cls) -> "ObjectiveSpec":
        def fun(x):
            return float((1.0 - x[0]) ** 2 + 100.0 * (x[1] - x[0] ** 2) ** 2)

        def grad(x):
            return np.array([
                -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] ** 2),
                200.0 * (x[1] - x[0] ** 2),
            ])

        return cls(name="rosenbrock-2d", fun=fun, subgradient=grad, lower_bound=0.0)

    @classmethod
    def double_well(cls, dim: int = 1) -> "ObjectiveSpec":
        # x^4 - x^2 per coordinate, minima at +-1/sqrt(2)
        return cls(
            name="double-well",
            fun=lambda x: float(np.sum(x ** 4 - x ** 2)),
            subgradient=lambda x: 4.0 * x ** 3 - 2.0 * x,
            lower_bound=-0.25 * dim,
            params={"dim": dim},
        )

    @classmethod
    def expression(cls, text: str) -> "ObjectiveSpec":
        from .expression import parse_expression

        compiled = parse_expression(text)
        return cls(name="expression", fun=compiled, params={"expression": text})

    @classmethod
    def from_table(cls, space: SearchSpace, values: Sequence[float], name: str = "table") -> "ObjectiveSpec":
        """
        Objective given by its values on a finite grid; +inf off the grid.

        Args:
            space (SearchSpace): The finite grid
            values (Sequence[float]): One value per grid point, lexicographic order
            name (str): Label

        Returns:
            ObjectiveSpec: Table lookup objective
        """
        table = np.asarray(values, dtype=float)
        if table.shape != (space.size,):
            raise ValueError(f"table needs {space.size} values, got {table.shape}")
        if np.any(np.isnan(table)):
            raise ValueError("table values must not be NaN")

        def fun(x):
            try:
                return float(table[space.index_of(x)])
            except ValueError:
                return INF

        return cls(name=name, fun=fun, params={"values": table.tolist()})

    @classmethod
    def from_payoff(cls, payoff: "ObjectiveSpec") -> "ObjectiveSpec":
        """Unsatisfied need f = -g of a gain function g, so gains and needs share one code path."""
        grad = None
        if payoff.subgradient is not None:
            grad = lambda x: -np.asarray(payoff.subgradient(x))
        return cls(name=f"need({payoff.name})", fun=lambda x: -payoff.evaluate(x), subgradient=grad,
                   params={"payoff": payoff.name})


def objective_from_preset(preset: str, params: Optional[Dict[str, Any]] = None, dim: int = 1) -> ObjectiveSpec:
    """
    Build one of the shipped objectives by name.

    Args:
        preset (str): quadratic, absolute, linear, rosenbrock-2d, double-well or expression
        params (Optional[Dict[str, Any]]): Preset parameters
        dim (int): Space dimension, used for default centers

    Returns:
        ObjectiveSpec: The objective
    """
    params = dict(params or {})
    if preset == "quadratic":
        return ObjectiveSpec.quadratic(params.get("center", [0.0] * dim))
    if preset == "absolute":
        return ObjectiveSpec.absolute(params.get("center", [0.0] * dim))
    if preset == "linear":
        return ObjectiveSpec.linear(params.get("slope", [1.0] * dim))
    if preset == "rosenbrock-2d":
        if dim != 2:
            raise ValueError("rosenbrock-2d needs a 2-D space")
        return ObjectiveSpec.rosenbrock()
    if preset == "double-well":
        return ObjectiveSpec.double_well(dim)
    if preset == "expression":
        if "expression" not in params:
            raise ValueError("expression objective needs an 'expression' parameter")
        return ObjectiveSpec.expression(params["expression"])
    raise ValueError(f"unknown objective preset {preset!r}")


OBJECTIVE_PRESETS = ("quadratic", "absolute", "linear", "rosenbrock-2d", "double-well", "expression")


_GRID_VALUES: "weakref.WeakKeyDictionary[ObjectiveSpec, Dict[SearchSpace, np.ndarray]]" = weakref.WeakKeyDictionary()
_GRID_LOCK = threading.Lock()


def grid_values(f: ObjectiveSpec, space: SearchSpace) -> np.ndarray:
    """f over every grid point in lexicographic order, computed once per (f, grid)."""
    with _GRID_LOCK:
        per_space = _GRID_VALUES.setdefault(f, {})
        values = per_space.get(space)
    if values is None:
        values = f.evaluate_many(space.points())
        values.flags.writeable = False
        with _GRID_LOCK:
            per_space[space] = values
    return values
