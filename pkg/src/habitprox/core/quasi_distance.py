import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from .space import Point, SearchSpace

logger = logging.getLogger(__name__)

# Largest grid checked by exhaustion over all ordered triples
EXHAUSTIVE_GRID_LIMIT = 400


@dataclass(frozen=True, eq=False)
class QuasiDistance:
    """Asymmetric cost to change q(x, y) from action x to action y.

    Attributes:
        name: Preset name
        fun: The cost function
        grad_y: Optional gradient of y -> q(x, y)
        symmetric: Whether q(x, y) = q(y, x) by construction
        params: Preset parameters, kept for serialization
    """

    name: str
    fun: Callable[[Point, Point], float]
    grad_y: Optional[Callable[[Point, Point], np.ndarray]] = None
    symmetric: bool = False
    params: Dict[str, Any] = field(default_factory=dict)

    def evaluate(self, x: Point, y: Point) -> float:
        return float(self.fun(np.asarray(x, dtype=float), np.asarray(y, dtype=float)))

    __call__ = evaluate

    def from_anchor(self, anchor: Point, points: np.ndarray) -> np.ndarray:
        """Costs q(anchor, y) for every row y of points."""
        return np.fromiter((self.evaluate(anchor, y) for y in points), dtype=float, count=len(points))

    def matrix(self, points: np.ndarray) -> np.ndarray:
        return np.array([self.from_anchor(x, points) for x in points])

    def gradient_y(self, x: Point, y: Point, rel_step: float = 1e-6) -> np.ndarray:
        if self.grad_y is not None:
            return np.asarray(self.grad_y(np.asarray(x, dtype=float), np.asarray(y, dtype=float)), dtype=float)
        from .objective import finite_difference_gradient

        return finite_difference_gradient(lambda z: self.evaluate(x, z), y, rel_step)

    @property
    def is_euclidean(self) -> bool:
        return self.name == "euclidean"

    # Presets

    @classmethod
    def euclidean(cls) -> "QuasiDistance":
        def grad(x, y):
            diff = y - x
            norm = np.linalg.norm(diff)
            return diff / norm if norm > 0 else np.zeros_like(diff)

        return cls("euclidean", lambda x, y: float(np.linalg.norm(y - x)), grad_y=grad, symmetric=True)

    @classmethod
    def weighted_asymmetric(cls, up: float = 2.0, down: float = 1.0) -> "QuasiDistance":
        """q(x, y) = sum_i up * max(y_i - x_i, 0) + down * max(x_i - y_i, 0)."""
        if up <= 0 or down <= 0:
            raise ValueError("asymmetric weights must be positive")

        def fun(x, y):
            diff = y - x
            return float(np.sum(up * np.maximum(diff, 0.0) + down * np.maximum(-diff, 0.0)))

        def grad(x, y):
            diff = y - x
            return np.where(diff > 0, up, np.where(diff < 0, -down, 0.0))

        return cls("weighted-asymmetric", fun, grad_y=grad, symmetric=up == down,
                   params={"up": float(up), "down": float(down)})

    @classmethod
    def clamped(cls, offset: float = 0.1) -> "QuasiDistance":
        """max(||x - y|| - offset, 0): a deliberately broken cost that violates separation."""

        def fun(x, y):
            return max(float(np.linalg.norm(y - x)) - offset, 0.0)

        return cls("clamped-euclidean", fun, symmetric=True, params={"offset": float(offset)})


def quasi_distance_from_preset(preset: str, params: Optional[Dict[str, Any]] = None) -> QuasiDistance:
    params = dict(params or {})
    if preset == "euclidean":
        return QuasiDistance.euclidean()
    if preset == "weighted-asymmetric":
        return QuasiDistance.weighted_asymmetric(params.get("up", 2.0), params.get("down", 1.0))
    if preset == "clamped-euclidean":
        return QuasiDistance.clamped(params.get("offset", 0.1))
    raise ValueError(f"unknown quasi-distance preset {preset!r}")


QUASI_DISTANCE_PRESETS = ("euclidean", "weighted-asymmetric", "clamped-euclidean")


@dataclass(frozen=True)
class AxiomResult:
    name: str
    passed: bool
    witness: Optional[Tuple[Tuple[float, ...], ...]] = None
    detail: str = ""


@dataclass(frozen=True)
class AxiomReport:
    """Per-axiom verdicts of a quasi-distance check.

    Attributes:
        results: One entry per axiom (finite, nonnegative, identity, separation, triangle)
        exhaustive: True when every ordered triple of a finite grid was checked
        checked_triples: Number of triples examined
    """

    results: Tuple[AxiomResult, ...]
    exhaustive: bool
    checked_triples: int

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def __getitem__(self, name: str) -> AxiomResult:
        for result in self.results:
            if result.name == name:
                return result
        raise KeyError(name)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "exhaustive": self.exhaustive,
            "checked_triples": self.checked_triples,
            "axioms": {
                r.name: {
                    "passed": r.passed,
                    "witness": [list(p) for p in r.witness] if r.witness else None,
                    "detail": r.detail,
                }
                for r in self.results
            },
        }


def _as_key(*points: np.ndarray) -> Tuple[Tuple[float, ...], ...]:
    return tuple(tuple(float(c) for c in p) for p in points)


def _check_matrix(points: np.ndarray, q_matrix: np.ndarray, sep_tol: float, rtol: float) -> List[AxiomResult]:
    n = len(points)
    results = []

    bad = np.argwhere(~np.isfinite(q_matrix))
    if len(bad):
        i, j = bad[0]
        results.append(AxiomResult("finite", False, _as_key(points[i], points[j]),
                                   f"q = {q_matrix[i, j]}"))
    else:
        results.append(AxiomResult("finite", True))
    finite = np.where(np.isfinite(q_matrix), q_matrix, np.nan)

    bad = np.argwhere(finite < 0)
    if len(bad):
        i, j = bad[0]
        results.append(AxiomResult("nonnegative", False, _as_key(points[i], points[j]),
                                   f"q = {finite[i, j]}"))
    else:
        results.append(AxiomResult("nonnegative", True))

    diag = np.abs(np.diag(finite))
    bad = np.flatnonzero(diag > sep_tol)
    if len(bad):
        i = bad[0]
        results.append(AxiomResult("identity", False, _as_key(points[i], points[i]),
                                   f"q(x, x) = {finite[i, i]}"))
    else:
        results.append(AxiomResult("identity", True))

    off = finite <= sep_tol
    np.fill_diagonal(off, False)
    bad = np.argwhere(off)
    if len(bad):
        i, j = bad[0]
        results.append(AxiomResult("separation", False, _as_key(points[i], points[j]),
                                   f"q(x, y) = {finite[i, j]} with y != x"))
    else:
        results.append(AxiomResult("separation", True))

    witness = None
    for i in range(n):
        through = finite[i, :, None] + finite  # [j, k] = q(x_i, x_j) + q(x_j, x_k)
        direct = finite[i, None, :]
        violated = direct > through + rtol * np.maximum(1.0, np.abs(through))
        hits = np.argwhere(violated)
        if len(hits):
            j, k = hits[0]
            witness = (_as_key(points[i], points[j], points[k]),
                       f"q(x, z) = {finite[i, k]} > {finite[i, j]} + {finite[j, k]}")
            break
    if witness:
        results.append(AxiomResult("triangle", False, witness[0], witness[1]))
    else:
        results.append(AxiomResult("triangle", True))
    return results


def _check_sampled(q: QuasiDistance, triples: np.ndarray, sep_tol: float, rtol: float) -> List[AxiomResult]:
    verdicts: Dict[str, Optional[AxiomResult]] = {
        "finite": None, "nonnegative": None, "identity": None, "separation": None, "triangle": None,
    }

    def fail(name, witness, detail):
        if verdicts[name] is None:
            verdicts[name] = AxiomResult(name, False, witness, detail)

    for x, y, z in triples:
        qxx = q(x, x)
        qxy, qyz, qxz = q(x, y), q(y, z), q(x, z)
        values = {"q(x, x)": qxx, "q(x, y)": qxy, "q(y, z)": qyz, "q(x, z)": qxz}
        if not all(math.isfinite(v) for v in values.values()):
            label = next(k for k, v in values.items() if not math.isfinite(v))
            fail("finite", _as_key(x, y, z), f"{label} is not finite")
            continue
        if min(values.values()) < 0:
            fail("nonnegative", _as_key(x, y, z), "negative cost")
        if abs(qxx) > sep_tol:
            fail("identity", _as_key(x, x), f"q(x, x) = {qxx}")
        if qxy <= sep_tol and not np.array_equal(x, y):
            fail("separation", _as_key(x, y), f"q(x, y) = {qxy} with y != x")
        through = qxy + qyz
        if qxz > through + rtol * max(1.0, abs(through)):
            fail("triangle", _as_key(x, y, z), f"q(x, z) = {qxz} > {qxy} + {qyz}")
    return [verdicts[name] or AxiomResult(name, True) for name in verdicts]


def check_quasi_distance_axioms(q: QuasiDistance,
                                space: SearchSpace,
                                samples: int = 1000,
                                seed: int = 0,
                                separation_tol: float = 1e-12,
                                triangle_rtol: float = 1e-12) -> AxiomReport:
    """
    Check the quasi-distance axioms of q over a space.

    Finite grids up to EXHAUSTIVE_GRID_LIMIT points are checked over every ordered
    pair and triple; larger grids and continuous boxes are checked on ``samples``
    seeded random triples.

    Args:
        q (QuasiDistance): The cost to check
        space (SearchSpace): Where to check it
        samples (int): Number of sampled triples (sampling mode)
        seed (int): Seed of the sampling stream
        separation_tol (float): Values at or under it count as zero
        triangle_rtol (float): Relative slack on the triangle inequality

    Returns:
        AxiomReport: Verdict per axiom with the first witness found
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if space.is_grid and space.size <= EXHAUSTIVE_GRID_LIMIT:
        points = space.points()
        with np.errstate(invalid="ignore"):
            q_matrix = q.matrix(points)
        results = _check_matrix(points, q_matrix, separation_tol, triangle_rtol)
        report = AxiomReport(tuple(results), exhaustive=True, checked_triples=len(points) ** 3)
    else:
        rng = np.random.default_rng(seed)
        triples = space.sample(3 * samples, rng).reshape(samples, 3, space.dim)
        results = _check_sampled(q, triples, separation_tol, triangle_rtol)
        report = AxiomReport(tuple(results), exhaustive=False, checked_triples=samples)
    if not report.passed:
        failed = [r.name for r in report.results if not r.passed]
        logger.info("quasi-distance %s fails %s", q.name, ", ".join(failed))
    return report


@dataclass(frozen=True)
class ComparabilityReport:
    passed: bool
    lower_ratio: float
    upper_ratio: float
    witness: Optional[Tuple[Tuple[float, ...], ...]] = None


def check_norm_comparability(q: QuasiDistance,
                             space: SearchSpace,
                             c_low: float,
                             c_high: float,
                             samples: int = 1000,
                             seed: int = 0) -> ComparabilityReport:
    """
    Check c_low * ||x - y|| <= q(x, y) <= c_high * ||x - y|| on sampled pairs.

    Costs to change must be high exactly when actions differ a lot, and low when they
    are similar; the constants are supplied by the caller.

    Returns:
        ComparabilityReport: Extreme observed ratios q / ||x - y|| and the first violating pair
    """
    if not 0 < c_low <= c_high:
        raise ValueError("need 0 < c_low <= c_high")
    rng = np.random.default_rng(seed)
    pairs = space.sample(2 * samples, rng).reshape(samples, 2, space.dim)
    low, high = math.inf, 0.0
    witness = None
    for x, y in pairs:
        norm = float(np.linalg.norm(y - x))
        if norm == 0.0:
            continue
        ratio = q(x, y) / norm
        low, high = min(low, ratio), max(high, ratio)
        if witness is None and not c_low <= ratio <= c_high:
            witness = _as_key(x, y)
    return ComparabilityReport(witness is None, low, high, witness)
