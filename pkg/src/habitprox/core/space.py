from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigError, UnsupportedSpaceError

Point = np.ndarray

SNAP_RTOL = 1e-9


def as_point(coords: Union[float, Iterable[float], np.ndarray]) -> Point:
    """
    Build a read-only action point.

    Args:
        coords: A scalar or a sequence of coordinates

    Returns:
        Point: 1-D float array with all coordinates finite
    """
    point = np.array(coords, dtype=float).reshape(-1)
    if point.size < 1:
        raise ValueError("a point needs at least one coordinate")
    if not np.all(np.isfinite(point)):
        raise ValueError(f"point coordinates must be finite, got {point.tolist()}")
    point.flags.writeable = False
    return point


def point_key(point: Point) -> Tuple[float, ...]:
    return tuple(float(c) for c in point)


class SpaceKind(Enum):
    CONTINUOUS_BOX = "continuous-box"
    FINITE_GRID = "finite-grid"


@dataclass(frozen=True)
class SearchSpace:
    """A box of actions, either continuous or discretized into a lexicographic grid.

    Attributes:
        kind: continuous-box or finite-grid
        lower: Per-coordinate lower bounds
        upper: Per-coordinate upper bounds
        resolution: Points per axis (finite-grid only)
        cap: Maximum enumerable point count
    """

    kind: SpaceKind
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    resolution: Optional[Tuple[int, ...]] = None
    cap: int = 1_000_000
    _points: Optional[np.ndarray] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.lower) != len(self.upper) or len(self.lower) < 1:
            raise ConfigError("lower and upper must have the same non-zero length", field="space")
        for i, (lo, hi) in enumerate(zip(self.lower, self.upper)):
            if not (np.isfinite(lo) and np.isfinite(hi)):
                raise ConfigError(f"bounds of axis {i} must be finite", field="space")
            if self.kind is SpaceKind.CONTINUOUS_BOX and not lo < hi:
                raise ConfigError(f"lower < upper violated on axis {i}", field="space")
            if self.kind is SpaceKind.FINITE_GRID and lo > hi:
                raise ConfigError(f"lower <= upper violated on axis {i}", field="space")
        if self.kind is SpaceKind.FINITE_GRID:
            if self.resolution is None or len(self.resolution) != len(self.lower):
                raise ConfigError("finite grids need one resolution per axis", field="space.resolution")
            for i, (r, lo, hi) in enumerate(zip(self.resolution, self.lower, self.upper)):
                if r < 1:
                    raise ConfigError(f"resolution of axis {i} must be >= 1", field="space.resolution")
                if r > 1 and not lo < hi:
                    raise ConfigError(f"lower < upper violated on axis {i}", field="space")
            if self.size > self.cap:
                raise ConfigError(
                    f"grid has {self.size} points, above the cap of {self.cap}",
                    field="space.resolution",
                )

    @classmethod
    def box(cls, lower: Sequence[float], upper: Sequence[float]) -> "SearchSpace":
        return cls(SpaceKind.CONTINUOUS_BOX, tuple(map(float, lower)), tuple(map(float, upper)))

    @classmethod
    def grid(cls,
             lower: Sequence[float],
             upper: Sequence[float],
             resolution: Union[int, Sequence[int]],
             cap: int = 1_000_000) -> "SearchSpace":
        lower = tuple(map(float, np.atleast_1d(lower)))
        upper = tuple(map(float, np.atleast_1d(upper)))
        if isinstance(resolution, (int, np.integer)):
            resolution = (int(resolution),) * len(lower)
        return cls(SpaceKind.FINITE_GRID, lower, upper, tuple(int(r) for r in resolution), cap)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def is_grid(self) -> bool:
        return self.kind is SpaceKind.FINITE_GRID

    @property
    def size(self) -> int:
        if not self.is_grid:
            raise UnsupportedSpaceError("a continuous box has no finite size")
        return int(np.prod(self.resolution))

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(np.subtract(self.upper, self.lower)))

    def axes(self) -> List[np.ndarray]:
        if not self.is_grid:
            raise UnsupportedSpaceError("only finite grids have axes")
        return [np.linspace(lo, hi, r) for lo, hi, r in zip(self.lower, self.upper, self.resolution)]

    def points(self) -> np.ndarray:
        """
        Enumerate the grid in lexicographic index order.

        Returns:
            np.ndarray: Array of shape (size, dim), read-only
        """
        if not self.is_grid:
            raise UnsupportedSpaceError(
                "continuous boxes cannot be enumerated; use the sampling variant instead"
            )
        if self._points is None:
            mesh = np.meshgrid(*self.axes(), indexing="ij")
            pts = np.stack([m.reshape(-1) for m in mesh], axis=1)
            pts.flags.writeable = False
            object.__setattr__(self, "_points", pts)
        return self._points

    def index_of(self, point: Point) -> int:
        """Flat grid index of a grid point (within the snapping tolerance)."""
        if not self.is_grid:
            raise UnsupportedSpaceError("only finite grids index their points")
        point = np.asarray(point, dtype=float).reshape(-1)
        if point.size != self.dim:
            raise ValueError(f"point has dimension {point.size}, space has {self.dim}")
        multi = []
        for i, (axis, x) in enumerate(zip(self.axes(), point)):
            j = int(np.argmin(np.abs(axis - x)))
            scale = max(1.0, abs(self.upper[i] - self.lower[i]))
            if abs(axis[j] - x) > SNAP_RTOL * scale:
                raise ValueError(f"{point.tolist()} is not a point of the grid (axis {i})")
            multi.append(j)
        return int(np.ravel_multi_index(tuple(multi), self.resolution))

    def snap(self, point: Point) -> Point:
        if not self.is_grid:
            return as_point(point)
        return as_point(self.points()[self.index_of(point)])

    def nearest(self, point: np.ndarray) -> Point:
        """Closest grid point per axis; the clipped point itself on a continuous box."""
        clipped = self.project(np.asarray(point, dtype=float).reshape(-1))
        if not self.is_grid:
            return as_point(clipped)
        return as_point([axis[int(np.argmin(np.abs(axis - x)))] for axis, x in zip(self.axes(), clipped)])

    def contains(self, point: Point) -> bool:
        point = np.asarray(point, dtype=float).reshape(-1)
        if point.size != self.dim:
            return False
        if self.is_grid:
            try:
                self.index_of(point)
            except ValueError:
                return False
            return True
        return bool(np.all(point >= self.lower) and np.all(point <= self.upper))

    def project(self, point: np.ndarray) -> np.ndarray:
        return np.clip(point, self.lower, self.upper)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw n uniform points from the box, or n grid points with replacement."""
        if self.is_grid:
            return self.points()[rng.integers(0, self.size, size=n)]
        return rng.uniform(self.lower, self.upper, size=(n, self.dim))

    def to_dict(self) -> dict:
        data = {"kind": self.kind.value, "lower": list(self.lower), "upper": list(self.upper)}
        if self.is_grid:
            data["resolution"] = list(self.resolution)
        return data
