from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Sequence, Tuple

import numpy as np

from .errors import ConfigError
from .space import Point


@dataclass(frozen=True)
class StepSequence:
    """A step-indexed real sequence: constant, geometric (with floor) or an explicit table.

    Attributes:
        kind: constant, geometric or table
        start: Value at k = 0 (constant value for constant sequences)
        ratio: Geometric ratio
        floor: Lower clamp of a geometric sequence
        values: Explicit values; the last one repeats past the table end
    """

    kind: str = "constant"
    start: float = 1.0
    ratio: float = 1.0
    floor: float = 0.0
    values: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("constant", "geometric", "table"):
            raise ConfigError(f"unknown sequence kind {self.kind!r}")
        if self.kind == "table" and not self.values:
            raise ConfigError("table sequences need at least one value")
        if self.kind == "geometric" and self.ratio <= 0:
            raise ConfigError("geometric ratio must be positive")

    def __call__(self, k: int) -> float:
        if self.kind == "constant":
            return float(self.start)
        if self.kind == "geometric":
            return max(float(self.start) * float(self.ratio) ** k, float(self.floor))
        return float(self.values[min(k, len(self.values) - 1)])

    @classmethod
    def constant(cls, value: float) -> "StepSequence":
        return cls("constant", start=float(value))

    @classmethod
    def geometric(cls, start: float, ratio: float, floor: float = 0.0) -> "StepSequence":
        return cls("geometric", start=float(start), ratio=float(ratio), floor=float(floor))

    @classmethod
    def table(cls, values: Sequence[float]) -> "StepSequence":
        return cls("table", values=tuple(float(v) for v in values))

    @classmethod
    def from_dict(cls, data: Dict[str, Any], field_name: str) -> "StepSequence":
        data = dict(data)
        kind = data.pop("kind", "constant")
        try:
            if kind == "constant":
                return cls.constant(data["value"])
            if kind == "geometric":
                return cls.geometric(data["start"], data["ratio"], data.get("floor", 0.0))
            if kind == "table":
                return cls.table(data["values"])
        except KeyError as exc:
            raise ConfigError(f"missing key {exc.args[0]!r}", field=field_name) from exc
        except ConfigError as exc:
            raise ConfigError(exc.message, field=field_name) from exc
        raise ConfigError(f"unknown sequence kind {kind!r}", field=f"{field_name}.kind")

    def to_dict(self) -> Dict[str, Any]:
        if self.kind == "constant":
            return {"kind": "constant", "value": self.start}
        if self.kind == "geometric":
            return {"kind": "geometric", "start": self.start, "ratio": self.ratio, "floor": self.floor}
        return {"kind": "table", "values": list(self.values)}


def default_epsilon(eps0: float = 0.0) -> StepSequence:
    """Summable error schedule eps0 * 0.5**k."""
    return StepSequence.geometric(eps0, 0.5)


@dataclass(frozen=True)
class ProximalSchedule:
    """Per-step parameters of a proximal run.

    Attributes:
        lam: Proximal ratio λ_k > 0
        mu: Satisficing fraction μ_k in (0, 1]
        epsilon: Additive error ε_k >= 0
        lambda_floor: λ_inf; every λ_k must stay at or above it
        max_steps: Step budget
    """

    lam: StepSequence = field(default_factory=lambda: StepSequence.constant(1.0))
    mu: StepSequence = field(default_factory=lambda: StepSequence.constant(1.0))
    epsilon: StepSequence = field(default_factory=default_epsilon)
    lambda_floor: float = 0.0
    max_steps: int = 1000

    def __post_init__(self):
        if self.max_steps < 1:
            raise ConfigError("max_steps must be >= 1", field="schedule.max_steps")
        if self.lambda_floor < 0:
            raise ConfigError("lambda_floor must be >= 0", field="schedule.lambda_floor")
        for k in range(self.max_steps):
            self.validate_step(k, self.lam(k))

    def validate_step(self, k: int, lam: float) -> None:
        if not lam > 0 or not np.isfinite(lam):
            raise ConfigError(f"lambda_{k} = {lam} must be a positive real", field="schedule.lambda")
        if lam < self.lambda_floor:
            raise ConfigError(f"lambda_{k} = {lam} is below the floor {self.lambda_floor}",
                              field="schedule.lambda")
        mu = self.mu(k)
        if not 0 < mu <= 1:
            raise ConfigError(f"mu_{k} = {mu} must lie in (0, 1]", field="schedule.mu")
        if self.epsilon(k) < 0:
            raise ConfigError(f"epsilon_{k} must be >= 0", field="schedule.epsilon")

    @classmethod
    def exact(cls, lam: StepSequence, max_steps: int = 1000) -> "ProximalSchedule":
        """μ ≡ 1, ε ≡ 0: the exact proximal algorithm."""
        return cls(lam=lam, mu=StepSequence.constant(1.0), epsilon=StepSequence.constant(0.0),
                   max_steps=max_steps)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lambda": self.lam.to_dict(),
            "mu": self.mu.to_dict(),
            "epsilon": self.epsilon.to_dict(),
            "lambda_floor": self.lambda_floor,
            "max_steps": self.max_steps,
        }


WeightFn = Callable[[List[Point], List[float]], float]


@dataclass(frozen=True, eq=False)
class ExperienceModel:
    """Experience weight v(E^k) and worthwhile-to-change ratio η_k.

    The experience-weighted need v(E^k) f(y) with ratio η_k is the plain problem with
    λ_k = η_k / v(E^k).

    Attributes:
        name: Preset name
        weight: v(E^k) from the realized history and its f-values
        eta: η_k
        params: Preset parameters
    """

    name: str
    weight: WeightFn
    eta: StepSequence = field(default_factory=lambda: StepSequence.constant(1.0))
    params: Dict[str, Any] = field(default_factory=dict)

    def weight_of(self, history: List[Point], f_values: List[float]) -> float:
        v = float(self.weight(history, f_values))
        if not v > 0 or not np.isfinite(v):
            raise ValueError(f"experience weight must be positive, got {v} after {len(history)} actions")
        return v

    def proximal_ratio(self, k: int, history: List[Point], f_values: List[float]) -> float:
        return self.eta(k) / self.weight_of(history, f_values)

    @classmethod
    def constant(cls, v0: float, eta: StepSequence) -> "ExperienceModel":
        if v0 <= 0:
            raise ConfigError("v0 must be positive", field="experience.v0")
        return cls("constant", lambda history, f_values: v0, eta, {"v0": v0})

    @classmethod
    def geometric(cls, v0: float, rho: float, eta: StepSequence) -> "ExperienceModel":
        if v0 <= 0 or rho <= 0:
            raise ConfigError("v0 and rho must be positive", field="experience")
        return cls("geometric", lambda history, f_values: v0 * rho ** (len(history) - 1), eta,
                   {"v0": v0, "rho": rho})

    @classmethod
    def recency(cls, base: float, scale: float, rho: float, eta: StepSequence) -> "ExperienceModel":
        """v = base + scale * (recency-weighted mean of past f-improvements)."""
        if base <= 0 or scale < 0 or not 0 < rho <= 1:
            raise ConfigError("recency needs base > 0, scale >= 0, 0 < rho <= 1", field="experience")

        def weight(history, f_values):
            gains = np.maximum(-np.diff(np.asarray(f_values, dtype=float)), 0.0)
            if gains.size == 0:
                return base
            decay = rho ** np.arange(gains.size - 1, -1, -1, dtype=float)
            return base + scale * float(np.dot(decay, gains) / decay.sum())

        return cls("recency", weight, eta, {"base": base, "scale": scale, "rho": rho})

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperienceModel":
        data = dict(data)
        eta = StepSequence.from_dict(data.pop("eta", {"kind": "constant", "value": 1.0}), "experience.eta")
        kind = data.pop("kind", "constant")
        try:
            if kind == "constant":
                return cls.constant(float(data["v0"]), eta)
            if kind == "geometric":
                return cls.geometric(float(data["v0"]), float(data["rho"]), eta)
            if kind == "recency":
                return cls.recency(float(data["base"]), float(data["scale"]), float(data["rho"]), eta)
        except KeyError as exc:
            raise ConfigError(f"missing key {exc.args[0]!r}", field="experience") from exc
        raise ConfigError(f"unknown experience kind {kind!r}", field="experience.kind")

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.name, **self.params, "eta": self.eta.to_dict()}
