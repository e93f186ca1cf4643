import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, Optional

import numpy as np

from .errors import ConfigError

WEAK = "weak"
STRONG = "strong"


@dataclass(frozen=True, eq=False)
class ResistanceProfile:
    """Relative resistance to change Γ = U⁻¹∘D acting on a cost to change.

    Attributes:
        kind: quadratic, linear, power or custom
        gamma: Γ on [0, +inf)
        derivative: Γ′, numeric when omitted
        params: Shape parameters (``p`` for power)
    """

    kind: str
    gamma: Callable[[float], float]
    derivative: Optional[Callable[[float], float]] = None
    params: Dict[str, Any] = field(default_factory=dict)

    def __call__(self, t: float) -> float:
        if t == math.inf:
            return math.inf
        return float(self.gamma(t))

    def many(self, ts: np.ndarray) -> np.ndarray:
        return np.fromiter((self(t) for t in ts), dtype=float, count=len(ts))

    def marginal(self, t: float, rel_step: float = 1e-6) -> float:
        """Γ′(t); one-sided at the origin when numeric."""
        if self.derivative is not None:
            return float(self.derivative(t))
        h = rel_step * (1.0 + abs(t))
        low = max(t - h, 0.0)
        return (self(t + h) - self(low)) / (t + h - low)

    @property
    def strength(self) -> str:
        if self.kind == "quadratic":
            return WEAK
        if self.kind == "power":
            return WEAK if self.params["p"] > 1.0 else STRONG
        if self.kind == "linear":
            return STRONG
        return WEAK if is_flat_in_the_small(self) else STRONG

    @property
    def is_quadratic(self) -> bool:
        return self.kind == "quadratic" or (self.kind == "power" and self.params.get("p") == 2.0)

    # Presets

    @classmethod
    def quadratic(cls) -> "ResistanceProfile":
        return cls("quadratic", lambda t: t * t, lambda t: 2.0 * t)

    @classmethod
    def linear(cls) -> "ResistanceProfile":
        return cls("linear", lambda t: t, lambda t: 1.0)

    @classmethod
    def power(cls, p: float) -> "ResistanceProfile":
        if p <= 0:
            raise ConfigError(f"power exponent must be positive, got {p}", field="resistance.p")
        return cls("power", lambda t: t ** p,
                   lambda t: p * t ** (p - 1.0) if t > 0 or p >= 1.0 else math.inf,
                   params={"p": float(p)})

    @classmethod
    def custom(cls, gamma: Callable[[float], float],
               derivative: Optional[Callable[[float], float]] = None) -> "ResistanceProfile":
        profile = cls("custom", gamma, derivative)
        if profile(0.0) != 0.0:
            raise ConfigError("custom resistance must satisfy gamma(0) = 0", field="resistance")
        return profile


def resistance_from_preset(kind: str, params: Optional[Dict[str, Any]] = None) -> ResistanceProfile:
    params = dict(params or {})
    if kind == "quadratic":
        return ResistanceProfile.quadratic()
    if kind == "linear":
        return ResistanceProfile.linear()
    if kind == "power":
        if "p" not in params:
            raise ConfigError("power resistance needs 'p'", field="resistance.p")
        return ResistanceProfile.power(float(params["p"]))
    raise ConfigError(f"unknown resistance kind {kind!r}", field="resistance.kind")


RESISTANCE_KINDS = ("quadratic", "linear", "power")


def is_flat_in_the_small(gamma: ResistanceProfile, flat_tol: float = 1e-2) -> bool:
    """Γ(t)/t shrinks from t=1e-3 to t=1e-6 and ends under flat_tol."""
    coarse = gamma(1e-3) / 1e-3
    fine = gamma(1e-6) / 1e-6
    return fine < coarse and fine <= flat_tol


@dataclass(frozen=True)
class ResistanceReport:
    zero_at_origin: bool
    increasing: bool
    twice_differentiable: bool
    flat_in_the_small: bool
    elasticity: float
    strength: str

    @property
    def regular(self) -> bool:
        return self.zero_at_origin and self.increasing

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def check_resistance_regularity(gamma: ResistanceProfile, t_max: float = 10.0, samples: int = 200) -> ResistanceReport:
    """
    Sampled regularity checks of a resistance profile.

    Args:
        gamma (ResistanceProfile): Profile to check
        t_max (float): Upper end T of the tested interval [0, T]
        samples (int): Number of sample points

    Returns:
        ResistanceReport: Γ(0) = 0, strict monotonicity, finite second differences,
            flatness in the small and the elasticity tΓ′(t)/Γ(t) at t = 1e-3
    """
    ts = np.linspace(0.0, t_max, samples)
    values = gamma.many(ts)
    second = np.diff(values, n=2)
    small = 1e-3
    return ResistanceReport(
        zero_at_origin=gamma(0.0) == 0.0,
        increasing=bool(np.all(np.diff(values) > 0)),
        twice_differentiable=bool(np.all(np.isfinite(second))),
        flat_in_the_small=is_flat_in_the_small(gamma),
        elasticity=small * gamma.marginal(small) / gamma(small),
        strength=gamma.strength,
    )


def check_marginal_power_bound(gamma: ResistanceProfile,
                               c: float,
                               alpha: float,
                               t_max: float = 1.0,
                               samples: int = 200) -> bool:
    """Γ′(t) <= c * t**alpha for sampled t in (0, t_max]."""
    ts = np.geomspace(t_max * 1e-6, t_max, samples)
    return all(gamma.marginal(t) <= c * t ** alpha * (1.0 + 1e-12) for t in ts)
