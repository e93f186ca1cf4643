import os
from dataclasses import dataclass, fields, replace
from typing import Any, Dict

from .errors import ConfigError


def _debug_from_env() -> bool:
    return os.environ.get("HABITPROX_DEBUG_CHECKS", "").strip().lower() in {"1", "true", "yes"}


@dataclass(frozen=True)
class SolverSettings:
    """Budgets and tolerances shared by the solvers.

    Attributes:
        grad_tol: Projected-gradient norm at which the inner descent stops
        max_inner_iter: Iteration cap of one inner descent
        n_starts: Multi-start count (anchor plus quasi-random starts)
        patience: Consecutive stays before a run is declared stationary
        stop_step_tol: Step cost below which a firing stopping rule ends a run
        separation_tol: Threshold under which a quasi-distance value counts as zero
        triangle_rtol: Relative slack on the triangle inequality
        grid_cap: Maximum number of points a finite grid may enumerate
        fd_step: Relative finite-difference step, h = fd_step * (1 + |x|)
        proposal_budget: Candidates tried per step by sampling proposals
        trap_samples: Sample budget of the probabilistic trap probe
        seed: Seed for multi-start and sampling streams
        debug_checks: Run the runtime cross-checks of equivalent formulations
    """

    grad_tol: float = 1e-8
    max_inner_iter: int = 10_000
    n_starts: int = 5
    patience: int = 3
    stop_step_tol: float = 1e-12
    separation_tol: float = 1e-12
    triangle_rtol: float = 1e-12
    grid_cap: int = 1_000_000
    fd_step: float = 1e-6
    proposal_budget: int = 64
    trap_samples: int = 1024
    seed: int = 0
    debug_checks: bool = False

    def __post_init__(self):
        if self.grad_tol <= 0:
            raise ConfigError("must be positive", field="solver.grad_tol")
        for name in ("max_inner_iter", "n_starts", "patience", "grid_cap",
                     "proposal_budget", "trap_samples"):
            if getattr(self, name) < 1:
                raise ConfigError("must be >= 1", field=f"solver.{name}")
        for name in ("stop_step_tol", "separation_tol", "triangle_rtol"):
            if getattr(self, name) < 0:
                raise ConfigError("must be >= 0", field=f"solver.{name}")
        if self.fd_step <= 0:
            raise ConfigError("must be positive", field="solver.fd_step")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SolverSettings":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown keys {sorted(unknown)}", field="solver")
        settings = cls(**data)
        if "debug_checks" not in data and _debug_from_env():
            settings = replace(settings, debug_checks=True)
        return settings

    def to_dict(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


DEFAULT_SETTINGS = SolverSettings(debug_checks=_debug_from_env())
