from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd

from ..solvers.inexact import SolverResult

DEFAULT_TOLERANCES = (1e-2, 1e-4, 1e-6)


class TrajectoryAnalyzer:
    """Analyzes a proximal run: step-cost decay, cumulative cost and convergence speed."""

    def __init__(self, result: SolverResult):
        """
        Args:
            result (SolverResult): The run to analyze
        """
        self.result = result
        self._prepare_data()

    def _prepare_data(self):
        """One row per step, in step order."""
        self.data = pd.DataFrame(
            [
                {
                    "k": s.k,
                    "f_before": s.f_before,
                    "f": s.f_after,
                    "step_cost": s.step_cost,
                    "lambda_k": s.lambda_k,
                    "worthwhile": s.worthwhile,
                    "moved": s.moved,
                    "stop_rule_fired": s.stop_rule_fired,
                }
                for s in self.result.steps
            ],
            columns=["k", "f_before", "f", "step_cost", "lambda_k", "worthwhile", "moved", "stop_rule_fired"],
        )
        self.data["cumulative_cost"] = self.data["step_cost"].cumsum()

    def get_step_costs(self) -> pd.Series:
        return self.data["step_cost"]

    def get_cumulative_cost(self) -> pd.Series:
        return self.data["cumulative_cost"]

    def geometric_ratio(self) -> Optional[float]:
        """
        Median ratio of consecutive nonzero step costs.

        Returns:
            Optional[float]: The ratio estimate, None with fewer than two moves
        """
        costs = self.data.loc[self.data["step_cost"] > 0, "step_cost"]
        if len(costs) < 2:
            return None
        return float((costs / costs.shift(1)).dropna().median())

    def last_move_index(self) -> int:
        """Index of the first step after the last move (the number of steps when the last step moved)."""
        moved = np.flatnonzero(self.data["moved"].to_numpy())
        return int(moved[-1]) + 1 if moved.size else 0

    def steps_to_tolerance(self, f_star: Optional[float],
                           tolerances: Sequence[float] = DEFAULT_TOLERANCES) -> Dict[float, Optional[int]]:
        """
        First iterate index k with f(x^k) - f* <= tol, per tolerance.

        Args:
            f_star (Optional[float]): Reference minimum value; every entry is None when unknown
            tolerances (Sequence[float]): Tolerances to report

        Returns:
            Dict[float, Optional[int]]: Iterate index per tolerance, None when never reached
        """
        series = np.asarray(self.result.f_series, dtype=float)
        reached: Dict[float, Optional[int]] = {}
        for tol in tolerances:
            if f_star is None or series.size == 0:
                reached[tol] = None
                continue
            hits = np.flatnonzero(series - f_star <= tol)
            reached[tol] = int(hits[0]) if hits.size else None
        return reached

    def summary_metrics(self) -> Dict[str, Optional[float]]:
        moves = int(self.data["moved"].sum())
        ratio = self.geometric_ratio()
        series = self.result.f_series
        return {
            "steps": float(len(self.data)),
            "moves": float(moves),
            "stays": float(len(self.data) - moves),
            "cumulative_cost": float(self.data["step_cost"].sum()),
            "total_advantage": float(series[0] - series[-1]) if series else 0.0,
            "geometric_ratio": ratio,
        }
