from pathlib import Path
from typing import Optional, Union

import pandas as pd

from ..core.errors import OutputError
from ..dynamics.habit import HabitDiagnostics
from ..dynamics.trajectory_analyzer import TrajectoryAnalyzer
from ..solvers.inexact import SolverResult

# Fixed header of every <run>.plot.csv; one row per step, f is f(x^{k+1}).
PLOT_COLUMNS = ["k", "f", "step_cost", "cumulative_cost", "lambda_k", "worthwhile"]


def plot_frame(result: SolverResult, diagnostics: Optional[HabitDiagnostics] = None) -> pd.DataFrame:
    if not result.steps:
        raise ValueError("cannot emit plot data for a run without steps")
    frame = TrajectoryAnalyzer(result).data
    if diagnostics is not None:
        frame = frame.assign(cumulative_cost=list(diagnostics.cumulative_cost))
    return frame[PLOT_COLUMNS].astype({"worthwhile": "int64"})


def emit_plot_data(result: SolverResult,
                   diagnostics: Optional[HabitDiagnostics],
                   path: Union[str, Path]) -> Path:
    """
    Write the per-step series of a run as CSV for external plotting.

    Args:
        result (SolverResult): A run with at least one step
        diagnostics (Optional[HabitDiagnostics]): Supplies the cumulative cost when given
        path (Union[str, Path]): Destination file

    Returns:
        Path: The written file

    Raises:
        ValueError: The run has no steps
        OutputError: The file cannot be written
    """
    path = Path(path)
    frame = plot_frame(result, diagnostics)
    try:
        frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n", encoding="utf-8")
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e.strerror or e}") from e
    return path
