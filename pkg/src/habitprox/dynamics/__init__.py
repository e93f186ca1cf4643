from .habit import HabitDiagnostics, habit_diagnostics, reference_minimum, run_habit_experiment, trap_hit_step
from .sweep import SWEEP_COLUMNS, lambda_sensitivity_sweep
from .trajectory_analyzer import DEFAULT_TOLERANCES, TrajectoryAnalyzer

__all__ = [
    'DEFAULT_TOLERANCES', 'HabitDiagnostics', 'SWEEP_COLUMNS', 'TrajectoryAnalyzer', 'habit_diagnostics',
    'lambda_sensitivity_sweep', 'reference_minimum', 'run_habit_experiment', 'trap_hit_step',
]
