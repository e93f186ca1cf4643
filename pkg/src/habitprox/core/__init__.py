from .errors import (
    ConfigError,
    EquivalenceViolationError,
    HabitProxError,
    OutputError,
    ProbeRefusedError,
    TrapMonotonicityError,
    UnsupportedSpaceError,
)
from .objective import OBJECTIVE_PRESETS, ObjectiveSpec, finite_difference_gradient, grid_values, objective_from_preset
from .payoff import proximal_payoff
from .quasi_distance import (
    QUASI_DISTANCE_PRESETS,
    AxiomReport,
    QuasiDistance,
    check_norm_comparability,
    check_quasi_distance_axioms,
    quasi_distance_from_preset,
)
from .resistance import (
    RESISTANCE_KINDS,
    ResistanceProfile,
    check_marginal_power_bound,
    check_resistance_regularity,
    resistance_from_preset,
)
from .schedule import ExperienceModel, ProximalSchedule, StepSequence
from .settings import DEFAULT_SETTINGS, SolverSettings
from .space import Point, SearchSpace, SpaceKind, as_point

__all__ = [
    'AxiomReport', 'ConfigError', 'DEFAULT_SETTINGS', 'EquivalenceViolationError', 'ExperienceModel',
    'HabitProxError', 'OBJECTIVE_PRESETS', 'ObjectiveSpec', 'OutputError', 'Point', 'ProbeRefusedError',
    'ProximalSchedule', 'QUASI_DISTANCE_PRESETS', 'QuasiDistance', 'RESISTANCE_KINDS',
    'ResistanceProfile', 'SearchSpace', 'SolverSettings', 'SpaceKind', 'StepSequence',
    'TrapMonotonicityError', 'UnsupportedSpaceError', 'as_point', 'check_marginal_power_bound',
    'check_norm_comparability', 'check_quasi_distance_axioms', 'check_resistance_regularity',
    'finite_difference_gradient', 'grid_values', 'objective_from_preset', 'proximal_payoff',
    'quasi_distance_from_preset', 'resistance_from_preset',
]
