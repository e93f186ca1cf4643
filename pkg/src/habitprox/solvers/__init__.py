from .inexact import ProximalRunner, SolverResult, StepRecord, StopReason, inexact_prox_run
from .inner import InnerResult, multistart_minimize, projected_gradient_descent
from .probes import ProbeReport, kl_inequality_probe, prox_map_nonexpansiveness_probe
from .property_checks import PROPERTY_CHECKS, PropertyReport, random_grid_instance, run_property_checks
from .proposals import ProposalManager, ProposalPolicy, accepts
from .prox import (
    ProxOutcome,
    exact_prox_step,
    exact_prox_step_constrained,
    local_prox_step,
    min_over_worthwhile,
    prox_argmin_indices,
    solve_global,
    solve_local_prox,
    solve_prox,
)
from .stopping import StoppingCheck, evaluate_stopping_rule, marginal_resistance, stopping_rule

__all__ = [
    'InnerResult', 'PROPERTY_CHECKS', 'ProbeReport', 'PropertyReport', 'ProposalManager', 'ProposalPolicy',
    'ProxOutcome', 'ProximalRunner', 'SolverResult', 'StepRecord', 'StopReason', 'StoppingCheck', 'accepts',
    'evaluate_stopping_rule', 'exact_prox_step', 'exact_prox_step_constrained', 'inexact_prox_run',
    'kl_inequality_probe', 'local_prox_step', 'marginal_resistance', 'min_over_worthwhile',
    'multistart_minimize', 'projected_gradient_descent', 'prox_argmin_indices', 'prox_map_nonexpansiveness_probe',
    'random_grid_instance', 'run_property_checks', 'solve_global', 'solve_local_prox', 'solve_prox',
    'stopping_rule',
]
