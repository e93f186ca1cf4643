from .trap_detector import TrapReport, detect_trap, trap_stability_sweep
from .worthwhile_checker import (
    WorthwhileChecker,
    WorthwhileSpec,
    enumerate_worthwhile,
    is_worthwhile,
    worthwhile_mask,
)

__all__ = ['TrapReport', 'WorthwhileChecker', 'WorthwhileSpec', 'detect_trap', 'enumerate_worthwhile',
           'is_worthwhile', 'trap_stability_sweep', 'worthwhile_mask']
