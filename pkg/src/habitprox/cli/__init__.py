from .commands import cli, main
from .config import (
    CONFIG_SCHEMA,
    MODES,
    ExperimentConfig,
    RunContext,
    RunSpec,
    dump_config,
    load_config,
    parse_config_text,
    resolve_run,
)
from .data_manager import DataManager, OutputKind, to_jsonable
from .plot_data import PLOT_COLUMNS, emit_plot_data, plot_frame
from .runner import EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, ExperimentOutcome, ExperimentRunner, run_config

__all__ = [
    'CONFIG_SCHEMA', 'DataManager', 'EXIT_CONFIG', 'EXIT_FAILURE', 'EXIT_OK', 'ExperimentConfig',
    'ExperimentOutcome', 'ExperimentRunner', 'MODES', 'OutputKind', 'PLOT_COLUMNS', 'RunContext', 'RunSpec',
    'cli', 'dump_config', 'emit_plot_data', 'load_config', 'main', 'parse_config_text', 'plot_frame',
    'resolve_run', 'run_config', 'to_jsonable',
]
