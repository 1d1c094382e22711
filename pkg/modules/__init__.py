"""
modules/__init__.py - Module exports for the experiment layer
"""

from .config import (
    EXPERIMENT_KINDS,
    ExperimentConfig,
    parse_override,
    apply_overrides,
    config_from_dict,
    load_config
)

from .archive import (
    FieldArchive,
    encode_archive,
    decode_archive,
    save_archive,
    load_archive,
    state_archive,
    map_from_archive,
    spinor_from_archive
)

from .export import (
    SCHEMAS,
    export_csv,
    continuation_table,
    spectrum_table
)

from .runners import (
    EXIT_OK,
    EXIT_ERROR,
    EXIT_FAIL,
    RunOutcome,
    RUNNERS,
    get_available_experiments,
    get_runner,
    write_outputs,
    execute
)

__all__ = [
    'EXPERIMENT_KINDS',
    'ExperimentConfig',
    'parse_override',
    'apply_overrides',
    'config_from_dict',
    'load_config',
    'FieldArchive',
    'encode_archive',
    'decode_archive',
    'save_archive',
    'load_archive',
    'state_archive',
    'map_from_archive',
    'spinor_from_archive',
    'SCHEMAS',
    'export_csv',
    'continuation_table',
    'spectrum_table',
    'EXIT_OK',
    'EXIT_ERROR',
    'EXIT_FAIL',
    'RunOutcome',
    'RUNNERS',
    'get_available_experiments',
    'get_runner',
    'write_outputs',
    'execute'
]
