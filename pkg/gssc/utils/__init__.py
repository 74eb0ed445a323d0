"""
Utility functions for the GSSC trainer
"""

from .errors import (
    GsscError,
    GraphFormatError,
    GraphInvariantError,
    NoiseSpecError,
    ShapeError,
    NonFiniteError,
    GradCheckError,
    DegenerateSubgraphError,
    TrainingError,
    CheckpointError,
)
from .rng import derive_seed, make_rng
from .schemas import TrainConfig, NoiseSpec, MetricsRecord, RunManifest
from .serialization import (
    format_float,
    dumps,
    atomic_directory,
    atomic_write_text,
    fingerprint_files,
    write_csv,
)

__all__ = [
    'GsscError',
    'GraphFormatError',
    'GraphInvariantError',
    'NoiseSpecError',
    'ShapeError',
    'NonFiniteError',
    'GradCheckError',
    'DegenerateSubgraphError',
    'TrainingError',
    'CheckpointError',
    'derive_seed',
    'make_rng',
    'TrainConfig',
    'NoiseSpec',
    'MetricsRecord',
    'RunManifest',
    'format_float',
    'dumps',
    'atomic_directory',
    'atomic_write_text',
    'fingerprint_files',
    'write_csv',
]
