"""
GSSC command tools
"""

from .generate import gssc_generate
from .corrupt import gssc_corrupt
from .train import gssc_train
from .evaluate import gssc_eval, gssc_bench, gssc_sparsify
from .study import (
    study_correlation,
    study_evolution,
    study_ablation,
    study_robustness,
    study_sensitivity,
)

__all__ = [
    'gssc_generate',
    'gssc_corrupt',
    'gssc_train',
    'gssc_eval',
    'gssc_bench',
    'gssc_sparsify',
    'study_correlation',
    'study_evolution',
    'study_ablation',
    'study_robustness',
    'study_sensitivity',
]
