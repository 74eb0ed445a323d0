"""
Bi-level training loop, upper-level objectives and structure-free evaluation
"""

from .objective import (
    ObjectiveValue,
    pseudo_labels,
    homophily_objective,
    relaxed_homophily,
    explicit_weight_objective,
)
from .trainer import (
    LowerStepResult,
    UpperStepResult,
    TrainResult,
    labeled_mask,
    lower_step,
    upper_step,
    train,
)
from .evaluate import LatencyReport, accuracy, predict, evaluate, bench_latency

__all__ = [
    'ObjectiveValue',
    'pseudo_labels',
    'homophily_objective',
    'relaxed_homophily',
    'explicit_weight_objective',
    'LowerStepResult',
    'UpperStepResult',
    'TrainResult',
    'labeled_mask',
    'lower_step',
    'upper_step',
    'train',
    'LatencyReport',
    'accuracy',
    'predict',
    'evaluate',
    'bench_latency',
]
