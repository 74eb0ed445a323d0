"""
Dense kernels: MLP backbone, prediction heads, optimizers, gradient checking
"""

from .backbone import (
    BackboneState,
    GradBundle,
    init_backbone,
    mlp_forward,
    mlp_backward,
    head_apply,
    head_backward,
    predict_logits,
    zero_grads,
    accumulate,
)
from .gradcheck import grad_check
from .optim import Adam, SGD, make_optimizer

__all__ = [
    'BackboneState',
    'GradBundle',
    'init_backbone',
    'mlp_forward',
    'mlp_backward',
    'head_apply',
    'head_backward',
    'predict_logits',
    'zero_grads',
    'accumulate',
    'grad_check',
    'Adam',
    'SGD',
    'make_optimizer',
]
