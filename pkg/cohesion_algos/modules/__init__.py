from cohesion_algos.modules.contexts import evaluating
from cohesion_algos.modules.init import conv_init, dense_init, fan_in_init, truncated_normal
from cohesion_algos.modules.layers import (
    Activation,
    BatchNorm,
    Conv2d,
    Dense,
    GlobalAveragePool,
    Sequential,
)
from cohesion_algos.modules.module import Module, Parameter
from cohesion_algos.modules.z_score_filter import ZScoreFilter

__all__ = [
    "Module",
    "Parameter",
    "Activation",
    "BatchNorm",
    "Conv2d",
    "Dense",
    "GlobalAveragePool",
    "Sequential",
    "evaluating",
    "ZScoreFilter",
    "truncated_normal",
    "fan_in_init",
    "dense_init",
    "conv_init",
]
