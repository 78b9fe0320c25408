from cohesion_algos.optimizers.config import DECAY_RULES, DecaySchedule, OptimizerConfig
from cohesion_algos.optimizers.optimizer import SGD, Adam, Optimizer, build_optimizer
from cohesion_algos.optimizers.steps import AdamState, adam_step, sgd_step

__all__ = [
    "DECAY_RULES",
    "DecaySchedule",
    "OptimizerConfig",
    "Optimizer",
    "SGD",
    "Adam",
    "build_optimizer",
    "AdamState",
    "adam_step",
    "sgd_step",
]
