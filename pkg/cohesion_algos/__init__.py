from cohesion_algos import (
    autograd,
    datasets,
    experiments,
    models,
    modules,
    optimizers,
    stats,
    utils,
)

__all__ = [
    "autograd",
    "datasets",
    "experiments",
    "models",
    "modules",
    "optimizers",
    "stats",
    "utils",
]
