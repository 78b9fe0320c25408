from cohesion_algos.experiments.cross_validation import (
    CrossValReport,
    FoldAssignment,
    cross_validate,
    kfold_split,
)
from cohesion_algos.experiments.evaluator import (
    EvaluationMetrics,
    Evaluator,
    evaluate,
    predict_all,
)
from cohesion_algos.experiments.training import (
    EpochRecord,
    TrainRunReport,
    dataset_loss,
    fit,
    has_batch_norm,
)

__all__ = [
    "CrossValReport",
    "FoldAssignment",
    "cross_validate",
    "kfold_split",
    "EvaluationMetrics",
    "Evaluator",
    "evaluate",
    "predict_all",
    "EpochRecord",
    "TrainRunReport",
    "dataset_loss",
    "fit",
    "has_batch_norm",
]
