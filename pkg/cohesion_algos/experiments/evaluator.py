import json
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

import numpy as np

from cohesion_algos.errors import ContractError, EmptyDatasetError
from cohesion_algos.utils import logger as package_logger


@dataclass
class EvaluationMetrics:
    """MSE on the [0, 3] cohesion scale and/or classification accuracy with its confusion.

    ``confusion[i][j]`` counts samples of true class ``i`` predicted as class ``j``.
    """

    num_samples: int
    mse: Optional[float] = None
    accuracy: Optional[float] = None
    confusion: Optional[List[List[int]]] = None
    skipped: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def summary(self) -> str:
        parts = [f"n={self.num_samples}"]
        if self.mse is not None:
            parts.append(f"mse={self.mse:.5f}")
        if self.accuracy is not None:
            parts.append(f"accuracy={100 * self.accuracy:.2f}%")
        return " ".join(parts)


def predict_all(model, dataset, batch_size: int = 256) -> Dict[str, np.ndarray]:
    outputs: Dict[str, List[np.ndarray]] = {}
    for batch in dataset.batches(batch_size, shuffle=False):
        for key, value in model.predict(batch).items():
            outputs.setdefault(key, []).append(value)
    return {key: np.concatenate(values) for key, values in outputs.items()}


def evaluate(model, dataset, batch_size: int = 256) -> EvaluationMetrics:
    """Score ``model`` on a labelled dataset."""
    if len(dataset) == 0:
        raise EmptyDatasetError("cannot evaluate on an empty dataset")
    predictions = predict_all(model, dataset, batch_size)
    metrics = EvaluationMetrics(num_samples=len(dataset), skipped=list(dataset.skipped))

    if "gcs" in predictions:
        if "gcs" not in dataset:
            raise ContractError("dataset carries no cohesion labels")
        error = predictions["gcs"].astype(np.float64) - dataset["gcs"].astype(np.float64)
        metrics.mse = float(np.mean(error * error))

    if "emotion" in predictions:
        if "emotion" not in dataset:
            raise ContractError("dataset carries no emotion labels")
        probs = predictions["emotion"]
        labels = dataset["emotion"].astype(np.int64)
        predicted = np.argmax(probs, axis=-1)
        num_classes = probs.shape[-1]
        confusion = np.zeros((num_classes, num_classes), dtype=np.int64)
        np.add.at(confusion, (labels, predicted), 1)
        metrics.accuracy = float(np.mean(predicted == labels))
        metrics.confusion = confusion.tolist()
    return metrics


class Evaluator(object):
    """Evaluates a model on a held-out dataset every ``eval_interval`` epochs."""

    def __init__(self, dataset, eval_interval: int = 1, logger=package_logger):
        super().__init__()
        self.dataset = dataset
        self.eval_interval = eval_interval
        self.logger = logger.getChild(self.__class__.__name__)
        self.history: List[EvaluationMetrics] = []

    def evaluate(self, model) -> EvaluationMetrics:
        metrics = evaluate(model, self.dataset)
        self.logger.info(f"Evaluate {model.kind}: {metrics.summary()}")
        self.history.append(metrics)
        return metrics

    def evaluate_if_necessary(self, epoch: int, model) -> Optional[EvaluationMetrics]:
        if epoch % self.eval_interval == 0:
            return self.evaluate(model)
        return None
