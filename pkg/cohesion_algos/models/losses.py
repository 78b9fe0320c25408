import numpy as np

from cohesion_algos.autograd import Tensor, as_tensor
from cohesion_algos.autograd import functional as F
from cohesion_algos.errors import ConfigurationError, DimensionError, EmotionIndexError


def _one_hot(target, batch: int, num_classes: int, dtype) -> np.ndarray:
    target = np.atleast_1d(np.asarray(target))
    if target.shape != (batch,) or not np.issubdtype(target.dtype, np.integer):
        raise EmotionIndexError(f"expected {batch} integer class indices, got {target!r}")
    if np.any((target < 0) | (target >= num_classes)):
        raise EmotionIndexError(f"class index out of [0, {num_classes - 1}]: {target}")
    return np.eye(num_classes, dtype=dtype)[target]


def cross_entropy(pred, target, from_logits: bool = False) -> Tensor:
    """Mean negative log-likelihood of ``target`` under ``pred`` (b, classes).

    ``pred`` holds probabilities unless ``from_logits``; only the probability of the true
    class is ever logged, so exact zeros elsewhere are fine.
    """
    pred = as_tensor(pred)
    if pred.ndim == 1:
        pred = pred.reshape(1, -1)
    if pred.ndim != 2:
        raise DimensionError("class scores must be (batch, classes)", pred.shape)
    b, num_classes = pred.shape
    one_hot = _one_hot(target, b, num_classes, pred.dtype)
    if from_logits:
        return -F.sum(one_hot * F.log_softmax(pred, axis=-1)) / b
    return -F.sum(F.log(F.sum(one_hot * pred, axis=-1))) / b


def mse(pred, target) -> Tensor:
    pred = as_tensor(pred)
    target = np.asarray(target, dtype=pred.dtype).reshape(pred.shape)
    return F.mean(F.square(pred - target))


def joint_loss(
    pred_emotion,
    true_emotion,
    pred_gcs,
    true_gcs,
    alpha: float = 1.0,
    from_logits: bool = False,
) -> Tensor:
    """Cross-entropy on the group emotion plus ``alpha`` times the squared cohesion error."""
    if alpha < 0:
        raise ConfigurationError(f"alpha must be non-negative, got {alpha}")
    return cross_entropy(pred_emotion, true_emotion, from_logits) + alpha * mse(pred_gcs, true_gcs)
