from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from cohesion_algos.autograd import Tensor, as_tensor
from cohesion_algos.autograd import functional as F
from cohesion_algos.errors import ConfigurationError, DimensionError, NoFacesError
from cohesion_algos.labels import EMOTIONS, GCS_MAX
from cohesion_algos.modules import Activation, BatchNorm, Dense, Module

NUM_STATISTICS = 3


def pool_face_emotions(faces, sample_id: Optional[str] = None) -> np.ndarray:
    """Columnwise (average, maximum, minimum) of per-face emotion distributions.

    ``faces`` is (num_faces, 7); the result is (3, 7). Columns are sorted before
    averaging so the result does not depend on face order.
    """
    faces = np.asarray(faces, dtype=np.float64)
    if faces.ndim == 1 and faces.size == 0:
        raise NoFacesError(sample_id)
    if faces.ndim != 2 or faces.shape[1] != len(EMOTIONS):
        raise DimensionError(f"faces must be (n, {len(EMOTIONS)})", faces.shape)
    if faces.shape[0] == 0:
        raise NoFacesError(sample_id)
    ordered = np.sort(faces, axis=0)
    lowest, highest = ordered[0], ordered[-1]
    average = np.clip(ordered.mean(axis=0), lowest, highest)
    return np.stack([average, highest, lowest])


@dataclass(frozen=True)
class FaceHeadConfig:
    widths: Tuple[int, int] = (16, 32)
    activation: str = "swish"
    bn_momentum: float = 0.9
    bn_eps: float = 1e-5

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if len(self.widths) != 2 or min(self.widths) < 1:
            raise ConfigurationError(f"face head needs two positive widths, got {self.widths}")
        if self.activation not in ("relu", "swish"):
            raise ConfigurationError(f"unknown activation {self.activation!r}")


class FaceLevelHead(Module):
    """Pooled emotion statistics (b, 3, 7) -> cohesion score (b,) on [0, 3].

    Dense -> BN -> activation twice, applied to each statistic row, then a max over the
    three rows and a sigmoid unit scaled to the score range.
    """

    def __init__(self, config: FaceHeadConfig = FaceHeadConfig(), rng=None):
        super().__init__()
        self.config = config
        rng = rng if rng is not None else np.random.default_rng(0)
        w1, w2 = config.widths
        bn = dict(momentum=config.bn_momentum, eps=config.bn_eps)
        self.dense1 = Dense(len(EMOTIONS), w1, bias=False, rng=rng)
        self.bn1 = BatchNorm(w1, **bn)
        self.act1 = Activation(config.activation)
        self.dense2 = Dense(w1, w2, bias=False, rng=rng)
        self.bn2 = BatchNorm(w2, **bn)
        self.act2 = Activation(config.activation)
        self.output = Dense(w2, 1, rng=rng)

    def forward(
        self, pooled, return_intermediates: bool = False
    ) -> Union[Tensor, Tuple[Tensor, List[Tensor]]]:
        x = as_tensor(pooled, dtype=self.output.weight.dtype)
        if x.shape[-2:] != (NUM_STATISTICS, len(EMOTIONS)) or x.ndim not in (2, 3):
            raise DimensionError("pooled features must be (b, 3, 7)", x.shape)
        if x.ndim == 2:
            x = x.reshape(1, NUM_STATISTICS, len(EMOTIONS))

        h1 = self.act1(self.bn1(self.dense1(x)))
        h2 = self.act2(self.bn2(self.dense2(h1)))
        pooled_rows = F.max(h2, axis=1, keepdims=True)
        flat = pooled_rows.reshape(x.shape[0], -1)
        logit = self.output(flat)
        score = GCS_MAX * F.sigmoid(logit)
        if return_intermediates:
            return score.reshape(-1), [x, h1, h2, pooled_rows, flat, logit]
        return score.reshape(-1)


def pool_batch(face_distributions: Sequence[np.ndarray], ids: Optional[Sequence[str]] = None):
    """Stack :func:`pool_face_emotions` over samples into (b, 3, 7)."""
    ids = list(ids) if ids is not None else [None] * len(face_distributions)
    return np.stack([pool_face_emotions(d, i) for d, i in zip(face_distributions, ids)])
