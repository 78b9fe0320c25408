from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np

from cohesion_algos.autograd import Tensor, as_tensor, no_grad
from cohesion_algos.autograd import functional as F
from cohesion_algos.errors import ConfigurationError, ContractError, DimensionError
from cohesion_algos.labels import GCS_MAX, GROUP_EMOTIONS
from cohesion_algos.models.backbone import BackboneConfig, ConvBackbone
from cohesion_algos.models.base import ModelBase
from cohesion_algos.models.losses import cross_entropy, mse
from cohesion_algos.modules import Activation, Dense, Sequential, ZScoreFilter

NUM_GROUP_EMOTIONS = len(GROUP_EMOTIONS)


@dataclass(frozen=True)
class ImageHeadConfig:
    feature_width: int = 128
    hidden: Tuple[int, ...] = (256, 256, 256)
    activation: str = "swish"
    standardize: bool = True

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.feature_width < 1 or not self.hidden or min(self.hidden) < 1:
            raise ConfigurationError("feature width and hidden widths must be positive")
        if self.activation not in ("relu", "swish"):
            raise ConfigurationError(f"unknown activation {self.activation!r}")

    @classmethod
    def reference_scale(cls, **kwargs) -> "ImageHeadConfig":
        """Widths of the full-size network on 2048-wide backbone features."""
        return cls(feature_width=2048, hidden=(4096, 4096, 4096), **kwargs)


class ImageHeadBase(ModelBase):
    """Dense trunk over backbone features shared by the image-level heads.

    Batches carry either precomputed ``features`` (b, feature_width) or ``images``
    (b, c, h, w) when the head owns a backbone.
    """

    def __init__(
        self,
        config: ImageHeadConfig = ImageHeadConfig(),
        backbone: Optional[BackboneConfig] = None,
        seed: int = 0,
    ):
        super().__init__()
        self.config = config
        self.backbone_config = backbone
        self.seed = seed
        rng = np.random.default_rng(seed)

        if backbone is not None:
            self.backbone = ConvBackbone(backbone, rng=rng)
            if self.backbone.feature_width != config.feature_width:
                raise ConfigurationError(
                    f"backbone emits {self.backbone.feature_width} features, "
                    f"head expects {config.feature_width}"
                )
        else:
            self.backbone = None
        self.normalizer = ZScoreFilter(config.feature_width) if config.standardize else None

        layers = []
        widths = (config.feature_width,) + config.hidden
        for w_in, w_out in zip(widths[:-1], widths[1:]):
            layers += [Dense(w_in, w_out, rng=rng), Activation(config.activation)]
        self.trunk = Sequential(*layers)
        self.build_outputs(config.hidden[-1], rng)

    def build_outputs(self, width: int, rng: np.random.Generator) -> None:
        raise NotImplementedError()

    @property
    def architecture(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "config": self._asdict(self.config),
            "backbone": self._asdict(self.backbone_config) if self.backbone_config else None,
        }

    @classmethod
    def from_architecture(cls, architecture: Dict[str, Any]) -> "ImageHeadBase":
        backbone = architecture.get("backbone")
        return cls(
            ImageHeadConfig(**architecture["config"]),
            BackboneConfig(**backbone) if backbone else None,
        )

    # *** features ***
    def extract(self, batch) -> Tensor:
        if "features" in batch:
            return as_tensor(batch["features"], dtype=self.trunk[0].weight.dtype)
        if "images" in batch:
            if self.backbone is None:
                raise ContractError(f"{self.kind} head has no backbone to read images with")
            return self.backbone(batch["images"])
        raise ContractError("batch carries neither features nor images")

    def embed(self, features) -> Tensor:
        features = as_tensor(features, dtype=self.trunk[0].weight.dtype)
        if features.ndim != 2 or features.shape[1] != self.config.feature_width:
            raise DimensionError(
                f"features must be (b, {self.config.feature_width})", features.shape
            )
        if self.normalizer is not None:
            features = self.normalizer(features)
        return self.trunk(features)

    def prepare(self, dataset) -> None:
        """Fit the feature standardisation on ``dataset``."""
        if self.normalizer is None:
            return
        self.normalizer.reset()
        with no_grad(), self.eval_mode():
            for batch in dataset.batches(256, shuffle=False):
                self.normalizer.update(self.extract(batch))

    def cohesion_from(self, hidden: Tensor) -> Tensor:
        return (GCS_MAX * F.sigmoid(self.cohesion(hidden))).reshape(-1)

    def saliency_score(self, images: Tensor) -> Tensor:
        if self.backbone is None or not hasattr(self, "cohesion"):
            raise ContractError(f"{self.kind} head cannot explain a cohesion score from pixels")
        return F.sum(self.cohesion_from(self.embed(self.backbone(images))))


class ImageLevelHead(ImageHeadBase):
    """Single-task cohesion regression: features -> score on [0, 3]."""

    kind = "image-level"

    def build_outputs(self, width, rng):
        self.cohesion = Dense(width, 1, rng=rng)

    def forward(self, features) -> Tensor:
        return self.cohesion_from(self.embed(features))

    def compute_loss(self, batch):
        loss = mse(self.forward(self.extract(batch)), batch["gcs"])
        return loss, {"mse": loss.item()}

    def predict(self, batch):
        with no_grad(), self.eval_mode():
            return {"gcs": self.forward(self.extract(batch)).data.astype(np.float64)}


class ImageEmotionHead(ImageHeadBase):
    """Single-task group emotion classification over (positive, neutral, negative)."""

    kind = "image-emotion"

    def build_outputs(self, width, rng):
        self.emotion = Dense(width, NUM_GROUP_EMOTIONS, rng=rng)

    def logits(self, features) -> Tensor:
        return self.emotion(self.embed(features))

    def forward(self, features) -> Tensor:
        return F.softmax(self.logits(features), axis=-1)

    def compute_loss(self, batch):
        loss = cross_entropy(self.logits(self.extract(batch)), batch["emotion"], from_logits=True)
        return loss, {"cross_entropy": loss.item()}

    def predict(self, batch):
        with no_grad(), self.eval_mode():
            return {"emotion": self.forward(self.extract(batch)).data.astype(np.float64)}


class MultiTaskHead(ImageHeadBase):
    """Shared trunk with a 3-way group emotion softmax and a cohesion unit.

    The loss is ``cross_entropy + alpha * mse``. ``alpha`` is part of the architecture, so
    a reloaded model keeps the weighting it was trained with.
    """

    kind = "multitask"

    def __init__(
        self,
        config: ImageHeadConfig = ImageHeadConfig(),
        backbone: Optional[BackboneConfig] = None,
        seed: int = 0,
        alpha: float = 1.0,
    ):
        if alpha < 0:
            raise ConfigurationError(f"alpha must be non-negative, got {alpha}")
        super().__init__(config, backbone, seed)
        self.alpha = alpha

    @property
    def architecture(self) -> Dict[str, Any]:
        return dict(super().architecture, alpha=float(self.alpha))

    @classmethod
    def from_architecture(cls, architecture: Dict[str, Any]) -> "MultiTaskHead":
        backbone = architecture.get("backbone")
        return cls(
            ImageHeadConfig(**architecture["config"]),
            BackboneConfig(**backbone) if backbone else None,
            alpha=architecture.get("alpha", 1.0),
        )

    def build_outputs(self, width, rng):
        # init order must match ImageEmotionHead
        self.emotion = Dense(width, NUM_GROUP_EMOTIONS, rng=rng)
        self.cohesion = Dense(width, 1, rng=rng)

    def heads(self, features) -> Tuple[Tensor, Tensor]:
        hidden = self.embed(features)
        return self.emotion(hidden), self.cohesion_from(hidden)

    def forward(self, features) -> Tuple[Tensor, Tensor]:
        logits, gcs = self.heads(features)
        return F.softmax(logits, axis=-1), gcs

    def compute_loss(self, batch):
        logits, gcs = self.heads(self.extract(batch))
        ce = cross_entropy(logits, batch["emotion"], from_logits=True)
        err = mse(gcs, batch["gcs"])
        loss = ce + self.alpha * err
        return loss, {"cross_entropy": ce.item(), "mse": err.item(), "joint_loss": loss.item()}

    def predict(self, batch):
        with no_grad(), self.eval_mode():
            probs, gcs = self.forward(self.extract(batch))
        return {"emotion": probs.data.astype(np.float64), "gcs": gcs.data.astype(np.float64)}

