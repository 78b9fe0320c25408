from typing import Any, Dict, Type

from cohesion_algos.errors import ArchitectureMismatchError
from cohesion_algos.models.base import ModelBase
from cohesion_algos.models.capsnet import CapsNet
from cohesion_algos.models.checkpoint import ModelCheckpoint
from cohesion_algos.models.face_level import FaceLevelModel
from cohesion_algos.models.image_heads import ImageEmotionHead, ImageLevelHead, MultiTaskHead

MODEL_KINDS: Dict[str, Type[ModelBase]] = {
    CapsNet.kind: CapsNet,
    FaceLevelModel.kind: FaceLevelModel,
    ImageLevelHead.kind: ImageLevelHead,
    ImageEmotionHead.kind: ImageEmotionHead,
    MultiTaskHead.kind: MultiTaskHead,
}


def build_model(architecture: Dict[str, Any]) -> ModelBase:
    """Instantiate an (untrained) model from a checkpoint architecture description."""
    kind = architecture.get("kind")
    if kind not in MODEL_KINDS:
        raise ArchitectureMismatchError(f"unknown model kind {kind!r}")
    return MODEL_KINDS[kind].from_architecture(architecture)


def load_model(path: str) -> ModelBase:
    checkpoint = ModelCheckpoint.load(path)
    model = build_model(checkpoint.architecture)
    checkpoint.restore_into(model)
    return model
