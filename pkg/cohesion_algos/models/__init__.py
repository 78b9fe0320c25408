from cohesion_algos.models.backbone import Backbone, BackboneConfig, ConvBackbone
from cohesion_algos.models.base import CheckpointSavingMixin, ModelBase
from cohesion_algos.models.capsnet import (
    CapsNet,
    CapsNetConfig,
    CapsuleLayer,
    CapsuleLayerConfig,
    RoutingState,
    dynamic_routing,
    margin_loss,
    reconstruction_loss,
    squash,
)
from cohesion_algos.models.checkpoint import ModelCheckpoint, fingerprint
from cohesion_algos.models.face_head import (
    FaceHeadConfig,
    FaceLevelHead,
    pool_batch,
    pool_face_emotions,
)
from cohesion_algos.models.face_level import FaceLevelModel
from cohesion_algos.models.image_heads import (
    ImageEmotionHead,
    ImageHeadBase,
    ImageHeadConfig,
    ImageLevelHead,
    MultiTaskHead,
)
from cohesion_algos.models.losses import cross_entropy, joint_loss, mse
from cohesion_algos.models.registry import MODEL_KINDS, build_model, load_model
from cohesion_algos.models.saliency import normalize_map, saliency_map

__all__ = [
    "Backbone",
    "BackboneConfig",
    "ConvBackbone",
    "CheckpointSavingMixin",
    "ModelBase",
    "CapsNet",
    "CapsNetConfig",
    "CapsuleLayer",
    "CapsuleLayerConfig",
    "RoutingState",
    "dynamic_routing",
    "margin_loss",
    "reconstruction_loss",
    "squash",
    "ModelCheckpoint",
    "fingerprint",
    "FaceHeadConfig",
    "FaceLevelHead",
    "pool_batch",
    "pool_face_emotions",
    "FaceLevelModel",
    "ImageEmotionHead",
    "ImageHeadBase",
    "ImageHeadConfig",
    "ImageLevelHead",
    "MultiTaskHead",
    "cross_entropy",
    "joint_loss",
    "mse",
    "MODEL_KINDS",
    "build_model",
    "load_model",
    "normalize_map",
    "saliency_map",
]
