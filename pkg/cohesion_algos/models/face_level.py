from typing import Dict, Optional, Sequence

import numpy as np

from cohesion_algos.autograd import no_grad
from cohesion_algos.models.base import ModelBase
from cohesion_algos.models.capsnet import CapsNet, CapsNetConfig
from cohesion_algos.models.face_head import FaceHeadConfig, FaceLevelHead, pool_face_emotions
from cohesion_algos.models.losses import mse
from cohesion_algos.utils import logger as package_logger


class FaceLevelModel(ModelBase):
    """Frozen CapsNet, statistic pooling over faces, then the face-level cohesion head.

    Training only updates the head; batches carry the pooled statistics (``pooled``,
    (b, 3, 7)) produced once by :meth:`featurize`.
    """

    kind = "face-level"
    saved_attributes = ("capsnet", "head")

    def __init__(
        self,
        capsnet: Optional[CapsNet] = None,
        head_config: FaceHeadConfig = FaceHeadConfig(),
        seed: int = 0,
        capsnet_config: CapsNetConfig = CapsNetConfig(),
        logger=package_logger,
    ):
        super().__init__()
        self.seed = seed
        self.head_config = head_config
        self.capsnet = capsnet if capsnet is not None else CapsNet(capsnet_config, seed=seed)
        self.capsnet.requires_grad_(False)
        self.head = FaceLevelHead(head_config, rng=np.random.default_rng(seed))
        self.logger = logger.getChild(self.__class__.__name__)

    @property
    def architecture(self) -> Dict:
        return {
            "kind": self.kind,
            "capsnet": self.capsnet.architecture,
            "head": self._asdict(self.head_config),
        }

    @classmethod
    def from_architecture(cls, architecture: Dict) -> "FaceLevelModel":
        return cls(
            capsnet=CapsNet.from_architecture(architecture["capsnet"]),
            head_config=FaceHeadConfig(**architecture["head"]),
        )

    def face_distributions(self, crops: np.ndarray, chunk: int = 256) -> np.ndarray:
        """(n, h, w) face crops -> (n, 7) emotion distributions."""
        crops = np.asarray(crops)
        if len(crops) == 0:
            return np.zeros((0, len(self.capsnet.config.emotions)))
        chunks = [crops[i : i + chunk] for i in range(0, len(crops), chunk)]
        return np.concatenate([self.capsnet.predict_emotions(c) for c in chunks])

    def featurize(
        self, crops_per_sample: Sequence[np.ndarray], ids: Optional[Sequence[str]] = None
    ) -> np.ndarray:
        """Pooled statistics (b, 3, 7) for a list of per-sample face crop stacks."""
        ids = list(ids) if ids is not None else [None] * len(crops_per_sample)
        counts = [len(c) for c in crops_per_sample]
        flat = [c for c in crops_per_sample if len(c) > 0]
        distributions = self.face_distributions(np.concatenate(flat)) if flat else None
        pooled = []
        start = 0
        for sample_id, count in zip(ids, counts):
            faces = (
                distributions[start : start + count]
                if count
                else np.zeros((0, len(self.capsnet.config.emotions)))
            )
            pooled.append(pool_face_emotions(faces, sample_id))
            start += count
        return np.stack(pooled)

    def forward(self, pooled):
        return self.head(pooled)

    def compute_loss(self, batch):
        loss = mse(self.head(batch["pooled"]), batch["gcs"])
        return loss, {"mse": loss.item()}

    def predict(self, batch):
        with no_grad(), self.eval_mode():
            return {"gcs": self.head(batch["pooled"]).data.astype(np.float64)}
