from typing import List, Optional, Sequence, Tuple

import numpy as np

from cohesion_algos.datasets.array_dataset import ArrayDataset
from cohesion_algos.datasets.masking import apply_mask_crop
from cohesion_algos.datasets.preprocess import face_crops, image_to_unit
from cohesion_algos.datasets.sample import GroupSample
from cohesion_algos.errors import SchemaError
from cohesion_algos.labels import emotion_index, group_emotion_index
from cohesion_algos.utils import logger as package_logger

_logger = package_logger.getChild("datasets")


def _labels(samples: Sequence[GroupSample]) -> Tuple[np.ndarray, np.ndarray]:
    gcs = np.array([s.gcs for s in samples], dtype=np.float64)
    emotion = np.array([group_emotion_index(s.emotion) for s in samples], dtype=np.int64)
    return gcs, emotion


def capsnet_dataset(
    samples: Sequence[GroupSample], size: Tuple[int, int] = (28, 28)
) -> ArrayDataset:
    """One row per annotated face: ``faces`` (n, h, w) and ``emotion`` (n,) basic-emotion index."""
    crops, labels, ids = [], [], []
    for index, sample in enumerate(samples):
        if sample.num_faces == 0:
            continue
        if sample.face_emotions is None:
            raise SchemaError("faces carry no emotion annotation", index, "faces")
        crops.append(face_crops(sample, size))
        labels += [emotion_index(e) for e in sample.face_emotions]
        ids += [f"{sample.sample_id}/{i}" for i in range(sample.num_faces)]
    if not crops:
        return ArrayDataset(
            ids=[],
            faces=np.zeros((0,) + tuple(size), np.float32),
            emotion=np.zeros(0, np.int64),
        )
    return ArrayDataset(ids=ids, faces=np.concatenate(crops), emotion=np.array(labels, np.int64))


def face_crop_stacks(
    samples: Sequence[GroupSample], size: Tuple[int, int] = (28, 28), logger=_logger
) -> Tuple[List[GroupSample], List[np.ndarray], List[str]]:
    """Face crops of every sample with at least one face; faceless sample ids are skipped."""
    kept, stacks, skipped = [], [], []
    for sample in samples:
        if sample.num_faces == 0:
            skipped.append(sample.sample_id)
            continue
        kept.append(sample)
        stacks.append(face_crops(sample, size))
    if skipped:
        logger.warning(f"skipped {len(skipped)} samples without faces: {skipped}")
    return kept, stacks, skipped


def face_level_dataset(model, samples: Sequence[GroupSample], logger=_logger) -> ArrayDataset:
    """Pooled CapsNet statistics ``pooled`` (b, 3, 7) with ``gcs`` and ``emotion`` labels."""
    kept, stacks, skipped = face_crop_stacks(samples, model.capsnet.config.input_size, logger)
    gcs, emotion = _labels(kept)
    ids = [s.sample_id for s in kept]
    if kept:
        pooled = model.featurize(stacks, ids)
    else:
        pooled = np.zeros((0, 3, len(model.capsnet.config.emotions)))
    return ArrayDataset(ids=ids, skipped=skipped, pooled=pooled, gcs=gcs, emotion=emotion)


def image_dataset(
    samples: Sequence[GroupSample],
    image_size: Optional[Tuple[int, int]] = None,
    segmented: bool = False,
    logger=_logger,
) -> ArrayDataset:
    """``images`` (b, 3, h, w) on [0, 1] with labels.

    With ``segmented`` the background is removed and only samples whose persons cover
    less than half of the image are kept.
    """
    kept, images, skipped = [], [], []
    for sample in samples:
        if segmented:
            sample, included = apply_mask_crop(sample)
            if not included:
                skipped.append(sample.sample_id)
                continue
        kept.append(sample)
        images.append(image_to_unit(sample.pixels(), image_size))
    if skipped:
        logger.warning(
            f"excluded {len(skipped)} samples whose persons cover half the image or more: "
            f"{skipped}"
        )
    gcs, emotion = _labels(kept)
    return ArrayDataset(
        ids=[s.sample_id for s in kept],
        skipped=skipped,
        images=np.stack(images) if images else np.zeros((0, 3, 1, 1), np.float32),
        gcs=gcs,
        emotion=emotion,
    )


def build_dataset(
    model, samples: Sequence[GroupSample], segmented: bool = False, logger=_logger
) -> ArrayDataset:
    """The array view ``model`` trains and evaluates on."""
    if model.kind == "capsnet":
        return capsnet_dataset(samples, model.config.input_size)
    if model.kind == "face-level":
        return face_level_dataset(model, samples, logger)
    size = model.backbone_config.image_size if model.backbone_config is not None else None
    return image_dataset(samples, size, segmented, logger)
