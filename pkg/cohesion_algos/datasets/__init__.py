from cohesion_algos.datasets.array_dataset import ArrayDataset
from cohesion_algos.datasets.builders import (
    build_dataset,
    capsnet_dataset,
    face_crop_stacks,
    face_level_dataset,
    image_dataset,
)
from cohesion_algos.datasets.manifest import (
    GAF_SPLIT_SIZES,
    SCHEMA_VERSION,
    DatasetManifest,
    load_manifest,
    write_manifest,
)
from cohesion_algos.datasets.masking import MAX_PERSON_COVERAGE, apply_mask_crop, mask_coverage
from cohesion_algos.datasets.preprocess import (
    bilinear_resize,
    crop_to_unit,
    face_crops,
    image_to_unit,
    preprocess_face,
    to_grayscale,
)
from cohesion_algos.datasets.sample import SPLITS, GroupSample, read_image, write_image
from cohesion_algos.datasets.synth import (
    SynthSpec,
    gcs_from_emotions,
    group_emotion_of,
    modal_emotion,
    render_glyph,
    synth_generate,
    write_synth,
)

__all__ = [
    "ArrayDataset",
    "build_dataset",
    "capsnet_dataset",
    "face_crop_stacks",
    "face_level_dataset",
    "image_dataset",
    "GAF_SPLIT_SIZES",
    "SCHEMA_VERSION",
    "DatasetManifest",
    "load_manifest",
    "write_manifest",
    "MAX_PERSON_COVERAGE",
    "apply_mask_crop",
    "mask_coverage",
    "bilinear_resize",
    "crop_to_unit",
    "face_crops",
    "image_to_unit",
    "preprocess_face",
    "to_grayscale",
    "SPLITS",
    "GroupSample",
    "read_image",
    "write_image",
    "SynthSpec",
    "gcs_from_emotions",
    "group_emotion_of",
    "modal_emotion",
    "render_glyph",
    "synth_generate",
    "write_synth",
]
