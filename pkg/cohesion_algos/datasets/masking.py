from typing import Tuple

import numpy as np

from cohesion_algos.datasets.sample import GroupSample

MAX_PERSON_COVERAGE = 0.5


def mask_coverage(mask: np.ndarray) -> float:
    mask = np.asarray(mask, dtype=bool)
    return float(np.count_nonzero(mask)) / mask.size


def apply_mask_crop(sample: GroupSample) -> Tuple[GroupSample, bool]:
    """Remove the background of ``sample`` and decide whether it enters the ablation.

    A sample is included only when persons cover strictly less than half of the image.
    Background pixels of the returned sample are zero.
    """
    mask = sample.person_mask()
    included = np.count_nonzero(mask) < MAX_PERSON_COVERAGE * mask.size
    pixels = sample.pixels()
    cropped = np.where(mask[..., None], pixels, 0).astype(pixels.dtype)
    return sample.replace(pixels_override=cropped), bool(included)
