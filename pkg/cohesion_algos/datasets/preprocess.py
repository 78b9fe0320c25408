from typing import Optional, Tuple

import numpy as np

from cohesion_algos.datasets.sample import GroupSample
from cohesion_algos.errors import DimensionError

LUMINANCE = np.array([0.299, 0.587, 0.114])


def to_grayscale(image: np.ndarray) -> np.ndarray:
    """(h, w, 3) or (h, w) -> (h, w) float64 on the input's value scale."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        return image
    if image.ndim != 3 or image.shape[2] != 3:
        raise DimensionError("expected an (h, w) or (h, w, 3) image", image.shape)
    return image @ LUMINANCE


def _sample_positions(size_in: int, size_out: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    # half-pixel centres, clamped at the borders
    scale = size_in / size_out
    src = np.clip((np.arange(size_out) + 0.5) * scale - 0.5, 0, size_in - 1)
    lo = np.floor(src).astype(np.int64)
    hi = np.minimum(lo + 1, size_in - 1)
    return lo, hi, src - lo


def bilinear_resize(image: np.ndarray, size: Tuple[int, int]) -> np.ndarray:
    """Resize a 2-D array to ``size`` = (height, width).

    Plain two-tap bilinear interpolation at half-pixel centres, computed in float64.
    Pillow's ``Image.resize(..., BILINEAR)`` widens its filter support when shrinking
    and quantises 8-bit input, and the filter has changed between Pillow releases; this
    version gives the same crops for a dataset on every install, which checkpoints
    trained on those crops rely on.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2 or min(image.shape) < 1:
        raise DimensionError("bilinear_resize expects a non-empty 2-D array", image.shape)
    height, width = size
    if image.shape == (height, width):
        return image.copy()
    y0, y1, fy = _sample_positions(image.shape[0], height)
    x0, x1, fx = _sample_positions(image.shape[1], width)
    fy = fy[:, None]
    top = image[y0][:, x0] * (1 - fx) + image[y0][:, x1] * fx
    bottom = image[y1][:, x0] * (1 - fx) + image[y1][:, x1] * fx
    return top * (1 - fy) + bottom * fy


def crop_to_unit(crop: np.ndarray, size: Tuple[int, int], scale: float = 255.0) -> np.ndarray:
    """Grayscale, resize and map a raw crop with values in [0, scale] onto [0, 1]."""
    gray = bilinear_resize(to_grayscale(crop), size)
    return np.clip(gray / scale, 0.0, 1.0)


def preprocess_face(
    sample: GroupSample,
    box_index: int,
    size: Tuple[int, int] = (28, 28),
    pixels: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Grayscale crop of face ``box_index`` at ``size``, values in [0, 1].

    ``pixels`` avoids decoding the image again when several faces are cut from it.
    """
    if not 0 <= box_index < sample.num_faces:
        raise DimensionError(
            f"sample {sample.sample_id!r} has {sample.num_faces} faces, "
            f"box {box_index} requested"
        )
    x, y, w, h = sample.boxes[box_index]
    if w <= 0 or h <= 0:
        raise DimensionError(f"degenerate face box in sample {sample.sample_id!r}", (h, w))
    pixels = sample.pixels() if pixels is None else pixels
    return crop_to_unit(pixels[y : y + h, x : x + w], size)


def face_crops(sample: GroupSample, size: Tuple[int, int] = (28, 28)) -> np.ndarray:
    """(num_faces, h, w) float32 crops of every face in ``sample``."""
    if sample.num_faces == 0:
        return np.zeros((0,) + tuple(size), dtype=np.float32)
    pixels = sample.pixels()
    return np.stack(
        [preprocess_face(sample, i, size, pixels) for i in range(sample.num_faces)]
    ).astype(np.float32)


def image_to_unit(pixels: np.ndarray, size: Optional[Tuple[int, int]] = None) -> np.ndarray:
    """(h, w, 3) uint8 -> (3, h', w') float32 on [0, 1], resized per channel if ``size``."""
    pixels = np.asarray(pixels, dtype=np.float64) / 255.0
    channels = [pixels[..., c] for c in range(pixels.shape[-1])]
    if size is not None:
        channels = [bilinear_resize(c, size) for c in channels]
    return np.clip(np.stack(channels), 0.0, 1.0).astype(np.float32)
