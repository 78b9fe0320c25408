import dataclasses
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from PIL import Image

from cohesion_algos.errors import DimensionError, ImageNotFoundError, MissingMaskError

SPLITS = ("train", "val", "test")

# (x, y, width, height) in pixels, origin top left
Box = Tuple[int, int, int, int]


def read_image(path: str, mode: str = "RGB") -> np.ndarray:
    if not os.path.isfile(path):
        raise ImageNotFoundError(f"image file {path!r} does not exist")
    with Image.open(path) as image:
        return np.asarray(image.convert(mode))


def write_image(path: str, array: np.ndarray) -> None:
    """Write a uint8 (h, w) or (h, w, 3) array as a lossless raster (format from suffix)."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    Image.fromarray(np.ascontiguousarray(array, dtype=np.uint8)).save(path)


@dataclass
class GroupSample:
    """One group image with its face boxes, optional person mask and labels.

    Pixels are decoded lazily from ``image`` (relative to ``root``) unless the sample was
    built in memory with ``pixels``/``mask_pixels``.
    """

    sample_id: str
    image: str
    width: int
    height: int
    gcs: float
    emotion: str
    split: str = "train"
    boxes: List[Box] = field(default_factory=list)
    face_emotions: Optional[List[str]] = None
    mask: Optional[str] = None
    root: str = field(default=".", compare=False, repr=False)
    pixels_override: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    mask_override: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    @property
    def num_faces(self) -> int:
        return len(self.boxes)

    def pixels(self) -> np.ndarray:
        """(height, width, 3) uint8."""
        if self.pixels_override is not None:
            array = self.pixels_override
        else:
            array = read_image(os.path.join(self.root, self.image), "RGB")
        if array.shape[:2] != (self.height, self.width):
            raise DimensionError(
                f"image of sample {self.sample_id!r} does not match its declared extents",
                array.shape[:2],
                (self.height, self.width),
            )
        return array

    def person_mask(self) -> np.ndarray:
        """(height, width) bool, True on person pixels."""
        if self.mask_override is not None:
            array = np.asarray(self.mask_override)
        elif self.mask is not None:
            array = read_image(os.path.join(self.root, self.mask), "L")
        else:
            raise MissingMaskError(self.sample_id)
        if array.shape != (self.height, self.width):
            raise DimensionError(
                f"mask of sample {self.sample_id!r} does not match the image extents",
                array.shape,
                (self.height, self.width),
            )
        return array != 0

    def replace(self, **changes) -> "GroupSample":
        return dataclasses.replace(self, **changes)

    def to_record(self) -> Dict[str, Any]:
        record: Dict[str, Any] = {
            "id": self.sample_id,
            "image": self.image,
            "width": self.width,
            "height": self.height,
            "split": self.split,
            "gcs": self.gcs,
            "emotion": self.emotion,
            "faces": [{"box": list(box)} for box in self.boxes],
        }
        if self.face_emotions is not None:
            for face, name in zip(record["faces"], self.face_emotions):
                face["emotion"] = name
        if self.mask is not None:
            record["mask"] = self.mask
        return record
