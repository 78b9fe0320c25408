import functools
import os
from collections import Counter
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from PIL import Image, ImageDraw

from cohesion_algos.datasets.manifest import DatasetManifest, write_manifest
from cohesion_algos.datasets.sample import GroupSample, write_image
from cohesion_algos.errors import CohesionError, ConfigurationError
from cohesion_algos.labels import EMOTIONS, GCS_MAX, VALENCE
from cohesion_algos.utils import logger as package_logger

CANVAS = 96
GRID = 3
CELL = CANVAS // GRID
FACE = 28
MAX_FACES = GRID * GRID

FACE_TONE = 200
FEATURE_TONE = 30


@dataclass(frozen=True)
class SynthSpec:
    num_samples: int = 100
    faces_range: Tuple[int, int] = (1, MAX_FACES)
    noise: float = 0.05
    seed: int = 0
    split_fractions: Tuple[float, float] = (0.7, 0.15)
    masks: bool = True

    def __post_init__(self):
        object.__setattr__(self, "faces_range", tuple(int(k) for k in self.faces_range))
        object.__setattr__(self, "split_fractions", tuple(float(f) for f in self.split_fractions))
        low, high = self.faces_range
        if self.num_samples < 0:
            raise ConfigurationError(f"num_samples must be non-negative, got {self.num_samples}")
        if not 1 <= low <= high <= MAX_FACES:
            raise ConfigurationError(
                f"faces_range must satisfy 1 <= min <= max <= {MAX_FACES}, got {self.faces_range}"
            )
        if not 0 <= self.noise <= 1:
            raise ConfigurationError(f"noise must lie in [0, 1], got {self.noise}")
        train, val = self.split_fractions
        if train < 0 or val < 0 or train + val > 1:
            raise ConfigurationError(f"invalid split fractions {self.split_fractions}")

    def split_of(self, index: int) -> str:
        train, val = self.split_fractions
        n_train = int(round(train * self.num_samples))
        n_val = int(round(val * self.num_samples))
        if index < n_train:
            return "train"
        if index < n_train + n_val:
            return "val"
        return "test"


def _draw_features(draw: ImageDraw.ImageDraw, emotion: str) -> None:
    ink = FEATURE_TONE
    if emotion in ("surprise", "fear"):
        draw.ellipse([7, 8, 12, 13], fill=ink)
        draw.ellipse([15, 8, 20, 13], fill=ink)
    else:
        draw.ellipse([8, 9, 11, 12], fill=ink)
        draw.ellipse([16, 9, 19, 12], fill=ink)

    if emotion == "happy":
        draw.arc([7, 11, 20, 21], start=20, end=160, fill=ink, width=2)
    elif emotion == "neutral":
        draw.line([8, 19, 19, 19], fill=ink, width=2)
    elif emotion == "sad":
        draw.arc([7, 17, 20, 26], start=200, end=340, fill=ink, width=2)
    elif emotion == "angry":
        draw.line([7, 5, 12, 8], fill=ink, width=2)
        draw.line([20, 5, 15, 8], fill=ink, width=2)
        draw.line([9, 20, 18, 20], fill=ink, width=2)
    elif emotion == "surprise":
        draw.ellipse([10, 16, 17, 24], fill=ink)
    elif emotion == "disgust":
        draw.line([(7, 19), (10, 17), (13, 20), (16, 17), (19, 19)], fill=ink, width=2)
        draw.line([15, 7, 20, 8], fill=ink, width=2)
    elif emotion == "fear":
        draw.line([7, 6, 12, 4], fill=ink, width=2)
        draw.line([15, 4, 20, 6], fill=ink, width=2)
        draw.ellipse([12, 18, 15, 23], fill=ink)
    else:
        raise ConfigurationError(f"unknown emotion {emotion!r}")


@functools.lru_cache(maxsize=None)
def _glyph(emotion: str) -> np.ndarray:
    image = Image.new("L", (FACE, FACE), 0)
    draw = ImageDraw.Draw(image)
    draw.ellipse([1, 1, FACE - 2, FACE - 2], fill=FACE_TONE)
    _draw_features(draw, emotion)
    array = np.asarray(image)
    array.setflags(write=False)
    return array


def render_glyph(emotion: str) -> np.ndarray:
    """Noise-free (28, 28) uint8 archetype of a basic emotion."""
    return _glyph(emotion).copy()


def modal_emotion(emotions: Sequence[str]) -> str:
    """Most frequent emotion; ties go to the emotion listed first in ``EMOTIONS``."""
    counts = Counter(emotions)
    return max(EMOTIONS, key=lambda e: (counts[e], -EMOTIONS.index(e)))


def gcs_from_emotions(emotions: Sequence[str]) -> float:
    """3 when every face agrees, 0 for a uniform mix over the seven emotions."""
    if not emotions:
        raise ConfigurationError("a group needs at least one face")
    chance = 1.0 / len(EMOTIONS)
    fraction = Counter(emotions).most_common(1)[0][1] / len(emotions)
    return float(np.clip(GCS_MAX * (fraction - chance) / (1.0 - chance), 0.0, GCS_MAX))


def group_emotion_of(emotions: Sequence[str]) -> str:
    return VALENCE[modal_emotion(emotions)]


def _draw_group(rng: np.random.Generator, num_faces: int) -> Tuple[str, ...]:
    modal = EMOTIONS[rng.integers(len(EMOTIONS))]
    agreeing = int(rng.integers(1, num_faces + 1))
    others = [e for e in EMOTIONS if e != modal]
    rest = [others[i] for i in rng.integers(len(others), size=num_faces - agreeing)]
    faces = [modal] * agreeing + rest
    return tuple(faces[i] for i in rng.permutation(num_faces))


def _render_sample(rng: np.random.Generator, spec: SynthSpec, index: int) -> GroupSample:
    low, high = spec.faces_range
    num_faces = int(rng.integers(low, high + 1))
    emotions = _draw_group(rng, num_faces)
    cells = rng.permutation(MAX_FACES)[:num_faces]

    canvas = np.empty((CANVAS, CANVAS, 3), dtype=np.float64)
    canvas[...] = rng.integers(60, 200, size=3)
    mask = np.zeros((CANVAS, CANVAS), dtype=np.uint8)
    boxes = []
    for cell, emotion in zip(cells, emotions):
        row, col = divmod(int(cell), GRID)
        dx, dy = (int(v) for v in rng.integers(0, CELL - FACE + 1, size=2))
        x, y = col * CELL + dx, row * CELL + dy
        canvas[y : y + FACE, x : x + FACE] = _glyph(emotion)[..., None]
        mask[row * CELL : (row + 1) * CELL, col * CELL : (col + 1) * CELL] = 255
        boxes.append((x, y, FACE, FACE))
    canvas += rng.normal(0.0, spec.noise * 255.0, size=canvas.shape)
    pixels = np.clip(np.rint(canvas), 0, 255).astype(np.uint8)

    sample_id = f"synth-{index:05d}"
    return GroupSample(
        sample_id=sample_id,
        image=f"images/{sample_id}.png",
        width=CANVAS,
        height=CANVAS,
        gcs=gcs_from_emotions(emotions),
        emotion=group_emotion_of(emotions),
        split=spec.split_of(index),
        boxes=boxes,
        face_emotions=list(emotions),
        mask=f"masks/{sample_id}.png" if spec.masks else None,
        pixels_override=pixels,
        mask_override=mask if spec.masks else None,
    )


def synth_generate(spec: SynthSpec) -> DatasetManifest:
    """Render ``spec.num_samples`` group images of glyph faces.

    Every face shows one of seven emotion archetypes plus pixel noise. The cohesion label
    is an affine map of the share of faces showing the modal emotion and the group
    emotion is that emotion's valence. Pixels and masks stay in memory on the samples
    until :func:`write_synth` stores them.
    """
    rng = np.random.default_rng(spec.seed)
    records = [_render_sample(rng, spec, i) for i in range(spec.num_samples)]
    return DatasetManifest(records)


def write_synth(manifest: DatasetManifest, out_dir: str, logger=package_logger) -> str:
    """Write images, masks and ``manifest.jsonl`` under ``out_dir``; returns the manifest path."""
    logger = logger.getChild("synth")
    try:
        os.makedirs(out_dir, exist_ok=True)
        for sample in manifest:
            write_image(os.path.join(out_dir, sample.image), sample.pixels())
            if sample.mask is not None:
                write_image(os.path.join(out_dir, sample.mask), sample.person_mask() * 255)
        path = os.path.join(out_dir, "manifest.jsonl")
        write_manifest(manifest, path)
    except OSError as e:
        raise CohesionError(f"cannot write synthetic data to {out_dir!r}: {e}") from e
    logger.info(f"wrote {len(manifest)} samples to {out_dir} {manifest.split_sizes()}")
    return path
