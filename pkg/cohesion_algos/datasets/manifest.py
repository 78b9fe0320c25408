import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List

from cohesion_algos.datasets.sample import SPLITS, GroupSample
from cohesion_algos.errors import SchemaError
from cohesion_algos.labels import EMOTIONS, GCS_MAX, GCS_MIN, GROUP_EMOTIONS

SCHEMA_VERSION = 1
MANIFEST_FORMAT = "cohesion-manifest"

# Split sizes of the GAF-Cohesion release, for reference only. They add up to 17,175
# while the dataset is described as holding 14,175 images.
GAF_SPLIT_SIZES = {"train": 9815, "val": 4349, "test": 3011}

_REQUIRED = {
    "id": str,
    "image": str,
    "width": int,
    "height": int,
    "split": str,
    "gcs": (int, float),
    "emotion": str,
    "faces": list,
}


@dataclass
class DatasetManifest:
    records: List[GroupSample] = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION
    root: str = "."

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[GroupSample]:
        return iter(self.records)

    def split(self, name: str) -> List[GroupSample]:
        if name not in SPLITS:
            raise SchemaError(f"unknown split {name!r}; choose from {SPLITS}")
        return [r for r in self.records if r.split == name]

    def split_sizes(self) -> Dict[str, int]:
        return {name: len(self.split(name)) for name in SPLITS}

    def validate(self) -> None:
        seen = set()
        for index, sample in enumerate(self.records):
            _validate_record(sample.to_record(), index)
            if sample.sample_id in seen:
                raise SchemaError("id appears more than once", index, "id")
            seen.add(sample.sample_id)


def _check(condition: bool, message: str, index: int, name: str) -> None:
    if not condition:
        raise SchemaError(message, index, name)


def _validate_record(record: Dict[str, Any], index: int) -> None:
    _check(isinstance(record, dict), "record must be an object", index, None)
    for name, types in _REQUIRED.items():
        _check(name in record, "missing", index, name)
        value = record[name]
        _check(
            isinstance(value, types) and not isinstance(value, bool),
            f"expected {getattr(types, '__name__', 'number')}, got {type(value).__name__}",
            index,
            name,
        )
    width, height = record["width"], record["height"]
    _check(width > 0 and height > 0, "image extents must be positive", index, "width")
    _check(record["split"] in SPLITS, f"split must be one of {SPLITS}", index, "split")
    _check(GCS_MIN <= record["gcs"] <= GCS_MAX, "gcs must lie in [0, 3]", index, "gcs")
    _check(
        record["emotion"] in GROUP_EMOTIONS,
        f"emotion must be one of {GROUP_EMOTIONS}",
        index,
        "emotion",
    )
    with_emotion = 0
    for face in record["faces"]:
        _check(isinstance(face, dict) and "box" in face, "face needs a box", index, "faces")
        box = face["box"]
        _check(
            isinstance(box, list)
            and len(box) == 4
            and all(isinstance(v, int) and not isinstance(v, bool) for v in box),
            "box must be four integers [x, y, width, height]",
            index,
            "faces",
        )
        x, y, w, h = box
        _check(
            x >= 0 and y >= 0 and w >= 0 and h >= 0 and x + w <= width and y + h <= height,
            f"box {box} lies outside the {width}x{height} image",
            index,
            "faces",
        )
        if "emotion" in face:
            _check(face["emotion"] in EMOTIONS, "unknown face emotion", index, "faces")
            with_emotion += 1
    _check(
        with_emotion in (0, len(record["faces"])),
        "either every face or no face carries an emotion",
        index,
        "faces",
    )
    if "mask" in record:
        _check(isinstance(record["mask"], str), "mask must be a path", index, "mask")


def _sample_from_record(record: Dict[str, Any], root: str) -> GroupSample:
    faces = record["faces"]
    emotions = [f["emotion"] for f in faces] if faces and "emotion" in faces[0] else None
    return GroupSample(
        sample_id=record["id"],
        image=record["image"],
        width=record["width"],
        height=record["height"],
        gcs=float(record["gcs"]),
        emotion=record["emotion"],
        split=record["split"],
        boxes=[tuple(f["box"]) for f in faces],
        face_emotions=emotions,
        mask=record.get("mask"),
        root=root,
    )


def load_manifest(path: str) -> DatasetManifest:
    """Read and validate a manifest: a header line, then one JSON record per line.

    Image paths resolve relative to the manifest's directory; images are only opened
    when a sample's pixels are requested.
    """
    root = os.path.dirname(os.path.abspath(path))
    with open(path, "r", encoding="utf-8") as f:
        lines = [line for line in f.read().splitlines() if line.strip()]
    if not lines:
        raise SchemaError("manifest is empty; expected a header line")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise SchemaError(f"header is not valid JSON: {e}") from None
    if not isinstance(header, dict) or header.get("format") != MANIFEST_FORMAT:
        raise SchemaError(f"header must declare format {MANIFEST_FORMAT!r}")
    if header.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(
            f"unsupported schema version {header.get('schema_version')!r}",
            field="schema_version",
        )

    records = []
    seen = set()
    for index, line in enumerate(lines[1:]):
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            raise SchemaError(f"not valid JSON: {e}", index) from None
        _validate_record(record, index)
        if record["id"] in seen:
            raise SchemaError("id appears more than once", index, "id")
        seen.add(record["id"])
        records.append(_sample_from_record(record, root))
    return DatasetManifest(records, SCHEMA_VERSION, root)


def write_manifest(manifest: DatasetManifest, path: str) -> None:
    manifest.validate()
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    header = {"format": MANIFEST_FORMAT, "schema_version": manifest.schema_version}
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(header, sort_keys=True) + "\n")
        for sample in manifest.records:
            f.write(json.dumps(sample.to_record(), sort_keys=True) + "\n")
