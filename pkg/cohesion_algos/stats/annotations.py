import csv
import os

import numpy as np

from cohesion_algos.errors import CohesionError, SchemaError
from cohesion_algos.labels import NUM_LEVELS
from cohesion_algos.stats.agreement import AnnotationMatrix

ITEM_COLUMN = "item"


def read_annotations(path: str, num_levels: int = NUM_LEVELS) -> AnnotationMatrix:
    """Read a comma-separated annotation table.

    The header row names the raters; every further row holds one item's integer levels.
    A leading ``item`` column, when present, carries item ids.
    """
    if not os.path.isfile(path):
        raise CohesionError(f"annotation file {path!r} does not exist")
    with open(path, "r", encoding="utf-8", newline="") as f:
        rows = [(n, row) for n, row in enumerate(csv.reader(f), start=1) if any(row)]
    if not rows:
        raise SchemaError(f"line 1: {path} is empty; expected a header of rater ids")
    _, header = rows[0]
    header = [cell.strip() for cell in header]
    has_items = header[0].lower() == ITEM_COLUMN
    raters = header[1:] if has_items else header

    labels, items = [], []
    for line, row in rows[1:]:
        row = [cell.strip() for cell in row]
        if has_items:
            items.append(row[0])
            row = row[1:]
        if len(row) != len(raters):
            raise SchemaError(f"line {line}: expected {len(raters)} labels, found {len(row)}")
        try:
            values = [int(cell) for cell in row]
        except ValueError:
            raise SchemaError(f"line {line}: labels must be integers, got {row}") from None
        if any(not 0 <= v < num_levels for v in values):
            raise SchemaError(f"line {line}: labels must lie in [0, {num_levels - 1}]")
        labels.append(values)
    return AnnotationMatrix(
        np.array(labels, dtype=np.int64).reshape(len(labels), len(raters)),
        raters=tuple(raters),
        items=tuple(items),
        num_levels=num_levels,
    )


def write_annotations(m: AnnotationMatrix, path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(([ITEM_COLUMN] if m.items else []) + list(m.raters))
        for i, row in enumerate(m.labels.tolist()):
            writer.writerow(([m.items[i]] if m.items else []) + row)
