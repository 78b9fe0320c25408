from collections import OrderedDict
from typing import Dict, Iterator, List, Optional, Sequence, Union

import numpy as np

from cohesion_algos.errors import DimensionError, EmptyDatasetError


class ArrayDataset(object):
    """Named, equally long arrays (``gcs``, ``emotion``, ``pooled``, ``features`` ...).

    Indexing with a field name returns the array; indexing with an int, slice or index
    array returns a new dataset holding those rows.
    """

    def __init__(
        self,
        ids: Optional[Sequence[str]] = None,
        skipped: Optional[Sequence[str]] = None,
        **fields: np.ndarray,
    ):
        self.fields: Dict[str, np.ndarray] = OrderedDict(
            (name, np.asarray(value)) for name, value in fields.items()
        )
        lengths = {name: len(value) for name, value in self.fields.items()}
        if len(set(lengths.values())) > 1:
            raise DimensionError(f"dataset fields differ in length: {lengths}")
        n = next(iter(lengths.values()), 0)
        self.ids: List[str] = list(ids) if ids is not None else [str(i) for i in range(n)]
        if len(self.ids) != n:
            raise DimensionError(f"{len(self.ids)} ids for {n} rows")
        self.skipped: List[str] = list(skipped or [])

    def __contains__(self, name: str) -> bool:
        return name in self.fields

    def __getitem__(self, idx: Union[str, int, slice, np.ndarray]):
        if isinstance(idx, str):
            return self.fields[idx]
        if isinstance(idx, (int, np.integer)):
            idx = [idx]
        rows = np.arange(len(self))[idx]
        return ArrayDataset(
            ids=[self.ids[i] for i in rows],
            skipped=self.skipped,
            **{name: value[rows] for name, value in self.fields.items()},
        )

    def __len__(self) -> int:
        return len(self.ids)

    def keys(self):
        return self.fields.keys()

    def with_fields(self, **fields: np.ndarray) -> "ArrayDataset":
        merged = OrderedDict(self.fields)
        merged.update(fields)
        return ArrayDataset(ids=self.ids, skipped=self.skipped, **merged)

    def batches(
        self,
        batch_size: int,
        shuffle: bool = True,
        rng: Optional[np.random.Generator] = None,
        min_size: int = 1,
    ) -> Iterator["ArrayDataset"]:
        """Consecutive batches; the last one may be smaller.

        A trailing remainder shorter than ``min_size`` is merged into the previous batch.
        """
        if len(self) == 0:
            raise EmptyDatasetError("cannot iterate over an empty dataset")
        order = np.arange(len(self))
        if shuffle:
            order = (rng if rng is not None else np.random.default_rng()).permutation(order)
        starts = list(range(0, len(self), batch_size))
        if len(starts) > 1 and len(self) - starts[-1] < min_size:
            starts.pop()
        ends = starts[1:] + [len(self)]
        for start, end in zip(starts, ends):
            yield self[order[start:end]]

    @staticmethod
    def concatenate(datasets: Sequence["ArrayDataset"]) -> "ArrayDataset":
        assert datasets
        names = list(datasets[0].fields)
        return ArrayDataset(
            ids=[i for d in datasets for i in d.ids],
            skipped=[i for d in datasets for i in d.skipped],
            **{name: np.concatenate([d.fields[name] for d in datasets]) for name in names},
        )
