from typing import Dict, Iterable, List, Optional

import numpy as np


def mean_or_nan(data: Iterable, weights: Optional[Iterable] = None):
    data = list(data)
    if len(data) == 0:
        return float("nan")
    elif weights is None:
        return float(np.mean(data))
    else:
        return float(np.average(data, weights=list(weights)))


class Statistics(object):
    """Collects per-batch scalars and reduces them when flushed.

    >>> stats = Statistics()
    >>> stats("loss").append(1.0)
    >>> stats.flush()
    {'loss_mean': 1.0}

    Values recorded with :meth:`add` carry a weight (e.g. the batch length) and their
    ``mean`` is the weighted one.
    """

    def __init__(self) -> None:
        self._memory: Dict[str, dict] = dict()

    def __call__(self, key, methods=("mean",)) -> List[float]:
        if key not in self._memory:
            self._memory[key] = {"data": list(), "weights": None, "methods": tuple(methods)}
        return self._memory[key]["data"]

    def __contains__(self, key) -> bool:
        return key in self._memory

    def add(self, key, value, weight: float = 1.0, methods=("mean",)) -> None:
        data = self(key, methods)
        memory = self._memory[key]
        if memory["weights"] is None:
            assert not data, f"{key} mixes weighted and unweighted values"
            memory["weights"] = list()
        data.append(value)
        memory["weights"].append(weight)

    def flush(self) -> Dict[str, float]:
        stats = {}

        for key, memory in self._memory.items():
            for method in memory["methods"]:
                stats[f"{key}_{method}"] = {
                    "mean": lambda x: mean_or_nan(x, memory["weights"]),
                    "var": lambda x: float(np.var(x, axis=0)),
                    "max": lambda x: float(np.max(x, axis=0)),
                    "min": lambda x: float(np.min(x, axis=0)),
                    "latest": lambda x: float(x[-1]),
                }[method](memory["data"])

        self._memory.clear()

        return stats
