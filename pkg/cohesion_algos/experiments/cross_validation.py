import dataclasses
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Sequence

import numpy as np

from cohesion_algos.errors import ConfigurationError, ContractError
from cohesion_algos.experiments.evaluator import evaluate
from cohesion_algos.experiments.training import fit
from cohesion_algos.optimizers import OptimizerConfig
from cohesion_algos.utils import logger as package_logger


@dataclass(frozen=True)
class FoldAssignment:
    """``folds[i]`` is the fold of sample ``i``."""

    k: int
    folds: np.ndarray

    def sizes(self) -> List[int]:
        return np.bincount(self.folds, minlength=self.k).tolist()

    def indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.folds == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.folds != fold)

    def to_dict(self) -> Dict[str, Any]:
        return {"k": self.k, "folds": self.folds.tolist()}


def kfold_split(n: int, k: int, seed: int = 0) -> FoldAssignment:
    """Shuffled partition of ``range(n)`` into ``k`` folds.

    The first ``n % k`` folds hold one sample more than the others.
    """
    if k < 2:
        raise ConfigurationError(f"k must be at least 2, got {k}")
    if k > n:
        raise ConfigurationError(f"cannot split {n} samples into {k} folds")
    order = np.random.default_rng(seed).permutation(n)
    folds = np.empty(n, dtype=np.int64)
    base, extra = divmod(n, k)
    start = 0
    for fold in range(k):
        size = base + (1 if fold < extra else 0)
        folds[order[start : start + size]] = fold
        start += size
    return FoldAssignment(k, folds)


def lr_key(lr: float) -> str:
    return f"{lr:g}"


@dataclass
class CrossValReport:
    """Validation MSE of every fold for every learning rate, plus their average."""

    k: int
    seed: int
    lrs: List[float]
    fold_sizes: List[int]
    rows: List[Dict[str, float]] = field(default_factory=list)

    @property
    def average(self) -> Dict[str, float]:
        return {
            lr_key(lr): float(np.mean([row[lr_key(lr)] for row in self.rows])) for lr in self.lrs
        }

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "seed": self.seed,
            "lrs": list(self.lrs),
            "fold_sizes": list(self.fold_sizes),
            "folds": [dict(row, fold=i + 1) for i, row in enumerate(self.rows)],
            "average": self.average,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_table(self) -> str:
        """Fold rows followed by an ``Average`` row, one MSE column per learning rate."""
        header = ["Fold"] + [f"lr={lr_key(lr)}" for lr in self.lrs]
        lines = ["\t".join(header)]
        for i, row in enumerate(self.rows):
            lines.append("\t".join([str(i + 1)] + [f"{row[lr_key(lr)]:.5f}" for lr in self.lrs]))
        average = self.average
        lines.append("\t".join(["Average"] + [f"{average[lr_key(lr)]:.5f}" for lr in self.lrs]))
        return "\n".join(lines)


def cross_validate(
    model_factory: Callable[[], Any],
    dataset,
    k: int = 5,
    lrs: Sequence[float] = (0.001,),
    optimizer_config: OptimizerConfig = OptimizerConfig(),
    epochs: int = 30,
    batch_size: int = 16,
    seed: int = 0,
    workers: int = 1,
    logger: logging.Logger = package_logger,
) -> CrossValReport:
    """Train one fresh model per (fold, learning rate) on the fold's complement.

    The held-out fold is only ever scored; best-epoch selection inside ``fit`` sees the
    training complement alone.

    Runs are independent and may use ``workers`` threads; the report is ordered by fold
    regardless of completion order.
    """
    if not lrs:
        raise ConfigurationError("at least one learning rate is required")
    logger = logger.getChild("crossval")
    assignment = kfold_split(len(dataset), k, seed)
    jobs = [(fold, lr) for fold in range(k) for lr in lrs]

    def run(job) -> float:
        fold, lr = job
        model = model_factory()
        fit(
            model,
            dataset[assignment.train_indices(fold)],
            dataclasses.replace(optimizer_config, lr=lr),
            epochs=epochs,
            batch_size=batch_size,
            seed=seed,
            logger=logger,
        )
        metrics = evaluate(model, dataset[assignment.indices(fold)])
        if metrics.mse is None:
            raise ContractError(f"{model.kind} models predict no cohesion score")
        logger.info(f"fold {fold + 1}/{k} lr: {lr:g} mse: {metrics.mse:.5f}")
        return metrics.mse

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(run, jobs))

    report = CrossValReport(k=k, seed=seed, lrs=list(lrs), fold_sizes=assignment.sizes())
    scores = dict(zip(jobs, results))
    for fold in range(k):
        report.rows.append({lr_key(lr): scores[(fold, lr)] for lr in lrs})
    return report
