import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from cohesion_algos.autograd import no_grad
from cohesion_algos.errors import (
    ConfigurationError,
    DivergenceError,
    EmptyDatasetError,
    NumericalError,
)
from cohesion_algos.experiments.evaluator import Evaluator
from cohesion_algos.models import ModelCheckpoint
from cohesion_algos.modules import BatchNorm
from cohesion_algos.optimizers import OptimizerConfig, build_optimizer
from cohesion_algos.utils import Statistics
from cohesion_algos.utils import logger as package_logger


@dataclass
class EpochRecord:
    epoch: int
    lr: float
    train: Dict[str, float]
    validation_loss: Optional[float] = None
    best_validation_loss: Optional[float] = None
    metrics: Optional[Dict[str, Any]] = None


@dataclass
class TrainRunReport:
    kind: str
    fingerprint: str
    seed: int
    optimizer: Dict[str, Any]
    batch_size: int
    epochs: List[EpochRecord] = field(default_factory=list)
    best_epoch: Optional[int] = None
    final_metrics: Dict[str, Any] = field(default_factory=dict)
    skipped: List[str] = field(default_factory=list)
    duration_seconds: float = 0.0

    @property
    def train_losses(self) -> List[float]:
        return [record.train["loss_mean"] for record in self.epochs]

    @property
    def validation_losses(self) -> List[Optional[float]]:
        return [record.validation_loss for record in self.epochs]

    @property
    def best_validation_curve(self) -> List[Optional[float]]:
        return [record.best_validation_loss for record in self.epochs]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_json() + "\n")

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "TrainRunReport":
        d = dict(d)
        d["epochs"] = [EpochRecord(**record) for record in d.get("epochs", [])]
        return cls(**d)

    @classmethod
    def load(cls, path: str) -> "TrainRunReport":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


def has_batch_norm(model) -> bool:
    return any(isinstance(m, BatchNorm) for _, m in model.named_modules())


def dataset_loss(model, dataset, batch_size: int = 256) -> float:
    """Sample-weighted mean of the model loss over ``dataset`` in evaluation mode."""
    total = 0.0
    with no_grad(), model.eval_mode():
        for batch in dataset.batches(batch_size, shuffle=False):
            loss, _ = model.compute_loss(batch)
            total += loss.item() * len(batch)
    return total / len(dataset)


def _optimizer_dict(config: OptimizerConfig) -> Dict[str, Any]:
    return json.loads(json.dumps(asdict(config)))


def fit(
    model,
    dataset,
    optimizer_config: OptimizerConfig = OptimizerConfig(),
    epochs: int = 30,
    batch_size: int = 16,
    seed: int = 0,
    validation=None,
    shuffle: bool = True,
    evaluator: Optional[Evaluator] = None,
    logger: logging.Logger = package_logger,
) -> Tuple[TrainRunReport, ModelCheckpoint]:
    """Train ``model`` on ``dataset`` and keep its parameters of lowest validation loss.

    Batch order is drawn from ``seed`` every epoch. Without ``validation`` the epoch's
    mean training loss selects the best parameters instead. On return ``model`` holds
    the selected parameters, which are also returned as a checkpoint. Epoch losses are
    means over samples, so they do not depend on how the samples fall into batches.
    """
    if len(dataset) == 0:
        raise EmptyDatasetError("cannot train on an empty dataset")
    if epochs < 1:
        raise ConfigurationError(f"epochs must be positive, got {epochs}")
    batch_norm = has_batch_norm(model)
    if batch_size < (2 if batch_norm else 1):
        raise ConfigurationError(f"batch size {batch_size} is too small for batch norm")
    if batch_norm and len(dataset) < 2:
        raise ConfigurationError("batch norm needs at least two training samples")

    logger = logger.getChild("fit")
    start = time.perf_counter()
    model.prepare(dataset)
    optimizer = build_optimizer(model.trainable_parameters(), optimizer_config)
    rng = np.random.default_rng(seed)
    report = TrainRunReport(
        kind=model.kind,
        fingerprint=model.fingerprint,
        seed=seed,
        optimizer=_optimizer_dict(optimizer_config),
        batch_size=batch_size,
        skipped=list(dataset.skipped),
    )
    stats = Statistics()
    best_loss = math.inf
    best: Optional[ModelCheckpoint] = None

    for epoch in range(1, epochs + 1):
        optimizer.set_epoch(epoch)
        model.train()
        batches = dataset.batches(batch_size, shuffle, rng, min_size=2 if batch_norm else 1)
        for index, batch in enumerate(batches):
            optimizer.zero_grad()
            try:
                loss, parts = model.compute_loss(batch)
                if not np.isfinite(loss.item()):
                    raise DivergenceError(epoch, index)
                loss.backward()
            except NumericalError as e:
                raise DivergenceError(epoch, index, str(e)) from e
            optimizer.step()
            stats.add("loss", loss.item(), weight=len(batch))
            for key, value in parts.items():
                stats.add(key, value, weight=len(batch))
        train = stats.flush()

        validation_loss = dataset_loss(model, validation) if validation is not None else None
        criterion = validation_loss if validation_loss is not None else train["loss_mean"]
        if not math.isfinite(criterion):
            raise DivergenceError(epoch, -1, "validation loss is not finite")
        if criterion < best_loss:
            best_loss = criterion
            report.best_epoch = epoch
            best = ModelCheckpoint.from_model(
                model, seed=seed, metrics={"epoch": epoch, "loss": criterion}, optimizer=optimizer
            )

        metrics = evaluator.evaluate_if_necessary(epoch, model) if evaluator else None
        record = EpochRecord(
            epoch=epoch,
            lr=optimizer.lr,
            train=train,
            validation_loss=validation_loss,
            best_validation_loss=best_loss if validation_loss is not None else None,
            metrics=metrics.to_dict() if metrics is not None else None,
        )
        report.epochs.append(record)
        logger.info(
            f"epoch {epoch}/{epochs} lr: {record.lr:.6g} train_loss: {train['loss_mean']:.6f}"
            + (f" val_loss: {validation_loss:.6f}" if validation_loss is not None else "")
        )

    assert best is not None
    best.restore_into(model)
    report.final_metrics = dict(best.metrics)
    report.duration_seconds = time.perf_counter() - start
    return report, best
