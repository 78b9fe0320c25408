import dataclasses
import json
from abc import ABCMeta, abstractmethod
from collections import OrderedDict
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from cohesion_algos.autograd import Tensor
from cohesion_algos.models.checkpoint import ModelCheckpoint, fingerprint
from cohesion_algos.modules import Module, Parameter, evaluating


class CheckpointSavingMixin(object):
    """Mixin that gathers the state of ``saved_attributes`` under dotted prefixes.

    Attributes that are themselves saving mixins are expanded recursively, so a pipeline
    model stores e.g. ``capsnet.conv.weight`` next to ``head.dense1.weight``.
    """

    @property
    def saved_attributes(self) -> Tuple[str, ...]:
        return tuple(self._modules)

    def checkpoint_state(self) -> Dict[str, np.ndarray]:
        return self.__collect("", [])

    def __collect(self, prefix: str, ancestors: List[Any]) -> Dict[str, np.ndarray]:
        state: Dict[str, np.ndarray] = OrderedDict()
        ancestors.append(self)
        for attr in self.saved_attributes:
            assert hasattr(self, attr)
            value = getattr(self, attr)
            if value is None:
                continue
            if isinstance(value, CheckpointSavingMixin):
                assert not any(
                    value is ancestor for ancestor in ancestors
                ), "Avoid an infinite loop"
                state.update(value.__collect(f"{prefix}{attr}.", ancestors))
            else:
                for name, array in value.state_dict().items():
                    state[f"{prefix}{attr}.{name}"] = array
        ancestors.pop()
        return state

    def load_checkpoint_state(self, state: Dict[str, np.ndarray]) -> None:
        for attr in self.saved_attributes:
            value = getattr(self, attr)
            if value is None:
                continue
            head = f"{attr}."
            own = OrderedDict((k[len(head) :], v) for k, v in state.items() if k.startswith(head))
            if isinstance(value, CheckpointSavingMixin):
                value.load_checkpoint_state(own)
            else:
                value.load_state_dict(own)


class ModelBase(CheckpointSavingMixin, Module, metaclass=ABCMeta):
    """Abstract trainable model.

    A model turns a batch (mapping of field name to array) into a scalar loss and into
    predictions, and describes its own architecture so a checkpoint can rebuild it.
    """

    kind = "model"

    @property
    @abstractmethod
    def architecture(self) -> Dict[str, Any]:
        raise NotImplementedError()

    @classmethod
    def from_architecture(cls, architecture: Dict[str, Any]) -> "ModelBase":
        raise NotImplementedError()

    @abstractmethod
    def compute_loss(self, batch) -> Tuple[Tensor, Dict[str, float]]:
        """Scalar training loss and its named components for logging."""
        raise NotImplementedError()

    @abstractmethod
    def predict(self, batch) -> Dict[str, np.ndarray]:
        """``gcs`` (b,) on [0, 3] and/or ``emotion`` (b, classes) probabilities."""
        raise NotImplementedError()

    def prepare(self, dataset) -> None:
        """Fit data-dependent state (e.g. feature statistics) before training."""

    @property
    def fingerprint(self) -> str:
        return fingerprint(self.architecture)

    def trainable_parameters(self) -> List[Parameter]:
        return [p for p in self.parameters() if p.requires_grad]

    def eval_mode(self):
        return evaluating(self)

    def save(
        self, path: str, seed: Optional[int] = None, metrics: Optional[Dict[str, float]] = None
    ) -> ModelCheckpoint:
        checkpoint = ModelCheckpoint.from_model(self, seed=seed, metrics=metrics)
        checkpoint.save(path)
        return checkpoint

    def load(self, path: str) -> ModelCheckpoint:
        checkpoint = ModelCheckpoint.load(path)
        checkpoint.restore_into(self)
        return checkpoint

    @staticmethod
    def _asdict(config) -> Dict[str, Any]:
        """JSON-ready copy of a config dataclass (tuples become lists)."""
        return json.loads(json.dumps(dataclasses.asdict(config)))
