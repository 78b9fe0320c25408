from abc import ABCMeta, abstractmethod
from collections import OrderedDict
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from cohesion_algos.errors import ArchitectureMismatchError
from cohesion_algos.modules import Parameter
from cohesion_algos.optimizers.config import OptimizerConfig
from cohesion_algos.optimizers.steps import AdamState, adam_step, sgd_step


class Optimizer(object, metaclass=ABCMeta):
    """Updates ``params`` in place from their accumulated ``grad`` buffers.

    A parameter whose ``grad`` is ``None`` is treated as having a zero gradient.
    """

    def __init__(self, params: Sequence[Parameter], config: OptimizerConfig):
        self.params: List[Parameter] = list(params)
        self.config = config
        self.epoch = 1

    @property
    def lr(self) -> float:
        return self.config.lr_at(self.epoch)

    def set_epoch(self, epoch: int) -> None:
        self.epoch = epoch

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def _grads(self) -> List[np.ndarray]:
        return [p.grad if p.grad is not None else np.zeros_like(p.data) for p in self.params]

    @abstractmethod
    def step(self) -> None:
        raise NotImplementedError()

    @abstractmethod
    def state_dict(self) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
        """(scalar metadata, named arrays) for checkpointing."""
        raise NotImplementedError()

    @abstractmethod
    def load_state_dict(self, meta: Dict[str, Any], tensors: Dict[str, np.ndarray]) -> None:
        raise NotImplementedError()

    def _slots(self, tensors: Dict[str, np.ndarray], slot: str) -> List[np.ndarray]:
        try:
            arrays = [tensors[f"{slot}/{i}"] for i in range(len(self.params))]
        except KeyError as e:
            raise ArchitectureMismatchError(f"optimizer state lacks {e.args[0]!r}") from None
        return [a.astype(p.dtype) for a, p in zip(arrays, self.params)]


class SGD(Optimizer):
    """Stochastic gradient descent with (heavy-ball) momentum."""

    def __init__(self, params: Sequence[Parameter], config: OptimizerConfig):
        super().__init__(params, config)
        self.velocities = [np.zeros_like(p.data) for p in self.params]

    def step(self) -> None:
        new_params, self.velocities = sgd_step(
            [p.data for p in self.params],
            self._grads(),
            self.velocities,
            self.lr,
            self.config.momentum,
        )
        for p, data in zip(self.params, new_params):
            p.data = data

    def state_dict(self):
        tensors = OrderedDict((f"velocity/{i}", v) for i, v in enumerate(self.velocities))
        return {"kind": "sgd", "epoch": self.epoch}, tensors

    def load_state_dict(self, meta, tensors):
        self.epoch = meta["epoch"]
        self.velocities = self._slots(tensors, "velocity")


class Adam(Optimizer):
    def __init__(self, params: Sequence[Parameter], config: OptimizerConfig):
        super().__init__(params, config)
        self.state = AdamState.zeros_like([p.data for p in self.params])

    def step(self) -> None:
        new_params, self.state = adam_step(
            [p.data for p in self.params],
            self._grads(),
            self.state,
            self.config.lr,
            betas=self.config.betas,
            eps=self.config.eps,
            epoch=self.epoch,
            decay=self.config.decay,
        )
        for p, data in zip(self.params, new_params):
            p.data = data

    def state_dict(self):
        tensors = OrderedDict()
        for i, (m, v) in enumerate(zip(self.state.m, self.state.v)):
            tensors[f"m/{i}"] = m
            tensors[f"v/{i}"] = v
        return {"kind": "adam", "epoch": self.epoch, "t": self.state.t}, tensors

    def load_state_dict(self, meta, tensors):
        self.epoch = meta["epoch"]
        self.state = AdamState(self._slots(tensors, "m"), self._slots(tensors, "v"), meta["t"])


def build_optimizer(params: Sequence[Parameter], config: OptimizerConfig) -> Optimizer:
    return {"sgd": SGD, "adam": Adam}[config.kind](params, config)
