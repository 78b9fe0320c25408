from dataclasses import dataclass
from typing import Optional, Tuple

from cohesion_algos.errors import ConfigurationError

DECAY_RULES = ("subtractive", "inverse-time")


@dataclass(frozen=True)
class DecaySchedule:
    """Learning-rate decay applied at every ``every``-th epoch boundary.

    With ``steps = (epoch - 1) // every``:

    - ``subtractive``: ``lr0 * (1 - amount * steps)``, never below ``floor_fraction * lr0``
    - ``inverse-time``: ``lr0 / (1 + amount * steps)``
    """

    amount: float = 0.001
    every: int = 10
    rule: str = "subtractive"
    floor_fraction: float = 0.1

    def __post_init__(self):
        if self.amount < 0:
            raise ConfigurationError(f"decay amount must be non-negative, got {self.amount}")
        if self.every < 1:
            raise ConfigurationError(f"decay interval must be positive, got {self.every}")
        if self.rule not in DECAY_RULES:
            raise ConfigurationError(f"unknown decay rule {self.rule!r}; choose from {DECAY_RULES}")
        if not 0 <= self.floor_fraction <= 1:
            raise ConfigurationError("floor_fraction must lie in [0, 1]")

    def steps(self, epoch: int) -> int:
        return max(epoch - 1, 0) // self.every

    def lr_at(self, lr0: float, epoch: int) -> float:
        steps = self.steps(epoch)
        if self.rule == "subtractive":
            return max(lr0 * (1 - self.amount * steps), self.floor_fraction * lr0)
        return lr0 / (1 + self.amount * steps)


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "sgd"
    lr: float = 0.01
    momentum: float = 0.9
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    decay: Optional[DecaySchedule] = None

    def __post_init__(self):
        kind = {"sgd-momentum": "sgd"}.get(self.kind, self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if isinstance(self.decay, dict):
            object.__setattr__(self, "decay", DecaySchedule(**self.decay))
        if kind not in ("sgd", "adam"):
            raise ConfigurationError(f"unknown optimizer {self.kind!r}; choose sgd or adam")
        # lr = 0 is allowed
        if self.lr < 0:
            raise ConfigurationError(f"learning rate must be non-negative, got {self.lr}")
        if not 0 <= self.momentum < 1:
            raise ConfigurationError(f"momentum must lie in [0, 1), got {self.momentum}")
        if len(self.betas) != 2 or not all(0 <= b < 1 for b in self.betas):
            raise ConfigurationError(f"betas must lie in [0, 1), got {self.betas}")
        if self.eps <= 0:
            raise ConfigurationError(f"eps must be positive, got {self.eps}")

    def lr_at(self, epoch: int) -> float:
        return self.decay.lr_at(self.lr, epoch) if self.decay is not None else self.lr
