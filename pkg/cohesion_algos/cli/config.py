import argparse
import dataclasses
import json
import os
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

from cohesion_algos.errors import ConfigurationError
from cohesion_algos.optimizers import DecaySchedule, OptimizerConfig
from cohesion_algos.stats import WEIGHTINGS

COMMANDS = ("train", "eval", "crossval", "stats", "saliency", "synth")
MODEL_CHOICES = ("face-level", "image-level", "image-emotion", "multitask", "capsnet-pretrain")
IMAGE_MODELS = ("image-level", "image-emotion", "multitask")

# optimizer defaults per model kind
MODEL_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "face-level": {"optimizer": "sgd", "lr": 0.01},
    "image-level": {"optimizer": "sgd", "lr": 0.001},
    "image-emotion": {"optimizer": "sgd", "lr": 0.001},
    "multitask": {"optimizer": "sgd", "lr": 0.001},
    "capsnet-pretrain": {"optimizer": "adam", "lr": 0.001, "decay": 0.001},
}

_PATHS = ("manifest", "out", "capsnet", "checkpoint", "annotations", "image")
_REQUIRED = {
    "train": ("manifest",),
    "eval": ("manifest", "checkpoint"),
    "crossval": ("manifest",),
    "stats": ("annotations",),
    "saliency": ("checkpoint", "image"),
    "synth": (),
}


@dataclass(frozen=True)
class RunConfig:
    """Everything one CLI invocation needs, after merging flags, config file and defaults."""

    command: str
    manifest: Optional[str] = None
    model: str = "face-level"
    optimizer: Optional[str] = None
    lr: Optional[float] = None
    lrs: Tuple[float, ...] = ()
    momentum: Optional[float] = None
    decay: Optional[float] = None
    decay_every: int = 10
    decay_rule: str = "subtractive"
    alpha: Optional[float] = None
    epochs: int = 30
    batch: int = 16
    seed: int = 0
    out: Optional[str] = None
    capsnet: Optional[str] = None
    capsnet_epochs: int = 5
    segmented: bool = False
    checkpoint: Optional[str] = None
    split: str = "val"
    k: int = 5
    workers: int = 1
    annotations: Optional[str] = None
    weighting: str = "linear"
    image: Optional[str] = None
    num_samples: int = 100
    faces_min: int = 1
    faces_max: int = 9
    noise: float = 0.05
    masks: bool = True

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigurationError(f"unknown command {self.command!r}")
        if self.model not in MODEL_CHOICES:
            raise ConfigurationError(f"unknown model {self.model!r}; choose from {MODEL_CHOICES}")
        for name in _REQUIRED[self.command]:
            if getattr(self, name) is None:
                raise ConfigurationError(f"{self.command} needs --{name}")
        for name in _PATHS:
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, os.path.abspath(os.path.expanduser(value)))
        object.__setattr__(self, "lrs", tuple(float(lr) for lr in self.lrs))

        uses_model = self.command in ("train", "crossval")
        if uses_model and self.alpha is not None and self.model != "multitask":
            raise ConfigurationError("--alpha only applies to the multitask model")
        if uses_model and self.segmented and self.model not in IMAGE_MODELS:
            raise ConfigurationError("--segmented only applies to image-level models")
        if uses_model and self.capsnet is not None and self.model != "face-level":
            raise ConfigurationError("--capsnet only applies to the face-level model")
        if self.optimizer_kind == "adam" and self.momentum is not None:
            raise ConfigurationError("--momentum conflicts with the adam optimizer")
        if self.command == "crossval" and self.model in ("capsnet-pretrain", "image-emotion"):
            raise ConfigurationError("cross-validation reports cohesion MSE; pick a cohesion model")
        if self.command != "crossval" and self.lrs:
            raise ConfigurationError("repeated --lr is only accepted by crossval")
        for name in ("epochs", "batch", "capsnet_epochs", "workers", "num_samples"):
            if getattr(self, name) < (0 if name == "num_samples" else 1):
                raise ConfigurationError(f"--{name.replace('_', '-')} must be positive")
        if self.k < 2:
            raise ConfigurationError(f"k must be at least 2, got {self.k}")
        if self.weighting not in WEIGHTINGS:
            raise ConfigurationError(f"unknown weighting {self.weighting!r}")
        if self.split not in ("train", "val", "test"):
            raise ConfigurationError(f"unknown split {self.split!r}")

    @property
    def optimizer_kind(self) -> str:
        return self.optimizer or MODEL_DEFAULTS[self.model]["optimizer"]

    def optimizer_config(self, lr: Optional[float] = None) -> OptimizerConfig:
        defaults = MODEL_DEFAULTS[self.model]
        decay = self.decay if self.decay is not None else defaults.get("decay")
        return OptimizerConfig(
            kind=self.optimizer_kind,
            lr=lr if lr is not None else (self.lr if self.lr is not None else defaults["lr"]),
            momentum=self.momentum if self.momentum is not None else 0.9,
            decay=DecaySchedule(decay, self.decay_every, self.decay_rule) if decay else None,
        )

    def crossval_lrs(self) -> Tuple[float, ...]:
        if self.lrs:
            return self.lrs
        return (self.lr if self.lr is not None else MODEL_DEFAULTS[self.model]["lr"],)

    def output_dir(self) -> str:
        return self.out if self.out is not None else os.path.abspath("runs")

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


_FIELDS = {f.name for f in dataclasses.fields(RunConfig)} - {"command"}


def load_config_file(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            values = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"cannot read config file {path!r}: {e}") from None
    if not isinstance(values, dict):
        raise ConfigurationError(f"config file {path!r} must hold a JSON object")
    unknown = sorted(set(values) - _FIELDS)
    if unknown:
        raise ConfigurationError(f"unknown keys in config file {path!r}: {unknown}")
    return values


def build_config(args: argparse.Namespace) -> RunConfig:
    """Merge flags over the ``--config`` file over built-in defaults."""
    values: Dict[str, Any] = {}
    config_path = getattr(args, "config", None)
    if config_path is not None:
        values.update(load_config_file(config_path))
    for name, value in vars(args).items():
        if name in _FIELDS and value is not None:
            values[name] = value
    return RunConfig(command=args.command, **values)
