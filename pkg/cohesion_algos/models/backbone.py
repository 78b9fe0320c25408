from abc import ABCMeta, abstractmethod
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from cohesion_algos.autograd import Tensor, as_tensor
from cohesion_algos.errors import ConfigurationError, DimensionError
from cohesion_algos.modules import Activation, Conv2d, GlobalAveragePool, Module


class Backbone(Module, metaclass=ABCMeta):
    """Any feature extractor mapping images (b, c, h, w) to features (b, feature_width)."""

    @property
    @abstractmethod
    def feature_width(self) -> int:
        raise NotImplementedError()


@dataclass(frozen=True)
class BackboneConfig:
    image_size: Tuple[int, int] = (96, 96)
    in_channels: int = 3
    channels: Tuple[int, ...] = (32, 64, 128)
    kernels: Tuple[int, ...] = (5, 3, 3)
    strides: Tuple[int, ...] = (2, 2, 2)
    activation: str = "swish"

    def __post_init__(self):
        for name in ("image_size", "channels", "kernels", "strides"):
            object.__setattr__(self, name, tuple(int(v) for v in getattr(self, name)))
        if not (len(self.channels) == len(self.kernels) == len(self.strides) >= 1):
            raise ConfigurationError("channels, kernels and strides must have equal length")
        if self.activation not in ("relu", "swish"):
            raise ConfigurationError(f"unknown activation {self.activation!r}")
        h, w = self.image_size
        for k, s in zip(self.kernels, self.strides):
            if k > h or k > w:
                raise ConfigurationError(f"image {self.image_size} is too small for the backbone")
            h, w = (h - k) // s + 1, (w - k) // s + 1


class ConvBackbone(Backbone):
    """Strided valid convolutions with activations, then global average pooling."""

    def __init__(self, config: BackboneConfig = BackboneConfig(), rng=None):
        super().__init__()
        self.config = config
        rng = rng if rng is not None else np.random.default_rng(0)
        in_channels = config.in_channels
        self.num_blocks = len(config.channels)
        for i, (c, k, s) in enumerate(zip(config.channels, config.kernels, config.strides)):
            setattr(self, f"conv{i}", Conv2d(in_channels, c, k, stride=s, rng=rng))
            in_channels = c
        self.activation = Activation(config.activation)
        self.pool = GlobalAveragePool()

    @property
    def feature_width(self) -> int:
        return self.config.channels[-1]

    def forward(self, images) -> Tensor:
        x = as_tensor(images, dtype=self.conv0.weight.dtype)
        expected = (self.config.in_channels,) + self.config.image_size
        if x.ndim != 4 or x.shape[1:] != expected:
            raise DimensionError(f"images must be (b, {expected})", x.shape)
        for i in range(self.num_blocks):
            x = self.activation(getattr(self, f"conv{i}")(x))
        return self.pool(x)
