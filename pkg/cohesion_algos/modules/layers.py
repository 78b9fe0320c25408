from typing import Optional

import numpy as np

from cohesion_algos.autograd import Tensor, as_tensor
from cohesion_algos.autograd import functional as F
from cohesion_algos.errors import DimensionError
from cohesion_algos.modules.init import conv_init, dense_init
from cohesion_algos.modules.module import Module, Parameter


def _rng(rng: Optional[np.random.Generator]) -> np.random.Generator:
    return rng if rng is not None else np.random.default_rng(0)


class Dense(Module):
    """``x @ weight + bias`` with ``weight`` of shape (in_features, out_features)."""

    def __init__(
        self,
        in_features: int,
        out_features: int,
        bias: bool = True,
        rng: Optional[np.random.Generator] = None,
        dtype=np.float32,
    ):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        self.weight = Parameter(np.zeros((in_features, out_features), dtype=dtype))
        self.bias = Parameter(np.zeros(out_features, dtype=dtype)) if bias else None
        dense_init(self, _rng(rng))

    def forward(self, x: Tensor) -> Tensor:
        x = as_tensor(x)
        if x.shape[-1] != self.in_features:
            raise DimensionError(
                f"{self.__class__.__name__} expects {self.in_features} input features",
                x.shape,
                self.weight.shape,
            )
        if x.ndim == 1:
            y = F.matmul(x.reshape(1, -1), self.weight).reshape(-1)
        else:
            y = F.matmul(x, self.weight)
        return y + self.bias if self.bias is not None else y

    def extra_repr(self) -> str:
        return f"{self.in_features}, {self.out_features}, bias={self.bias is not None}"


class Conv2d(Module):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        stride: int = 1,
        bias: bool = True,
        rng: Optional[np.random.Generator] = None,
        dtype=np.float32,
    ):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.stride = stride
        self.weight = Parameter(
            np.zeros((out_channels, in_channels, kernel_size, kernel_size), dtype=dtype)
        )
        self.bias = Parameter(np.zeros((out_channels, 1, 1), dtype=dtype)) if bias else None
        conv_init(self, _rng(rng))

    def forward(self, x: Tensor) -> Tensor:
        y = F.conv2d(x, self.weight, stride=self.stride)
        return y + self.bias if self.bias is not None else y

    def extra_repr(self) -> str:
        return (
            f"{self.in_channels}, {self.out_channels}, kernel_size={self.kernel_size}, "
            f"stride={self.stride}"
        )


class BatchNorm(Module):
    def __init__(
        self,
        num_features: int,
        axis: int = -1,
        momentum: float = 0.9,
        eps: float = 1e-5,
        dtype=np.float32,
    ):
        super().__init__()
        self.num_features = num_features
        self.axis = axis
        self.momentum = momentum
        self.eps = eps
        self.gamma = Parameter(np.ones(num_features, dtype=dtype))
        self.beta = Parameter(np.zeros(num_features, dtype=dtype))
        self.register_buffer("running_mean", np.zeros(num_features, dtype=dtype))
        self.register_buffer("running_var", np.ones(num_features, dtype=dtype))

    def forward(self, x: Tensor) -> Tensor:
        return F.batch_norm(
            x,
            self.gamma,
            self.beta,
            running_mean=self.running_mean,
            running_var=self.running_var,
            training=self.training,
            momentum=self.momentum,
            eps=self.eps,
            axis=self.axis,
        )

    def extra_repr(self) -> str:
        return f"{self.num_features}, axis={self.axis}"


class Activation(Module):
    def __init__(self, name: str = "relu"):
        super().__init__()
        self.name = name
        self.fn = F.activation(name)

    def forward(self, x: Tensor) -> Tensor:
        return self.fn(x)

    def extra_repr(self) -> str:
        return self.name


class GlobalAveragePool(Module):
    """(b, c, h, w) -> (b, c)"""

    def forward(self, x: Tensor) -> Tensor:
        return F.mean(x, axis=(2, 3))


class Sequential(Module):
    def __init__(self, *layers: Module):
        super().__init__()
        self.num_layers = len(layers)
        for i, layer in enumerate(layers):
            setattr(self, str(i), layer)

    def __getitem__(self, idx: int) -> Module:
        return getattr(self, str(idx % self.num_layers))

    def __len__(self):
        return self.num_layers

    def __iter__(self):
        return (self[i] for i in range(self.num_layers))

    def forward(self, x: Tensor) -> Tensor:
        for layer in self:
            x = layer(x)
        return x
