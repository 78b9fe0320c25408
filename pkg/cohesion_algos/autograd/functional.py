from typing import Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from cohesion_algos.autograd.tensor import Function, Tensor, as_tensor
from cohesion_algos.errors import ConfigurationError, DimensionError

Axis = Optional[Union[int, Tuple[int, ...]]]


def _pair(a, b) -> Tuple[Tensor, Tensor]:
    """Lift python scalars / arrays to tensors sharing the dtype of the tensor operand."""
    if isinstance(a, Tensor) and not isinstance(b, Tensor):
        b = Tensor(b, dtype=a.dtype)
    elif isinstance(b, Tensor) and not isinstance(a, Tensor):
        a = Tensor(a, dtype=b.dtype)
    else:
        a, b = as_tensor(a), as_tensor(b)
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError("operands cannot be broadcast together", a.shape, b.shape)
    return a, b


def _normalize_axis(axis: Axis, ndim: int) -> Optional[Tuple[int, ...]]:
    if axis is None:
        return None
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    normalized = []
    for ax in axes:
        if not -ndim <= ax < ndim:
            raise DimensionError(f"axis {ax} is out of range for a {ndim}-d tensor")
        normalized.append(ax % ndim)
    return tuple(sorted(normalized))


def _expand_reduced(grad: np.ndarray, shape, axes, keepdims: bool) -> np.ndarray:
    if axes is not None and not keepdims:
        grad = np.expand_dims(grad, axes)
    return np.broadcast_to(grad, shape)


# *** elementwise arithmetic ***
class Add(Function):
    def forward(self, a, b):
        return a + b

    def backward(self, grad):
        a, b = self.inputs
        return self.unbroadcast(grad, a.shape), self.unbroadcast(grad, b.shape)


class Sub(Function):
    def forward(self, a, b):
        return a - b

    def backward(self, grad):
        a, b = self.inputs
        return self.unbroadcast(grad, a.shape), self.unbroadcast(-grad, b.shape)


class Mul(Function):
    def forward(self, a, b):
        return a * b

    def backward(self, grad):
        a, b = self.inputs
        return (
            self.unbroadcast(grad * b.data, a.shape),
            self.unbroadcast(grad * a.data, b.shape),
        )


class Div(Function):
    def forward(self, a, b):
        return a / b

    def backward(self, grad):
        a, b = self.inputs
        return (
            self.unbroadcast(grad / b.data, a.shape),
            self.unbroadcast(-grad * a.data / (b.data * b.data), b.shape),
        )


def add(a, b) -> Tensor:
    return Add.apply(*_pair(a, b))


def sub(a, b) -> Tensor:
    return Sub.apply(*_pair(a, b))


def mul(a, b) -> Tensor:
    return Mul.apply(*_pair(a, b))


def div(a, b) -> Tensor:
    return Div.apply(*_pair(a, b))


# *** linear algebra ***
class MatMul(Function):
    def forward(self, a, b):
        return np.matmul(a, b)

    def backward(self, grad):
        a, b = self.inputs
        grad_a = np.matmul(grad, np.swapaxes(b.data, -1, -2))
        grad_b = np.matmul(np.swapaxes(a.data, -1, -2), grad)
        return self.unbroadcast(grad_a, a.shape), self.unbroadcast(grad_b, b.shape)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError("matmul needs (..., n, k) @ (..., k, m)", a.shape, b.shape)
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise DimensionError("matmul batch dimensions do not broadcast", a.shape, b.shape)
    return MatMul.apply(a, b)


class Conv2d(Function):
    def forward(self, x, kernel, stride=1):
        kh, kw = kernel.shape[2:]
        self.stride = stride
        # (b, c, oh, ow, kh, kw) view of every receptive field
        self.windows = sliding_window_view(x, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
        out = np.tensordot(self.windows, kernel, axes=([1, 4, 5], [1, 2, 3]))
        return np.ascontiguousarray(out.transpose(0, 3, 1, 2))

    def backward(self, grad):
        x, kernel = self.inputs
        s = self.stride
        _, _, oh, ow = grad.shape
        kh, kw = kernel.shape[2:]

        grad_kernel = np.tensordot(grad, self.windows, axes=([0, 2, 3], [0, 2, 3]))

        grad_cols = np.tensordot(grad, kernel.data, axes=([1], [0]))  # (b, oh, ow, c, kh, kw)
        grad_x = np.zeros_like(x.data)
        for i in range(kh):
            for j in range(kw):
                grad_x[:, :, i : i + s * (oh - 1) + 1 : s, j : j + s * (ow - 1) + 1 : s] += (
                    grad_cols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
                )
        return grad_x, grad_kernel


def conv2d(x, kernel, stride: int = 1) -> Tensor:
    """Valid cross-correlation of ``x`` (b, c, h, w) with ``kernel`` (f, c, kh, kw)."""
    x, kernel = as_tensor(x), as_tensor(kernel)
    if stride < 1:
        raise ConfigurationError(f"stride must be positive, got {stride}")
    if x.ndim != 4 or kernel.ndim != 4:
        raise DimensionError("conv2d needs 4-d input and kernel", x.shape, kernel.shape)
    if x.shape[1] != kernel.shape[1]:
        raise DimensionError("input channels do not match the kernel", x.shape, kernel.shape)
    if kernel.shape[2] > x.shape[2] or kernel.shape[3] > x.shape[3]:
        raise DimensionError("kernel is larger than the input", x.shape, kernel.shape)
    return Conv2d.apply(x, kernel, stride=stride)


# *** activations ***
def _sigmoid(x: np.ndarray) -> np.ndarray:
    z = np.exp(-np.abs(x))
    return np.where(x >= 0, 1 / (1 + z), z / (1 + z))


class ReLU(Function):
    def forward(self, x):
        return np.maximum(x, 0)

    def backward(self, grad):
        return (grad * (self.inputs[0].data > 0),)


class Sigmoid(Function):
    def forward(self, x):
        self.out = _sigmoid(x)
        return self.out

    def backward(self, grad):
        return (grad * self.out * (1 - self.out),)


class Swish(Function):
    def forward(self, x):
        self.sig = _sigmoid(x)
        return x * self.sig

    def backward(self, grad):
        x = self.inputs[0].data
        return (grad * (self.sig + x * self.sig * (1 - self.sig)),)


class Softmax(Function):
    def forward(self, x, axis=-1):
        self.axis = axis
        e = np.exp(x - np.max(x, axis=axis, keepdims=True))
        self.out = e / np.sum(e, axis=axis, keepdims=True)
        return self.out

    def backward(self, grad):
        y = self.out
        return (y * (grad - np.sum(grad * y, axis=self.axis, keepdims=True)),)


class LogSoftmax(Function):
    def forward(self, x, axis=-1):
        self.axis = axis
        shifted = x - np.max(x, axis=axis, keepdims=True)
        self.out = shifted - np.log(np.sum(np.exp(shifted), axis=axis, keepdims=True))
        return self.out

    def backward(self, grad):
        probs = np.exp(self.out)
        return (grad - probs * np.sum(grad, axis=self.axis, keepdims=True),)


class Log(Function):
    def forward(self, x):
        return np.log(x)

    def backward(self, grad):
        return (grad / self.inputs[0].data,)


def relu(x) -> Tensor:
    return ReLU.apply(as_tensor(x))


def sigmoid(x) -> Tensor:
    return Sigmoid.apply(as_tensor(x))


def swish(x) -> Tensor:
    return Swish.apply(as_tensor(x))


def softmax(x, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    (axis,) = _normalize_axis(axis, x.ndim)
    return Softmax.apply(x, axis=axis)


def log_softmax(x, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    (axis,) = _normalize_axis(axis, x.ndim)
    return LogSoftmax.apply(x, axis=axis)


def log(x) -> Tensor:
    return Log.apply(as_tensor(x))


ACTIVATIONS = {"relu": relu, "swish": swish, "sigmoid": sigmoid}


def activation(name: str):
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown activation {name!r}; choose from {sorted(ACTIVATIONS)}"
        ) from None


# *** normalisation ***
class BatchNorm(Function):
    def forward(
        self,
        x,
        gamma,
        beta,
        running_mean=None,
        running_var=None,
        training=True,
        momentum=0.9,
        eps=1e-5,
        axis=-1,
    ):
        self.training = training
        self.reduce_axes = tuple(i for i in range(x.ndim) if i != axis)
        shape = [1] * x.ndim
        shape[axis] = x.shape[axis]
        self.param_shape = tuple(shape)

        if training:
            mean = np.mean(x, axis=self.reduce_axes, keepdims=True)
            var = np.var(x, axis=self.reduce_axes, keepdims=True)
            if running_mean is not None:
                running_mean *= momentum
                running_mean += (1 - momentum) * mean.reshape(running_mean.shape)
            if running_var is not None:
                running_var *= momentum
                running_var += (1 - momentum) * var.reshape(running_var.shape)
        else:
            mean = running_mean.reshape(self.param_shape)
            var = running_var.reshape(self.param_shape)

        self.inv_std = 1 / np.sqrt(var + eps)
        self.x_hat = (x - mean) * self.inv_std
        return gamma.reshape(self.param_shape) * self.x_hat + beta.reshape(self.param_shape)

    def backward(self, grad):
        _, gamma, beta = self.inputs
        axes = self.reduce_axes
        grad_gamma = np.sum(grad * self.x_hat, axis=axes).reshape(gamma.shape)
        grad_beta = np.sum(grad, axis=axes).reshape(beta.shape)

        grad_x_hat = grad * gamma.data.reshape(self.param_shape)
        if not self.training:
            return grad_x_hat * self.inv_std, grad_gamma, grad_beta

        n = grad.size // grad_beta.size
        grad_x = (
            self.inv_std
            / n
            * (
                n * grad_x_hat
                - np.sum(grad_x_hat, axis=axes, keepdims=True)
                - self.x_hat * np.sum(grad_x_hat * self.x_hat, axis=axes, keepdims=True)
            )
        )
        return grad_x, grad_gamma, grad_beta


def batch_norm(
    x,
    gamma,
    beta,
    running_mean: Optional[np.ndarray] = None,
    running_var: Optional[np.ndarray] = None,
    training: bool = True,
    momentum: float = 0.9,
    eps: float = 1e-5,
    axis: int = -1,
) -> Tensor:
    """Normalise each feature along ``axis`` over every other axis.

    In training mode the batch statistics are used and ``running_mean`` / ``running_var``
    (numpy buffers) are updated in place as ``momentum * running + (1 - momentum) * batch``.
    In evaluation mode the running statistics are used.
    """
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    (axis,) = _normalize_axis(axis, x.ndim)
    if gamma.shape != (x.shape[axis],) or beta.shape != (x.shape[axis],):
        raise DimensionError("scale/shift do not match the feature axis", x.shape, gamma.shape)
    samples = x.size // x.shape[axis]
    if training and samples < 2:
        raise ConfigurationError("batch_norm in training mode needs at least 2 samples per feature")
    if not training and (running_mean is None or running_var is None):
        raise ConfigurationError("batch_norm in evaluation mode needs running statistics")
    return BatchNorm.apply(
        x,
        gamma,
        beta,
        running_mean=running_mean,
        running_var=running_var,
        training=training,
        momentum=momentum,
        eps=eps,
        axis=axis,
    )


# *** shape manipulation ***
class Reshape(Function):
    def forward(self, x, shape=()):
        return np.reshape(x, shape)

    def backward(self, grad):
        return (np.reshape(grad, self.inputs[0].shape),)


class Transpose(Function):
    def forward(self, x, axes=None):
        self.axes = axes
        return np.transpose(x, axes)

    def backward(self, grad):
        if self.axes is None:
            return (np.transpose(grad),)
        return (np.transpose(grad, np.argsort(self.axes)),)


class Concat(Function):
    def forward(self, *arrays, axis=0):
        self.axis = axis
        self.bounds = np.cumsum([a.shape[axis] for a in arrays])[:-1]
        return np.concatenate(arrays, axis=axis)

    def backward(self, grad):
        return tuple(np.split(grad, self.bounds, axis=self.axis))


def reshape(x, shape: Sequence[int]) -> Tensor:
    x = as_tensor(x)
    shape = tuple(int(s) for s in shape)
    try:
        np.reshape(x.data, shape)
    except ValueError:
        raise DimensionError("cannot reshape", x.shape, shape)
    return Reshape.apply(x, shape=shape)


def transpose(x, axes: Optional[Sequence[int]] = None) -> Tensor:
    x = as_tensor(x)
    if axes is not None:
        axes = tuple(int(a) for a in axes)
        if sorted(a % x.ndim for a in axes) != list(range(x.ndim)):
            raise DimensionError(f"invalid permutation {axes}", x.shape)
        axes = tuple(a % x.ndim for a in axes)
    return Transpose.apply(x, axes=axes)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise DimensionError("concat needs at least one tensor")
    (axis,) = _normalize_axis(axis, tensors[0].ndim)
    reference = tensors[0].shape[:axis] + tensors[0].shape[axis + 1 :]
    for t in tensors[1:]:
        if t.ndim != tensors[0].ndim or t.shape[:axis] + t.shape[axis + 1 :] != reference:
            raise DimensionError(
                "concat operands disagree off the joined axis", tensors[0].shape, t.shape
            )
    return Concat.apply(*tensors, axis=axis)


# *** reductions ***
class Sum(Function):
    def forward(self, x, axis=None, keepdims=False):
        self.axis, self.keepdims = axis, keepdims
        return np.asarray(np.sum(x, axis=axis, keepdims=keepdims))

    def backward(self, grad):
        x = self.inputs[0]
        return (_expand_reduced(grad, x.shape, self.axis, self.keepdims).copy(),)


class Mean(Function):
    def forward(self, x, axis=None, keepdims=False):
        self.axis, self.keepdims = axis, keepdims
        out = np.asarray(np.mean(x, axis=axis, keepdims=keepdims))
        self.count = x.size // out.size
        return out

    def backward(self, grad):
        x = self.inputs[0]
        return (_expand_reduced(grad, x.shape, self.axis, self.keepdims) / self.count,)


class _Extremum(Function):
    reducer = staticmethod(np.max)

    def forward(self, x, axis=None, keepdims=False):
        self.axis, self.keepdims = axis, keepdims
        self.out = np.asarray(self.reducer(x, axis=axis, keepdims=True))
        if keepdims:
            return self.out
        return self.out.reshape(()) if axis is None else np.squeeze(self.out, axis=axis)

    def backward(self, grad):
        x = self.inputs[0].data
        hits = (x == self.out).astype(x.dtype)
        # ties share the gradient equally
        hits /= np.sum(hits, axis=self.axis, keepdims=True)
        return (hits * _expand_reduced(grad, x.shape, self.axis, self.keepdims),)


class Max(_Extremum):
    reducer = staticmethod(np.max)


class Min(_Extremum):
    reducer = staticmethod(np.min)


def sum(x, axis: Axis = None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    return Sum.apply(x, axis=_normalize_axis(axis, x.ndim), keepdims=keepdims)


def mean(x, axis: Axis = None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    return Mean.apply(x, axis=_normalize_axis(axis, x.ndim), keepdims=keepdims)


def max(x, axis: Axis = None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    return Max.apply(x, axis=_normalize_axis(axis, x.ndim), keepdims=keepdims)


def min(x, axis: Axis = None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    return Min.apply(x, axis=_normalize_axis(axis, x.ndim), keepdims=keepdims)


# *** powers and norms ***
class Square(Function):
    def forward(self, x):
        return x * x

    def backward(self, grad):
        return (2 * grad * self.inputs[0].data,)


class Sqrt(Function):
    def forward(self, x):
        self.out = np.sqrt(x)
        return self.out

    def backward(self, grad):
        safe = np.where(self.out > 0, self.out, 1)
        return (np.where(self.out > 0, grad / (2 * safe), 0).astype(self.out.dtype),)


class L2Norm(Function):
    def forward(self, x, axis=-1, keepdims=False):
        self.axis, self.keepdims = axis, keepdims
        self.norm = np.sqrt(np.sum(x * x, axis=axis, keepdims=True))
        return self.norm if keepdims else np.squeeze(self.norm, axis=axis)

    def backward(self, grad):
        x = self.inputs[0].data
        if not self.keepdims:
            grad = np.expand_dims(grad, self.axis)
        safe = np.where(self.norm > 0, self.norm, 1)
        # the zero vector gets a zero subgradient
        return (np.where(self.norm > 0, grad * x / safe, 0).astype(x.dtype),)


def square(x) -> Tensor:
    return Square.apply(as_tensor(x))


def sqrt(x) -> Tensor:
    return Sqrt.apply(as_tensor(x))


def l2_norm(x, axis: int = -1, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    (axis,) = _normalize_axis(axis, x.ndim)
    return L2Norm.apply(x, axis=axis, keepdims=keepdims)
