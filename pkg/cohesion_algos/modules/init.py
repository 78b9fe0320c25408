import numpy as np


def truncated_normal(shape, std: float, rng: np.random.Generator, bound: float = 2.0) -> np.ndarray:
    """Normal samples with every draw outside ``bound`` standard deviations redrawn."""
    z = rng.standard_normal(shape)
    outside = np.abs(z) > bound
    while np.any(outside):
        z[outside] = rng.standard_normal(int(outside.sum()))
        outside = np.abs(z) > bound
    return z * std


def fan_in_init(shape, fan_in: int, rng: np.random.Generator, dtype=np.float32) -> np.ndarray:
    return truncated_normal(shape, 1.0 / np.sqrt(fan_in), rng).astype(dtype)


def dense_init(layer, rng: np.random.Generator):
    layer.weight.data = fan_in_init(layer.weight.shape, layer.in_features, rng, layer.weight.dtype)
    if layer.bias is not None:
        layer.bias.data = np.zeros_like(layer.bias.data)
    return layer


def conv_init(layer, rng: np.random.Generator):
    fan_in = layer.in_channels * layer.kernel_size * layer.kernel_size
    layer.weight.data = fan_in_init(layer.weight.shape, fan_in, rng, layer.weight.dtype)
    if layer.bias is not None:
        layer.bias.data = np.zeros_like(layer.bias.data)
    return layer
