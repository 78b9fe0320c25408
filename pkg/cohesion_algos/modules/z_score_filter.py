import numpy as np

from cohesion_algos.autograd import Tensor, as_tensor
from cohesion_algos.modules.module import Module


class ZScoreFilter(Module):
    """Standardises features with running statistics fitted by :meth:`update`.

    The statistics are buffers, so they travel with ``state_dict`` into checkpoints and
    are never touched by an optimizer.
    """

    def __init__(self, size, eps=1e-2, dtype=np.float32):
        super().__init__()
        self.register_buffer("mean", np.zeros(size, dtype=dtype))
        self.register_buffer("var", np.ones(size, dtype=dtype))
        self.register_buffer("count", np.zeros((), dtype=np.int64))
        self.eps = eps

    def reset(self) -> None:
        self.mean[...] = 0
        self.var[...] = 1
        self.count[...] = 0

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(self.var)

    def update(self, x) -> None:
        x = np.asarray(x.data if isinstance(x, Tensor) else x, dtype=np.float64)
        count_x = x.shape[0]
        if count_x == 0:
            return

        self.count[...] = self.count + count_x
        rate = count_x / float(self.count)
        assert 0 < rate <= 1

        mean_x = x.mean(axis=0)
        var_x = x.var(axis=0)
        delta_mean = mean_x - self.mean
        new_mean = self.mean + rate * delta_mean
        new_var = self.var + rate * (var_x - self.var + delta_mean * (mean_x - new_mean))
        self.mean[...] = new_mean
        self.var[...] = new_var

    def forward(self, x, update=False) -> Tensor:
        if update:
            self.update(x)
        x = as_tensor(x)
        inv_std = ((self.var + self.eps) ** -0.5).astype(x.dtype)
        return (x - self.mean.astype(x.dtype)) * inv_std
