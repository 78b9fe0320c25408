from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from cohesion_algos.errors import DimensionError
from cohesion_algos.optimizers.config import DecaySchedule


def _check_shapes(*groups: Sequence[np.ndarray]) -> None:
    lengths = {len(g) for g in groups}
    if len(lengths) != 1:
        raise DimensionError(f"parameter groups differ in length: {sorted(lengths)}")
    for arrays in zip(*groups):
        shapes = [np.shape(a) for a in arrays]
        if any(s != shapes[0] for s in shapes):
            raise DimensionError("parameter, gradient and state shapes disagree", *shapes)


def sgd_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    velocities: Sequence[np.ndarray],
    lr: float,
    momentum: float,
) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """``v <- momentum * v + g``; ``p <- p - lr * v``. Inputs are left untouched."""
    _check_shapes(params, grads, velocities)
    new_params, new_velocities = [], []
    for p, g, v in zip(params, grads, velocities):
        v = momentum * v + g
        new_velocities.append(v.astype(p.dtype, copy=False))
        new_params.append((p - lr * v).astype(p.dtype, copy=False))
    return new_params, new_velocities


@dataclass
class AdamState:
    m: List[np.ndarray]
    v: List[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, params: Sequence[np.ndarray]) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], 0)


def adam_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    state: AdamState,
    lr: float,
    betas: Tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
    epoch: int = 1,
    decay: Optional[DecaySchedule] = None,
) -> Tuple[List[np.ndarray], AdamState]:
    """One bias-corrected Adam update with the learning rate of ``epoch`` under ``decay``."""
    _check_shapes(params, grads, state.m, state.v)
    beta1, beta2 = betas
    t = state.t + 1
    lr_t = decay.lr_at(lr, epoch) if decay is not None else lr
    correction1 = 1 - beta1**t
    correction2 = 1 - beta2**t

    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        new_params.append((p - lr_t * m_hat / (np.sqrt(v_hat) + eps)).astype(p.dtype, copy=False))
        new_m.append(m.astype(p.dtype, copy=False))
        new_v.append(v.astype(p.dtype, copy=False))
    return new_params, AdamState(new_m, new_v, t)
