from typing import Callable, Iterable, Optional, Tuple

import numpy as np

from cohesion_algos.autograd.tensor import Tensor, no_grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    if analytic.size == 0:
        return 0.0
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))


def grad_check(f: Callable[[Tensor], Tensor], point, eps: float = 1e-5) -> float:
    """Compare the analytic gradient of a scalar ``f`` at ``point`` with central differences.

    Evaluation happens in float64. Returns the largest componentwise relative error, with
    denominator ``max(|analytic|, |numeric|, 1e-8)``.
    """
    base = np.array(point.data if isinstance(point, Tensor) else point, dtype=np.float64)
    x = Tensor(base.copy(), requires_grad=True)
    f(x).backward()
    analytic = x.grad if x.grad is not None else np.zeros_like(base)

    numeric = np.zeros_like(base)
    with no_grad():
        for idx in np.ndindex(*base.shape):
            shifted = base.copy()
            shifted[idx] = base[idx] + eps
            plus = f(Tensor(shifted)).item()
            shifted[idx] = base[idx] - eps
            minus = f(Tensor(shifted)).item()
            numeric[idx] = (plus - minus) / (2 * eps)
    return relative_error(analytic, numeric)


def _coordinates(
    shape: Tuple[int, ...], num_samples: Optional[int], rng: np.random.Generator
) -> Iterable[Tuple[int, ...]]:
    everything = list(np.ndindex(*shape))
    if num_samples is None or num_samples >= len(everything):
        return everything
    picked = rng.choice(len(everything), size=num_samples, replace=False)
    return [everything[i] for i in sorted(picked)]


def check_module_gradients(
    loss_fn: Callable[[], Tensor],
    module,
    eps: float = 1e-5,
    num_samples: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Gradient check of ``loss_fn()`` against every parameter of ``module``.

    ``module`` should already be cast to float64. With ``num_samples`` only that many
    coordinates per parameter are perturbed.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    module.zero_grad()
    loss_fn().backward()

    worst = 0.0
    for _, param in module.named_parameters():
        analytic = param.grad if param.grad is not None else np.zeros_like(param.data)
        coords = _coordinates(param.shape, num_samples, rng)
        a_values, n_values = [], []
        with no_grad():
            for idx in coords:
                original = param.data[idx]
                param.data[idx] = original + eps
                plus = loss_fn().item()
                param.data[idx] = original - eps
                minus = loss_fn().item()
                param.data[idx] = original
                a_values.append(analytic[idx])
                n_values.append((plus - minus) / (2 * eps))
        worst = max(worst, relative_error(np.array(a_values), np.array(n_values)))
    return worst
