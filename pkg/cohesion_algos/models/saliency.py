import contextlib

import numpy as np

from cohesion_algos.autograd import Tensor
from cohesion_algos.modules import Module, evaluating


def normalize_map(heat: np.ndarray) -> np.ndarray:
    """Min-max scale into [0, 1]; a constant map becomes all zeros."""
    heat = np.asarray(heat, dtype=np.float64)
    lo, hi = heat.min(), heat.max()
    if hi - lo <= 0:
        return np.zeros_like(heat)
    return (heat - lo) / (hi - lo)


@contextlib.contextmanager
def _frozen(model):
    """Evaluation mode without parameter gradients, restored on exit."""
    if not isinstance(model, Module):
        yield
        return
    flags = [(p, p.requires_grad) for p in model.parameters()]
    model.requires_grad_(False)
    try:
        with evaluating(model):
            yield
    finally:
        for p, flag in flags:
            p.requires_grad = flag


def saliency_map(model, image, normalize: bool = True) -> np.ndarray:
    """Gradient saliency of a model's scalar score with respect to its input pixels.

    ``model`` exposes ``saliency_score(images) -> scalar Tensor`` (the cohesion heads with
    a backbone and the CapsNet do), or is itself such a callable. ``image`` is (c, h, w)
    or (h, w); the map is (h, w), holding ``|d score / d pixel|`` max-reduced over channels.
    """
    image = np.asarray(image, dtype=np.float64)
    x = Tensor(image[None].copy(), requires_grad=True)
    score_fn = getattr(model, "saliency_score", model)

    with _frozen(model):
        score = score_fn(x)
        if score.requires_grad:
            score.backward()

    grad = x.grad[0] if x.grad is not None else np.zeros_like(image)
    heat = np.abs(grad)
    if heat.ndim == 3:
        heat = heat.max(axis=0)
    return normalize_map(heat) if normalize else heat
