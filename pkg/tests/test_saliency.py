import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from cohesion_algos.autograd import functional as F
from cohesion_algos.errors import ContractError
from cohesion_algos.models import (
    BackboneConfig,
    ImageHeadConfig,
    ImageLevelHead,
    normalize_map,
    saliency_map,
)

SMALL_HEAD = ImageHeadConfig(feature_width=6, hidden=(8, 8))
SMALL_BACKBONE = BackboneConfig(
    image_size=(12, 12), channels=(3, 6), kernels=(3, 3), strides=(2, 2)
)


def test_normalize_map():
    assert_allclose(normalize_map(np.array([[2.0, 4.0], [6.0, 3.0]])), [[0, 0.5], [1, 0.25]])
    assert_array_equal(normalize_map(np.full((3, 3), 5.0)), 0.0)


def test_linear_score_gives_weight_magnitudes(rng):
    weights = rng.normal(size=(5, 4))
    heat = saliency_map(lambda x: F.sum(x * weights), rng.uniform(size=(5, 4)), normalize=False)
    assert_allclose(heat, np.abs(weights))


def test_channels_are_max_reduced(rng):
    weights = rng.normal(size=(3, 4, 4))
    heat = saliency_map(lambda x: F.sum(x * weights), np.zeros((3, 4, 4)), normalize=False)
    assert_allclose(heat, np.abs(weights).max(axis=0))


def test_constant_score_gives_zero_map():
    heat = saliency_map(lambda x: F.sum(x * 0.0), np.ones((4, 4)))
    assert_array_equal(heat, 0.0)


def test_image_head(rng):
    head = ImageLevelHead(SMALL_HEAD, SMALL_BACKBONE, seed=0)
    head.train()
    heat = saliency_map(head, rng.uniform(size=(3, 12, 12)))
    assert heat.shape == (12, 12)
    assert heat.min() == 0.0
    assert heat.max() == pytest.approx(1.0)
    assert head.training
    assert all(p.requires_grad for p in head.parameters())
    assert all(p.grad is None for p in head.parameters())


def test_head_without_backbone(rng):
    with pytest.raises(ContractError):
        saliency_map(ImageLevelHead(SMALL_HEAD), rng.uniform(size=(3, 12, 12)))
