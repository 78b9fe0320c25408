import dataclasses

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from cohesion_algos.autograd import Tensor, check_module_gradients, grad_check
from cohesion_algos.autograd import functional as F
from cohesion_algos.errors import ConfigurationError, DimensionError, EmotionIndexError
from cohesion_algos.models import (
    CapsNet,
    CapsNetConfig,
    dynamic_routing,
    margin_loss,
    reconstruction_loss,
    squash,
)


def reference_routing(u_hat, iterations):
    """Plain numpy routing loop over an unbatched (lower, upper, dim) prediction array."""

    def squash_np(s):
        norm = np.sqrt(np.sum(s * s, axis=-1, keepdims=True))
        return s * norm / (1 + norm**2)

    logits = np.zeros(u_hat.shape[:2])
    for i in range(iterations):
        c = np.exp(logits) / np.exp(logits).sum(axis=1, keepdims=True)
        v = squash_np(np.einsum("lu,lud->ud", c, u_hat))
        if i < iterations - 1:
            logits = logits + np.einsum("lud,ud->lu", u_hat, v)
    return v


class TestSquash:
    def test_zero_vector(self):
        assert_array_equal(squash(np.zeros(3)).data, np.zeros(3))

    def test_unit_norm_halves(self):
        s = np.array([0.6, 0.8])
        assert_allclose(squash(s).data, 0.5 * s)

    def test_values(self):
        assert_allclose(squash(np.array([3.0, 4.0])).data, [0.576923, 0.769231], atol=1e-6)

    def test_random_vectors(self, rng):
        directions = rng.normal(size=(1000, 8))
        directions /= np.linalg.norm(directions, axis=-1, keepdims=True)
        s = directions * 10.0 ** rng.uniform(-3, 3, size=(1000, 1))
        out = squash(s).data
        norms = np.linalg.norm(out, axis=-1)
        assert np.all(norms < 1)
        assert np.all(norms < np.linalg.norm(squash(1.5 * s).data, axis=-1))
        assert_allclose(out / norms[:, None], directions, atol=1e-12)


class TestDynamicRouting:
    def test_single_iteration_uses_uniform_couplings(self, rng):
        u_hat = rng.normal(size=(4, 4, 3))
        v = dynamic_routing(u_hat, iterations=1)
        expected = squash(u_hat.mean(axis=0)).data
        assert_allclose(v.data, expected)

    @pytest.mark.parametrize("iterations", [1, 2, 3, 5])
    def test_single_upper_capsule_couples_fully(self, rng, iterations):
        _, states = dynamic_routing(
            rng.normal(size=(2, 6, 1, 4)), iterations=iterations, return_states=True
        )
        assert len(states) == iterations
        for state in states:
            assert_array_equal(state.couplings, np.ones((2, 6, 1)))

    def test_couplings_are_distributions(self, rng):
        _, states = dynamic_routing(rng.normal(size=(3, 5, 7, 4)), 3, return_states=True)
        for state in states:
            assert np.all(state.couplings >= 0)
            assert_allclose(state.couplings.sum(axis=-1), 1.0)

    def test_matches_reference_loop(self, rng):
        u_hat = rng.normal(size=(4, 2, 3))
        v = dynamic_routing(u_hat, iterations=3)
        assert v.shape == (2, 3)
        assert_allclose(v.data, reference_routing(u_hat, 3), atol=1e-12)

    def test_rejects_zero_iterations(self):
        with pytest.raises(ConfigurationError):
            dynamic_routing(np.zeros((2, 2, 2)), iterations=0)

    def test_gradients(self, rng):
        def f(u):
            return F.sum(F.l2_norm(dynamic_routing(u, 3), axis=-1) * np.arange(7.0))

        assert grad_check(f, rng.normal(size=(1, 5, 7, 3))) < 1e-4


class TestMarginLoss:
    def test_both_hinges_inactive(self):
        lengths = np.full(7, 0.1)
        lengths[2] = 0.9
        assert margin_loss(lengths, 2).item() == pytest.approx(0.0)

    def test_all_half(self):
        assert margin_loss(np.full(7, 0.5), 0).item() == pytest.approx(0.64)

    def test_all_zero(self):
        assert margin_loss(np.zeros(7), 5).item() == pytest.approx(0.81)

    def test_batch_mean(self):
        lengths = np.stack([np.full(7, 0.5), np.zeros(7)])
        assert margin_loss(lengths, np.array([0, 5])).item() == pytest.approx((0.64 + 0.81) / 2)

    @pytest.mark.parametrize("target", [-1, 7])
    def test_target_out_of_range(self, target):
        with pytest.raises(EmotionIndexError):
            margin_loss(np.zeros(7), target)

    def test_gradients(self, rng):
        point = rng.uniform(0.0, 1.0, size=(3, 7))
        assert grad_check(lambda x: margin_loss(x, np.array([0, 3, 6])), point) < 1e-4


class TestReconstructionLoss:
    def test_identical(self, rng):
        x = rng.uniform(size=(2, 16))
        assert reconstruction_loss(x, x).item() == 0.0

    def test_unit_difference(self):
        n = 10
        loss = reconstruction_loss(np.ones((1, n)), np.zeros((1, n)))
        assert loss.item() == pytest.approx(0.0005 * n)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            reconstruction_loss(np.zeros((1, 4)), np.zeros((1, 5)))


class TestCapsNet:
    def test_config_derived_counts(self):
        config = CapsNetConfig()
        assert config.conv_extent == (20, 20)
        assert config.primary_grid == (6, 6)
        assert config.num_primary == 32 * 36

    def test_reference_scale(self):
        config = CapsNetConfig.reference_scale()
        assert config.num_primary == 1152
        assert config.capsule_layer.lower_dim == 8
        assert config.decoder_widths == (512, 1024)

    def test_too_small_input(self):
        with pytest.raises(ConfigurationError):
            CapsNetConfig(input_size=(8, 8))

    def test_predictions_are_distributions(self, rng, tiny_capsnet_config):
        model = CapsNet(tiny_capsnet_config, seed=0)
        probs = model.predict_emotions(rng.uniform(size=(5, 8, 8)))
        assert probs.shape == (5, 7)
        assert np.all(np.isfinite(probs))
        assert np.all(probs >= 0)
        assert_allclose(probs.sum(axis=-1), 1.0, atol=1e-6)

    def test_default_extents(self, rng):
        model = CapsNet(seed=0)
        capsules = model(rng.uniform(size=(2, 28, 28)))
        assert capsules.shape == (2, 7, 8)

    def test_deterministic(self, rng, tiny_capsnet_config):
        face = rng.uniform(size=(1, 8, 8))
        model = CapsNet(tiny_capsnet_config, seed=0)
        assert_array_equal(model.predict_emotions(face), model.predict_emotions(face))
        other = CapsNet(tiny_capsnet_config, seed=0)
        assert_array_equal(model.predict_emotions(face), other.predict_emotions(face))

    def test_wrong_extents(self, rng, tiny_capsnet_config):
        model = CapsNet(tiny_capsnet_config, seed=0)
        with pytest.raises(DimensionError):
            model.predict_emotions(rng.uniform(size=(2, 9, 9)))

    def test_reconstruction_in_unit_range(self, rng, tiny_capsnet_config):
        model = CapsNet(tiny_capsnet_config, seed=0)
        decoded = model.reconstruct(rng.uniform(size=(3, 8, 8)))
        assert decoded.shape == (3, 8, 8)
        assert np.all((decoded >= 0) & (decoded <= 1))

    def test_compute_loss_parts(self, rng, tiny_capsnet_config):
        model = CapsNet(tiny_capsnet_config, seed=0)
        batch = {"faces": rng.uniform(size=(4, 8, 8)), "emotion": np.array([0, 1, 2, 3])}
        loss, parts = model.compute_loss(batch)
        assert loss.item() == pytest.approx(parts["margin_loss"] + parts["reconstruction_loss"])

    def test_full_loss_gradients(self, rng, tiny_capsnet_config):
        config = dataclasses.replace(tiny_capsnet_config, activation="swish", recon_weight=0.05)
        model = CapsNet(config, seed=1).astype(np.float64)
        faces = rng.uniform(size=(3, 8, 8))
        targets = np.array([0, 2, 6])
        error = check_module_gradients(
            lambda: model.loss(faces, targets)[0], model, num_samples=4, rng=rng
        )
        assert error < 1e-4

    def test_saliency_score_gradient_reaches_pixels(self, rng, tiny_capsnet_config):
        model = CapsNet(tiny_capsnet_config, seed=0).astype(np.float64)
        x = Tensor(rng.uniform(size=(1, 8, 8)), requires_grad=True)
        model.saliency_score(x).backward()
        assert x.grad.shape == (1, 8, 8)
        assert np.any(x.grad != 0)
