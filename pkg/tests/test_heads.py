import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from cohesion_algos.autograd import Tensor, check_module_gradients
from cohesion_algos.autograd import functional as F
from cohesion_algos.datasets import ArrayDataset
from cohesion_algos.errors import (
    ConfigurationError,
    ContractError,
    DimensionError,
    EmotionIndexError,
    NoFacesError,
)
from cohesion_algos.models import (
    BackboneConfig,
    CapsNet,
    FaceHeadConfig,
    FaceLevelHead,
    FaceLevelModel,
    ImageEmotionHead,
    ImageHeadConfig,
    ImageLevelHead,
    MultiTaskHead,
    cross_entropy,
    joint_loss,
    mse,
    pool_face_emotions,
)

SMALL_HEAD = ImageHeadConfig(feature_width=6, hidden=(8, 8))
SMALL_BACKBONE = BackboneConfig(
    image_size=(12, 12), channels=(3, 6), kernels=(3, 3), strides=(2, 2)
)


def random_distributions(rng, n):
    raw = rng.uniform(size=(n, 7))
    return raw / raw.sum(axis=1, keepdims=True)


class TestStatisticPooling:
    def test_single_face(self, rng):
        d = random_distributions(rng, 1)
        assert_allclose(pool_face_emotions(d), np.repeat(d, 3, axis=0))

    def test_two_faces(self):
        faces = np.zeros((2, 7))
        faces[0, :2] = (0.7, 0.3)
        faces[1, :2] = (0.1, 0.9)
        pooled = pool_face_emotions(faces)
        assert_allclose(pooled[0, :2], (0.4, 0.6))
        assert_allclose(pooled[1, :2], (0.7, 0.9))
        assert_allclose(pooled[2, :2], (0.1, 0.3))
        assert_array_equal(pooled[:, 2:], 0.0)

    def test_random_face_sets(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            faces = random_distributions(rng, int(rng.integers(1, 10)))
            pooled = pool_face_emotions(faces)
            shuffled = faces[rng.permutation(len(faces))]
            assert_array_equal(pooled, pool_face_emotions(shuffled))
            average, highest, lowest = pooled
            assert np.all(lowest <= average)
            assert np.all(average <= highest)
            assert_array_equal(highest, faces.max(axis=0))
            assert_array_equal(lowest, faces.min(axis=0))

    def test_no_faces(self):
        with pytest.raises(NoFacesError):
            pool_face_emotions(np.zeros((0, 7)), "img-1")

    def test_wrong_width(self):
        with pytest.raises(DimensionError):
            pool_face_emotions(np.zeros((2, 5)))


class TestFaceLevelHead:
    def test_layer_shapes(self, rng):
        head = FaceLevelHead(rng=rng)
        _, intermediates = head(rng.uniform(size=(4, 3, 7)), return_intermediates=True)
        shapes = [t.shape for t in intermediates]
        assert shapes == [(4, 3, 7), (4, 3, 16), (4, 3, 32), (4, 1, 32), (4, 32), (4, 1)]

    @pytest.mark.parametrize("scale", [1.0, 100.0, -100.0])
    def test_output_range(self, rng, scale):
        head = FaceLevelHead(rng=rng)
        scores = head(scale * rng.normal(size=(8, 3, 7))).data
        assert scores.shape == (8,)
        assert np.all((scores >= 0) & (scores <= 3))

    def test_shape_mismatch(self, rng):
        with pytest.raises(DimensionError):
            FaceLevelHead(rng=rng)(np.zeros((2, 3, 6)))

    def test_gradients(self, rng):
        head = FaceLevelHead(rng=rng).astype(np.float64)
        pooled = rng.uniform(size=(5, 3, 7))
        gcs = rng.uniform(0, 3, size=5)
        error = check_module_gradients(lambda: mse(head(pooled), gcs), head)
        assert error < 1e-4

    def test_config_validation(self):
        with pytest.raises(ConfigurationError):
            FaceHeadConfig(widths=(16,))


class TestFaceLevelModel:
    def test_featurize_pools_per_sample(self, rng, tiny_capsnet_config):
        model = FaceLevelModel(CapsNet(tiny_capsnet_config, seed=0), seed=0)
        crops = [rng.uniform(size=(3, 8, 8)), rng.uniform(size=(1, 8, 8))]
        pooled = model.featurize(crops, ["a", "b"])
        assert pooled.shape == (2, 3, 7)
        single = model.capsnet.predict_emotions(crops[1])
        assert_allclose(pooled[1], np.repeat(single, 3, axis=0), atol=1e-6)

    def test_featurize_rejects_faceless_samples(self, rng, tiny_capsnet_config):
        model = FaceLevelModel(CapsNet(tiny_capsnet_config, seed=0), seed=0)
        with pytest.raises(NoFacesError):
            model.featurize([rng.uniform(size=(2, 8, 8)), np.zeros((0, 8, 8))])

    def test_capsnet_is_frozen(self, tiny_capsnet_config):
        model = FaceLevelModel(CapsNet(tiny_capsnet_config, seed=0), seed=0)
        trainable = {id(p) for p in model.trainable_parameters()}
        assert trainable == {id(p) for p in model.head.parameters()}

    def test_predicts_scores(self, rng, tiny_capsnet_config):
        model = FaceLevelModel(CapsNet(tiny_capsnet_config, seed=0), seed=0)
        batch = {"pooled": rng.uniform(size=(3, 3, 7)), "gcs": np.array([0.0, 1.5, 3.0])}
        loss, parts = model.compute_loss(batch)
        assert parts["mse"] == pytest.approx(loss.item())
        model.eval()
        assert model.predict(batch)["gcs"].shape == (3,)


class TestImageHeads:
    def test_reference_scale_widths(self):
        config = ImageHeadConfig.reference_scale()
        assert config.feature_width == 2048
        assert config.hidden == (4096, 4096, 4096)

    def test_cohesion_range(self, rng):
        head = ImageLevelHead(SMALL_HEAD, seed=0)
        scores = head(rng.normal(scale=50.0, size=(6, 6))).data
        assert np.all((scores >= 0) & (scores <= 3))

    def test_width_mismatch(self, rng):
        with pytest.raises(DimensionError):
            ImageLevelHead(SMALL_HEAD, seed=0)(rng.normal(size=(2, 5)))

    def test_emotion_probabilities(self, rng):
        probs = ImageEmotionHead(SMALL_HEAD, seed=0)(rng.normal(size=(4, 6))).data
        assert probs.shape == (4, 3)
        assert_allclose(probs.sum(axis=1), 1.0, atol=1e-6)

    def test_multitask_outputs(self, rng):
        probs, gcs = MultiTaskHead(SMALL_HEAD, seed=0)(rng.normal(size=(4, 6)))
        assert_allclose(probs.data.sum(axis=1), 1.0, atol=1e-6)
        assert gcs.shape == (4,)
        assert np.all((gcs.data >= 0) & (gcs.data <= 3))

    def test_multitask_without_cohesion_weight_is_emotion_head(self, rng):
        batch = {
            "features": rng.normal(size=(5, 6)),
            "emotion": np.array([0, 1, 2, 1, 0]),
            "gcs": rng.uniform(0, 3, size=5),
        }
        multitask, _ = MultiTaskHead(SMALL_HEAD, seed=4, alpha=0.0).compute_loss(batch)
        single, _ = ImageEmotionHead(SMALL_HEAD, seed=4).compute_loss(batch)
        assert multitask.item() == pytest.approx(single.item(), rel=1e-6)

    def test_multitask_loss_parts(self, rng):
        batch = {
            "features": rng.normal(size=(3, 6)),
            "emotion": np.array([2, 1, 0]),
            "gcs": np.array([0.5, 1.0, 2.5]),
        }
        loss, parts = MultiTaskHead(SMALL_HEAD, seed=0, alpha=0.5).compute_loss(batch)
        expected = parts["cross_entropy"] + 0.5 * parts["mse"]
        assert parts["joint_loss"] == pytest.approx(expected, rel=1e-5)
        assert loss.item() == pytest.approx(expected, rel=1e-5)

    @pytest.mark.parametrize("cls", [ImageLevelHead, MultiTaskHead])
    def test_gradients_at_random_points(self, cls):
        for seed in range(10):
            rng = np.random.default_rng(seed)
            head = cls(SMALL_HEAD, seed=seed).astype(np.float64)
            batch = {
                "features": rng.normal(size=(5, 6)),
                "emotion": rng.integers(0, 3, size=5),
                "gcs": rng.uniform(0, 3, size=5),
            }
            head.normalizer.update(batch["features"])
            error = check_module_gradients(lambda: head.compute_loss(batch)[0], head)
            assert error < 1e-4, f"seed {seed}"

    def test_negative_alpha(self):
        with pytest.raises(ConfigurationError):
            MultiTaskHead(SMALL_HEAD, alpha=-1.0)

    def test_backbone_reads_images(self, rng):
        head = ImageLevelHead(SMALL_HEAD, SMALL_BACKBONE, seed=0)
        batch = {"images": rng.uniform(size=(2, 3, 12, 12))}
        assert head.predict(batch)["gcs"].shape == (2,)

    def test_backbone_width_must_match(self):
        with pytest.raises(ConfigurationError):
            ImageLevelHead(ImageHeadConfig(feature_width=5, hidden=(4,)), SMALL_BACKBONE)

    def test_images_need_a_backbone(self, rng):
        with pytest.raises(ContractError):
            ImageLevelHead(SMALL_HEAD).predict({"images": rng.uniform(size=(1, 3, 12, 12))})

    def test_standardization_fitted_on_prepare(self, rng):
        head = ImageLevelHead(SMALL_HEAD, seed=0)
        features = rng.normal(5.0, 2.0, size=(40, 6))
        head.prepare(ArrayDataset(features=features, gcs=np.zeros(40)))
        assert_allclose(head.normalizer.mean, features.mean(axis=0), rtol=1e-5)


class TestLosses:
    def test_perfect_prediction(self):
        loss = joint_loss(np.eye(3), np.array([0, 1, 2]), np.array([1.0, 2.0, 3.0]), [1, 2, 3])
        assert loss.item() == pytest.approx(0.0)

    def test_uniform_prediction(self):
        loss = joint_loss(
            np.full((1, 3), 1 / 3), np.array([1]), np.array([2.0]), np.array([1.0]), alpha=1.0
        )
        assert loss.item() == pytest.approx(math.log(3) + 1, abs=1e-4)
        assert loss.item() == pytest.approx(2.0986, abs=1e-4)

    def test_zero_alpha_is_cross_entropy(self, rng):
        probs = random_distributions(rng, 4)[:, :3]
        probs = probs / probs.sum(axis=1, keepdims=True)
        target = np.array([0, 2, 1, 1])
        loss = joint_loss(probs, target, np.zeros(4), np.full(4, 3.0), alpha=0.0)
        assert loss.item() == pytest.approx(cross_entropy(probs, target).item())

    def test_logits_match_probabilities(self, rng):
        logits = rng.normal(size=(5, 3))
        target = np.array([0, 1, 2, 0, 1])
        probs = F.softmax(logits).data
        assert cross_entropy(logits, target, from_logits=True).item() == pytest.approx(
            cross_entropy(probs, target).item()
        )

    def test_invalid_class_index(self):
        with pytest.raises(EmotionIndexError):
            cross_entropy(np.full((1, 3), 1 / 3), np.array([3]))

    def test_negative_alpha(self):
        with pytest.raises(ConfigurationError):
            joint_loss(np.eye(3), np.arange(3), np.zeros(3), np.zeros(3), alpha=-0.1)

    def test_mse_gradient(self):
        pred = Tensor(np.array([1.0, 2.0]), requires_grad=True)
        mse(pred, np.array([0.0, 0.0])).backward()
        assert_allclose(pred.grad, [1.0, 2.0])
