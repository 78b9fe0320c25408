import json

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from cohesion_algos.datasets import (
    ArrayDataset,
    DatasetManifest,
    GroupSample,
    SynthSpec,
    apply_mask_crop,
    bilinear_resize,
    capsnet_dataset,
    face_crops,
    face_level_dataset,
    gcs_from_emotions,
    group_emotion_of,
    image_dataset,
    image_to_unit,
    load_manifest,
    mask_coverage,
    modal_emotion,
    preprocess_face,
    render_glyph,
    synth_generate,
    to_grayscale,
    write_manifest,
)
from cohesion_algos.errors import (
    ConfigurationError,
    DimensionError,
    EmptyDatasetError,
    ImageNotFoundError,
    MissingMaskError,
    SchemaError,
)
from cohesion_algos.models import CapsNet, FaceLevelModel

HEADER = '{"format": "cohesion-manifest", "schema_version": 1}'


def in_memory_sample(pixels, mask=None, boxes=(), sample_id="s0"):
    height, width = pixels.shape[:2]
    return GroupSample(
        sample_id=sample_id,
        image=f"{sample_id}.png",
        width=width,
        height=height,
        gcs=1.0,
        emotion="neutral",
        boxes=list(boxes),
        pixels_override=pixels,
        mask_override=mask,
    )


def record(**changes):
    base = {
        "id": "img-1",
        "image": "img-1.png",
        "width": 40,
        "height": 30,
        "split": "train",
        "gcs": 2.0,
        "emotion": "positive",
        "faces": [{"box": [0, 0, 10, 10]}],
    }
    base.update(changes)
    return json.dumps(base)


def write_lines(path, *lines):
    path.write_text("\n".join(lines) + "\n")
    return str(path)


class TestArrayDataset:
    def test_batches(self):
        dataset = ArrayDataset(x=np.arange(10))
        sizes = [len(b) for b in dataset.batches(4, shuffle=False)]
        assert sizes == [4, 4, 2]

    def test_short_remainder_is_merged(self):
        dataset = ArrayDataset(x=np.arange(10))
        batches = list(dataset.batches(4, shuffle=False, min_size=3))
        assert [len(b) for b in batches] == [4, 6]
        assert_array_equal(np.concatenate([b["x"] for b in batches]), np.arange(10))

    def test_shuffle_is_a_permutation(self, rng):
        dataset = ArrayDataset(x=np.arange(9))
        seen = np.concatenate([b["x"] for b in dataset.batches(2, rng=rng)])
        assert_array_equal(np.sort(seen), np.arange(9))

    def test_fields_must_align(self):
        with pytest.raises(DimensionError):
            ArrayDataset(x=np.zeros(3), y=np.zeros(4))

    def test_empty(self):
        with pytest.raises(EmptyDatasetError):
            next(ArrayDataset(x=np.zeros(0)).batches(4))

    def test_row_selection_keeps_ids(self):
        dataset = ArrayDataset(ids=["a", "b", "c"], x=np.arange(3))
        subset = dataset[np.array([2, 0])]
        assert subset.ids == ["c", "a"]
        assert_array_equal(subset["x"], [2, 0])


class TestManifest:
    def test_round_trip(self, tmp_path, synth_manifest):
        path = str(tmp_path / "manifest.jsonl")
        write_manifest(synth_manifest, path)
        loaded = load_manifest(path)
        assert loaded.records == synth_manifest.records
        assert loaded.split_sizes() == {"train": 8, "val": 2, "test": 2}

    def test_header_only_is_empty(self, tmp_path):
        manifest = load_manifest(write_lines(tmp_path / "m.jsonl", HEADER))
        assert len(manifest) == 0

    def test_missing_header(self, tmp_path):
        with pytest.raises(SchemaError):
            load_manifest(write_lines(tmp_path / "m.jsonl", record()))

    def test_box_outside_image(self, tmp_path):
        bad = record(id="img-2", faces=[{"box": [35, 0, 10, 10]}])
        path = write_lines(tmp_path / "m.jsonl", HEADER, record(), bad)
        with pytest.raises(SchemaError) as e:
            load_manifest(path)
        assert e.value.record == 1
        assert e.value.field == "faces"

    @pytest.mark.parametrize(
        "changes, field",
        [
            ({"gcs": 3.5}, "gcs"),
            ({"emotion": "happy"}, "emotion"),
            ({"split": "dev"}, "split"),
            ({"width": "40"}, "width"),
        ],
    )
    def test_invalid_fields(self, tmp_path, changes, field):
        path = write_lines(tmp_path / "m.jsonl", HEADER, record(**changes))
        with pytest.raises(SchemaError) as e:
            load_manifest(path)
        assert (e.value.record, e.value.field) == (0, field)

    def test_partial_face_emotions(self, tmp_path):
        faces = [{"box": [0, 0, 5, 5], "emotion": "happy"}, {"box": [5, 5, 5, 5]}]
        path = write_lines(tmp_path / "m.jsonl", HEADER, record(faces=faces))
        with pytest.raises(SchemaError):
            load_manifest(path)

    def test_duplicate_ids(self, tmp_path):
        path = write_lines(tmp_path / "m.jsonl", HEADER, record(), record())
        with pytest.raises(SchemaError) as e:
            load_manifest(path)
        assert (e.value.record, e.value.field) == (1, "id")

    def test_images_resolve_lazily(self, tmp_path):
        manifest = load_manifest(write_lines(tmp_path / "m.jsonl", HEADER, record()))
        with pytest.raises(ImageNotFoundError):
            manifest.records[0].pixels()

    def test_unknown_split(self):
        with pytest.raises(SchemaError):
            DatasetManifest().split("dev")


class TestSynth:
    def test_cohesion_examples(self):
        assert gcs_from_emotions(["sad"] * 5) == 3.0
        assert gcs_from_emotions(["happy"] * 3 + ["sad"]) == pytest.approx(2.125)
        distinct = ["happy", "neutral", "sad", "angry", "surprise", "disgust", "fear"]
        assert gcs_from_emotions(distinct) == pytest.approx(0.0)

    def test_group_emotion(self):
        assert group_emotion_of(["sad", "sad", "happy"]) == "negative"
        assert group_emotion_of(["surprise"]) == "neutral"
        assert modal_emotion(["sad", "happy"]) == "happy"

    def test_deterministic(self):
        spec = SynthSpec(num_samples=5, seed=9)
        a, b = synth_generate(spec), synth_generate(spec)
        assert a.records == b.records
        for x, y in zip(a, b):
            assert_array_equal(x.pixels(), y.pixels())

    def test_labels_follow_faces(self, synth_manifest):
        for sample in synth_manifest:
            assert 1 <= sample.num_faces <= 4
            assert len(sample.face_emotions) == sample.num_faces
            assert sample.gcs == gcs_from_emotions(sample.face_emotions)
            assert sample.emotion == group_emotion_of(sample.face_emotions)
            assert sample.pixels().shape == (96, 96, 3)

    def test_glyphs_differ(self):
        assert not np.array_equal(render_glyph("happy"), render_glyph("sad"))
        with pytest.raises(ConfigurationError):
            render_glyph("bored")

    def test_invalid_spec(self):
        with pytest.raises(ConfigurationError):
            SynthSpec(faces_range=(0, 3))

    def test_files_round_trip(self, synth_dir, synth_manifest):
        loaded = load_manifest(synth_dir)
        for original, stored in zip(synth_manifest, loaded):
            assert_array_equal(stored.pixels(), original.pixels())
            assert_array_equal(stored.person_mask(), original.person_mask())


class TestPreprocess:
    def test_resize_identity_copies(self, rng):
        image = rng.uniform(size=(5, 7))
        resized = bilinear_resize(image, (5, 7))
        assert_array_equal(resized, image)
        assert resized is not image

    def test_checkerboard_downsizes_to_grey(self):
        board = np.indices((4, 4)).sum(axis=0) % 2
        assert_allclose(bilinear_resize(board, (2, 2)), 0.5)

    def test_downsizing_uses_two_taps(self):
        ramp = np.array([[0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0]])
        # output centres fall on 1.5 and 5.5; a widened filter would blend four pixels
        assert_allclose(bilinear_resize(ramp, (1, 2)), [[15.0, 55.0]])
        spikes = np.array([[0.0, 0.0, 9.0, 0.0, 0.0, 0.0, 0.0, 0.0]])
        assert_allclose(bilinear_resize(spikes, (1, 2)), [[4.5, 0.0]])

    def test_keeps_fractional_values(self):
        image = np.array([[0.1, 0.2], [0.3, 0.4]])
        assert_allclose(bilinear_resize(image, (1, 1)), [[0.25]], rtol=1e-12)

    def test_constant_upsizes_to_constant(self):
        assert_allclose(bilinear_resize(np.full((3, 2), 7.0), (9, 5)), 7.0)

    def test_grayscale_luminance(self):
        pixel = np.array([[[255, 0, 0], [0, 255, 0], [0, 0, 255]]], dtype=np.uint8)
        assert_allclose(to_grayscale(pixel), [[76.245, 149.685, 29.07]])

    def test_face_crop(self):
        pixels = np.zeros((20, 20, 3), dtype=np.uint8)
        pixels[5:15, 5:15] = 255
        sample = in_memory_sample(pixels, boxes=[(5, 5, 10, 10)])
        crop = preprocess_face(sample, 0, size=(8, 8))
        assert crop.shape == (8, 8)
        assert_allclose(crop, 1.0)

    def test_degenerate_box(self):
        sample = in_memory_sample(np.zeros((8, 8, 3), np.uint8), boxes=[(2, 2, 0, 4)])
        with pytest.raises(DimensionError):
            preprocess_face(sample, 0)

    def test_box_index_out_of_range(self):
        sample = in_memory_sample(np.zeros((8, 8, 3), np.uint8), boxes=[(0, 0, 4, 4)])
        with pytest.raises(DimensionError):
            preprocess_face(sample, 1)

    def test_face_crops_stack(self, synth_manifest):
        sample = synth_manifest.records[0]
        crops = face_crops(sample)
        assert crops.shape == (sample.num_faces, 28, 28)
        assert crops.dtype == np.float32
        assert np.all((crops >= 0) & (crops <= 1))

    def test_image_to_unit(self):
        pixels = np.full((6, 4, 3), 255, dtype=np.uint8)
        image = image_to_unit(pixels, (3, 2))
        assert image.shape == (3, 3, 2)
        assert_allclose(image, 1.0)


class TestMaskCrop:
    @staticmethod
    def sample_with_coverage(percent):
        mask = np.zeros((10, 10), dtype=bool)
        mask.flat[:percent] = True
        pixels = np.full((10, 10, 3), 9, dtype=np.uint8)
        return in_memory_sample(pixels, mask=mask)

    @pytest.mark.parametrize(
        "percent, included", [(0, True), (40, True), (49, True), (50, False), (60, False)]
    )
    def test_threshold(self, percent, included):
        sample = self.sample_with_coverage(percent)
        assert mask_coverage(sample.person_mask()) == pytest.approx(percent / 100)
        assert apply_mask_crop(sample)[1] is included

    def test_background_zeroed(self):
        cropped, included = apply_mask_crop(self.sample_with_coverage(40))
        pixels = cropped.pixels()
        assert included
        assert_array_equal(pixels.reshape(100, 3)[:40], 9)
        assert_array_equal(pixels.reshape(100, 3)[40:], 0)

    def test_full_coverage_keeps_pixels(self):
        cropped, included = apply_mask_crop(self.sample_with_coverage(100))
        assert not included
        assert_array_equal(cropped.pixels(), 9)

    def test_missing_mask(self):
        with pytest.raises(MissingMaskError):
            apply_mask_crop(in_memory_sample(np.zeros((4, 4, 3), np.uint8)))


class TestBuilders:
    def test_capsnet_rows_per_face(self, synth_manifest):
        samples = synth_manifest.split("train")
        dataset = capsnet_dataset(samples, (8, 8))
        assert len(dataset) == sum(s.num_faces for s in samples)
        assert dataset["faces"].shape[1:] == (8, 8)
        assert dataset.ids[0] == f"{samples[0].sample_id}/0"

    def test_face_level_skips_faceless_samples(self, synth_manifest, tiny_capsnet_config):
        faceless = synth_manifest.records[0].replace(
            sample_id="no-faces", boxes=[], face_emotions=None
        )
        samples = [faceless] + synth_manifest.split("val")
        model = FaceLevelModel(CapsNet(tiny_capsnet_config, seed=0), seed=0)
        dataset = face_level_dataset(model, samples)
        assert dataset.skipped == ["no-faces"]
        assert len(dataset) == 2
        assert dataset["pooled"].shape == (2, 3, 7)

    def test_segmented_images_drop_crowded_samples(self):
        crowded = synth_generate(SynthSpec(num_samples=3, faces_range=(5, 6), seed=1))
        dataset = image_dataset(crowded.records, segmented=True)
        assert len(dataset) == 0
        assert len(dataset.skipped) == 3

    def test_segmented_images_keep_sparse_samples(self, synth_manifest):
        dataset = image_dataset(synth_manifest.records, (24, 24), segmented=True)
        assert len(dataset) == len(synth_manifest)
        assert dataset["images"].shape == (12, 3, 24, 24)
