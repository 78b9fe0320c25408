import json
import os

import numpy as np
import pytest

from cohesion_algos.cli.main import EXIT_ARCHITECTURE, EXIT_CONFIG, EXIT_RUNTIME, main
from cohesion_algos.datasets import read_image, write_image
from cohesion_algos.models import (
    CapsNet,
    FaceLevelModel,
    ImageHeadConfig,
    ImageLevelHead,
    ModelCheckpoint,
)


@pytest.fixture
def head_checkpoint(tmp_path):
    path = str(tmp_path / "head.ckpt")
    ImageLevelHead(ImageHeadConfig(feature_width=4, hidden=(4,))).save(path)
    return path


@pytest.fixture
def face_image(tmp_path, rng):
    path = str(tmp_path / "face.png")
    write_image(path, rng.integers(0, 256, size=(20, 16, 3)))
    return path


def last_json(capsys):
    return json.loads(capsys.readouterr().out.strip().splitlines()[-1])


class TestSynth:
    def test_writes_dataset(self, tmp_path, capsys):
        out = str(tmp_path / "data")
        assert main(["synth", "--n", "6", "--faces-max", "3", "--out", out, "--seed", "2"]) == 0
        summary = last_json(capsys)
        assert summary["manifest"] == os.path.join(out, "manifest.jsonl")
        assert summary["samples"] == 6
        assert summary["splits"] == {"train": 4, "val": 1, "test": 1}
        assert sum(summary["gcs_histogram"]) == 6
        assert len(os.listdir(os.path.join(out, "images"))) == 6
        assert len(os.listdir(os.path.join(out, "masks"))) == 6

    def test_without_masks(self, tmp_path):
        out = str(tmp_path / "data")
        assert main(["synth", "--n", "2", "--no-masks", "--out", out]) == 0
        assert not os.path.exists(os.path.join(out, "masks"))

    def test_invalid_face_range(self, tmp_path):
        argv = ["synth", "--faces-min", "4", "--faces-max", "2", "--out", str(tmp_path)]
        assert main(argv) == EXIT_CONFIG


class TestArguments:
    def test_unknown_flag(self):
        with pytest.raises(SystemExit) as e:
            main(["synth", "--bogus"])
        assert e.value.code == 2

    def test_missing_command(self):
        with pytest.raises(SystemExit) as e:
            main([])
        assert e.value.code == 2

    def test_alpha_needs_multitask(self, synth_dir):
        assert main(["train", "--manifest", synth_dir, "--alpha", "0.5"]) == EXIT_CONFIG

    def test_momentum_conflicts_with_adam(self, synth_dir):
        argv = ["train", "--manifest", synth_dir, "--optimizer", "adam", "--momentum", "0.5"]
        assert main(argv) == EXIT_CONFIG

    def test_eval_needs_checkpoint(self, synth_dir):
        assert main(["eval", "--manifest", synth_dir]) == EXIT_CONFIG

    def test_crossval_needs_a_cohesion_model(self, synth_dir):
        argv = ["crossval", "--manifest", synth_dir, "--model", "image-emotion"]
        assert main(argv) == EXIT_CONFIG

    def test_config_file_with_unknown_key(self, tmp_path, synth_dir):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"colour": "blue"}))
        assert main(["train", "--manifest", synth_dir, "--config", str(path)]) == EXIT_CONFIG

    def test_flags_override_config_file(self, tmp_path, synth_dir):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"model": "multitask", "alpha": 0.5}))
        argv = ["train", "--manifest", synth_dir, "--config", str(path)]
        assert main(argv + ["--model", "image-level"]) == EXIT_CONFIG


class TestFailures:
    def test_missing_manifest(self, tmp_path):
        argv = ["train", "--manifest", str(tmp_path / "absent.jsonl"), "--out", str(tmp_path)]
        assert main(argv) == EXIT_RUNTIME

    def test_corrupt_checkpoint(self, tmp_path, synth_dir):
        path = tmp_path / "broken.ckpt"
        path.write_bytes(b"garbage")
        argv = ["eval", "--manifest", synth_dir, "--checkpoint", str(path), "--out", str(tmp_path)]
        assert main(argv) == EXIT_RUNTIME

    def test_capsnet_flag_with_wrong_kind(self, tmp_path, synth_dir, head_checkpoint):
        argv = ["train", "--manifest", synth_dir, "--capsnet", head_checkpoint]
        assert main(argv + ["--out", str(tmp_path / "run")]) == EXIT_ARCHITECTURE

    def test_saliency_needs_pixels(self, head_checkpoint, face_image):
        argv = ["saliency", "--checkpoint", head_checkpoint, "--image", face_image]
        assert main(argv) == EXIT_ARCHITECTURE


class TestCommands:
    def test_stats(self, tmp_path, capsys):
        path = tmp_path / "labels.csv"
        path.write_text("item,a,b,c\nx,0,0,1\ny,3,3,3\nz,1,2,2\nw,2,2,3\n")
        out = str(tmp_path / "out")
        assert main(["stats", str(path), "--out", out, "--weighting", "quadratic"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["num_raters"] == 3
        assert report["weighting"] == "quadratic"
        assert len(report["pairwise_kappas"]) == 3
        with open(os.path.join(out, "agreement.json"), encoding="utf-8") as f:
            assert json.load(f) == report

    def test_stats_bad_file(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("a,b\n0,1\n2,9\n")
        assert main(["stats", str(path), "--out", str(tmp_path)]) == EXIT_RUNTIME

    def test_eval_face_level(self, tmp_path, synth_dir, tiny_capsnet_config, capsys):
        checkpoint = str(tmp_path / "face.ckpt")
        FaceLevelModel(CapsNet(tiny_capsnet_config, seed=0), seed=0).save(checkpoint)
        out = str(tmp_path / "eval")
        argv = ["eval", "--checkpoint", checkpoint, "--manifest", synth_dir, "--out", out]
        assert main(argv + ["--split", "val"]) == 0
        with open(os.path.join(out, "eval-val.json"), encoding="utf-8") as f:
            stored = json.load(f)
        assert stored["kind"] == "face-level"
        assert stored["num_samples"] == 2
        assert 0 <= stored["mse"] <= 9
        assert json.loads(capsys.readouterr().out)["mse"] == stored["mse"]

    def test_saliency_capsnet(self, tmp_path, tiny_capsnet_config, face_image, capsys):
        checkpoint = str(tmp_path / "capsnet.ckpt")
        CapsNet(tiny_capsnet_config, seed=0).save(checkpoint)
        out = str(tmp_path / "maps")
        argv = ["saliency", "--checkpoint", checkpoint, "--image", face_image, "--out", out]
        assert main(argv) == 0
        path = capsys.readouterr().out.strip()
        assert path == os.path.join(out, "face_saliency.png")
        heat = read_image(path, "L")
        assert heat.shape == (20, 16)
        assert heat.max() == 255


@pytest.mark.slow
class TestTraining:
    def test_train_image_level(self, tmp_path, synth_dir, capsys):
        out = str(tmp_path / "run")
        argv = ["train", "--manifest", synth_dir, "--model", "image-level", "--out", out]
        assert main(argv + ["--epochs", "1", "--batch", "4"]) == 0
        summary = last_json(capsys)
        assert summary["kind"] == "image-level"
        assert "mse" in summary["val"]
        for name in ("model.ckpt", "report.json", "metrics.json"):
            assert os.path.isfile(os.path.join(out, name))
        checkpoint = ModelCheckpoint.load(os.path.join(out, "model.ckpt"))
        assert checkpoint.fingerprint == summary["fingerprint"]

    def test_crossval(self, tmp_path, synth_dir):
        out = str(tmp_path / "cv")
        argv = ["crossval", "--manifest", synth_dir, "--model", "image-level", "--out", out]
        argv += ["--k", "2", "--lr", "0.001", "--lr", "0.01", "--epochs", "1", "--batch", "4"]
        assert main(argv) == 0
        with open(os.path.join(out, "crossval.tsv"), encoding="utf-8") as f:
            lines = f.read().splitlines()
        assert lines[0] == "Fold\tlr=0.001\tlr=0.01"
        assert [line.split("\t")[0] for line in lines[1:]] == ["1", "2", "Average"]

    def test_train_face_level_pretrains_capsnet(self, tmp_path, synth_dir):
        out = str(tmp_path / "run")
        argv = ["train", "--manifest", synth_dir, "--out", out, "--epochs", "2"]
        assert main(argv + ["--capsnet-epochs", "1", "--batch", "8"]) == 0
        assert os.path.isfile(os.path.join(out, "capsnet.ckpt"))
        with open(os.path.join(out, "report.json"), encoding="utf-8") as f:
            report = json.load(f)
        assert report["kind"] == "face-level"
        assert len(report["epochs"]) == 2
        assert np.isfinite(report["epochs"][-1]["train"]["loss_mean"])
