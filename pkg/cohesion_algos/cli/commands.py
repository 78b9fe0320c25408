import json
import os
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from cohesion_algos.cli.config import RunConfig
from cohesion_algos.datasets import (
    ArrayDataset,
    DatasetManifest,
    GroupSample,
    SynthSpec,
    bilinear_resize,
    build_dataset,
    capsnet_dataset,
    crop_to_unit,
    image_to_unit,
    load_manifest,
    read_image,
    synth_generate,
    write_image,
    write_synth,
)
from cohesion_algos.errors import ArchitectureMismatchError, ContractError
from cohesion_algos.experiments import Evaluator, cross_validate, evaluate, fit
from cohesion_algos.models import (
    BackboneConfig,
    CapsNet,
    CapsNetConfig,
    FaceLevelModel,
    ImageEmotionHead,
    ImageHeadConfig,
    ImageLevelHead,
    ModelBase,
    MultiTaskHead,
    load_model,
    normalize_map,
    saliency_map,
)
from cohesion_algos.optimizers import DecaySchedule, OptimizerConfig
from cohesion_algos.stats import agreement_report, read_annotations
from cohesion_algos.utils import logger as package_logger
from cohesion_algos.utils import manual_seed

logger = package_logger.getChild("cli")


def _write_json(path: str, payload: Dict[str, Any]) -> None:
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _image_model(config: RunConfig) -> ModelBase:
    head = ImageHeadConfig()
    if config.model == "image-level":
        return ImageLevelHead(head, BackboneConfig(), seed=config.seed)
    if config.model == "image-emotion":
        return ImageEmotionHead(head, BackboneConfig(), seed=config.seed)
    alpha = config.alpha if config.alpha is not None else 1.0
    return MultiTaskHead(head, BackboneConfig(), seed=config.seed, alpha=alpha)


def pretrain_capsnet(
    config: RunConfig, train: List[GroupSample], val: List[GroupSample], out_dir: str
) -> CapsNet:
    """Train a CapsNet on annotated face crops with Adam and decaying learning rate."""
    capsnet = CapsNet(CapsNetConfig(), seed=config.seed)
    optimizer = OptimizerConfig(kind="adam", lr=0.001, decay=DecaySchedule(0.001, 10))
    val_set = capsnet_dataset(val) if val else None
    report, checkpoint = fit(
        capsnet,
        capsnet_dataset(train),
        optimizer,
        epochs=config.capsnet_epochs,
        batch_size=config.batch,
        seed=config.seed,
        validation=val_set if val_set is not None and len(val_set) else None,
    )
    checkpoint.save(os.path.join(out_dir, "capsnet.ckpt"))
    report.save(os.path.join(out_dir, "capsnet-report.json"))
    return capsnet


def _capsnet_for(config: RunConfig, manifest: DatasetManifest, out_dir: str) -> CapsNet:
    if config.capsnet is not None:
        capsnet = load_model(config.capsnet)
        if not isinstance(capsnet, CapsNet):
            raise ArchitectureMismatchError(
                f"{config.capsnet} holds a {capsnet.kind} model, not a capsnet"
            )
        return capsnet
    logger.info("no --capsnet checkpoint given; pretraining one on the annotated faces")
    return pretrain_capsnet(config, manifest.split("train"), manifest.split("val"), out_dir)


def model_factory(
    config: RunConfig, manifest: DatasetManifest, out_dir: str
) -> Callable[[], ModelBase]:
    """Fresh, identically initialised models of the configured kind."""
    if config.model == "capsnet-pretrain":
        return lambda: CapsNet(CapsNetConfig(), seed=config.seed)
    if config.model == "face-level":
        capsnet = _capsnet_for(config, manifest, out_dir)
        return lambda: FaceLevelModel(capsnet=capsnet, seed=config.seed)
    return lambda: _image_model(config)


def _split_dataset(model, samples: List[GroupSample], config: RunConfig) -> Optional[ArrayDataset]:
    if not samples:
        return None
    dataset = build_dataset(model, samples, segmented=config.segmented)
    return dataset if len(dataset) else None


def cmd_train(config: RunConfig) -> int:
    manual_seed(config.seed)
    out_dir = config.output_dir()
    os.makedirs(out_dir, exist_ok=True)
    manifest = load_manifest(config.manifest)
    model = model_factory(config, manifest, out_dir)()
    logger.info(f"{model.kind} model with {model.num_parameters()} parameters")

    train = _split_dataset(model, manifest.split("train"), config)
    if train is None:
        raise ContractError(f"{config.manifest} has no usable training samples")
    val = _split_dataset(model, manifest.split("val"), config)
    test = _split_dataset(model, manifest.split("test"), config)
    report, checkpoint = fit(
        model,
        train,
        config.optimizer_config(),
        epochs=config.epochs,
        batch_size=config.batch,
        seed=config.seed,
        validation=val,
        evaluator=Evaluator(val) if val is not None else None,
    )

    summary: Dict[str, Any] = {
        "kind": model.kind,
        "fingerprint": model.fingerprint,
        "seed": config.seed,
        "best_epoch": report.best_epoch,
        "skipped": sorted(set(train.skipped)),
    }
    for name, dataset in (("val", val), ("test", test)):
        if dataset is not None:
            summary[name] = evaluate(model, dataset).to_dict()
    for name in ("val", "test"):
        if "mse" in summary.get(name, {}):
            checkpoint.metrics[f"{name}_mse"] = summary[name]["mse"]
    report.final_metrics = dict(checkpoint.metrics)

    checkpoint.save(os.path.join(out_dir, "model.ckpt"))
    report.save(os.path.join(out_dir, "report.json"))
    _write_json(os.path.join(out_dir, "metrics.json"), summary)
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_eval(config: RunConfig) -> int:
    model = load_model(config.checkpoint)
    manifest = load_manifest(config.manifest)
    dataset = build_dataset(model, manifest.split(config.split), segmented=config.segmented)
    metrics = evaluate(model, dataset)
    path = os.path.join(config.output_dir(), f"eval-{config.split}.json")
    _write_json(path, dict(metrics.to_dict(), kind=model.kind, split=config.split))
    logger.info(f"{config.split}: {metrics.summary()}")
    print(metrics.to_json())
    return 0


def cmd_crossval(config: RunConfig) -> int:
    manual_seed(config.seed)
    out_dir = config.output_dir()
    os.makedirs(out_dir, exist_ok=True)
    manifest = load_manifest(config.manifest)
    factory = model_factory(config, manifest, out_dir)
    samples = manifest.split("train") + manifest.split("val")
    dataset = build_dataset(factory(), samples, segmented=config.segmented)

    report = cross_validate(
        factory,
        dataset,
        k=config.k,
        lrs=config.crossval_lrs(),
        optimizer_config=config.optimizer_config(),
        epochs=config.epochs,
        batch_size=config.batch,
        seed=config.seed,
        workers=config.workers,
    )
    _write_json(os.path.join(out_dir, "crossval.json"), report.to_dict())
    table = report.to_table()
    with open(os.path.join(out_dir, "crossval.tsv"), "w", encoding="utf-8") as f:
        f.write(table + "\n")
    print(table)
    return 0


def cmd_stats(config: RunConfig) -> int:
    report = agreement_report(read_annotations(config.annotations), config.weighting)
    path = os.path.join(config.output_dir(), "agreement.json")
    os.makedirs(os.path.dirname(path), exist_ok=True)
    report.save(path)
    print(report.to_json())
    return 0


def cmd_saliency(config: RunConfig) -> int:
    model = load_model(config.checkpoint)
    pixels = read_image(config.image, "RGB")
    height, width = pixels.shape[:2]
    if isinstance(model, CapsNet):
        x = crop_to_unit(pixels, model.config.input_size)
    elif getattr(model, "backbone", None) is not None:
        x = image_to_unit(pixels, model.backbone_config.image_size)
    else:
        raise ArchitectureMismatchError(f"a {model.kind} checkpoint cannot explain raw pixels")

    heat = saliency_map(model, x)
    heat = normalize_map(bilinear_resize(heat, (height, width)))
    stem, _ = os.path.splitext(config.image)
    path = (
        os.path.join(config.out, os.path.basename(stem) + "_saliency.png")
        if config.out is not None
        else stem + "_saliency.png"
    )
    write_image(path, np.rint(255.0 * heat))
    print(path)
    return 0


def cmd_synth(config: RunConfig) -> int:
    spec = SynthSpec(
        num_samples=config.num_samples,
        faces_range=(config.faces_min, config.faces_max),
        noise=config.noise,
        seed=config.seed,
        masks=config.masks,
    )
    manifest = synth_generate(spec)
    path = write_synth(manifest, config.output_dir())
    levels = np.bincount(np.rint([s.gcs for s in manifest]).astype(np.int64), minlength=4)
    summary = {
        "manifest": path,
        "samples": len(manifest),
        "splits": manifest.split_sizes(),
        "faces": int(sum(s.num_faces for s in manifest)),
        "gcs_histogram": levels.tolist(),
    }
    print(json.dumps(summary, sort_keys=True))
    return 0


COMMAND_HANDLERS: Dict[str, Callable[[RunConfig], int]] = {
    "train": cmd_train,
    "eval": cmd_eval,
    "crossval": cmd_crossval,
    "stats": cmd_stats,
    "saliency": cmd_saliency,
    "synth": cmd_synth,
}
