import argparse
import os

from cohesion_algos.datasets import SynthSpec, build_dataset, capsnet_dataset, synth_generate
from cohesion_algos.experiments import Evaluator, evaluate, fit
from cohesion_algos.models import CapsNet, FaceLevelModel
from cohesion_algos.optimizers import DecaySchedule, OptimizerConfig
from cohesion_algos.utils import logger, manual_seed


def train_face_level():
    parser = argparse.ArgumentParser()
    parser.add_argument("--num_samples", default=200, type=int)
    parser.add_argument("--seed", default=0, type=int)
    parser.add_argument("--capsnet_epochs", default=10, type=int)
    parser.add_argument("--epochs", default=30, type=int)
    parser.add_argument("--batch", default=16, type=int)
    parser.add_argument("--lr", default=0.01, type=float)
    parser.add_argument("--out", default=None, type=str)
    args = parser.parse_args()

    manual_seed(args.seed)
    manifest = synth_generate(SynthSpec(num_samples=args.num_samples, seed=args.seed))
    train, val, test = (manifest.split(name) for name in ("train", "val", "test"))
    logger.info(f"splits = {manifest.split_sizes()}")

    # stage 1: emotion capsules on face crops
    capsnet = CapsNet(seed=args.seed)
    fit(
        capsnet,
        capsnet_dataset(train),
        OptimizerConfig(kind="adam", lr=0.001, decay=DecaySchedule(0.001, 10)),
        epochs=args.capsnet_epochs,
        batch_size=args.batch,
        seed=args.seed,
        validation=capsnet_dataset(val),
    )
    logger.info(f"capsnet {evaluate(capsnet, capsnet_dataset(test)).summary()}")

    # stage 2: cohesion regression on pooled capsule statistics
    model = FaceLevelModel(capsnet, seed=args.seed)
    val_set = build_dataset(model, val)
    report, checkpoint = fit(
        model,
        build_dataset(model, train),
        OptimizerConfig(kind="sgd", lr=args.lr, momentum=0.9),
        epochs=args.epochs,
        batch_size=args.batch,
        seed=args.seed,
        validation=val_set,
        evaluator=Evaluator(val_set, eval_interval=5),
    )
    logger.info(f"best epoch = {report.best_epoch}")
    logger.info(f"face-level {evaluate(model, build_dataset(model, test)).summary()}")

    if args.out is not None:
        checkpoint.save(os.path.join(args.out, "face_level.ckpt"))
        report.save(os.path.join(args.out, "face_level_report.json"))


if __name__ == "__main__":
    train_face_level()
