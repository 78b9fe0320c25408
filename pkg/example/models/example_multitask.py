import argparse

from cohesion_algos.datasets import SynthSpec, image_dataset, synth_generate
from cohesion_algos.experiments import evaluate, fit
from cohesion_algos.models import BackboneConfig, ImageHeadConfig, MultiTaskHead
from cohesion_algos.optimizers import OptimizerConfig
from cohesion_algos.utils import logger, manual_seed


def train_multitask():
    parser = argparse.ArgumentParser()
    parser.add_argument("--num_samples", default=120, type=int)
    parser.add_argument("--seed", default=0, type=int)
    parser.add_argument("--alpha", default=1.0, type=float)
    parser.add_argument("--epochs", default=10, type=int)
    parser.add_argument("--lr", default=0.001, type=float)
    parser.add_argument("--segmented", action="store_true")
    args = parser.parse_args()

    manual_seed(args.seed)
    manifest = synth_generate(SynthSpec(num_samples=args.num_samples, seed=args.seed))
    backbone = BackboneConfig(image_size=(48, 48))
    train = image_dataset(manifest.split("train"), backbone.image_size, args.segmented)
    val = image_dataset(manifest.split("val"), backbone.image_size, args.segmented)

    model = MultiTaskHead(ImageHeadConfig(), backbone, seed=args.seed, alpha=args.alpha)
    report, _ = fit(
        model,
        train,
        OptimizerConfig(lr=args.lr),
        epochs=args.epochs,
        seed=args.seed,
        validation=val,
    )
    for record in report.epochs:
        logger.info(f"epoch {record.epoch}: {record.train}")
    logger.info(evaluate(model, val).summary())


if __name__ == "__main__":
    train_multitask()
