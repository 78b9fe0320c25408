import argparse
import sys
from typing import List, Optional

from cohesion_algos.cli.commands import COMMAND_HANDLERS
from cohesion_algos.cli.config import MODEL_CHOICES, build_config
from cohesion_algos.errors import ArchitectureMismatchError, CohesionError, ConfigurationError
from cohesion_algos.stats import WEIGHTINGS
from cohesion_algos.utils import logger

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_ARCHITECTURE = 4


def _add_training_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--manifest", type=str, default=None)
    parser.add_argument("--model", type=str, choices=MODEL_CHOICES, default=None)
    parser.add_argument("--optimizer", type=str, choices=("sgd", "adam"), default=None)
    parser.add_argument("--momentum", type=float, default=None)
    parser.add_argument("--decay", type=float, default=None)
    parser.add_argument("--decay_every", "--decay-every", type=int, default=None)
    parser.add_argument(
        "--decay_rule", "--decay-rule", choices=("subtractive", "inverse-time"), default=None
    )
    parser.add_argument("--alpha", type=float, default=None)
    parser.add_argument("--epochs", type=int, default=None)
    parser.add_argument("--batch", type=int, default=None)
    parser.add_argument("--capsnet", type=str, default=None)
    parser.add_argument("--capsnet_epochs", "--capsnet-epochs", type=int, default=None)
    parser.add_argument("--segmented", action="store_true", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cohesion", description="Group cohesion estimation from faces and images."
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="JSON file of defaults")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", type=str, default=None)
    subparsers = parser.add_subparsers(dest="command", required=True)

    train = subparsers.add_parser("train", parents=[common], help="train a model")
    _add_training_flags(train)
    train.add_argument("--lr", type=float, default=None)

    crossval = subparsers.add_parser("crossval", parents=[common], help="k-fold validation")
    _add_training_flags(crossval)
    crossval.add_argument("--lr", dest="lrs", type=float, action="append", default=None)
    crossval.add_argument("--k", type=int, default=None)
    crossval.add_argument("--workers", type=int, default=None)

    evaluate = subparsers.add_parser("eval", parents=[common], help="evaluate a checkpoint")
    evaluate.add_argument("--checkpoint", type=str, default=None)
    evaluate.add_argument("--manifest", type=str, default=None)
    evaluate.add_argument("--split", choices=("train", "val", "test"), default=None)
    evaluate.add_argument("--segmented", action="store_true", default=None)

    stats = subparsers.add_parser("stats", parents=[common], help="annotation agreement")
    stats.add_argument("annotations", type=str)
    stats.add_argument("--weighting", choices=WEIGHTINGS, default=None)

    saliency = subparsers.add_parser("saliency", parents=[common], help="gradient saliency map")
    saliency.add_argument("--checkpoint", type=str, default=None)
    saliency.add_argument("--image", type=str, default=None)

    synth = subparsers.add_parser("synth", parents=[common], help="generate synthetic data")
    synth.add_argument("--num_samples", "--n", type=int, default=None)
    synth.add_argument("--faces_min", "--faces-min", type=int, default=None)
    synth.add_argument("--faces_max", "--faces-max", type=int, default=None)
    synth.add_argument("--noise", type=float, default=None)
    synth.add_argument("--no_masks", "--no-masks", dest="masks", action="store_false", default=None)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand; returns the process exit status.

    0 on success, 2 for configuration errors, 3 for runtime failures and 4 when a
    checkpoint does not fit the requested use.
    """
    args = build_parser().parse_args(argv)
    try:
        config = build_config(args)
        return COMMAND_HANDLERS[config.command](config)
    except ConfigurationError as e:
        logger.error(f"configuration error: {e}")
        return EXIT_CONFIG
    except ArchitectureMismatchError as e:
        logger.error(f"architecture mismatch: {e}")
        return EXIT_ARCHITECTURE
    except (CohesionError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_RUNTIME


def entrypoint() -> None:
    sys.exit(main())
